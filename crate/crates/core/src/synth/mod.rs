//! Planted-partition categorical data and partition agreement.
//!
//! Each cluster draws every variable from a mixture of the uniform
//! distribution and a point mass on a cluster-specific modal category:
//! `(1 − δ)·uniform + δ·point-mass`. The modal share is therefore known in
//! closed form, `δ + (1 − δ)/c`, which is what the generator tests check.

mod ari;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalDataset, Schema, Variable};
use crate::error::{Error, Result};
use crate::rng::{item_rng, substream};

pub use ari::adjusted_rand_index;

pub const SEVERITY: &str = "Severity";
pub const SEVERITY_CLASSES: [&str; 3] = ["KA", "BC", "O"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n: usize,
    /// Category count of each variable.
    pub categories: Vec<usize>,
    pub k_true: usize,
    /// Separation δ in [0, 1].
    pub separation: f64,
    /// Cluster priors; `None` means equal.
    #[serde(default)]
    pub cluster_weights: Option<Vec<f64>>,
    /// Per cluster, a probability over [`SEVERITY_CLASSES`].
    #[serde(default)]
    pub severity_link: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl PlantedSpec {
    /// `q` variables with `categories` levels each, equal priors, no severity.
    pub fn new(n: usize, q: usize, categories: usize, k_true: usize, separation: f64, seed: u64) -> Self {
        PlantedSpec {
            n,
            categories: vec![categories; q],
            k_true,
            separation,
            cluster_weights: None,
            severity_link: None,
            seed,
        }
    }

    pub fn with_severity(mut self, link: Vec<Vec<f64>>) -> Self {
        self.severity_link = Some(link);
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.cluster_weights = Some(weights);
        self
    }

    pub fn q(&self) -> usize {
        self.categories.len()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k_true == 0 || self.categories.is_empty() {
            return Err(Error::Config(
                "planted spec needs n ≥ 1, K ≥ 1 and at least one variable".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.separation) {
            return Err(Error::Config(format!("separation {} outside [0, 1]", self.separation)));
        }
        if let Some(&c) = self.categories.iter().find(|&&c| c < 2) {
            return Err(Error::Config(format!("variables need at least 2 categories, got {c}")));
        }
        if self.separation == 1.0 {
            if let Some(&c) = self.categories.iter().find(|&&c| c < self.k_true) {
                return Err(Error::Config(format!(
                    "δ = 1 needs at least K = {} categories per variable for disjoint modes, got {c}",
                    self.k_true
                )));
            }
        }
        if let Some(w) = &self.cluster_weights {
            check_distribution(w, self.k_true, "cluster_weights")?;
        }
        if let Some(link) = &self.severity_link {
            if link.len() != self.k_true {
                return Err(Error::Config(format!(
                    "severity_link has {} rows for {} clusters",
                    link.len(),
                    self.k_true
                )));
            }
            for row in link {
                check_distribution(row, SEVERITY_CLASSES.len(), "severity_link row")?;
            }
        }
        Ok(())
    }
}

fn check_distribution(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len || p.iter().any(|&x| x.is_nan() || x < 0.0) || p.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config(format!(
            "{what} must hold {len} non-negative weights with a positive sum"
        )));
    }
    Ok(())
}

fn draw(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedDataset {
    pub dataset: CategoricalDataset,
    pub labels: Vec<usize>,
    /// `modal[k][v]`: modal category of variable `v` in cluster `k`.
    pub modal: Vec<Vec<usize>>,
    pub spec: PlantedSpec,
}

/// Draw a planted dataset. Variables are named `V1..VQ` with categories
/// `c1..cC`; a `Severity` target is appended when a severity link is given.
pub fn generate(spec: &PlantedSpec) -> Result<PlantedDataset> {
    spec.validate()?;
    let q = spec.q();
    let k = spec.k_true;

    let mut mode_rng = item_rng(substream(spec.seed, "synth-modes"), 0);
    let mut modal = vec![vec![0; q]; k];
    for (v, &c) in spec.categories.iter().enumerate() {
        let mut perm: Vec<usize> = (0..c).collect();
        perm.shuffle(&mut mode_rng);
        for (cluster, row) in modal.iter_mut().enumerate() {
            row[v] = perm[cluster % c];
        }
    }

    let weights = spec.cluster_weights.clone().unwrap_or_else(|| vec![1.0; k]);
    let mut rng = item_rng(substream(spec.seed, "synth-rows"), 0);
    let with_severity = spec.severity_link.is_some();
    let width = q + usize::from(with_severity);
    let mut codes = Vec::with_capacity(spec.n * width);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let label = draw(&weights, &mut rng);
        labels.push(label);
        for (v, &c) in spec.categories.iter().enumerate() {
            let code = if rng.random::<f64>() < spec.separation {
                modal[label][v]
            } else {
                rng.random_range(0..c)
            };
            codes.push(code as u32);
        }
        if let Some(link) = &spec.severity_link {
            codes.push(draw(&link[label], &mut rng) as u32);
        }
    }

    let mut variables: Vec<Variable> = spec
        .categories
        .iter()
        .enumerate()
        .map(|(v, &c)| Variable::new(format!("V{}", v + 1), (1..=c).map(|i| format!("c{i}"))))
        .collect();
    let target = with_severity.then(|| {
        variables.push(Variable::new(SEVERITY, SEVERITY_CLASSES));
        SEVERITY.to_owned()
    });
    let schema = Schema::new(variables, target)?;
    Ok(PlantedDataset {
        dataset: CategoricalDataset::new(schema, codes)?,
        labels,
        modal,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_separation_is_uniform_everywhere() {
        let spec = PlantedSpec::new(8000, 2, 4, 2, 0.0, 3);
        let p = generate(&spec).unwrap();
        for cluster in 0..2 {
            for v in 0..2 {
                let rows: Vec<u32> = p
                    .labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l == cluster)
                    .map(|(i, _)| p.dataset.value(i, v))
                    .collect();
                for c in 0..4 {
                    let share = rows.iter().filter(|&&x| x == c).count() as f64 / rows.len() as f64;
                    assert!((share - 0.25).abs() < 0.03, "share {share}");
                }
            }
        }
    }

    #[test]
    fn full_separation_is_constant_within_cluster() {
        let spec = PlantedSpec::new(300, 5, 4, 4, 1.0, 8);
        let p = generate(&spec).unwrap();
        for (i, &l) in p.labels.iter().enumerate() {
            for v in 0..5 {
                assert_eq!(p.dataset.value(i, v) as usize, p.modal[l][v]);
            }
        }
        // disjoint modes across clusters
        for v in 0..5 {
            let mut modes: Vec<usize> = (0..4).map(|k| p.modal[k][v]).collect();
            modes.sort_unstable();
            modes.dedup();
            assert_eq!(modes.len(), 4);
        }
    }

    #[test]
    fn modal_share_follows_mixture_formula() {
        let spec = PlantedSpec::new(2000, 8, 5, 4, 0.6, 21);
        let p = generate(&spec).unwrap();
        let expected = 0.6 + 0.4 / 5.0;
        for cluster in 0..4 {
            let members: Vec<usize> = (0..2000).filter(|&i| p.labels[i] == cluster).collect();
            for v in 0..8 {
                let hits = members
                    .iter()
                    .filter(|&&i| p.dataset.value(i, v) as usize == p.modal[cluster][v])
                    .count();
                let share = hits as f64 / members.len() as f64;
                assert!((share - expected).abs() < 0.05, "cluster {cluster} var {v}: {share}");
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec =
            PlantedSpec::new(100, 3, 3, 2, 0.5, 77).with_severity(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dataset.schema().target(), Some(SEVERITY));
        let c = generate(&PlantedSpec { seed: 78, ..spec }).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn infeasible_specs() {
        assert!(generate(&PlantedSpec::new(10, 2, 3, 4, 1.0, 0)).is_err());
        assert!(generate(&PlantedSpec::new(10, 2, 3, 4, 0.9, 0)).is_ok());
        assert!(generate(&PlantedSpec::new(10, 2, 3, 2, 1.5, 0)).is_err());
        assert!(generate(&PlantedSpec::new(10, 2, 3, 0, 0.5, 0)).is_err());
        assert!(generate(&PlantedSpec::new(10, 2, 3, 2, 0.5, 0).with_severity(vec![vec![1.0, 0.0, 0.0]])).is_err());
    }

    #[test]
    fn skewed_priors() {
        let spec = PlantedSpec::new(5000, 2, 4, 4, 0.5, 4).with_weights(vec![0.38, 0.217, 0.202, 0.201]);
        let p = generate(&spec).unwrap();
        let share0 = p.labels.iter().filter(|&&l| l == 0).count() as f64 / 5000.0;
        assert!((share0 - 0.38).abs() < 0.03);
    }
}
