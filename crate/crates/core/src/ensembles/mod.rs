//! Decision-tree ensembles on one-hot indicator features: a Gini random
//! forest, a softmax gradient-boosted ensemble, and consensus variable
//! screening across both.

mod boosting;
mod forest;
mod screening;
mod tree;

use serde::{Deserialize, Serialize};

use crate::dataset::{Block, IndicatorMatrix};
use crate::error::{Error, Result};

pub use boosting::{train_gradient_boosting, GbParams};
pub use forest::{train_random_forest, RfParams};
pub use screening::{
    consensus_select, stratified_folds, ConsensusRule, ScreeningEntry, ScreeningParams, ScreeningReport,
};
pub use tree::{Design, Tree, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Hyperparams {
    RandomForest(RfParams),
    GradientBoosting(GbParams),
}

/// A trained classifier.
///
/// The raw output for class `c` is `init[c] + tree_weight · Σ_t leaf_t[c]`.
/// For a random forest that is the mean of the trees' leaf class
/// frequencies, i.e. a probability vector; for gradient boosting it is the
/// per-class margin (log-odds) fed to a softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub kind: EnsembleKind,
    pub classes: Vec<String>,
    /// Variable blocks of the indicator columns the model was trained on.
    pub features: Vec<Block>,
    pub width: usize,
    pub init: Vec<f64>,
    pub tree_weight: f64,
    pub trees: Vec<Tree>,
    /// One non-negative score per variable, summing to 1 unless no split was
    /// ever made.
    pub importances: Vec<f64>,
    /// Training saw fewer than two classes; the model is constant.
    pub degenerate: bool,
    pub hyperparams: Hyperparams,
}

impl TreeEnsemble {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn check_width(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.width {
            return Err(Error::Dimension {
                expected: self.width,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Raw per-class output (probabilities for a forest, margins for
    /// boosting). This is the quantity Shapley values decompose.
    pub fn output(&self, x: &[u8]) -> Result<Vec<f64>> {
        self.check_width(x)?;
        Ok(self.output_unchecked(x))
    }

    pub(crate) fn output_unchecked(&self, x: &[u8]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes()];
        for tree in &self.trees {
            for (o, s) in out.iter_mut().zip(tree.leaf_scores(x)) {
                *o += s;
            }
        }
        for (o, b) in out.iter_mut().zip(&self.init) {
            *o = b + self.tree_weight * *o;
        }
        out
    }

    pub fn predict_proba(&self, x: &[u8]) -> Result<Vec<f64>> {
        let raw = self.output(x)?;
        Ok(match self.kind {
            EnsembleKind::RandomForest => {
                let total: f64 = raw.iter().sum();
                raw.iter().map(|p| p / total).collect()
            }
            EnsembleKind::GradientBoosting => softmax(&raw),
        })
    }

    /// Most probable class; ties go to the lowest class index.
    pub fn predict_class(&self, x: &[u8]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    /// Importances keyed by variable name.
    pub fn named_importances(&self) -> Vec<(String, f64)> {
        self.features
            .iter()
            .zip(&self.importances)
            .map(|(b, &s)| (b.name.clone(), s))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parse and validate a serialised model.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: TreeEnsemble = serde_json::from_str(text)?;
        let expected: usize = model.features.iter().map(Block::len).sum();
        if expected != model.width {
            return Err(Error::Data(format!(
                "model width {} disagrees with its feature blocks ({expected})",
                model.width
            )));
        }
        if model.init.len() != model.n_classes() || model.importances.len() != model.features.len() {
            return Err(Error::Data("model vectors have inconsistent lengths".into()));
        }
        for (i, tree) in model.trees.iter().enumerate() {
            tree.check(model.width, model.n_classes())
                .map_err(|e| Error::Data(format!("tree {i}: {e}")))?;
        }
        Ok(model)
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Class frequencies of `y` over `n_classes` classes.
pub(crate) fn class_priors(y: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n_classes];
    for &c in y {
        counts[c] += 1.0;
    }
    let n = y.len() as f64;
    counts.iter().map(|c| c / n).collect()
}

/// Sum per-column scores over each variable's block and normalise to 1.
pub(crate) fn aggregate_importances(column_scores: &[f64], blocks: &[Block]) -> Vec<f64> {
    let per_var: Vec<f64> = blocks
        .iter()
        .map(|b| b.range().map(|c| column_scores[c]).sum::<f64>())
        .collect();
    let total: f64 = per_var.iter().sum();
    if total > 0.0 {
        per_var.iter().map(|s| s / total).collect()
    } else {
        vec![0.0; blocks.len()]
    }
}

pub(crate) fn validate_training(z: &IndicatorMatrix, y: &[usize], classes: &[String]) -> Result<()> {
    if y.len() != z.n_rows() {
        return Err(Error::Dimension {
            expected: z.n_rows(),
            found: y.len(),
        });
    }
    if z.n_rows() < 2 {
        return Err(Error::Data("at least two observations are needed to train".into()));
    }
    if classes.is_empty() {
        return Err(Error::Config("no class labels".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= classes.len()) {
        return Err(Error::Data(format!(
            "class index {bad} outside {} classes",
            classes.len()
        )));
    }
    Ok(())
}

pub(crate) fn distinct_classes(y: &[usize]) -> usize {
    let mut seen = y.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

#[cfg(test)]
pub(crate) mod toy {
    use rand::Rng;

    use crate::dataset::{indicator, CategoricalDataset, IndicatorMatrix, Schema, Variable};
    use crate::rng::item_rng;

    pub const CLASSES: [&str; 3] = ["KA", "BC", "O"];

    /// Six uniform 3-category variables `A..F` plus a target `Y` computed by
    /// `rule` from the explanatory codes.
    pub fn dataset(n: usize, seed: u64, rule: impl Fn(&[u32]) -> u32) -> CategoricalDataset {
        let mut vars: Vec<Variable> = ["A", "B", "C", "D", "E", "F"]
            .iter()
            .map(|name| Variable::new(*name, ["x", "y", "z"]))
            .collect();
        vars.push(Variable::new("Y", CLASSES));
        let schema = Schema::new(vars, Some("Y".into())).unwrap();
        let mut rng = item_rng(seed, 0);
        let mut codes = Vec::with_capacity(n * 7);
        for _ in 0..n {
            let row: Vec<u32> = (0..6).map(|_| rng.random_range(0..3)).collect();
            let y = rule(&row);
            codes.extend(row);
            codes.push(y);
        }
        CategoricalDataset::new(schema, codes).unwrap()
    }

    pub fn design(ds: &CategoricalDataset) -> (IndicatorMatrix, Vec<usize>, Vec<String>) {
        let z = indicator(ds, &ds.schema().explanatory_names()).unwrap();
        let y = ds.target_values().unwrap().into_iter().map(|c| c as usize).collect();
        (z, y, CLASSES.iter().map(|s| s.to_string()).collect())
    }

    /// `y` is the code of `A`.
    pub fn separable(n: usize, seed: u64) -> (IndicatorMatrix, Vec<usize>, Vec<String>) {
        design(&dataset(n, seed, |r| r[0]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_and_argmax() {
        let p = softmax(&[0.0, 0.0f64.ln_1p(), 2.0f64.ln()]);
        assert!((p[2] - 0.5).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn importances_sum_over_blocks() {
        let blocks = vec![
            Block {
                name: "A".into(),
                categories: vec!["a".into(), "b".into()],
                start: 0,
            },
            Block {
                name: "B".into(),
                categories: vec!["a".into(), "b".into(), "c".into()],
                start: 2,
            },
        ];
        let imp = aggregate_importances(&[1.0, 1.0, 0.5, 0.0, 1.5], &blocks);
        assert_eq!(imp, vec![0.5, 0.5]);
        assert_eq!(aggregate_importances(&[0.0; 5], &blocks), vec![0.0, 0.0]);
    }

    #[test]
    fn model_json_round_trip_and_validation() {
        let (z, y, classes) = toy::separable(120, 1);
        let rf = train_random_forest(
            &z,
            &y,
            &classes,
            &RfParams {
                n_trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let back = TreeEnsemble::from_json(&rf.to_json().unwrap()).unwrap();
        assert_eq!(back, rf);
        let mut broken = rf.clone();
        broken.width += 1;
        assert!(TreeEnsemble::from_json(&broken.to_json().unwrap()).is_err());
        assert!(matches!(rf.output(&[0, 1]), Err(Error::Dimension { .. })));
    }
}
