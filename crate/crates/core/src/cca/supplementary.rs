use log::info;
use serde::{Deserialize, Serialize};

use super::ca::NULL_SINGULAR_VALUE;
use super::cluster::CcaSolution;
use crate::dataset::CategoricalDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplementaryPoint {
    pub variable: String,
    pub category: String,
    pub count: usize,
    /// Coordinates on the scale of the rescaled quantifications `B*`.
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupplementaryProjection {
    pub points: Vec<SupplementaryPoint>,
    /// Categories that never occur and therefore have no position.
    pub omitted: Vec<String>,
}

/// Place the categories of a passive variable in the solution space without
/// touching the clustering.
///
/// A category's position is the CA transition formula applied to its
/// cluster profile: the average, over the observations holding it, of their
/// clusters' standard row coordinates, divided by the singular value of each
/// dimension and by `γ`. An active category passed through this map lands
/// exactly on its row of `B*`, and a category held by everyone lands at the
/// origin.
pub fn project_supplementary(
    var: &str,
    ds: &CategoricalDataset,
    solution: &CcaSolution,
) -> Result<SupplementaryProjection> {
    if solution.variables.iter().any(|v| v == var) {
        return Err(Error::Config(format!(
            "`{var}` is an active clustering variable; only passive variables can be projected"
        )));
    }
    let idx = ds
        .schema()
        .index_of(var)
        .ok_or_else(|| Error::Data(format!("unknown variable `{var}`")))?;
    if ds.n_rows() != solution.n() {
        return Err(Error::Dimension {
            expected: solution.n(),
            found: ds.n_rows(),
        });
    }
    let variable = &ds.schema().variables()[idx];
    let k = solution.k;
    let mut counts = vec![vec![0usize; k]; variable.categories.len()];
    for (code, &label) in ds.column(idx).zip(&solution.assign) {
        counts[code as usize][label] += 1;
    }
    let gamma = solution.rescaled.as_ref().map_or(1.0, |r| r.gamma);
    let a = &solution.ca.row_coords;
    let sv = &solution.ca.singular_values;

    let mut points = Vec::new();
    let mut omitted = Vec::new();
    for (cat, by_cluster) in variable.categories.iter().zip(&counts) {
        let total: usize = by_cluster.iter().sum();
        if total == 0 {
            info!("category `{var}={cat}` never occurs and is not projected");
            omitted.push(cat.clone());
            continue;
        }
        let coords = (0..sv.len())
            .map(|s| {
                if sv[s] <= NULL_SINGULAR_VALUE {
                    return 0.0;
                }
                let profile: f64 = by_cluster
                    .iter()
                    .enumerate()
                    .map(|(c, &m)| m as f64 / total as f64 * a[(c, s)])
                    .sum();
                profile / sv[s] / gamma
            })
            .collect();
        points.push(SupplementaryPoint {
            variable: var.to_owned(),
            category: cat.clone(),
            count: total,
            coords,
        });
    }
    Ok(SupplementaryProjection { points, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cca::{cluster_ca, CcaParams};
    use crate::dataset::{indicator, Schema, Variable};
    use crate::synth::{generate, PlantedSpec, SEVERITY};

    fn planted(link: Option<Vec<Vec<f64>>>) -> (CategoricalDataset, CcaSolution, Vec<usize>) {
        let mut spec = PlantedSpec::new(800, 6, 4, 3, 0.6, 13);
        if let Some(link) = link {
            spec = spec.with_severity(link);
        }
        let p = generate(&spec).unwrap();
        let names = p.dataset.schema().explanatory_names();
        let z = indicator(&p.dataset, &names).unwrap();
        let sol = cluster_ca(
            &z,
            3,
            &CcaParams {
                restarts: 5,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        (p.dataset, sol, p.labels)
    }

    /// Copy of `ds` with an extra column equal to `source`.
    fn with_copy(ds: &CategoricalDataset, source: &str, name: &str) -> CategoricalDataset {
        let idx = ds.schema().index_of(source).unwrap();
        let mut vars = ds.schema().variables().to_vec();
        let mut copy = vars[idx].clone();
        copy.name = name.into();
        vars.push(copy);
        let schema = Schema::new(vars, ds.schema().target().map(String::from)).unwrap();
        let codes = ds.rows().flat_map(|r| r.iter().copied().chain([r[idx]])).collect();
        CategoricalDataset::new(schema, codes).unwrap()
    }

    #[test]
    fn copy_of_active_variable_lands_on_its_quantifications() {
        let (ds, sol, _) = planted(None);
        let ds = with_copy(&ds, "V2", "V2copy");
        let proj = project_supplementary("V2copy", &ds, &sol).unwrap();
        let b_star = &sol.rescaled.as_ref().unwrap().categories;
        let labels = sol.category_labels();
        for p in &proj.points {
            let row = labels.iter().position(|l| *l == format!("V2={}", p.category)).unwrap();
            for (s, &v) in p.coords.iter().enumerate() {
                assert!(
                    (v - b_star[(row, s)]).abs() < 1e-10,
                    "{} dim {s}: {v} vs {}",
                    p.category,
                    b_star[(row, s)]
                );
            }
        }
        assert!(proj.omitted.is_empty());
    }

    #[test]
    fn universal_category_projects_to_origin_and_absent_is_omitted() {
        let (ds, sol, _) = planted(None);
        let mut vars = ds.schema().variables().to_vec();
        vars.push(Variable::new("Const", ["all", "never"]));
        let schema = Schema::new(vars, None).unwrap();
        let codes = ds.rows().flat_map(|r| r.iter().copied().chain([0])).collect();
        let ds = CategoricalDataset::new(schema, codes).unwrap();
        let proj = project_supplementary("Const", &ds, &sol).unwrap();
        assert_eq!(proj.points.len(), 1);
        assert!(proj.points[0].coords.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(proj.omitted, vec!["never".to_string()]);
    }

    #[test]
    fn severity_tied_to_a_cluster_sits_nearest_its_centroid() {
        let link = vec![vec![0.9, 0.05, 0.05], vec![0.05, 0.9, 0.05], vec![0.05, 0.05, 0.9]];
        let (ds, sol, truth) = planted(Some(link));
        let proj = project_supplementary(SEVERITY, &ds, &sol).unwrap();
        let g_star = &sol.rescaled.as_ref().unwrap().centroids;
        for (class, p) in proj.points.iter().enumerate() {
            // the found cluster holding most of planted cluster `class`
            let mut votes = [0usize; 3];
            for (&t, &a) in truth.iter().zip(&sol.assign) {
                if t == class {
                    votes[a] += 1;
                }
            }
            let home = (0..3).max_by_key(|&c| votes[c]).unwrap();
            let dist = |c: usize| -> f64 {
                p.coords
                    .iter()
                    .enumerate()
                    .map(|(s, v)| (v - g_star[(c, s)]).powi(2))
                    .sum()
            };
            let nearest = (0..3).min_by(|&a, &b| dist(a).total_cmp(&dist(b))).unwrap();
            assert_eq!(nearest, home, "{}", p.category);
        }
    }

    #[test]
    fn active_variable_is_rejected() {
        let (ds, sol, _) = planted(None);
        assert!(matches!(project_supplementary("V1", &ds, &sol), Err(Error::Config(_))));
        assert!(project_supplementary("Nope", &ds, &sol).is_err());
    }
}
