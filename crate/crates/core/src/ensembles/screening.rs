use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_gradient_boosting, train_random_forest, GbParams, RfParams};
use crate::dataset::{indicator, CategoricalDataset};
use crate::error::{Error, Result};
use crate::rng::{item_rng, substream};

/// How per-fold importances are turned into a selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsensusRule {
    /// Fold-averaged score strictly above the median averaged score, in both
    /// families.
    #[default]
    Averaged,
    /// Strictly above the fold's median in at least ⌈folds/2⌉ folds, in both
    /// families.
    PerFoldMajority,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningParams {
    pub folds: usize,
    pub rf: RfParams,
    pub gb: GbParams,
    #[serde(default)]
    pub rule: ConsensusRule,
    /// Drives fold assignment and every per-fold model seed; the seeds inside
    /// `rf` and `gb` are ignored.
    pub seed: u64,
}

impl Default for ScreeningParams {
    fn default() -> Self {
        ScreeningParams {
            folds: 5,
            rf: RfParams::default(),
            gb: GbParams::default(),
            rule: ConsensusRule::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningEntry {
    pub name: String,
    pub rf_score_mean: f64,
    pub gb_score_mean: f64,
    pub rf_fold_scores: Vec<f64>,
    pub gb_fold_scores: Vec<f64>,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub target: String,
    pub fold_count: usize,
    pub seed: u64,
    pub rule: ConsensusRule,
    pub rf_median: f64,
    pub gb_median: f64,
    /// Folds in which a model came out constant because its training portion
    /// held a single class.
    pub degenerate_folds: Vec<usize>,
    pub entries: Vec<ScreeningEntry>,
}

impl ScreeningReport {
    /// Names of the selected variables in dataset order.
    pub fn selected(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.selected)
            .map(|e| e.name.clone())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => 0.0,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Assign every row to one of `folds` folds, stratified by class.
///
/// Rows of each class are shuffled and dealt round-robin; the deal continues
/// from where the previous class stopped so fold sizes differ by at most one.
pub fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let mut fold_of = vec![0; y.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        if !members.is_empty() && members.len() < folds {
            return Err(Error::Data(format!(
                "class {c} has {} rows, fewer than the {folds} folds; use at most {} folds",
                members.len(),
                members.len().max(2)
            )));
        }
        members.shuffle(&mut item_rng(seed, c as u64));
        for i in members {
            fold_of[i] = next % folds;
            next += 1;
        }
    }
    Ok(fold_of)
}

/// Cross-validated importance screening with both ensemble families.
///
/// Every explanatory variable of `ds` other than `target` is a candidate.
/// Each fold trains a random forest and a boosted ensemble on the remaining
/// folds; the per-fold importances (each summing to 1) are averaged per
/// family and `params.rule` decides selection.
pub fn consensus_select(ds: &CategoricalDataset, target: &str, params: &ScreeningParams) -> Result<ScreeningReport> {
    let schema = ds.schema();
    let t = schema
        .index_of(target)
        .ok_or_else(|| Error::Config(format!("target `{target}` is not a column")))?;
    let candidates: Vec<String> = schema
        .variables()
        .iter()
        .filter(|v| v.name != target)
        .map(|v| v.name.clone())
        .collect();
    if candidates.is_empty() {
        return Err(Error::Data("no candidate variables besides the target".into()));
    }
    let classes = schema.variables()[t].categories.clone();
    let y: Vec<usize> = ds.column(t).map(|c| c as usize).collect();
    let z = indicator(ds, &candidates)?;
    let fold_of = stratified_folds(&y, classes.len(), params.folds, substream(params.seed, "folds"))?;

    let per_fold: Vec<(Vec<f64>, Vec<f64>, bool)> = (0..params.folds)
        .into_par_iter()
        .map(|f| -> Result<_> {
            let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != f).collect();
            let zt = z.subset_rows(&train);
            let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let rf = RfParams {
                seed: substream(params.seed, &format!("rf/{f}")),
                ..params.rf.clone()
            };
            let gb = GbParams {
                seed: substream(params.seed, &format!("gb/{f}")),
                ..params.gb.clone()
            };
            let rf_model = train_random_forest(&zt, &yt, &classes, &rf)?;
            let gb_model = train_gradient_boosting(&zt, &yt, &classes, &gb)?;
            let degenerate = rf_model.degenerate || gb_model.degenerate;
            Ok((rf_model.importances, gb_model.importances, degenerate))
        })
        .collect::<Result<_>>()?;

    let q = candidates.len();
    let folds = params.folds as f64;
    let rf_mean: Vec<f64> = (0..q)
        .map(|v| per_fold.iter().map(|p| p.0[v]).sum::<f64>() / folds)
        .collect();
    let gb_mean: Vec<f64> = (0..q)
        .map(|v| per_fold.iter().map(|p| p.1[v]).sum::<f64>() / folds)
        .collect();
    let rf_median = median(&rf_mean);
    let gb_median = median(&gb_mean);

    let majority = params.folds.div_ceil(2);
    let fold_medians: Vec<(f64, f64)> = per_fold.iter().map(|p| (median(&p.0), median(&p.1))).collect();
    let entries = candidates
        .into_iter()
        .enumerate()
        .map(|(v, name)| {
            let rf_fold_scores: Vec<f64> = per_fold.iter().map(|p| p.0[v]).collect();
            let gb_fold_scores: Vec<f64> = per_fold.iter().map(|p| p.1[v]).collect();
            let selected = match params.rule {
                ConsensusRule::Averaged => rf_mean[v] > rf_median && gb_mean[v] > gb_median,
                ConsensusRule::PerFoldMajority => {
                    let rf_wins = (0..params.folds)
                        .filter(|&f| rf_fold_scores[f] > fold_medians[f].0)
                        .count();
                    let gb_wins = (0..params.folds)
                        .filter(|&f| gb_fold_scores[f] > fold_medians[f].1)
                        .count();
                    rf_wins >= majority && gb_wins >= majority
                }
            };
            ScreeningEntry {
                name,
                rf_score_mean: rf_mean[v],
                gb_score_mean: gb_mean[v],
                rf_fold_scores,
                gb_fold_scores,
                selected,
            }
        })
        .collect();

    Ok(ScreeningReport {
        target: target.to_string(),
        fold_count: params.folds,
        seed: params.seed,
        rule: params.rule,
        rf_median,
        gb_median,
        degenerate_folds: (0..params.folds).filter(|&f| per_fold[f].2).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::toy;

    fn quick(seed: u64) -> ScreeningParams {
        ScreeningParams {
            folds: 3,
            rf: RfParams {
                n_trees: 30,
                ..Default::default()
            },
            gb: GbParams {
                n_rounds: 20,
                ..Default::default()
            },
            rule: ConsensusRule::Averaged,
            seed,
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let y: Vec<usize> = (0..23).map(|i| (i * 7 % 11) % 3).collect();
        let fold_of = stratified_folds(&y, 3, 4, 9).unwrap();
        let mut sizes = [0usize; 4];
        for &f in &fold_of {
            sizes[f] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..3 {
            let mut per = [0usize; 4];
            for (i, &f) in fold_of.iter().enumerate() {
                if y[i] == c {
                    per[f] += 1;
                }
            }
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn too_many_folds_for_a_class() {
        let y = vec![0, 0, 0, 0, 1, 1];
        let err = stratified_folds(&y, 2, 3, 0).unwrap_err();
        assert!(err.to_string().contains("fewer"), "{err}");
        assert!(stratified_folds(&y, 2, 1, 0).is_err());
    }

    #[test]
    fn dependent_pair_is_selected_and_noise_is_not() {
        let rule = |r: &[u32]| {
            if r[0] == 0 {
                0
            } else if r[1] == 0 {
                1
            } else {
                2
            }
        };
        let ds = toy::dataset(300, 31, rule);
        let report = consensus_select(&ds, "Y", &quick(5)).unwrap();
        assert_eq!(report.entries.len(), 6);
        let sel = report.selected();
        assert!(
            sel.contains(&"A".to_string()) && sel.contains(&"B".to_string()),
            "{sel:?}"
        );
        for e in &report.entries {
            assert_eq!(e.rf_fold_scores.len(), 3);
            assert_eq!(
                e.selected,
                e.rf_score_mean > report.rf_median && e.gb_score_mean > report.gb_median
            );
        }
        for f in 0..3 {
            let s: f64 = report.entries.iter().map(|e| e.rf_fold_scores[f]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn per_fold_majority_rule() {
        let ds = toy::dataset(240, 12, |r| r[3]);
        let params = ScreeningParams {
            rule: ConsensusRule::PerFoldMajority,
            ..quick(1)
        };
        let report = consensus_select(&ds, "Y", &params).unwrap();
        assert_eq!(report.selected(), vec!["D".to_string()]);
        let json = report.to_json().unwrap();
        assert!(json.contains("\"per-fold-majority\""));
    }

    #[test]
    fn unknown_target() {
        let ds = toy::dataset(30, 1, |r| r[0]);
        assert!(matches!(
            consensus_select(&ds, "Nope", &quick(0)),
            Err(Error::Config(_))
        ));
    }
}
