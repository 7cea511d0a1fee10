//! Exact Shapley attributions of tree-ensemble predictions at variable
//! granularity.
//!
//! Players are the model's variables: a variable's whole one-hot block is
//! either taken from the explained row or from a background row. The value
//! of a coalition `S` is the model output averaged over the background set
//! with the variables in `S` fixed to the explained row (interventional
//! marginalization), and `φ_i` is the usual Shapley average of `i`'s marginal
//! contributions. Attributions are computed for every class at once, in the
//! model's raw output space: probabilities for a random forest, margins for
//! boosting.

mod export;
mod paths;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::IndicatorMatrix;
use crate::ensembles::{EnsembleKind, TreeEnsemble};
use crate::error::{Error, Result};
use crate::rng::item_rng;

pub use export::ShapSidecar;
use paths::{PairWalk, Weights};

/// Largest number of variables explained exactly.
pub const MAX_PLAYERS: usize = 20;

/// Default background size.
pub const DEFAULT_BACKGROUND_ROWS: usize = 100;

/// Indicator rows over which absent variables are marginalised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    width: usize,
    rows: Vec<Vec<u8>>,
    /// Seed of the draw, if the rows were sampled.
    pub seed: Option<u64>,
    /// Size of the population the rows were drawn from.
    pub population: usize,
}

impl BackgroundSet {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let width = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Data("background set is empty".into()))?;
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::Dimension {
                expected: width,
                found: bad.len(),
            });
        }
        let population = rows.len();
        Ok(BackgroundSet {
            width,
            rows,
            seed: None,
            population,
        })
    }

    /// Up to `size` distinct rows of `z`, drawn without replacement and kept
    /// in their original order. All rows are used when `size ≥ n`.
    pub fn sample(z: &IndicatorMatrix, size: usize, seed: u64) -> Result<Self> {
        let n = z.n_rows();
        if n == 0 || size == 0 {
            return Err(Error::Data("background set is empty".into()));
        }
        let mut picks: Vec<usize> = if size >= n {
            (0..n).collect()
        } else {
            sample(&mut item_rng(seed, 0), n, size).into_vec()
        };
        picks.sort_unstable();
        Ok(BackgroundSet {
            width: z.n_cols(),
            rows: picks.into_iter().map(|i| z.dense_row(i)).collect(),
            seed: Some(seed),
            population: n,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// Distinct rows with their multiplicities, in a fixed order.
    fn weighted(&self) -> Vec<(&[u8], f64)> {
        let mut counts: BTreeMap<&[u8], usize> = BTreeMap::new();
        for r in &self.rows {
            *counts.entry(r.as_slice()).or_default() += 1;
        }
        counts.into_iter().map(|(r, c)| (r, c as f64)).collect()
    }
}

/// Attributions of one explained row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// `v(∅)` per class.
    pub base: Vec<f64>,
    /// `φ[variable][class]`.
    pub phi: Vec<Vec<f64>>,
}

impl Attribution {
    /// `base + Σ_i φ_i` per class, which equals the model output.
    pub fn total(&self) -> Vec<f64> {
        let mut t = self.base.clone();
        for row in &self.phi {
            for (acc, v) in t.iter_mut().zip(row) {
                *acc += v;
            }
        }
        t
    }
}

fn check_inputs(model: &TreeEnsemble, x: &[u8], bg: &BackgroundSet) -> Result<usize> {
    let m = model.features.len();
    if m > MAX_PLAYERS {
        return Err(Error::ShapBudget(m, MAX_PLAYERS));
    }
    for width in [x.len(), bg.width] {
        if width != model.width {
            return Err(Error::Dimension {
                expected: model.width,
                found: width,
            });
        }
    }
    Ok(m)
}

fn column_owner(model: &TreeEnsemble) -> Vec<usize> {
    let mut owner = vec![0; model.width];
    for (v, b) in model.features.iter().enumerate() {
        for c in b.range() {
            owner[c] = v;
        }
    }
    owner
}

/// Exact Shapley values of `model` at `x`, computed leaf by leaf for every
/// background row. Cost is linear in the number of trees and background
/// rows and does not grow with `2^M`.
pub fn exact_shap(model: &TreeEnsemble, x: &[u8], bg: &BackgroundSet) -> Result<Attribution> {
    let m = check_inputs(model, x, bg)?;
    let owner = column_owner(model);
    let weights = Weights::new(m);
    Ok(path_shap(model, x, &bg.weighted(), &owner, &weights))
}

fn path_shap(model: &TreeEnsemble, x: &[u8], bg: &[(&[u8], f64)], owner: &[usize], weights: &Weights) -> Attribution {
    let m = model.features.len();
    let c = model.n_classes();
    let total: f64 = bg.iter().map(|(_, w)| w).sum();
    let mut phi = vec![0.0; m * c];
    let mut base = vec![0.0; c];
    for &(row, w) in bg {
        let mut walk = PairWalk {
            owner,
            weights,
            x,
            bg: row,
            phi: &mut phi,
            base: &mut base,
            scale: model.tree_weight * w / total,
            state: vec![0; m],
        };
        for tree in &model.trees {
            walk.tree(tree);
        }
    }
    for (b, init) in base.iter_mut().zip(&model.init) {
        *b += init;
    }
    Attribution {
        base,
        phi: phi.chunks(c.max(1)).map(<[f64]>::to_vec).take(m).collect(),
    }
}

/// The same attributions by evaluating the value function on all `2^M`
/// coalitions. Independent of tree structure; kept as a cross-check for
/// small `M`.
pub fn exact_shap_enumerated(model: &TreeEnsemble, x: &[u8], bg: &BackgroundSet) -> Result<Attribution> {
    let m = check_inputs(model, x, bg)?;
    let c = model.n_classes();
    let bg = bg.weighted();
    let total: f64 = bg.iter().map(|(_, w)| w).sum();
    let mut hybrid = vec![0u8; model.width];
    let value: Vec<Vec<f64>> = (0..1usize << m)
        .map(|mask| {
            let mut v = vec![0.0; c];
            for &(row, w) in &bg {
                for (i, b) in model.features.iter().enumerate() {
                    let src = if mask >> i & 1 == 1 { x } else { row };
                    hybrid[b.range()].copy_from_slice(&src[b.range()]);
                }
                for (acc, o) in v.iter_mut().zip(model.output_unchecked(&hybrid)) {
                    *acc += w / total * o;
                }
            }
            v
        })
        .collect();
    let weights = Weights::new(m);
    let mut phi = vec![vec![0.0; c]; m];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        for mask in (0..1usize << m).filter(|s| s >> i & 1 == 0) {
            let size = mask.count_ones() as usize;
            let w = 1.0 / (m as f64 * weights.binom(m - 1, size));
            for (k, acc) in phi_i.iter_mut().enumerate() {
                *acc += w * (value[mask | 1 << i][k] - value[mask][k]);
            }
        }
    }
    Ok(Attribution {
        base: value[0].clone(),
        phi,
    })
}

/// Which class's attributions drive the feature ordering and the export.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassMode {
    /// Every class; ordering uses the sum over classes of mean |φ|.
    PerClass,
    /// Each row's predicted class.
    #[default]
    PredictedClass,
}

/// Attributions for a set of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub base_values: Vec<f64>,
    /// `n × M × C`, row-major.
    pub phi: Vec<f64>,
    pub predicted_class: Vec<usize>,
    /// Caller-supplied identifiers of the explained rows.
    pub row_ids: Vec<usize>,
    pub class_mode: ClassMode,
    /// Variables by mean |φ|, largest first; ties keep model order.
    pub feature_order: Vec<usize>,
    /// Mean |φ| per variable under `class_mode`, in model order.
    pub mean_abs: Vec<f64>,
    pub model_kind: EnsembleKind,
    pub background: ShapBackgroundInfo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapBackgroundInfo {
    pub marginalization: String,
    pub size: usize,
    pub seed: Option<u64>,
    pub population: usize,
}

impl ShapExplanation {
    pub fn n_rows(&self) -> usize {
        self.predicted_class.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn phi_at(&self, row: usize, feature: usize, class: usize) -> f64 {
        self.phi[(row * self.n_features() + feature) * self.n_classes() + class]
    }

    /// The attribution of one row, as [`exact_shap`] returns it.
    pub fn attribution(&self, row: usize) -> Attribution {
        let c = self.n_classes();
        Attribution {
            base: self.base_values.clone(),
            phi: (0..self.n_features())
                .map(|f| (0..c).map(|k| self.phi_at(row, f, k)).collect())
                .collect(),
        }
    }

    /// Feature names in plot order.
    pub fn ordered_names(&self) -> Vec<&str> {
        self.feature_order
            .iter()
            .map(|&f| self.feature_names[f].as_str())
            .collect()
    }

    /// Replace the default `0..n` row identifiers.
    pub fn with_row_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.n_rows() {
            return Err(Error::Dimension {
                expected: self.n_rows(),
                found: ids.len(),
            });
        }
        self.row_ids = ids;
        Ok(self)
    }
}

/// Explain every row of `rows` against `bg`.
///
/// Identical rows are explained once. Rows are processed in parallel and
/// written back in input order.
pub fn shap_summary(
    model: &TreeEnsemble,
    rows: &IndicatorMatrix,
    bg: &BackgroundSet,
    mode: ClassMode,
) -> Result<ShapExplanation> {
    let n = rows.n_rows();
    if n == 0 {
        return Err(Error::Data("no rows to explain".into()));
    }
    let dense: Vec<Vec<u8>> = (0..n).map(|i| rows.dense_row(i)).collect();
    let m = check_inputs(model, &dense[0], bg)?;
    let c = model.n_classes();
    let owner = column_owner(model);
    let weights = Weights::new(m);
    let weighted = bg.weighted();

    let mut unique: BTreeMap<&[u8], usize> = BTreeMap::new();
    for r in &dense {
        let next = unique.len();
        unique.entry(r.as_slice()).or_insert(next);
    }
    let mut distinct: Vec<(&[u8], usize)> = unique.iter().map(|(r, &i)| (*r, i)).collect();
    distinct.sort_unstable_by_key(|&(_, i)| i);
    let solved: Vec<(Attribution, usize)> = distinct
        .par_iter()
        .map(|&(x, _)| {
            let a = path_shap(model, x, &weighted, &owner, &weights);
            let predicted = model.predict_class(x).expect("width checked");
            (a, predicted)
        })
        .collect();

    let base_values = solved[0].0.base.clone();
    let mut phi = Vec::with_capacity(n * m * c);
    let mut predicted_class = Vec::with_capacity(n);
    for r in &dense {
        let (a, p) = &solved[unique[r.as_slice()]];
        for row in &a.phi {
            phi.extend_from_slice(row);
        }
        predicted_class.push(*p);
    }

    let mut mean_abs = vec![0.0; m];
    for (i, &p) in predicted_class.iter().enumerate() {
        for (f, acc) in mean_abs.iter_mut().enumerate() {
            let at = (i * m + f) * c;
            *acc += match mode {
                ClassMode::PerClass => phi[at..at + c].iter().map(|v| v.abs()).sum(),
                ClassMode::PredictedClass => phi[at + p].abs(),
            };
        }
    }
    mean_abs.iter_mut().for_each(|v| *v /= n as f64);
    let mut feature_order: Vec<usize> = (0..m).collect();
    feature_order.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));

    Ok(ShapExplanation {
        classes: model.classes.clone(),
        feature_names: model.features.iter().map(|b| b.name.clone()).collect(),
        base_values,
        phi,
        predicted_class,
        row_ids: (0..n).collect(),
        class_mode: mode,
        feature_order,
        mean_abs,
        model_kind: model.kind,
        background: ShapBackgroundInfo {
            marginalization: "interventional".into(),
            size: bg.len(),
            seed: bg.seed,
            population: bg.population,
        },
    })
}
