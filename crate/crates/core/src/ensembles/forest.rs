use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{canonical_order, Design, Tree, TreeNode};
use super::{
    aggregate_importances, class_priors, distinct_classes, validate_training, EnsembleKind, Hyperparams, TreeEnsemble,
};
use crate::dataset::IndicatorMatrix;
use crate::error::Result;
use crate::rng::item_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Columns examined per split; `None` means `round(√J)`.
    #[serde(default)]
    pub feature_subsample: Option<usize>,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 200,
            max_depth: 12,
            min_leaf: 5,
            feature_subsample: None,
            seed: 0,
        }
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    design: Design<'a>,
    y: &'a [usize],
    n_classes: usize,
    params: &'a RfParams,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    /// Weighted impurity decrease per column, in units of samples.
    gain: Vec<f64>,
}

impl Builder<'_> {
    fn leaf(&mut self, counts: &[usize], n: usize) -> usize {
        let scores = counts.iter().map(|&c| c as f64 / n as f64).collect();
        self.nodes.push(TreeNode::Leaf { scores });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len();
        let mut counts = vec![0usize; self.n_classes];
        for &r in &rows {
            counts[self.y[r]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || n < 2 * self.params.min_leaf.max(1) {
            return self.leaf(&counts, n);
        }
        let parent = n as f64 * gini(&counts, n);

        let mut columns: Vec<usize> = (0..self.design.width).collect();
        columns.shuffle(&mut self.rng);
        let mut examined = 0;
        let mut best: Option<(usize, f64)> = None;
        let mut right = vec![0usize; self.n_classes];
        for &c in &columns {
            if examined == self.mtry {
                break;
            }
            right.iter_mut().for_each(|v| *v = 0);
            let mut n_right = 0;
            for &r in &rows {
                if self.design.get(r, c) != 0 {
                    right[self.y[r]] += 1;
                    n_right += 1;
                }
            }
            if n_right == 0 || n_right == n {
                continue;
            }
            examined += 1;
            let n_left = n - n_right;
            if n_left < self.params.min_leaf || n_right < self.params.min_leaf {
                continue;
            }
            let left: Vec<usize> = counts.iter().zip(&right).map(|(a, b)| a - b).collect();
            let child = n_left as f64 * gini(&left, n_left) + n_right as f64 * gini(&right, n_right);
            let decrease = parent - child;
            if decrease > 1e-12 && best.is_none_or(|(_, g)| decrease > g) {
                best = Some((c, decrease));
            }
        }
        let Some((column, decrease)) = best else {
            return self.leaf(&counts, n);
        };
        self.gain[column] += decrease;

        let (lrows, rrows): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| self.design.get(r, column) == 0);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Split {
            column,
            left: 0,
            right: 0,
        });
        let l = self.grow(lrows, depth + 1);
        let r = self.grow(rrows, depth + 1);
        self.nodes[at] = TreeNode::Split {
            column,
            left: l,
            right: r,
        };
        at
    }
}

/// Bootstrap-aggregated CART classifiers split by Gini gain.
///
/// Variable importance is the total weighted Gini decrease of every split on
/// one of the variable's columns, summed over trees and normalised to 1.
/// With fewer than two classes present the result is a constant model that
/// predicts the class priors and reports zero importances.
pub fn train_random_forest(
    z: &IndicatorMatrix,
    y: &[usize],
    classes: &[String],
    params: &RfParams,
) -> Result<TreeEnsemble> {
    validate_training(z, y, classes)?;
    let n_classes = classes.len();
    let priors = class_priors(y, n_classes);
    let mut model = TreeEnsemble {
        kind: EnsembleKind::RandomForest,
        classes: classes.to_vec(),
        features: z.blocks().to_vec(),
        width: z.n_cols(),
        init: priors,
        tree_weight: 0.0,
        trees: Vec::new(),
        importances: vec![0.0; z.q()],
        degenerate: true,
        hyperparams: Hyperparams::RandomForest(params.clone()),
    };
    if distinct_classes(y) < 2 || params.n_trees == 0 {
        return Ok(model);
    }

    let dense = z.dense();
    let design = Design {
        x: &dense,
        width: z.n_cols(),
    };
    let order = canonical_order(design, y);
    let mtry = params
        .feature_subsample
        .unwrap_or_else(|| (z.n_cols() as f64).sqrt().round() as usize)
        .clamp(1, z.n_cols());
    let n = y.len();

    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = item_rng(params.seed, t as u64);
            let mut picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            picks.sort_unstable();
            let sample = picks.into_iter().map(|p| order[p]).collect();
            let mut b = Builder {
                design,
                y,
                n_classes,
                params,
                mtry,
                rng,
                nodes: Vec::new(),
                gain: vec![0.0; design.width],
            };
            b.grow(sample, 0);
            let gain = b.gain.iter().map(|g| g / n as f64).collect();
            (Tree { nodes: b.nodes }, gain)
        })
        .collect();

    let mut column_gain = vec![0.0; z.n_cols()];
    for (_, g) in &grown {
        for (acc, v) in column_gain.iter_mut().zip(g) {
            *acc += v;
        }
    }
    model.importances = aggregate_importances(&column_gain, z.blocks());
    model.tree_weight = 1.0 / grown.len() as f64;
    model.init = vec![0.0; n_classes];
    model.trees = grown.into_iter().map(|(t, _)| t).collect();
    model.degenerate = false;
    Ok(model)
}
