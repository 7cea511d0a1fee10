use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{canonical_order, Design, Tree, TreeNode};
use super::{
    aggregate_importances, class_priors, distinct_classes, softmax, validate_training, EnsembleKind, Hyperparams,
    TreeEnsemble,
};
use crate::dataset::IndicatorMatrix;
use crate::error::{Error, Result};
use crate::rng::item_rng;

/// Smallest prior used for the initial log-odds of a class absent from
/// training.
const PRIOR_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// L2 penalty on leaf values.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Orders the columns examined at each split, which decides ties.
    pub seed: u64,
}

fn default_lambda() -> f64 {
    1.0
}

impl Default for GbParams {
    fn default() -> Self {
        GbParams {
            n_rounds: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_leaf: 5,
            lambda: 1.0,
            seed: 0,
        }
    }
}

impl GbParams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be ≥ 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Second-order regression tree on one class's gradients.
struct Builder<'a> {
    design: Design<'a>,
    grad: &'a [f64],
    hess: &'a [f64],
    class: usize,
    n_classes: usize,
    params: &'a GbParams,
    columns: &'a [usize],
    nodes: Vec<TreeNode>,
    gain: Vec<f64>,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn leaf(&mut self, g: f64, h: f64) -> usize {
        let denom = h + self.params.lambda;
        let value = if denom > 0.0 {
            -g / denom * self.params.learning_rate
        } else {
            0.0
        };
        let mut scores = vec![0.0; self.n_classes];
        scores[self.class] = value;
        self.nodes.push(TreeNode::Leaf { scores });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (g, h) = rows
            .iter()
            .fold((0.0, 0.0), |(g, h), &r| (g + self.grad[r], h + self.hess[r]));
        let n = rows.len();
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf.max(1) {
            return self.leaf(g, h);
        }
        let parent = self.score(g, h);
        let mut best: Option<(usize, f64)> = None;
        for &c in self.columns {
            let (mut gr, mut hr, mut nr) = (0.0, 0.0, 0usize);
            for &r in &rows {
                if self.design.get(r, c) != 0 {
                    gr += self.grad[r];
                    hr += self.hess[r];
                    nr += 1;
                }
            }
            if nr < self.params.min_leaf || n - nr < self.params.min_leaf {
                continue;
            }
            let gain = 0.5 * (self.score(g - gr, h - hr) + self.score(gr, hr) - parent);
            if gain > 1e-12 && best.is_none_or(|(_, b)| gain > b) {
                best = Some((c, gain));
            }
        }
        let Some((column, gain)) = best else {
            return self.leaf(g, h);
        };
        self.gain[column] += gain;
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

/// Multiclass gradient boosting under a softmax link and log-loss.
///
/// Each round fits one depth-limited tree per class to the Newton step of the
/// loss, using gradient `p − y`, hessian `2p(1 − p)` and an L2 penalty
/// `lambda` on leaf values, then shrinks the leaves by `learning_rate`.
/// Importance is the total split gain per variable, normalised to 1.
pub fn train_gradient_boosting(
    z: &IndicatorMatrix,
    y: &[usize],
    classes: &[String],
    params: &GbParams,
) -> Result<TreeEnsemble> {
    validate_training(z, y, classes)?;
    params.validate()?;
    let n_classes = classes.len();
    let priors = class_priors(y, n_classes);
    let init: Vec<f64> = priors.iter().map(|p| p.max(PRIOR_FLOOR).ln()).collect();
    let mut model = TreeEnsemble {
        kind: EnsembleKind::GradientBoosting,
        classes: classes.to_vec(),
        features: z.blocks().to_vec(),
        width: z.n_cols(),
        init: init.clone(),
        tree_weight: 1.0,
        trees: Vec::new(),
        importances: vec![0.0; z.q()],
        degenerate: true,
        hyperparams: Hyperparams::GradientBoosting(params.clone()),
    };
    if distinct_classes(y) < 2 {
        return Ok(model);
    }

    let dense = z.dense();
    let design = Design {
        x: &dense,
        width: z.n_cols(),
    };
    let order = canonical_order(design, y);
    let n = y.len();
    let mut margins: Vec<Vec<f64>> = vec![init; n];
    let mut column_gain = vec![0.0; z.n_cols()];

    for round in 0..params.n_rounds {
        let probs: Vec<Vec<f64>> = margins.iter().map(|m| softmax(m)).collect();
        let mut columns: Vec<usize> = (0..z.n_cols()).collect();
        columns.shuffle(&mut item_rng(params.seed, round as u64));
        let grown: Vec<(Tree, Vec<f64>)> = (0..n_classes)
            .into_par_iter()
            .map(|c| {
                let grad: Vec<f64> = (0..n).map(|i| probs[i][c] - f64::from(u8::from(y[i] == c))).collect();
                let hess: Vec<f64> = (0..n).map(|i| 2.0 * probs[i][c] * (1.0 - probs[i][c])).collect();
                let mut b = Builder {
                    design,
                    grad: &grad,
                    hess: &hess,
                    class: c,
                    n_classes,
                    params,
                    columns: &columns,
                    nodes: Vec::new(),
                    gain: vec![0.0; z.n_cols()],
                };
                b.grow(order.clone(), 0);
                (Tree { nodes: b.nodes }, b.gain)
            })
            .collect();
        for (tree, gain) in grown {
            for (i, m) in margins.iter_mut().enumerate() {
                for (v, s) in m.iter_mut().zip(tree.leaf_scores(design.row(i))) {
                    *v += s;
                }
            }
            for (acc, g) in column_gain.iter_mut().zip(gain) {
                *acc += g;
            }
            model.trees.push(tree);
        }
    }

    model.importances = aggregate_importances(&column_gain, z.blocks());
    model.degenerate = false;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::toy;

    fn log_loss(model: &TreeEnsemble, z: &IndicatorMatrix, y: &[usize]) -> f64 {
        (0..z.n_rows())
            .map(|i| -model.predict_proba(&z.dense_row(i)).unwrap()[y[i]].ln())
            .sum::<f64>()
            / z.n_rows() as f64
    }

    fn first_rounds(model: &TreeEnsemble, rounds: usize) -> TreeEnsemble {
        let mut m = model.clone();
        m.trees.truncate(rounds * m.n_classes());
        m
    }

    #[test]
    fn zero_learning_rate_predicts_priors() {
        let ds = toy::dataset(90, 2, |r| (r[0] * 2 + r[1]) % 3);
        let (z, y, classes) = toy::design(&ds);
        let params = GbParams {
            n_rounds: 5,
            learning_rate: 0.0,
            ..Default::default()
        };
        let m = train_gradient_boosting(&z, &y, &classes, &params).unwrap();
        let priors = class_priors(&y, 3);
        for i in 0..z.n_rows() {
            let p = m.predict_proba(&z.dense_row(i)).unwrap();
            for (a, b) in p.iter().zip(&priors) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_target_gives_priors() {
        let ds = toy::dataset(40, 8, |_| 2);
        let (z, y, classes) = toy::design(&ds);
        let m = train_gradient_boosting(&z, &y, &classes, &GbParams::default()).unwrap();
        assert!(m.degenerate);
        assert!(m.importances.iter().all(|&v| v == 0.0));
        let p = m.predict_proba(&z.dense_row(0)).unwrap();
        assert!((p[2] - 1.0).abs() < 1e-12 && p[0] < 1e-12);
    }

    #[test]
    fn training_loss_never_increases() {
        let ds = toy::dataset(200, 13, |r| {
            if r[0] == 0 {
                0
            } else if r[1] == r[2] {
                1
            } else {
                2
            }
        });
        let (z, y, classes) = toy::design(&ds);
        let params = GbParams {
            n_rounds: 30,
            ..Default::default()
        };
        let m = train_gradient_boosting(&z, &y, &classes, &params).unwrap();
        let losses: Vec<f64> = (0..=params.n_rounds)
            .map(|r| log_loss(&first_rounds(&m, r), &z, &y))
            .collect();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0], "{losses:?}");
        }
    }

    #[test]
    fn separable_toy_is_fit_within_fifty_rounds() {
        let (z, y, classes) = toy::separable(240, 17);
        let m = train_gradient_boosting(
            &z,
            &y,
            &classes,
            &GbParams {
                n_rounds: 50,
                ..Default::default()
            },
        )
        .unwrap();
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(m.predict_class(&z.dense_row(i)).unwrap(), label);
        }
        assert!(m.importances[1..].iter().all(|&v| m.importances[0] > v));
        assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_stump_toggles_with_its_column() {
        let (z, y, classes) = toy::separable(120, 3);
        let params = GbParams {
            n_rounds: 1,
            max_depth: 1,
            ..Default::default()
        };
        let m = train_gradient_boosting(&z, &y, &classes, &params).unwrap();
        let TreeNode::Split { column, .. } = m.trees[0].nodes[0] else {
            panic!("expected a split at the root");
        };
        let mut x = vec![0u8; z.n_cols()];
        let off = m.predict_proba(&x).unwrap();
        x[column] = 1;
        let on = m.predict_proba(&x).unwrap();
        assert_ne!(off, on);
        assert!((on.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invariant_to_row_order_and_threads() {
        let ds = toy::dataset(120, 6, |r| (r[2] + r[4]) % 3);
        let (z, y, classes) = toy::design(&ds);
        let params = GbParams {
            n_rounds: 10,
            ..Default::default()
        };
        let m = train_gradient_boosting(&z, &y, &classes, &params).unwrap();
        let perm: Vec<usize> = (0..z.n_rows()).rev().collect();
        let yp: Vec<usize> = perm.iter().map(|&i| y[i]).collect();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let mp = single.install(|| train_gradient_boosting(&z.subset_rows(&perm), &yp, &classes, &params).unwrap());
        assert_eq!(m, mp);
    }

    #[test]
    fn rejects_negative_learning_rate() {
        let (z, y, classes) = toy::separable(30, 1);
        let params = GbParams {
            learning_rate: -0.1,
            ..Default::default()
        };
        assert!(matches!(
            train_gradient_boosting(&z, &y, &classes, &params),
            Err(Error::Config(_))
        ));
    }
}
