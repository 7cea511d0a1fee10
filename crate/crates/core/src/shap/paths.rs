//! Exact interventional Shapley values of a tree ensemble, one
//! (explained row, background row) pair at a time.
//!
//! For a fixed pair, a leaf is reached by the hybrid row of coalition `S`
//! exactly when every variable in `A` (splits only the explained row follows)
//! is in `S` and every variable in `B` (splits only the background row
//! follows) is not. The Shapley values of that indicator game are closed
//! form, so each reachable leaf adds
//! `v / (|A| · C(|A|+|B|, |A|))` to the members of `A` and subtracts
//! `v / (|B| · C(|A|+|B|, |B|))` from the members of `B`.

use crate::ensembles::{Tree, TreeNode};

const FREE: u8 = 0;
const FROM_X: u8 = 1;
const FROM_BG: u8 = 2;

/// Shapley weights of the leaf indicator game, indexed by `(|A|, |B|)`.
pub(crate) struct Weights {
    m: usize,
    binom: Vec<f64>,
}

impl Weights {
    pub(crate) fn new(m: usize) -> Self {
        let size = 2 * m + 1;
        let mut binom = vec![0.0; size * size];
        for n in 0..size {
            binom[n * size] = 1.0;
            for k in 1..=n {
                binom[n * size + k] =
                    binom[(n - 1) * size + k - 1] + if k < n { binom[(n - 1) * size + k] } else { 0.0 };
            }
        }
        Weights { m, binom }
    }

    pub(crate) fn binom(&self, n: usize, k: usize) -> f64 {
        self.binom[n * (2 * self.m + 1) + k]
    }

    /// Weight for a member of the side of size `own` when the other side has
    /// size `other`.
    fn member(&self, own: usize, other: usize) -> f64 {
        1.0 / (own as f64 * self.binom(own + other, own))
    }
}

/// Accumulates one pair's attributions.
pub(crate) struct PairWalk<'a> {
    pub owner: &'a [usize],
    pub weights: &'a Weights,
    pub x: &'a [u8],
    pub bg: &'a [u8],
    /// M × C, row-major.
    pub phi: &'a mut [f64],
    pub base: &'a mut [f64],
    pub scale: f64,
    pub state: Vec<u8>,
}

impl PairWalk<'_> {
    pub(crate) fn tree(&mut self, tree: &Tree) {
        self.state.iter_mut().for_each(|s| *s = FREE);
        self.node(tree, 0, 0, 0);
    }

    fn node(&mut self, tree: &Tree, at: usize, a: usize, b: usize) {
        match &tree.nodes[at] {
            TreeNode::Leaf { scores } => self.leaf(scores, a, b),
            &TreeNode::Split { column, left, right } => {
                let xd = self.x[column] != 0;
                let bd = self.bg[column] != 0;
                if xd == bd {
                    self.node(tree, if xd { right } else { left }, a, b);
                    return;
                }
                let (x_child, bg_child) = if xd { (right, left) } else { (left, right) };
                let v = self.owner[column];
                match self.state[v] {
                    FROM_X => self.node(tree, x_child, a, b),
                    FROM_BG => self.node(tree, bg_child, a, b),
                    _ => {
                        self.state[v] = FROM_X;
                        self.node(tree, x_child, a + 1, b);
                        self.state[v] = FROM_BG;
                        self.node(tree, bg_child, a, b + 1);
                        self.state[v] = FREE;
                    }
                }
            }
        }
    }

    fn leaf(&mut self, scores: &[f64], a: usize, b: usize) {
        let c = scores.len();
        if a == 0 {
            for (acc, s) in self.base.iter_mut().zip(scores) {
                *acc += self.scale * s;
            }
        }
        let w_x = if a > 0 {
            self.scale * self.weights.member(a, b)
        } else {
            0.0
        };
        let w_bg = if b > 0 {
            -self.scale * self.weights.member(b, a)
        } else {
            0.0
        };
        for (v, &st) in self.state.iter().enumerate() {
            let w = match st {
                FROM_X => w_x,
                FROM_BG => w_bg,
                _ => continue,
            };
            for (acc, s) in self.phi[v * c..(v + 1) * c].iter_mut().zip(scores) {
                *acc += w * s;
            }
        }
    }
}
