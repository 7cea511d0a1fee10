use serde::{Deserialize, Serialize};

/// A node of a binary tree over 0/1 indicator columns. Nodes live in a flat
/// arena with the root at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[column] == 0` go left.
    Split { column: usize, left: usize, right: usize },
    /// One score per class.
    Leaf { scores: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(scores: Vec<f64>) -> Self {
        Tree {
            nodes: vec![TreeNode::Leaf { scores }],
        }
    }

    /// Scores of the leaf reached by `x`.
    pub fn leaf_scores(&self, x: &[u8]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split { column, left, right } => {
                    at = if x[*column] == 0 { *left } else { *right };
                }
                TreeNode::Leaf { scores } => return scores,
            }
        }
    }

    pub fn columns_used(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Split { column, .. } => Some(*column),
            TreeNode::Leaf { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, at: usize) -> usize {
            match &t.nodes[at] {
                TreeNode::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }

    /// Structural checks used after deserialisation.
    pub(crate) fn check(&self, width: usize, n_classes: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                TreeNode::Split { column, left, right } => {
                    if *column >= width {
                        return Err(format!("node {i} splits on column {column} ≥ width {width}"));
                    }
                    if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(format!("node {i} has invalid children"));
                    }
                }
                TreeNode::Leaf { scores } => {
                    if scores.len() != n_classes {
                        return Err(format!("leaf {i} has {} scores for {n_classes} classes", scores.len()));
                    }
                    if scores.iter().any(|s| !s.is_finite()) {
                        return Err(format!("leaf {i} has a non-finite score"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Training rows as a dense row-major 0/1 matrix.
#[derive(Clone, Copy, Debug)]
pub struct Design<'a> {
    pub x: &'a [u8],
    pub width: usize,
}

impl<'a> Design<'a> {
    pub fn row(&self, i: usize) -> &'a [u8] {
        &self.x[i * self.width..(i + 1) * self.width]
    }

    pub fn n_rows(&self) -> usize {
        self.x.len() / self.width.max(1)
    }

    #[inline]
    pub fn get(&self, i: usize, c: usize) -> u8 {
        self.x[i * self.width + c]
    }
}

/// Row order that depends only on row contents and labels, so training on
/// any permutation of the same rows gives identical trees.
pub(crate) fn canonical_order(design: Design<'_>, y: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| design.row(a).cmp(design.row(b)).then(y[a].cmp(&y[b])));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_hand_trace() {
        // root splits on column 1; left leaf, right splits on column 0
        let tree = Tree {
            nodes: vec![
                TreeNode::Split {
                    column: 1,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { scores: vec![0.9, 0.1] },
                TreeNode::Split {
                    column: 0,
                    left: 3,
                    right: 4,
                },
                TreeNode::Leaf { scores: vec![0.3, 0.7] },
                TreeNode::Leaf { scores: vec![0.0, 1.0] },
            ],
        };
        assert_eq!(tree.leaf_scores(&[1, 0]), &[0.9, 0.1]);
        assert_eq!(tree.leaf_scores(&[0, 1]), &[0.3, 0.7]);
        assert_eq!(tree.leaf_scores(&[1, 1]), &[0.0, 1.0]);
        assert_eq!(tree.depth(), 2);
        assert!(tree.check(2, 2).is_ok());
        assert!(tree.check(1, 2).is_err());
        assert!(tree.check(2, 3).is_err());
    }

    #[test]
    fn json_shape() {
        let t = Tree {
            nodes: vec![
                TreeNode::Split {
                    column: 3,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { scores: vec![1.0] },
                TreeNode::Leaf { scores: vec![0.0] },
            ],
        };
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains(r#""type":"split""#));
        let back: Tree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
