use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::CategoricalDataset;
use crate::error::{Error, Result};

/// Column range of one variable inside the super-indicator matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub categories: Vec<String>,
    pub start: usize,
}

impl Block {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.categories.len()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// One-hot super-indicator matrix `Z` (n × J).
///
/// Stored sparsely: each row holds exactly one set column per block, so the
/// matrix is kept as the `q` active column indices of every row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorMatrix {
    n: usize,
    j: usize,
    blocks: Vec<Block>,
    active: Vec<u32>,
}

impl IndicatorMatrix {
    /// Assemble from per-row active columns. Each row must hit every block
    /// exactly once.
    pub fn from_active(blocks: Vec<Block>, active: Vec<u32>) -> Result<Self> {
        let q = blocks.len();
        if q == 0 {
            return Err(Error::Data("indicator matrix needs at least one variable".into()));
        }
        let j = blocks.iter().map(Block::len).sum();
        if !active.len().is_multiple_of(q) || active.is_empty() {
            return Err(Error::Dimension {
                expected: q,
                found: active.len() % q,
            });
        }
        for row in active.chunks(q) {
            for (b, &c) in blocks.iter().zip(row) {
                if !b.range().contains(&(c as usize)) {
                    return Err(Error::Data(format!("column {c} outside block `{}`", b.name)));
                }
            }
        }
        Ok(IndicatorMatrix {
            n: active.len() / q,
            j,
            blocks,
            active,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.j
    }

    /// Number of active variables.
    pub fn q(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Set columns of row `i`, one per block.
    pub fn active(&self, i: usize) -> &[u32] {
        let q = self.q();
        &self.active[i * q..(i + 1) * q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.active.chunks(self.q())
    }

    pub fn dense_row(&self, i: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.j];
        for &c in self.active(i) {
            out[c as usize] = 1;
        }
        out
    }

    /// Row-major dense copy.
    pub fn dense(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.n * self.j];
        for (i, row) in self.rows().enumerate() {
            for &c in row {
                out[i * self.j + c as usize] = 1;
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.j];
        for &c in &self.active {
            sums[c as usize] += 1;
        }
        sums
    }

    /// Block index owning column `c`.
    pub fn block_of(&self, c: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.range().contains(&c))
            .expect("column inside matrix")
    }

    pub fn column_label(&self, c: usize) -> String {
        let b = &self.blocks[self.block_of(c)];
        format!("{}={}", b.name, b.categories[c - b.start])
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Self {
        let active = rows.iter().flat_map(|&i| self.active(i).iter().copied()).collect();
        IndicatorMatrix {
            n: rows.len(),
            j: self.j,
            blocks: self.blocks.clone(),
            active,
        }
    }
}

/// Block one-hot encoding of the named variables. Columns follow schema order
/// regardless of the order of `active_vars`.
pub fn indicator(ds: &CategoricalDataset, active_vars: &[String]) -> Result<IndicatorMatrix> {
    if active_vars.is_empty() {
        return Err(Error::Config("no active variables for the indicator matrix".into()));
    }
    let mut idx = Vec::with_capacity(active_vars.len());
    for name in active_vars {
        let i = ds
            .schema()
            .index_of(name)
            .ok_or_else(|| Error::Data(format!("unknown variable `{name}`")))?;
        idx.push(i);
    }
    idx.sort_unstable();
    idx.dedup();

    let mut blocks = Vec::with_capacity(idx.len());
    let mut start = 0;
    for &i in &idx {
        let v = &ds.schema().variables()[i];
        blocks.push(Block {
            name: v.name.clone(),
            categories: v.categories.clone(),
            start,
        });
        start += v.categories.len();
    }
    let mut active = Vec::with_capacity(ds.n_rows() * idx.len());
    for row in ds.rows() {
        for (b, &i) in blocks.iter().zip(&idx) {
            active.push((b.start + row[i] as usize) as u32);
        }
    }
    IndicatorMatrix::from_active(blocks, active)
}

/// Cluster-by-category count table `F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyMatrix {
    k: usize,
    j: usize,
    q: usize,
    counts: Vec<u64>,
}

impl ContingencyMatrix {
    /// A free-standing K × J count table. `q` is the number of variables the
    /// columns span (1 for an ordinary two-way table).
    pub fn from_counts(k: usize, j: usize, q: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != k * j {
            return Err(Error::Dimension {
                expected: k * j,
                found: counts.len(),
            });
        }
        if k == 0 || j == 0 || q == 0 {
            return Err(Error::Data("contingency table must be non-empty".into()));
        }
        Ok(ContingencyMatrix { k, j, q, counts })
    }

    pub fn n_rows(&self) -> usize {
        self.k
    }

    pub fn n_cols(&self) -> usize {
        self.j
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, k: usize, j: usize) -> u64 {
        self.counts[k * self.j + j]
    }

    pub fn row(&self, k: usize) -> &[u64] {
        &self.counts[k * self.j..(k + 1) * self.j]
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.k).map(|k| self.row(k).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0; self.j];
        for row in self.counts.chunks(self.j) {
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }
}

/// `F = Z_Kᵀ Z`: per cluster, how many of its members hold each category.
pub fn contingency(z: &IndicatorMatrix, assign: &[usize], k: usize) -> Result<ContingencyMatrix> {
    if assign.len() != z.n_rows() {
        return Err(Error::Dimension {
            expected: z.n_rows(),
            found: assign.len(),
        });
    }
    let mut counts = vec![0u64; k * z.n_cols()];
    for (row, &label) in z.rows().zip(assign) {
        if label >= k {
            return Err(Error::Data(format!("cluster label {label} outside [0, {k})")));
        }
        for &c in row {
            counts[label * z.n_cols() + c as usize] += 1;
        }
    }
    ContingencyMatrix::from_counts(k, z.n_cols(), z.q(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Schema, Variable};
    use proptest::prelude::*;

    fn single_var(codes: Vec<u32>) -> CategoricalDataset {
        let schema = Schema::new(vec![Variable::new("A", ["x", "y", "z"])], None).unwrap();
        CategoricalDataset::new(schema, codes).unwrap()
    }

    fn two_by_two() -> CategoricalDataset {
        let schema = Schema::new(
            vec![Variable::new("A", ["a0", "a1"]), Variable::new("B", ["b0", "b1"])],
            None,
        )
        .unwrap();
        CategoricalDataset::new(schema, vec![0, 0, 0, 1, 1, 0, 1, 1]).unwrap()
    }

    #[test]
    fn one_variable_three_categories() {
        let z = indicator(&single_var(vec![0, 2, 1]), &["A".into()]).unwrap();
        assert_eq!(z.dense(), vec![1, 0, 0, 0, 0, 1, 0, 1, 0]);
        assert_eq!(z.q(), 1);
    }

    #[test]
    fn two_variables_enumerated() {
        let z = indicator(&two_by_two(), &["B".into(), "A".into()]).unwrap();
        // columns: a0 a1 b0 b1
        let expected = vec![
            1, 0, 1, 0, //
            1, 0, 0, 1, //
            0, 1, 1, 0, //
            0, 1, 0, 1,
        ];
        assert_eq!(z.dense(), expected);
        assert_eq!(z.column_label(3), "B=b1");
        assert!(indicator(&two_by_two(), &[]).is_err());
        assert!(indicator(&two_by_two(), &["C".into()]).is_err());
    }

    #[test]
    fn contingency_by_hand() {
        let z = indicator(&two_by_two(), &["A".into(), "B".into()]).unwrap();
        // clusters {0,3} and {1,2}
        let f = contingency(&z, &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(f.row(0), &[1, 1, 1, 1]);
        assert_eq!(f.row(1), &[1, 1, 1, 1]);
        // clusters {0,1} and {2,3}
        let f = contingency(&z, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(f.row(0), &[2, 0, 1, 1]);
        assert_eq!(f.row(1), &[0, 2, 1, 1]);
        assert_eq!(f.grand_total(), 8);
        assert!(contingency(&z, &[0, 0, 2, 1], 2).is_err());
        assert!(contingency(&z, &[0, 0, 1], 2).is_err());
    }

    #[test]
    fn single_cluster_row_is_column_sums() {
        let z = indicator(&two_by_two(), &["A".into(), "B".into()]).unwrap();
        let f = contingency(&z, &[0; 4], 1).unwrap();
        assert_eq!(f.row(0), z.column_sums().as_slice());
    }

    proptest! {
        #[test]
        fn indicator_and_contingency_invariants(
            (codes, labels) in (1usize..50).prop_flat_map(|n| (
                proptest::collection::vec(0u32..3, n * 5),
                proptest::collection::vec(0usize..4, n),
            ))
        ) {
            let schema = Schema::new(
                (0..5).map(|i| Variable::new(format!("V{i}"), ["a", "b", "c"])).collect(),
                None,
            ).unwrap();
            let ds = CategoricalDataset::new(schema, codes).unwrap();
            let names = ds.schema().explanatory_names();
            let z = indicator(&ds, &names).unwrap();
            let dense = z.dense();
            for row in dense.chunks(z.n_cols()) {
                prop_assert_eq!(row.iter().map(|&v| v as usize).sum::<usize>(), z.q());
            }
            let f = contingency(&z, &labels, 4).unwrap();
            prop_assert_eq!(f.grand_total(), (z.n_rows() * z.q()) as u64);
            prop_assert_eq!(f.column_sums(), z.column_sums());
            for (k, s) in f.row_sums().into_iter().enumerate() {
                let size = labels.iter().filter(|&&l| l == k).count() as u64;
                prop_assert_eq!(s, size * z.q() as u64);
            }
        }
    }
}
