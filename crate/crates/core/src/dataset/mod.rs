//! Categorical tables: schema, ingestion, skew filtering, and the indicator
//! and contingency matrices that feed correspondence analysis.

mod csv_io;
mod filter;
mod indicator;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, SchemaMode};
pub use filter::{skew_filter, FilterEntry, FilterReport, DEFAULT_SKEW_THRESHOLD};
pub use indicator::{contingency, indicator, Block, ContingencyMatrix, IndicatorMatrix};

/// A categorical variable and its ordered category labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub categories: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Variable {
            name: name.into(),
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

/// Ordered variable roster plus the optional name of the outcome variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    variables: Vec<Variable>,
    target: Option<String>,
}

impl Schema {
    pub fn new(variables: Vec<Variable>, target: Option<String>) -> Result<Self> {
        let mut names = HashSet::new();
        for v in &variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::Data(format!("duplicate variable name `{}`", v.name)));
            }
            if v.categories.len() < 2 {
                return Err(Error::Data(format!(
                    "variable `{}` has {} categories; at least 2 are required",
                    v.name,
                    v.categories.len()
                )));
            }
            let mut seen = HashSet::new();
            for c in &v.categories {
                if !seen.insert(c.as_str()) {
                    return Err(Error::Data(format!("variable `{}` lists category `{c}` twice", v.name)));
                }
            }
        }
        if let Some(t) = &target {
            if !names.contains(t.as_str()) {
                return Err(Error::Data(format!("target `{t}` is not a schema variable")));
            }
        }
        Ok(Schema { variables, target })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn target_index(&self) -> Option<usize> {
        self.target.as_deref().and_then(|t| self.index_of(t))
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    /// Names of every variable except the target, in schema order.
    pub fn explanatory_names(&self) -> Vec<String> {
        self.variables
            .iter()
            .filter(|v| Some(v.name.as_str()) != self.target())
            .map(|v| v.name.clone())
            .collect()
    }
}

/// `n` observations of `Q` categorical variables stored as category indices,
/// row-major. The target, if any, is one of the `Q` columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalDataset {
    schema: Schema,
    codes: Vec<u32>,
}

impl CategoricalDataset {
    pub fn new(schema: Schema, codes: Vec<u32>) -> Result<Self> {
        let q = schema.len();
        if q == 0 {
            return Err(Error::Data("dataset has no variables".into()));
        }
        if codes.is_empty() || !codes.len().is_multiple_of(q) {
            return Err(Error::Data(format!(
                "{} codes cannot form complete rows of {q} variables",
                codes.len()
            )));
        }
        for (i, row) in codes.chunks(q).enumerate() {
            for (v, &c) in schema.variables.iter().zip(row) {
                if c as usize >= v.categories.len() {
                    return Err(Error::Data(format!(
                        "row {}: code {c} out of range for `{}`",
                        i + 1,
                        v.name
                    )));
                }
            }
        }
        Ok(CategoricalDataset { schema, codes })
    }

    /// Build from per-row category labels.
    pub fn from_labels<R, S>(schema: Schema, rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut codes = Vec::new();
        for (i, row) in rows.into_iter().enumerate() {
            let before = codes.len();
            for (v, label) in schema.variables.iter().zip(row) {
                let label = label.as_ref();
                let c = v.category_index(label).ok_or_else(|| {
                    Error::Data(format!("row {}: unknown category `{label}` for `{}`", i + 1, v.name))
                })?;
                codes.push(c as u32);
            }
            if codes.len() - before != schema.len() {
                return Err(Error::Data(format!("row {} is incomplete", i + 1)));
            }
        }
        Self::new(schema, codes)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.codes.len() / self.schema.len()
    }

    pub fn n_vars(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let q = self.schema.len();
        &self.codes[i * q..(i + 1) * q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.codes.chunks(self.schema.len())
    }

    pub fn value(&self, row: usize, var: usize) -> u32 {
        self.codes[row * self.schema.len() + var]
    }

    pub fn column(&self, var: usize) -> impl Iterator<Item = u32> + '_ {
        self.rows().map(move |r| r[var])
    }

    /// Target codes, if the schema names a target.
    pub fn target_values(&self) -> Option<Vec<u32>> {
        self.schema.target_index().map(|t| self.column(t).collect())
    }

    /// Per-category counts of one variable.
    pub fn category_counts(&self, var: usize) -> Vec<usize> {
        let mut counts = vec![0; self.schema.variables[var].categories.len()];
        for c in self.column(var) {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Keep only the named variables (in schema order). The target survives
    /// only if it is named.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let mut keep = Vec::new();
        for name in names {
            let idx = self
                .schema
                .index_of(name)
                .ok_or_else(|| Error::Data(format!("unknown variable `{name}`")))?;
            keep.push(idx);
        }
        keep.sort_unstable();
        keep.dedup();
        self.project(&keep)
    }

    fn project(&self, keep: &[usize]) -> Result<Self> {
        let variables = keep.iter().map(|&i| self.schema.variables[i].clone()).collect();
        let target = self
            .schema
            .target_index()
            .filter(|t| keep.contains(t))
            .map(|t| self.schema.variables[t].name.clone());
        let schema = Schema::new(variables, target)?;
        let codes = self.rows().flat_map(|r| keep.iter().map(move |&i| r[i])).collect();
        Self::new(schema, codes)
    }

    /// Dataset restricted to the given observation indices, in that order.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        let codes = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self::new(self.schema.clone(), codes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weather_light() -> Schema {
        Schema::new(
            vec![
                Variable::new("Weather", ["Clear", "Rain"]),
                Variable::new("Light", ["Day", "Dark"]),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn schema_rejects_bad_rosters() {
        let dup = Schema::new(
            vec![Variable::new("A", ["x", "y"]), Variable::new("A", ["x", "y"])],
            None,
        );
        assert!(dup.is_err());
        assert!(Schema::new(vec![Variable::new("A", ["x"])], None).is_err());
        assert!(Schema::new(vec![Variable::new("A", ["x", "x"])], None).is_err());
        assert!(Schema::new(vec![Variable::new("A", ["x", "y"])], Some("B".into())).is_err());
    }

    #[test]
    fn codes_must_be_in_range() {
        assert!(CategoricalDataset::new(weather_light(), vec![0, 2]).is_err());
        assert!(CategoricalDataset::new(weather_light(), vec![]).is_err());
        assert!(CategoricalDataset::new(weather_light(), vec![0, 1, 1]).is_err());
    }

    #[test]
    fn select_keeps_schema_order() {
        let ds = CategoricalDataset::from_labels(weather_light(), [["Clear", "Dark"], ["Rain", "Day"]]).unwrap();
        let sub = ds.select(&["Light".into(), "Weather".into()]).unwrap();
        assert_eq!(sub.schema().variables()[0].name, "Weather");
        assert_eq!(sub.row(0), &[0, 1]);
        let light = ds.select(&["Light".into()]).unwrap();
        assert_eq!(light.column(0).collect::<Vec<_>>(), vec![1, 0]);
        assert!(ds.select(&["Nope".into()]).is_err());
    }
}
