use serde::{Deserialize, Serialize};

use super::CategoricalDataset;
use crate::error::{Error, Result};

pub const DEFAULT_SKEW_THRESHOLD: f64 = 0.85;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterEntry {
    pub variable: String,
    /// First category (in category order) attaining the maximal count.
    pub modal_category: String,
    pub modal_share: f64,
    pub kept: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterReport {
    pub entries: Vec<FilterEntry>,
}

impl FilterReport {
    pub fn kept(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(|e| e.kept).map(|e| e.variable.as_str())
    }

    pub fn dropped(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(|e| !e.kept).map(|e| e.variable.as_str())
    }
}

/// Drop every variable whose modal category share is strictly above
/// `threshold`. A share exactly equal to the threshold is kept. The target is
/// never dropped.
pub fn skew_filter(ds: &CategoricalDataset, threshold: f64) -> Result<(CategoricalDataset, FilterReport)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("skew threshold {threshold} must lie in (0, 1)")));
    }
    let n = ds.n_rows() as f64;
    let target = ds.schema().target_index();
    let mut entries = Vec::with_capacity(ds.n_vars());
    let mut keep = Vec::new();
    for (idx, var) in ds.schema().variables().iter().enumerate() {
        let counts = ds.category_counts(idx);
        // max_by_key returns the last maximum; scan manually for the first.
        let mut modal = 0;
        for (c, &count) in counts.iter().enumerate() {
            if count > counts[modal] {
                modal = c;
            }
        }
        let share = counts[modal] as f64 / n;
        let kept = Some(idx) == target || share <= threshold;
        if kept {
            keep.push(var.name.clone());
        }
        entries.push(FilterEntry {
            variable: var.name.clone(),
            modal_category: var.categories[modal].clone(),
            modal_share: share,
            kept,
        });
    }
    let explanatory_kept = keep
        .iter()
        .filter(|name| Some(name.as_str()) != ds.schema().target())
        .count();
    if explanatory_kept == 0 {
        return Err(Error::Data(format!(
            "skew filter at {threshold} dropped every explanatory variable"
        )));
    }
    Ok((ds.select(&keep)?, FilterReport { entries }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Schema, Variable};

    /// One variable per requested modal count (out of `n`), plus a balanced one.
    fn with_modal_counts(n: usize, modal_counts: &[usize]) -> CategoricalDataset {
        let mut vars: Vec<Variable> = modal_counts
            .iter()
            .enumerate()
            .map(|(i, _)| Variable::new(format!("V{i}"), ["m", "o"]))
            .collect();
        vars.push(Variable::new("Even", ["a", "b"]));
        let schema = Schema::new(vars, None).unwrap();
        let mut codes = Vec::new();
        for r in 0..n {
            for &m in modal_counts {
                codes.push(u32::from(r >= m));
            }
            codes.push((r % 2) as u32);
        }
        CategoricalDataset::new(schema, codes).unwrap()
    }

    #[test]
    fn strict_inequality_boundary() {
        let ds = with_modal_counts(100, &[86, 85, 84]);
        let (out, report) = skew_filter(&ds, 0.85).unwrap();
        let kept: Vec<_> = report.kept().collect();
        assert_eq!(kept, vec!["V1", "V2", "Even"]);
        assert_eq!(report.dropped().collect::<Vec<_>>(), vec!["V0"]);
        assert_eq!(out.n_vars(), 3);
        assert_eq!(report.entries[0].modal_share, 0.86);
        assert_eq!(report.entries[1].modal_share, 0.85);
    }

    #[test]
    fn balanced_variable_is_kept() {
        let ds = with_modal_counts(10, &[]);
        let (_, report) = skew_filter(&ds, 0.85).unwrap();
        assert!(report.entries[0].kept);
        assert_eq!(report.entries[0].modal_share, 0.5);
        assert_eq!(report.entries[0].modal_category, "a");
    }

    #[test]
    fn target_survives_and_all_dropped_errors() {
        let schema = Schema::new(
            vec![Variable::new("X", ["a", "b"]), Variable::new("Sev", ["KA", "O"])],
            Some("Sev".into()),
        )
        .unwrap();
        let codes = (0..20).flat_map(|r| [u32::from(r == 0), 0]).collect();
        let ds = CategoricalDataset::new(schema.clone(), codes).unwrap();
        assert!(skew_filter(&ds, 0.85).is_err());

        let codes = (0..20).flat_map(|r| [(r % 2) as u32, u32::from(r == 0)]).collect();
        let ds = CategoricalDataset::new(schema, codes).unwrap();
        let (out, report) = skew_filter(&ds, 0.85).unwrap();
        assert!(report.entries[1].kept);
        assert_eq!(out.schema().target(), Some("Sev"));
    }

    #[test]
    fn idempotent() {
        let ds = with_modal_counts(40, &[39, 30, 35, 20]);
        let (once, r1) = skew_filter(&ds, 0.85).unwrap();
        let (twice, r2) = skew_filter(&once, 0.85).unwrap();
        assert_eq!(once, twice);
        assert!(r2.entries.iter().all(|e| e.kept));
        assert_eq!(r1.kept().count(), r2.entries.len());
    }

    #[test]
    fn threshold_must_be_a_fraction() {
        let ds = with_modal_counts(4, &[]);
        assert!(skew_filter(&ds, 1.0).is_err());
        assert!(skew_filter(&ds, 0.0).is_err());
    }

    #[test]
    fn report_json_fields() {
        let ds = with_modal_counts(4, &[]);
        let (_, report) = skew_filter(&ds, 0.85).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        let first = &json[0];
        for key in ["variable", "modal_category", "modal_share", "kept"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }
}
