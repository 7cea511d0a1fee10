use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ClassMode, ShapBackgroundInfo, ShapExplanation};
use crate::ensembles::EnsembleKind;
use crate::error::Result;

/// Everything about an explanation except the per-row values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapSidecar {
    pub classes: Vec<String>,
    pub base_values: Vec<f64>,
    /// Variables in plot order.
    pub feature_order: Vec<String>,
    pub mean_abs: Vec<f64>,
    pub class_mode: ClassMode,
    /// `probability` for forests, `margin` for boosting.
    pub output_space: String,
    pub model_kind: EnsembleKind,
    pub background: ShapBackgroundInfo,
    pub rows: usize,
}

impl ShapExplanation {
    /// CSV with `row_id`, `predicted_class`, then one column per variable in
    /// plot order. Per-class mode writes `variable:class` columns for every
    /// class; predicted-class mode writes the predicted class's value only.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["row_id".to_string(), "predicted_class".to_string()];
        for &f in &self.feature_order {
            match self.class_mode {
                ClassMode::PerClass => {
                    for c in &self.classes {
                        header.push(format!("{}:{c}", self.feature_names[f]));
                    }
                }
                ClassMode::PredictedClass => header.push(self.feature_names[f].clone()),
            }
        }
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let p = self.predicted_class[i];
            let mut rec = vec![self.row_ids[i].to_string(), self.classes[p].clone()];
            for &f in &self.feature_order {
                match self.class_mode {
                    ClassMode::PerClass => {
                        rec.extend((0..self.n_classes()).map(|c| self.phi_at(i, f, c).to_string()));
                    }
                    ClassMode::PredictedClass => rec.push(self.phi_at(i, f, p).to_string()),
                }
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| crate::Error::io("<shap csv>", e))?;
        Ok(())
    }

    pub fn sidecar(&self) -> ShapSidecar {
        ShapSidecar {
            classes: self.classes.clone(),
            base_values: self.base_values.clone(),
            feature_order: self.ordered_names().into_iter().map(String::from).collect(),
            mean_abs: self.feature_order.iter().map(|&f| self.mean_abs[f]).collect(),
            class_mode: self.class_mode,
            output_space: match self.model_kind {
                EnsembleKind::RandomForest => "probability",
                EnsembleKind::GradientBoosting => "margin",
            }
            .into(),
            model_kind: self.model_kind,
            background: self.background.clone(),
            rows: self.n_rows(),
        }
    }
}
