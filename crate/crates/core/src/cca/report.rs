//! Table-style centroid report and biplot coordinates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cluster::CcaSolution;
use super::supplementary::SupplementaryProjection;
use crate::error::{Error, Result};

pub const CENTROID_COLUMNS: [&str; 4] = ["Dim 1", "Dim 2", "Within Cluster Sum of Squares", "Size"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidRow {
    #[serde(rename = "Cluster")]
    pub cluster: usize,
    #[serde(rename = "Dim 1")]
    pub dim1: f64,
    #[serde(rename = "Dim 2")]
    pub dim2: f64,
    #[serde(rename = "Within Cluster Sum of Squares")]
    pub wcss: f64,
    #[serde(rename = "Size")]
    pub size: usize,
}

/// Per-cluster centroid coordinates (object space, first two dimensions),
/// within-cluster sum of squares, and size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidReport {
    pub k: usize,
    pub n: usize,
    pub columns: Vec<String>,
    pub clusters: Vec<CentroidRow>,
    pub total_wcss: f64,
    pub tss: f64,
    pub gamma: Option<f64>,
    /// Centroids after biplot rescaling (`γG`), all dimensions.
    pub rescaled_centroids: Option<Vec<Vec<f64>>>,
}

impl CentroidReport {
    pub fn from_solution(sol: &CcaSolution) -> Self {
        let dim = |k: usize, s: usize| if s < sol.g.ncols() { sol.g[(k, s)] } else { 0.0 };
        let clusters = (0..sol.k)
            .map(|k| CentroidRow {
                cluster: k + 1,
                dim1: dim(k, 0),
                dim2: dim(k, 1),
                wcss: sol.cluster_wcss[k],
                size: sol.sizes[k],
            })
            .collect();
        CentroidReport {
            k: sol.k,
            n: sol.n(),
            columns: CENTROID_COLUMNS.iter().map(|s| s.to_string()).collect(),
            clusters,
            total_wcss: sol.wcss,
            tss: sol.tss,
            gamma: sol.rescaled.as_ref().map(|r| r.gamma),
            rescaled_centroids: sol.rescaled.as_ref().map(|r| {
                r.centroids
                    .row_iter()
                    .map(|row| row.iter().copied().collect())
                    .collect()
            }),
        }
    }

    /// Aligned plain-text table, one line per cluster.
    pub fn to_text(&self) -> String {
        let cells: Vec<[String; 5]> = self
            .clusters
            .iter()
            .map(|r| {
                [
                    format!("Cluster {}", r.cluster),
                    format!("{:.4}", r.dim1),
                    format!("{:.4}", r.dim2),
                    format!("{:.4}", r.wcss),
                    r.size.to_string(),
                ]
            })
            .collect();
        let header = [
            "Cluster",
            CENTROID_COLUMNS[0],
            CENTROID_COLUMNS[1],
            CENTROID_COLUMNS[2],
            CENTROID_COLUMNS[3],
        ];
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, fields: &[&str]| {
            let mut parts = Vec::with_capacity(fields.len());
            for (i, f) in fields.iter().enumerate() {
                if i == 0 {
                    parts.push(format!("{:<w$}", f, w = widths[i]));
                } else {
                    parts.push(format!("{:>w$}", f, w = widths[i]));
                }
            }
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        for row in &cells {
            let refs: Vec<&str> = row.iter().map(String::as_str).collect();
            line(&mut out, &refs);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Category,
    Centroid,
    Supplementary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiplotPoint {
    pub label: String,
    pub kind: PointKind,
    pub dim1: f64,
    pub dim2: f64,
}

/// Rescaled category points, centroids, and any supplementary points on the
/// first two dimensions.
pub fn biplot_points(sol: &CcaSolution, supplementary: &[SupplementaryProjection]) -> Result<Vec<BiplotPoint>> {
    let rescaled = sol
        .rescaled
        .as_ref()
        .ok_or_else(|| Error::Numerical("solution has no biplot rescaling (degenerate centroids)".into()))?;
    let pick = |v: &dyn Fn(usize) -> f64, d: usize, s: usize| if s < d { v(s) } else { 0.0 };
    let d = rescaled.categories.ncols();
    let mut out = Vec::new();
    let labels = sol.category_labels();
    for (j, label) in labels.into_iter().enumerate() {
        let row = |s: usize| rescaled.categories[(j, s)];
        out.push(BiplotPoint {
            label,
            kind: PointKind::Category,
            dim1: pick(&row, d, 0),
            dim2: pick(&row, d, 1),
        });
    }
    for k in 0..sol.k {
        let row = |s: usize| rescaled.centroids[(k, s)];
        out.push(BiplotPoint {
            label: format!("Cluster {}", k + 1),
            kind: PointKind::Centroid,
            dim1: pick(&row, d, 0),
            dim2: pick(&row, d, 1),
        });
    }
    for proj in supplementary {
        for p in &proj.points {
            let row = |s: usize| p.coords[s];
            out.push(BiplotPoint {
                label: format!("{}={}", p.variable, p.category),
                kind: PointKind::Supplementary,
                dim1: pick(&row, p.coords.len(), 0),
                dim2: pick(&row, p.coords.len(), 1),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cca::{cluster_ca, CcaParams};
    use crate::dataset::indicator;
    use crate::synth::{generate, PlantedSpec};

    #[test]
    fn table_shape() {
        let planted = generate(&PlantedSpec::new(400, 5, 4, 4, 0.7, 2)).unwrap();
        let z = indicator(&planted.dataset, &planted.dataset.schema().explanatory_names()).unwrap();
        let sol = cluster_ca(
            &z,
            4,
            &CcaParams {
                restarts: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let report = CentroidReport::from_solution(&sol);
        assert_eq!(report.clusters.len(), 4);
        assert_eq!(report.clusters.iter().map(|c| c.size).sum::<usize>(), 400);
        let text = report.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].contains("Dim 1") && lines[0].contains("Within Cluster Sum of Squares"));
        let json = serde_json::to_value(&report).unwrap();
        let keys: Vec<&str> = json["clusters"][0]
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        for col in CENTROID_COLUMNS {
            assert!(keys.contains(&col));
        }
        let points = biplot_points(&sol, &[]).unwrap();
        assert_eq!(points.len(), z.n_cols() + 4);
    }
}
