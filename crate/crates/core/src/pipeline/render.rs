//! Hand-written SVG plots of the artifacts `analyze` leaves behind.

use std::path::{Path, PathBuf};

use super::artifacts::{self as art, BiplotRow, ClusterShapSidecar, RunManifest};
use crate::cca::{CentroidReport, PointKind};
use crate::error::{Error, Result};
use crate::shap::ClassMode;

const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

/// Dot color of a severity class.
pub fn class_color(class: &str) -> &'static str {
    match class {
        "KA" => "#d62728",
        "BC" => "#1f77b4",
        "O" => "#2ca02c",
        _ => "#7f7f7f",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Svg {
            body: String::new(),
            width,
            height,
        }
    }

    fn push(&mut self, element: impl AsRef<str>) {
        self.body.push_str(element.as_ref());
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        self.push(format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            esc(s)
        ));
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        self.push(format!(
            "<line x1=\"{x1:.1}\" y1=\"{y1:.1}\" x2=\"{x2:.1}\" y2=\"{y2:.1}\" stroke=\"{stroke}\"/>"
        ));
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Linear map from `[d0, d1]` onto `[r0, r1]`.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl Scale {
    fn new(d0: f64, d1: f64, r0: f64, r1: f64) -> Self {
        let (d0, d1) = if (d1 - d0).abs() < 1e-12 {
            (d0 - 0.5, d1 + 0.5)
        } else {
            (d0, d1)
        };
        Scale { d0, d1, r0, r1 }
    }

    fn at(&self, v: f64) -> f64 {
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

#[derive(Debug, serde::Deserialize)]
struct ElbowRow {
    k: usize,
    normalized: f64,
    knee: u8,
}

/// Normalized wcss against K with the knee circled.
pub fn elbow_svg(elbow_csv: &[u8]) -> Result<String> {
    let rows: Vec<ElbowRow> = csv::Reader::from_reader(elbow_csv)
        .deserialize()
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no rows", art::ELBOW_CSV)));
    }
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 30.0, 40.0, 60.0);
    let kmin = rows.iter().map(|r| r.k).min().unwrap_or(1) as f64;
    let kmax = rows.iter().map(|r| r.k).max().unwrap_or(1) as f64;
    let ymin = rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min).min(0.0);
    let ymax = rows
        .iter()
        .map(|r| r.normalized)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1.0);
    let sx = Scale::new(kmin, kmax, left, w - right);
    let sy = Scale::new(ymin, ymax, h - bottom, top);

    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 22.0, "middle", "Elbow method: normalized WCSS by K");
    svg.line(left, h - bottom, w - right, h - bottom, "black");
    svg.line(left, top, left, h - bottom, "black");
    for r in &rows {
        let x = sx.at(r.k as f64);
        svg.line(x, h - bottom, x, h - bottom + 5.0, "black");
        svg.text(x, h - bottom + 18.0, "middle", &r.k.to_string());
    }
    for i in 0..=5 {
        let v = ymin + (ymax - ymin) * i as f64 / 5.0;
        let y = sy.at(v);
        svg.line(left - 5.0, y, left, y, "black");
        svg.text(left - 8.0, y + 4.0, "end", &format!("{v:.2}"));
    }
    svg.text(w / 2.0, h - 18.0, "middle", "Number of clusters K");
    svg.push(format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\" {FONT}>Normalized WCSS</text>",
        h / 2.0,
        h / 2.0
    ));
    let path: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.1},{:.1}", sx.at(r.k as f64), sy.at(r.normalized)))
        .collect();
    svg.push(format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>",
        path.join(" ")
    ));
    for r in &rows {
        let (x, y) = (sx.at(r.k as f64), sy.at(r.normalized));
        svg.push(format!(
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3.5\" fill=\"#1f77b4\"/>"
        ));
        if r.knee == 1 {
            svg.push(format!(
                "<circle class=\"knee\" data-k=\"{}\" cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"9\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>",
                r.k
            ));
            svg.text(x + 12.0, y - 10.0, "start", &format!("knee K = {}", r.k));
        }
    }
    Ok(svg.finish())
}

/// Biplot for one 1-based cluster: every category and centroid on the first
/// two dimensions, the cluster's own categories and centroid emphasised, and
/// any supplementary points overlaid.
pub fn cluster_svg(rows: &[BiplotRow], cluster: usize) -> String {
    let (w, h) = (640.0, 640.0);
    let pad = 60.0;
    let extent = rows
        .iter()
        .flat_map(|r| [r.dim1.abs(), r.dim2.abs()])
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.1;
    let sx = Scale::new(-extent, extent, pad, w - pad);
    let sy = Scale::new(-extent, extent, h - pad, pad);
    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 24.0, "middle", &format!("Cluster {cluster}"));
    svg.line(pad, sy.at(0.0), w - pad, sy.at(0.0), "#bbbbbb");
    svg.line(sx.at(0.0), pad, sx.at(0.0), h - pad, "#bbbbbb");
    svg.text(w - pad, sy.at(0.0) - 6.0, "end", "Dim 1");
    svg.text(sx.at(0.0) + 6.0, pad + 12.0, "start", "Dim 2");

    for r in rows {
        let (x, y) = (sx.at(r.dim1), sy.at(r.dim2));
        let own = r.cluster == cluster;
        match r.kind {
            PointKind::Category if own => {
                svg.push(format!(
                    "<circle class=\"category own\" cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"#333333\"/>"
                ));
                svg.text(x + 6.0, y - 6.0, "start", &r.label);
            }
            PointKind::Category => {
                svg.push(format!(
                    "<circle class=\"category\" cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"#cccccc\"/>"
                ));
            }
            PointKind::Centroid if r.label == format!("Cluster {cluster}") => {
                svg.push(format!(
                    "<rect class=\"centroid own\" x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"black\"/>",
                    x - 6.0,
                    y - 6.0
                ));
                svg.text(x + 9.0, y + 16.0, "start", &r.label);
            }
            PointKind::Centroid => {
                svg.push(format!(
                    "<rect class=\"centroid\" x=\"{:.1}\" y=\"{:.1}\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"#888888\"/>",
                    x - 4.0,
                    y - 4.0
                ));
            }
            PointKind::Supplementary => {
                let class = r.label.rsplit('=').next().unwrap_or("");
                svg.push(format!(
                    "<path class=\"supplementary\" d=\"M{x:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1} Z\" fill=\"{}\"/>",
                    y - 7.0,
                    x - 6.0,
                    y + 5.0,
                    x + 6.0,
                    y + 5.0,
                    class_color(class)
                ));
                svg.text(x + 8.0, y + 4.0, "start", &r.label);
            }
        }
    }
    svg.finish()
}

/// A beeswarm's input: one row per explained observation.
struct ShapTable {
    names: Vec<String>,
    predicted: Vec<String>,
    /// `values[f][i]`: the predicted class's φ of feature `f` for row `i`.
    values: Vec<Vec<f64>>,
    mean_abs: Vec<f64>,
}

fn read_shap(csv_bytes: &[u8], sidecar: &ClusterShapSidecar) -> Result<ShapTable> {
    let mut rdr = csv::Reader::from_reader(csv_bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let names = sidecar.shap.feature_order.clone();
    let classes = &sidecar.shap.classes;
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("SHAP table has no column `{name}`")))
    };
    let per_class = sidecar.shap.class_mode == ClassMode::PerClass;
    // cols[f][c]; a single entry in predicted-class mode.
    let mut cols = Vec::with_capacity(names.len());
    for n in &names {
        cols.push(if per_class {
            classes
                .iter()
                .map(|c| col(&format!("{n}:{c}")))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![col(n)?]
        });
    }
    let mut predicted = Vec::new();
    let mut values = vec![Vec::new(); names.len()];
    let mut abs_sum = vec![0.0; names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Data(format!("SHAP table: bad number in column {}", header[i])))
        };
        let p = rec.get(1).unwrap_or("").to_string();
        let p_idx = classes.iter().position(|c| *c == p);
        for (f, fc) in cols.iter().enumerate() {
            if per_class {
                for &c in fc {
                    abs_sum[f] += num(c)?.abs();
                }
                let pc = p_idx.ok_or_else(|| Error::Data(format!("SHAP table: unknown class `{p}`")))?;
                values[f].push(num(fc[pc])?);
            } else {
                let v = num(fc[0])?;
                abs_sum[f] += v.abs();
                values[f].push(v);
            }
        }
        predicted.push(p);
    }
    let n = predicted.len().max(1) as f64;
    Ok(ShapTable {
        names,
        predicted,
        values,
        mean_abs: abs_sum.into_iter().map(|s| s / n).collect(),
    })
}

/// Features by mean |φ| in the table, largest first; ties keep column order.
fn feature_order(table: &ShapTable) -> Vec<usize> {
    let mut order: Vec<usize> = (0..table.names.len()).collect();
    order.sort_by(|&a, &b| table.mean_abs[b].total_cmp(&table.mean_abs[a]));
    order
}

/// Vertical offsets (in dot diameters) that keep dots at sorted x positions
/// from overlapping, within `max_offset`.
fn swarm_offsets(xs: &[f64], diameter: f64, max_offset: i32) -> Vec<i32> {
    let mut placed: Vec<(f64, i32)> = Vec::with_capacity(xs.len());
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let mut chosen = 0;
        'search: for step in 0..=2 * max_offset {
            let off = if step % 2 == 0 { step / 2 } else { -(step + 1) / 2 };
            for &(px, po) in placed.iter().rev() {
                if x - px >= diameter {
                    break;
                }
                if po == off {
                    continue 'search;
                }
            }
            chosen = off;
            break;
        }
        placed.push((x, chosen));
        out.push(chosen);
    }
    out
}

/// Beeswarm of one cluster's attributions: one row per variable ordered by
/// mean |φ|, dots colored by predicted class.
pub fn shap_svg(csv_bytes: &[u8], sidecar: &ClusterShapSidecar) -> Result<String> {
    let table = read_shap(csv_bytes, sidecar)?;
    let order = feature_order(&table);
    let row_h = 34.0;
    let (left, right, top) = (170.0, 40.0, 50.0);
    let w = 780.0;
    let h = top + row_h * order.len().max(1) as f64 + 80.0;
    let extent = table
        .values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12)
        * 1.05;
    let sx = Scale::new(-extent, extent, left, w - right);
    let mut svg = Svg::new(w, h);
    svg.text(
        w / 2.0,
        24.0,
        "middle",
        &format!(
            "Cluster {}: SHAP values ({})",
            sidecar.cluster, sidecar.shap.output_space
        ),
    );
    let bottom = top + row_h * order.len() as f64;
    svg.line(sx.at(0.0), top, sx.at(0.0), bottom, "#999999");
    svg.line(left, bottom, w - right, bottom, "black");
    for i in 0..=4 {
        let v = -extent + 2.0 * extent * i as f64 / 4.0;
        svg.line(sx.at(v), bottom, sx.at(v), bottom + 5.0, "black");
        svg.text(sx.at(v), bottom + 18.0, "middle", &format!("{v:.3}"));
    }
    svg.text(
        (left + w - right) / 2.0,
        bottom + 38.0,
        "middle",
        "SHAP value (impact on model output)",
    );

    let r = 2.5;
    for (slot, &f) in order.iter().enumerate() {
        let cy = top + row_h * (slot as f64 + 0.5);
        svg.push(format!(
            "<g class=\"feature\" data-name=\"{}\" data-mean-abs=\"{}\">",
            esc(&table.names[f]),
            table.mean_abs[f]
        ));
        svg.text(left - 10.0, cy + 4.0, "end", &table.names[f]);
        let mut idx: Vec<usize> = (0..table.values[f].len()).collect();
        idx.sort_by(|&a, &b| table.values[f][a].total_cmp(&table.values[f][b]).then(a.cmp(&b)));
        let xs: Vec<f64> = idx.iter().map(|&i| sx.at(table.values[f][i])).collect();
        let max_off = ((row_h / 2.0 - r) / (2.0 * r)).floor() as i32;
        let offs = swarm_offsets(&xs, 2.0 * r, max_off);
        for ((&i, &x), &o) in idx.iter().zip(&xs).zip(&offs) {
            svg.push(format!(
                "<circle cx=\"{x:.1}\" cy=\"{:.1}\" r=\"{r}\" fill=\"{}\" fill-opacity=\"0.8\"/>",
                cy + o as f64 * 2.0 * r,
                class_color(&table.predicted[i])
            ));
        }
        svg.push("</g>");
    }
    let mut lx = left;
    for c in &sidecar.shap.classes {
        svg.push(format!(
            "<circle cx=\"{lx:.1}\" cy=\"{:.1}\" r=\"5\" fill=\"{}\"/>",
            h - 14.0,
            class_color(c)
        ));
        svg.text(lx + 9.0, h - 10.0, "start", &format!("predicted {c}"));
        lx += 110.0;
    }
    Ok(svg.finish())
}

/// Read the artifacts in `dir` and write `elbow.svg`, `cluster_<k>.svg` per
/// cluster and, when SHAP ran, `shap_<k>.svg` per explained cluster. Returns
/// the written paths.
pub fn render(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest: RunManifest = art::read_json(dir, art::MANIFEST)?;
    let centroids: CentroidReport = art::read_json(dir, art::CENTROIDS_JSON)?;
    let elbow = art::read_artifact(dir, art::ELBOW_CSV)?;
    let biplot_bytes = art::read_artifact(dir, art::BIPLOT_CSV)?;
    let biplot: Vec<BiplotRow> = csv::Reader::from_reader(biplot_bytes.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()?;

    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("elbow.svg".into(), elbow_svg(&elbow)?)?;
    for k in 1..=centroids.k {
        put(format!("cluster_{k}.svg"), cluster_svg(&biplot, k))?;
    }
    if let Some(stage) = manifest.stage("shap") {
        for k in 1..=centroids.k {
            let name = art::shap_csv_name(k);
            if !stage.outputs.contains_key(&name) {
                continue;
            }
            let sidecar: ClusterShapSidecar = art::read_json(dir, &art::shap_sidecar_name(k))?;
            let table = art::read_artifact(dir, &name)?;
            put(format!("shap_{k}.svg"), shap_svg(&table, &sidecar)?)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elbow_has_one_knee() {
        let csv = b"k,wcss,tss,normalized,knee\n1,1,1,1,0\n2,0.5,1,0.5,0\n3,0.3,1,0.3,1\n4,0.28,1,0.28,0\n";
        let svg = elbow_svg(csv).unwrap();
        assert_eq!(svg.matches("class=\"knee\"").count(), 1);
        assert!(svg.contains("data-k=\"3\""));
    }

    #[test]
    fn swarm_never_stacks_two_dots_on_one_spot() {
        let xs = [0.0, 0.0, 0.0, 1.0, 10.0];
        let offs = swarm_offsets(&xs, 5.0, 3);
        assert_eq!(&offs[..3], &[0, -1, 1]);
        assert_eq!(offs[3], -2);
        assert_eq!(offs[4], 0);
    }

    #[test]
    fn escaping() {
        assert_eq!(esc("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
