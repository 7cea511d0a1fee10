use std::fs::File;
use std::path::{Path, PathBuf};

use super::artifacts::to_json_bytes;
use crate::dataset::write_csv;
use crate::error::{Error, Result};
use crate::synth::{generate, PlantedDataset, PlantedSpec, SEVERITY};

pub const DATA_CSV: &str = "data.csv";
pub const LABELS_CSV: &str = "labels.csv";
pub const SPEC_JSON: &str = "spec.json";
pub const CONFIG_TOML: &str = "config.toml";

/// A severity distribution per cluster over (KA, BC, O) whose KA share rises
/// from 2% in the first cluster to 20% in the last.
pub fn graded_severity_link(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            let t = if k > 1 { c as f64 / (k - 1) as f64 } else { 0.0 };
            let ka = 0.02 + 0.18 * t;
            let bc = 0.20 + 0.20 * t;
            vec![ka, bc, 1.0 - ka - bc]
        })
        .collect()
}

/// Starter `analyze` config for a generated dataset. Screening is off:
/// every planted variable carries the cluster signal equally, so a
/// median-split screen would only discard half of it.
pub fn starter_config(seed: u64, with_severity: bool) -> String {
    let mut text = format!("input = \"{DATA_CSV}\"\n");
    if with_severity {
        text.push_str(&format!("target = \"{SEVERITY}\"\n"));
    }
    text.push_str(&format!(
        "seed = {seed}\noutput = \"analysis\"\n\n[screening]\nenabled = false\n\n[cca]\nk_range = [1, 10]\n"
    ));
    if !with_severity {
        text.push_str("\n[shap]\nenabled = false\n");
    }
    text
}

/// Generate a planted dataset and write `data.csv`, `labels.csv`
/// (`row_id,cluster` with 1-based clusters), `spec.json` and a starter
/// `config.toml` into `dir`.
pub fn write_synth(spec: &PlantedSpec, dir: &Path) -> Result<(PlantedDataset, Vec<PathBuf>)> {
    let planted = generate(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = |name: &str| dir.join(name);

    let data = path(DATA_CSV);
    write_csv(&planted.dataset, File::create(&data).map_err(|e| Error::io(&data, e))?)?;

    let labels = path(LABELS_CSV);
    let mut w = csv::Writer::from_path(&labels)?;
    w.write_record(["row_id", "cluster"])?;
    for (i, l) in planted.labels.iter().enumerate() {
        w.write_record([i.to_string(), (l + 1).to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&labels, e))?;

    let spec_path = path(SPEC_JSON);
    std::fs::write(&spec_path, to_json_bytes(spec)?).map_err(|e| Error::io(&spec_path, e))?;
    let config = path(CONFIG_TOML);
    std::fs::write(&config, starter_config(spec.seed, spec.severity_link.is_some()))
        .map_err(|e| Error::io(&config, e))?;
    Ok((planted, vec![data, labels, spec_path, config]))
}
