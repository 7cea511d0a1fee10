//! Generate a project, run the configured analysis end to end, and render
//! the plots.
//!
//! ```bash
//! cargo run --release --example full_pipeline [DIR]
//! ```

use std::path::PathBuf;

use cca_shap::pipeline::{analyze, graded_severity_link, render, write_synth, PipelineConfig, CONFIG_TOML};
use cca_shap::synth::PlantedSpec;

fn main() -> cca_shap::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cca-shap-example"));
    let spec = PlantedSpec::new(800, 6, 4, 4, 0.7, 9).with_severity(graded_severity_link(4));
    write_synth(&spec, &dir)?;

    let mut cfg = PipelineConfig::load(dir.join(CONFIG_TOML))?;
    cfg.cca.restarts = 8;
    cfg.shap.rf.n_trees = 40;
    cfg.shap.rf.max_depth = 6;
    let outcome = analyze(&cfg)?;
    println!("selected K = {}", outcome.solution.k);
    for p in &outcome.curve.points {
        println!("  k = {:>2}  normalized wcss {:.4}", p.k, p.normalized);
    }
    for e in &outcome.explanations {
        let top = e.explanation.feature_order[0];
        println!(
            "cluster {}: {} rows, top variable {}",
            e.cluster,
            e.explanation.row_ids.len(),
            e.explanation.feature_names[top]
        );
    }
    for path in render(&outcome.dir)? {
        println!("wrote {}", path.display());
    }
    println!("artifacts in {}", outcome.dir.display());
    Ok(())
}
