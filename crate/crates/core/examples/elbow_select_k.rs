//! Sweep K and pick the knee of the normalized within-cluster inertia curve.
//!
//! ```bash
//! cargo run --release --example elbow_select_k
//! ```

use cca_shap::cca::{elbow, CcaParams};
use cca_shap::dataset::indicator;
use cca_shap::synth::{generate, PlantedSpec};

fn main() -> cca_shap::Result<()> {
    let planted = generate(&PlantedSpec::new(1500, 8, 5, 4, 0.6, 2))?;
    let ds = &planted.dataset;
    let z = indicator(ds, &ds.schema().explanatory_names())?;

    let ks: Vec<usize> = (1..=10).collect();
    let params = CcaParams {
        restarts: 20,
        seed: 2,
        ..Default::default()
    };
    let curve = elbow(&z, &ks, &params)?;
    println!(" k  normalized");
    for p in &curve.points {
        let mark = if p.k == curve.knee { "  <- knee" } else { "" };
        println!("{:>2}  {:.5}{mark}", p.k, p.normalized);
    }
    Ok(())
}
