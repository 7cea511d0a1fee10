//! Cluster a planted four-cluster table and score the recovery.
//!
//! ```bash
//! cargo run --release --example cluster_planted
//! ```

use cca_shap::cca::{cluster_ca, CcaParams, CentroidReport};
use cca_shap::dataset::indicator;
use cca_shap::synth::{adjusted_rand_index, generate, PlantedSpec};

fn main() -> cca_shap::Result<()> {
    let planted = generate(&PlantedSpec::new(2000, 8, 5, 4, 0.6, 1))?;
    let ds = &planted.dataset;
    let z = indicator(ds, &ds.schema().explanatory_names())?;

    let params = CcaParams {
        seed: 1,
        ..Default::default()
    };
    let sol = cluster_ca(&z, 4, &params)?;
    println!(
        "restart {} of {}, {} iterations, stable: {}",
        sol.restart, sol.restarts_used, sol.iterations, sol.stable
    );
    println!(
        "ARI vs planted labels: {:.4}",
        adjusted_rand_index(&sol.assign, &planted.labels)?
    );
    println!("singular values: {:?}", sol.ca.singular_values);
    println!();
    print!("{}", CentroidReport::from_solution(&sol).to_text());
    Ok(())
}
