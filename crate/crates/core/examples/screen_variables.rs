//! Consensus screening on a toy table where only A and B drive the target.
//!
//! ```bash
//! cargo run --release --example screen_variables
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cca_shap::dataset::{CategoricalDataset, Schema, Variable};
use cca_shap::ensembles::{consensus_select, ScreeningParams};

fn main() -> cca_shap::Result<()> {
    let names = ["A", "B", "C", "D", "E"];
    let mut vars: Vec<Variable> = names.iter().map(|n| Variable::new(*n, ["0", "1", "2"])).collect();
    vars.push(Variable::new("Y", ["0", "1", "2"]));
    let schema = Schema::new(vars, Some("Y".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut codes = Vec::new();
    for _ in 0..500 {
        let row: Vec<u32> = (0..5).map(|_| rng.random_range(0..3)).collect();
        let y = if rng.random_bool(0.85) {
            (row[0] + 2 * row[1]) % 3
        } else {
            rng.random_range(0..3)
        };
        codes.extend(row);
        codes.push(y);
    }
    let ds = CategoricalDataset::new(schema, codes)?;

    let params = ScreeningParams {
        seed: 3,
        ..Default::default()
    };
    let report = consensus_select(&ds, "Y", &params)?;
    println!("medians: rf {:.4}  gb {:.4}", report.rf_median, report.gb_median);
    for e in &report.entries {
        println!(
            "{}  rf {:.4}  gb {:.4}  {}",
            e.name,
            e.rf_score_mean,
            e.gb_score_mean,
            if e.selected { "selected" } else { "" }
        );
    }
    println!("selected: {:?}", report.selected());
    Ok(())
}
