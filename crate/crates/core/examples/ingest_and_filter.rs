//! Read a small categorical CSV, infer its schema, and apply the skew filter.
//!
//! ```bash
//! cargo run --example ingest_and_filter
//! ```

use cca_shap::dataset::{indicator, read_csv, skew_filter, SchemaMode, DEFAULT_SKEW_THRESHOLD};

fn main() -> cca_shap::Result<()> {
    let mut text = String::from("Light,Weather,Surface,Severity\n");
    for i in 0..40 {
        let light = ["day", "dusk", "dark"][i % 3];
        // 37 of 40 rows are "clear": modal share 0.925
        let weather = if i < 37 { "clear" } else { "rain" };
        let surface = ["dry", "wet"][i % 2];
        let severity = ["O", "BC", "KA"][(i / 7) % 3];
        text.push_str(&format!("{light},{weather},{surface},{severity}\n"));
    }

    let mode = SchemaMode::Infer {
        target: Some("Severity".into()),
    };
    let ds = read_csv(text.as_bytes(), "inline", &mode)?;
    println!("{} rows, {} variables", ds.n_rows(), ds.n_vars());

    let (kept, report) = skew_filter(&ds, DEFAULT_SKEW_THRESHOLD)?;
    for e in &report.entries {
        println!(
            "{:<8} modal {:<6} share {:.3}  {}",
            e.variable,
            e.modal_category,
            e.modal_share,
            if e.kept { "kept" } else { "dropped" }
        );
    }

    let z = indicator(&kept, &kept.schema().explanatory_names())?;
    println!(
        "indicator matrix: {} x {} over {} variables",
        z.n_rows(),
        z.n_cols(),
        z.q()
    );
    Ok(())
}
