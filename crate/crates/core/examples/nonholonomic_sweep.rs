//! The accuracy sweep on the nonholonomic integrator: how optimizer accuracy sets the
//! terminal vicinity. Writes CSVs to `out/nonholonomic` (or the first argument).

use std::path::PathBuf;

use infc::experiment::{run_experiment, Overrides};

fn main() -> infc::Result<()> {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/nonholonomic.ini");
    let overrides = Overrides {
        output_dir: std::env::args().nth(1).map(PathBuf::from),
        ..Overrides::default()
    };
    let (cfg, sweep) = run_experiment(&config, &overrides)?;
    for p in &sweep.points {
        println!(
            "eta = {:e}: terminal mean |x| = {:.4}, settled at {:?}, Case-1 strict decrease {:.1}%",
            p.eta,
            p.terminal_mean_norm,
            p.verdict.settled_at,
            100.0 * p.strict_decrease_fraction().unwrap_or(f64::NAN)
        );
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}
