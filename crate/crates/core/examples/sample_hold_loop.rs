//! One closed loop under the exact-ish InfC-feedback, with the practical-stability verdict.

use infc::sim::{simulate, verdict, SimOptions};
use infc::{nonholonomic_clf, nonholonomic_integrator, FeedbackConfig};

fn main() -> infc::Result<()> {
    let sys = nonholonomic_integrator();
    let clf = nonholonomic_clf(0.01);
    let x0 = [1.0, 0.5, -0.1];
    let cfg = FeedbackConfig::new(0.1, 1e-4, 1e-8, 12.0);
    let opts = SimOptions {
        target_radius: Some(0.1),
        ..SimOptions::default()
    };
    let run = simulate(&sys, &clf, &cfg, &x0, 0.005, 4.0, &opts)?;
    for s in run.samples.iter().step_by(100) {
        let n = s.state.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("t = {:>5.2}  |x| = {n:.4}  V = {:.5}  u = {:?}", s.t, s.value, s.input);
    }
    for e in &run.events {
        println!("k = {:>4}  {}  {}", e.k, e.kind, e.detail);
    }
    let v = verdict(&run, 2.0, 0.1, 3.0, None)?;
    println!("bounded = {}, entered_at = {:?}, settled_at = {:?}, stayed = {}", v.bounded, v.entered_at, v.settled_at, v.stayed);
    Ok(())
}
