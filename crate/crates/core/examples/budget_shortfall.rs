//! What happens when an accuracy budget cannot be met: the strict pipeline reports the
//! failing stage, the best-effort one keeps the best bracket and logs a shortfall.

use infc::feedback::{infc_feedback, infc_feedback_best_effort};
use infc::{nonholonomic_clf, nonholonomic_integrator, FeedbackConfig};

fn main() -> infc::Result<()> {
    let sys = nonholonomic_integrator();
    let clf = nonholonomic_clf(0.01);
    let mut cfg = FeedbackConfig::new(0.1, 1e-9, 1e-8, 12.0);
    cfg.envelope.max_evaluations = 2_000;
    let x = [1.0, 0.5, -0.1];
    if let Err(e) = infc_feedback(&sys, &clf, &x, &cfg) {
        println!("strict: {e}");
    }
    let (d, shortfalls) = infc_feedback_best_effort(&sys, &clf, &x, &cfg)?;
    println!("best effort: u = {:?}, gap = {:e}", d.input, d.envelope.epsilon_achieved);
    for s in shortfalls {
        println!("  {:?}: target {:e}, achieved {:e}", s.stage, s.target, s.achieved);
    }
    Ok(())
}
