//! Dini derivatives of the nonsmooth CLF, the decay condition, and the uniformity probe.

use infc::clf::{check_decay, dini_derivative, probe_uniformity, Ladder, ProbeOptions};
use infc::{nonholonomic_clf, nonholonomic_integrator};

fn main() -> infc::Result<()> {
    let clf = nonholonomic_clf(0.01);
    let sys = nonholonomic_integrator();

    // across the kink z = 0 the one-sided quotients disagree
    let x = [0.6, 0.0, 0.0];
    for theta in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]] {
        let d = dini_derivative(&clf, &x, &theta, Ladder::default())?;
        println!("D_{theta:?} V({x:?}) = {:.6} (mu = {:e})", d.value, d.mu_used);
    }

    for x in [[1.0, 0.5, -0.1], [0.3, -0.2, 0.25], [0.0, 0.0, 0.5], [0.05, 0.02, 0.0]] {
        let c = check_decay(&clf, &sys, &x, 11, 1e-7)?;
        println!(
            "decay at {x:?}: min Dini = {:.5}, w = {:.5}, margin = {:.5}, u = {:?}",
            c.min_dini,
            clf.decay_rate(&x),
            c.margin,
            c.best_input
        );
    }

    let directions: Vec<Vec<f64>> = sys.input_box().vertices().iter().map(|u| sys.eval(&[0.4, 0.1, 0.2], u)).collect();
    let p = probe_uniformity(&clf, &[0.4, 0.1, 0.2], 0.05, &directions, 1e-3, 32, 0, &ProbeOptions::default())?;
    println!("uniformity step mu = {:e} (worst point {:?})", p.mu, p.worst_point);
    Ok(())
}
