//! Certified Moreau envelope of `V(x) = ‖x‖²` against its closed form `‖x‖²/(1 + 2α²)`.

use infc::infconv::{envelope_auto, EnvelopeOptions};
use infc::quadratic_clf;

fn main() -> infc::Result<()> {
    let v = quadratic_clf(1.0);
    let x = [0.8, -0.6];
    println!("{:>6} {:>14} {:>14} {:>14} {:>10} {:>7}", "alpha", "lower", "upper", "exact", "gap", "evals");
    for alpha in [0.05, 0.1, 0.5] {
        let e = envelope_auto(&v, &x, alpha, 1e-9, v.value(&x), &EnvelopeOptions::default())?;
        let exact = v.value(&x) / (1.0 + 2.0 * alpha * alpha);
        println!(
            "{alpha:>6} {:>14.10} {:>14.10} {exact:>14.10} {:>10.2e} {:>7}",
            e.lower_bound, e.upper_value, e.epsilon_achieved, e.evaluations
        );
    }
    Ok(())
}
