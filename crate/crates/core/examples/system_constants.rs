//! Sampled bounds `f̄` and `L_f` for the built-in systems.

use infc::systems::{estimate_constants, system_by_name};

fn main() -> infc::Result<()> {
    for name in ["nonholonomic", "scalar", "quadratic-test"] {
        let sys = system_by_name(name)?;
        for radius in [1.0, 2.0, 5.0] {
            let c = estimate_constants(&sys, radius, 4000, 0)?;
            println!("{name:>15}  R = {radius}: f_bar = {:.4}, L_f = {:.4}", c.f_bar, c.lipschitz_l_f);
        }
    }
    Ok(())
}
