//! Stability-margin certificates for the scalar demo and the nonholonomic integrator.

use infc::margins::{build_certificate, CertificateOptions};
use infc::systems::{nonholonomic_integrator, single_integrator};
use infc::{nonholonomic_clf, quadratic_clf};

fn main() -> infc::Result<()> {
    let opts = CertificateOptions::default();
    let scalar = build_certificate(&single_integrator(1), &quadratic_clf(1.0), 1.0, 0.1, &opts)?;
    println!("{}", scalar.report());

    // nonholonomic, evaluated at the experiment's alpha and delta
    let opts = CertificateOptions {
        alpha: Some(0.1),
        delta: Some(0.005),
        ..opts
    };
    match build_certificate(&nonholonomic_integrator(), &nonholonomic_clf(0.01), 2.0, 0.1, &opts) {
        Ok(c) => println!("{}", c.report()),
        Err(e) => println!("nonholonomic certificate: {e}"),
    }
    Ok(())
}
