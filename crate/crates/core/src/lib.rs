//! Sample-and-hold stabilization with inf-convolutions of nonsmooth control Lyapunov
//! functions.
//!
//! The pipeline per sample state `x`:
//!
//! 1. [`infconv::envelope`] finds a certified `ε`-minimizer `y` of
//!    `V(y) + ‖y − x‖²/(2α²)` and the proximal subgradient `ζ = (x − y)/α²`;
//! 2. [`feedback::select_control`] picks an input minimizing `⟨ζ, f(y, u)⟩` up to `η`;
//! 3. [`sim::simulate`] holds that input over the sampling period.
//!
//! [`margins::build_certificate`] computes the admissible parameter ranges and
//! [`experiment`] wires everything to config files and CSV output.
//!
//! ```
//! use infc::{infc_feedback, nonholonomic_clf, nonholonomic_integrator, FeedbackConfig};
//!
//! let sys = nonholonomic_integrator();
//! let clf = nonholonomic_clf(0.01);
//! let cfg = FeedbackConfig::new(0.1, 1e-3, 1e-6, 12.0);
//! let d = infc_feedback(&sys, &clf, &[1.0, 0.5, -0.1], &cfg).unwrap();
//! assert_eq!(d.input, vec![-1.0, -1.0]);
//! assert!(d.envelope.epsilon_achieved <= 1e-6);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod clf;
pub mod error;
pub mod experiment;
pub mod feedback;
pub mod infconv;
pub mod margins;
pub mod ode;
pub mod sampling;
pub mod sim;
pub mod systems;

pub use clf::{clf_by_name, nonholonomic_clf, quadratic_clf, Clf};
pub use error::{Error, Result, Stage};
pub use feedback::{infc_feedback, select_control, ControlDecision, FeedbackConfig};
pub use infconv::{envelope, envelope_auto, EnvelopeOptions, EnvelopeResult, MinimizerSelection};
pub use margins::{build_certificate, CertificateOptions, MarginCertificate};
pub use sim::{simulate, verdict, SampleHoldRun, SimOptions, StabilityVerdict};
pub use systems::{nonholonomic_integrator, system_by_name, ControlSystem, InputBox};
