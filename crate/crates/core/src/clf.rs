//! Control Lyapunov functions, lower Dini derivatives, the decay condition, and a numerical
//! probe for local uniformity of the Dini liminf.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sampling::{norm, QuasiSampler};
use crate::systems::ControlSystem;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Local regularity information a CLF may expose. The certified envelope solver uses it to
/// tighten cell lower bounds; every method must be conservative.
pub trait Smoothness: Send + Sync {
    /// Gradient at `x`, or `None` where `V` is not differentiable.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>>;

    /// Bound on the spectral norm of the Hessian over the box `[lo, hi]`, or `None` if the box
    /// meets the set where `V` is not `C^{1,1}`.
    fn hessian_bound(&self, lo: &[f64], hi: &[f64]) -> Option<f64>;

    /// Lipschitz constant of `V` on the ball `B(center, radius)`.
    fn lipschitz_bound(&self, center: &[f64], radius: f64) -> f64;
}

/// A control Lyapunov function `V` with its decay rate `w`.
#[derive(Clone)]
pub struct Clf {
    name: String,
    value: Arc<ScalarFn>,
    decay_rate: Arc<ScalarFn>,
    smoothness: Option<Arc<dyn Smoothness>>,
}

impl fmt::Debug for Clf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Clf")
            .field("name", &self.name)
            .field("smoothness", &self.smoothness.is_some())
            .finish_non_exhaustive()
    }
}

impl Clf {
    pub fn new<V, W>(name: impl Into<String>, value: V, decay_rate: W) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        W: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            value: Arc::new(value),
            decay_rate: Arc::new(decay_rate),
            smoothness: None,
        }
    }

    pub fn with_smoothness(mut self, s: impl Smoothness + 'static) -> Self {
        self.smoothness = Some(Arc::new(s));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn decay_rate(&self, x: &[f64]) -> f64 {
        (self.decay_rate)(x)
    }

    pub fn smoothness(&self) -> Option<&dyn Smoothness> {
        self.smoothness.as_deref()
    }

    /// Checks `V(0) = 0`, `V > 0` and `w > 0` on the given nonzero samples.
    pub fn check_positive_definite(&self, samples: &[Vec<f64>]) -> bool {
        let Some(first) = samples.first() else {
            return true;
        };
        let zero = vec![0.0; first.len()];
        self.value(&zero) == 0.0
            && samples
                .iter()
                .filter(|x| norm(x) > 0.0)
                .all(|x| self.value(x) > 0.0 && self.decay_rate(x) > 0.0)
    }
}

/// `V(x) = x₁² + x₂² + 2x₃² − 2|x₃|·√(x₁² + x₂²)` with `w(x) = c‖x‖²`.
pub fn nonholonomic_clf(decay_coefficient: f64) -> Clf {
    Clf::new(
        "nonholonomic",
        |x| {
            let rho2 = x[0] * x[0] + x[1] * x[1];
            rho2 + 2.0 * x[2] * x[2] - 2.0 * x[2].abs() * rho2.sqrt()
        },
        move |x| decay_coefficient * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]),
    )
    .with_smoothness(NonholonomicSmoothness)
}

/// `V(x) = ‖x‖²` with `w(x) = c‖x‖²`, in any dimension.
pub fn quadratic_clf(decay_coefficient: f64) -> Clf {
    Clf::new(
        "quadratic",
        |x| x.iter().map(|v| v * v).sum(),
        move |x| decay_coefficient * x.iter().map(|v| v * v).sum::<f64>(),
    )
    .with_smoothness(QuadraticSmoothness)
}

pub fn clf_by_name(name: &str, decay_coefficient: f64) -> Result<Clf> {
    match name {
        "nonholonomic" => Ok(nonholonomic_clf(decay_coefficient)),
        "quadratic" => Ok(quadratic_clf(decay_coefficient)),
        other => Err(Error::UnknownName {
            kind: "clf",
            name: other.to_string(),
        }),
    }
}

struct QuadraticSmoothness;

impl Smoothness for QuadraticSmoothness {
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.iter().map(|v| 2.0 * v).collect())
    }

    fn hessian_bound(&self, _lo: &[f64], _hi: &[f64]) -> Option<f64> {
        Some(2.0)
    }

    fn lipschitz_bound(&self, center: &[f64], radius: f64) -> f64 {
        2.0 * (norm(center) + radius)
    }
}

/// The nonholonomic CLF is smooth away from `{x₃ = 0} ∪ {x₁ = x₂ = 0}`.
struct NonholonomicSmoothness;

impl Smoothness for NonholonomicSmoothness {
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let rho = x[0].hypot(x[1]);
        let z = x[2];
        if rho == 0.0 || z == 0.0 {
            return None;
        }
        let k = 2.0 - 2.0 * z.abs() / rho;
        Some(vec![k * x[0], k * x[1], 4.0 * z - 2.0 * z.signum() * rho])
    }

    fn hessian_bound(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        if lo[2] <= 0.0 && hi[2] >= 0.0 {
            return None;
        }
        let gap = |l: f64, h: f64| {
            if l > 0.0 {
                l
            } else if h < 0.0 {
                -h
            } else {
                0.0
            }
        };
        let rho_min = gap(lo[0], hi[0]).hypot(gap(lo[1], hi[1]));
        if rho_min == 0.0 {
            return None;
        }
        let z_max = lo[2].abs().max(hi[2].abs());
        // planar block ≤ 2 + 2|z|/ρ, x₃x₃ entry = 4, off-diagonal block norm = 2
        Some((2.0 + 2.0 * z_max / rho_min).max(4.0) + 2.0)
    }

    fn lipschitz_bound(&self, center: &[f64], radius: f64) -> f64 {
        // ‖∇V‖² = 4(ρ − |z|)² + 4(2|z| − ρ)² ≤ 20‖x‖²
        2.0 * 5f64.sqrt() * (norm(center) + radius)
    }
}

/// Geometric step ladder `μ₀, μ₀/2, …` down to `mu_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ladder {
    pub start: f64,
    pub mu_min: f64,
}

impl Default for Ladder {
    fn default() -> Self {
        Self {
            start: 0.1,
            mu_min: 1e-7,
        }
    }
}

impl Ladder {
    pub fn down_to(mu_min: f64) -> Self {
        Self {
            mu_min,
            ..Self::default()
        }
    }

    /// Rungs in strictly decreasing order; at least one rung is always produced.
    pub fn rungs(&self) -> Vec<f64> {
        let mut out = vec![self.start];
        let mut mu = self.start * 0.5;
        while mu >= self.mu_min {
            out.push(mu);
            mu *= 0.5;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiniEstimate {
    pub value: f64,
    pub mu_used: f64,
    /// `(μ′, quotient)` pairs, μ′ strictly decreasing.
    pub quotient_trace: Vec<(f64, f64)>,
}

fn quotient(clf: &Clf, x: &[f64], v0: f64, theta: &[f64], mu: f64, buf: &mut [f64]) -> f64 {
    for ((b, xi), ti) in buf.iter_mut().zip(x).zip(theta) {
        *b = xi + mu * ti;
    }
    (clf.value(buf) - v0) / mu
}

/// Lower directional Dini derivative `D_ϑV(x)`, estimated as the minimum of the last three
/// rungs of the difference-quotient ladder.
pub fn dini_derivative(clf: &Clf, x: &[f64], theta: &[f64], ladder: Ladder) -> Result<DiniEstimate> {
    if !(ladder.mu_min > 0.0 && ladder.start > 0.0) {
        return Err(Error::invalid("Dini ladder steps must be positive"));
    }
    if theta.iter().all(|t| *t == 0.0) {
        let mu = *ladder.rungs().last().expect("nonempty ladder");
        return Ok(DiniEstimate {
            value: 0.0,
            mu_used: mu,
            quotient_trace: vec![(mu, 0.0)],
        });
    }
    let v0 = clf.value(x);
    let mut buf = vec![0.0; x.len()];
    let trace: Vec<(f64, f64)> = ladder
        .rungs()
        .into_iter()
        .map(|mu| (mu, quotient(clf, x, v0, theta, mu, &mut buf)))
        .collect();
    let tail = &trace[trace.len().saturating_sub(3)..];
    let value = tail.iter().map(|(_, q)| *q).fold(f64::INFINITY, f64::min);
    Ok(DiniEstimate {
        value,
        mu_used: trace.last().expect("nonempty").0,
        quotient_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    pub satisfied: bool,
    /// `−min_u D_{f(x,u)}V(x) − w(x)`; nonnegative iff satisfied.
    pub margin: f64,
    pub best_input: Vec<f64>,
    pub min_dini: f64,
}

/// Sufficient-only check of the decay condition at `x` over a uniform input grid.
pub fn check_decay(
    clf: &Clf,
    sys: &ControlSystem,
    x: &[f64],
    input_grid_res: usize,
    mu_min: f64,
) -> Result<DecayCheck> {
    let grid = sys.input_box().grid(input_grid_res)?;
    let ladder = Ladder::down_to(mu_min);
    let mut best = (f64::INFINITY, Vec::new());
    for u in grid.points() {
        let theta = sys.eval(x, u);
        let d = dini_derivative(clf, x, &theta, ladder)?.value;
        if d < best.0 {
            best = (d, u.clone());
        }
    }
    let w = clf.decay_rate(x);
    Ok(DecayCheck {
        satisfied: best.0 <= -w,
        margin: -best.0 - w,
        best_input: best.1,
        min_dini: best.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    /// Ladder whose rungs are the admissible μ values.
    pub ladder: Ladder,
    /// Smallest step used for the reference Dini estimate.
    pub reference_mu_min: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            ladder: Ladder {
                start: 0.1,
                mu_min: 1e-6,
            },
            reference_mu_min: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityProbe {
    /// Largest rung `μ` such that every quotient with `μ′ ≤ μ` is within `ν` of the Dini
    /// estimate at every probed pair; `0` flags a violation.
    pub mu: f64,
    pub worst_point: Vec<f64>,
    pub worst_direction: Vec<f64>,
    /// Per-point admissible μ (same order as the probed points).
    pub point_mu: Vec<f64>,
}

impl UniformityProbe {
    pub fn violated(&self) -> bool {
        self.mu == 0.0
    }
}

/// Admissible μ for one `(y, ϑ)` pair.
fn pair_mu(clf: &Clf, y: &[f64], theta: &[f64], nu: f64, opts: &ProbeOptions) -> Result<f64> {
    // the analytic directional derivative is the cleanest reference where it exists
    let analytic = clf
        .smoothness()
        .and_then(|s| s.gradient(y))
        .map(|g| g.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>());
    let reference = match analytic {
        Some(d) => d,
        None => {
            dini_derivative(
                clf,
                y,
                theta,
                Ladder {
                    start: opts.ladder.start,
                    mu_min: opts.reference_mu_min,
                },
            )?
            .value
        }
    };
    let v0 = clf.value(y);
    let mut buf = vec![0.0; y.len()];
    let rungs = opts.ladder.rungs();
    let mut admissible = 0.0;
    // walk upward from the finest rung; stop at the first deviation
    for &mu in rungs.iter().rev() {
        let q = quotient(clf, y, v0, theta, mu, &mut buf);
        if (q - reference).abs() <= nu {
            admissible = mu;
        } else {
            break;
        }
    }
    Ok(admissible)
}

/// Probes Assumption-style local uniformity of the Dini liminf on explicit points.
pub fn probe_uniformity_at(
    clf: &Clf,
    points: &[Vec<f64>],
    directions: &[Vec<f64>],
    nu: f64,
    opts: &ProbeOptions,
) -> Result<UniformityProbe> {
    if !(nu > 0.0) {
        return Err(Error::invalid("probe tolerance nu must be positive"));
    }
    if points.is_empty() || directions.is_empty() {
        return Err(Error::invalid("probe needs at least one point and one direction"));
    }
    let mut out = UniformityProbe {
        mu: f64::INFINITY,
        worst_point: points[0].clone(),
        worst_direction: directions[0].clone(),
        point_mu: Vec::with_capacity(points.len()),
    };
    for y in points {
        let mut at_point = f64::INFINITY;
        for theta in directions {
            let mu = pair_mu(clf, y, theta, nu, opts)?;
            if mu < at_point {
                at_point = mu;
            }
            if mu < out.mu {
                out.mu = mu;
                out.worst_point = y.clone();
                out.worst_direction = theta.clone();
            }
        }
        out.point_mu.push(at_point);
    }
    Ok(out)
}

/// Probes uniformity on `sample_count` quasi-random points of `B(center, radius)`.
pub fn probe_uniformity(
    clf: &Clf,
    center: &[f64],
    radius: f64,
    directions: &[Vec<f64>],
    nu: f64,
    sample_count: usize,
    seed: u64,
    opts: &ProbeOptions,
) -> Result<UniformityProbe> {
    if !(radius > 0.0) {
        return Err(Error::invalid("probe region radius must be positive"));
    }
    let mut s = QuasiSampler::new(center.len(), seed);
    let points: Vec<Vec<f64>> = (0..sample_count)
        .map(|_| {
            s.next_in_unit_ball()
                .into_iter()
                .zip(center)
                .map(|(d, c)| c + radius * d)
                .collect()
        })
        .collect();
    probe_uniformity_at(clf, &points, directions, nu, opts)
}
