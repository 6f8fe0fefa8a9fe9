//! InfC-feedback: envelope minimization followed by inner-product minimization over inputs.
//!
//! At a sample state `x` the feedback computes an `ε`-minimizer `y` of the inf-convolution,
//! the proximal subgradient `ζ = (x − y)/α²`, and then an input `u` that minimizes
//! `⟨ζ, f(y, u)⟩` over the input box up to `η`.

use crate::clf::Clf;
use crate::error::{Error, Result, Stage};
use crate::infconv::{envelope, envelope_adversarial, objective_lipschitz, EnvelopeOptions, EnvelopeResult, MinimizerSelection};
use crate::sampling::dot;
use crate::systems::ControlSystem;

/// Relative tolerance of the affinity probe.
const AFFINE_TOL: f64 = 1e-12;
/// Objective values this close to the grid minimum count as ties.
const TIE_TOL: f64 = 1e-12;
/// Grid refinements attempted before a selection budget error.
const MAX_REFINEMENTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    pub alpha: f64,
    /// Envelope accuracy; the envelope is solved to a gap of `eps_x²`.
    pub eps_x: f64,
    pub eta_x: f64,
    pub input_grid_res: usize,
    pub v_bar: f64,
    /// Lipschitz constant of `V` on the search region, for CLFs without smoothness data.
    pub clf_lipschitz: Option<f64>,
    /// Deliberately use the worst admissible choices inside the accuracy budgets: the
    /// certified `ε`-minimizer whose best achievable decay is weakest, and the largest grid
    /// value within `η` of the infimum. Used by accuracy sweeps.
    pub inject: bool,
    pub envelope: EnvelopeOptions,
}

impl FeedbackConfig {
    pub fn new(alpha: f64, eps_x: f64, eta_x: f64, v_bar: f64) -> Self {
        Self {
            alpha,
            eps_x,
            eta_x,
            input_grid_res: 21,
            v_bar,
            clf_lipschitz: None,
            inject: false,
            envelope: EnvelopeOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        for (name, v) in [("eps_x", self.eps_x), ("eta_x", self.eta_x), ("v_bar", self.v_bar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.input_grid_res < 2 {
            return Err(Error::invalid("input grid needs at least 2 points per axis"));
        }
        Ok(())
    }

    pub fn envelope_target(&self) -> f64 {
        self.eps_x * self.eps_x
    }

    fn envelope_options(&self) -> EnvelopeOptions {
        EnvelopeOptions {
            selection: if self.inject {
                MinimizerSelection::LargestWithinTarget
            } else {
                MinimizerSelection::Best
            },
            ..self.envelope
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlDecision {
    pub input: Vec<f64>,
    pub envelope: EnvelopeResult,
    /// `⟨ζ, f(y, u)⟩` at the chosen input.
    pub objective_value: f64,
    /// Certified lower bound on the infimum of the objective over the input box.
    pub objective_lower_bound: f64,
    pub eta_achieved: f64,
    /// Whether the objective was detected to be affine in `u` (exact vertex solution).
    pub affine: bool,
}

/// Chooses the held input for a given envelope result.
pub fn select_control(
    sys: &ControlSystem,
    env: &EnvelopeResult,
    cfg: &FeedbackConfig,
) -> Result<ControlDecision> {
    if cfg.input_grid_res < 2 {
        return Err(Error::invalid("input grid needs at least 2 points per axis"));
    }
    let y = &env.minimizer;
    let zeta = &env.subgradient;
    let mut fbuf = vec![0.0; sys.state_dim()];
    let mut phi = |u: &[f64]| {
        sys.eval_into(y, u, &mut fbuf);
        dot(zeta, &fbuf)
    };
    let bx = sys.input_box();
    let center = bx.center();
    let half = bx.half_widths();
    let m = bx.dim();

    // affine probe: central differences along the axes
    let phi_c = phi(&center);
    let mut slope = vec![0.0; m];
    for i in 0..m {
        if half[i] == 0.0 {
            continue;
        }
        let mut p = center.clone();
        p[i] += half[i];
        let up = phi(&p);
        p[i] = center[i] - half[i];
        let dn = phi(&p);
        slope[i] = (up - dn) / (2.0 * half[i]);
    }
    let model = |u: &[f64]| phi_c + (0..m).map(|i| slope[i] * (u[i] - center[i])).sum::<f64>();
    let coarse = bx.grid(3)?;
    let probe = bx.vertices().into_iter().chain(coarse.points().iter().cloned());
    let mut scale = phi_c.abs();
    let mut worst = 0.0_f64;
    for p in probe {
        let v = phi(&p);
        scale = scale.max(v.abs());
        worst = worst.max((v - model(&p)).abs());
    }
    let affine = worst <= AFFINE_TOL * (1.0 + scale);

    let mut res = cfg.input_grid_res;
    for attempt in 0..=MAX_REFINEMENTS {
        let grid = bx.grid(res)?;
        let points = grid.points();
        let values: Vec<f64> = points.iter().map(|p| phi(p)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let tie = TIE_TOL * min.abs().max(1.0);
        // lexicographically first point among the (near-)minimizers
        let best_i = values.iter().position(|&v| v <= min + tie).expect("nonempty grid");
        let best_v = values[best_i];
        let lower = if affine {
            let exact = phi_c - (0..m).map(|i| slope[i].abs() * half[i]).sum::<f64>();
            exact.min(min)
        } else {
            min - input_lipschitz(points, &values, &grid) * grid.cell_half_diagonal()
        };
        let eta = best_v - lower;
        let pick = if cfg.inject {
            let ceiling = lower + cfg.eta_x;
            let mut pick = (best_i, best_v);
            for (i, &v) in values.iter().enumerate() {
                if v <= ceiling && v > pick.1 {
                    pick = (i, v);
                }
            }
            pick
        } else {
            (best_i, best_v)
        };
        let decision = ControlDecision {
            input: points[pick.0].clone(),
            envelope: env.clone(),
            objective_value: pick.1,
            objective_lower_bound: lower,
            eta_achieved: pick.1 - lower,
            affine,
        };
        if eta <= cfg.eta_x || affine {
            if decision.eta_achieved > cfg.eta_x {
                return Err(Error::ControlBudget {
                    target: cfg.eta_x,
                    achieved: decision.eta_achieved,
                    best: Box::new(decision),
                });
            }
            return Ok(decision);
        }
        if attempt == MAX_REFINEMENTS {
            return Err(Error::ControlBudget {
                target: cfg.eta_x,
                achieved: decision.eta_achieved,
                best: Box::new(decision),
            });
        }
        res = 2 * res - 1;
    }
    unreachable!("refinement loop always returns")
}

/// Largest neighbour-to-neighbour slope on the grid, inflated by the usual safety factor.
fn input_lipschitz(points: &[Vec<f64>], values: &[f64], grid: &crate::systems::InputGrid) -> f64 {
    let m = points[0].len();
    let res = grid.res();
    let mut stride = vec![1usize; m];
    for i in (0..m.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * res;
    }
    let mut l = 0.0_f64;
    for (k, p) in points.iter().enumerate() {
        for i in 0..m {
            if (k / stride[i]) % res + 1 < res {
                let q = k + stride[i];
                let d = (points[q][i] - p[i]).abs();
                if d > 0.0 {
                    l = l.max((values[q] - values[k]).abs() / d);
                }
            }
        }
    }
    crate::systems::SAFETY_FACTOR * l
}

fn envelope_for(sys: &ControlSystem, clf: &Clf, x: &[f64], cfg: &FeedbackConfig) -> Result<EnvelopeResult> {
    let a = cfg.alpha;
    let l = match cfg.clf_lipschitz {
        Some(lv) => {
            let reach = (x.len() as f64).sqrt() * (2.0 * clf.value(x).max(0.0)).sqrt() * a;
            lv + reach / (a * a)
        }
        None => objective_lipschitz(clf, x, a).ok_or_else(|| {
            Error::invalid(format!(
                "CLF `{}` has no smoothness data and no clf_lipschitz was configured",
                clf.name()
            ))
        })?,
    };
    let l = l.max(f64::MIN_POSITIVE);
    if !cfg.inject {
        return envelope(clf, x, a, cfg.envelope_target(), cfg.v_bar, l, &cfg.envelope_options());
    }
    // worst admissible minimizer: the one whose induced input decays the best-known
    // envelope least
    let probe = sys.input_box().grid(3)?;
    let score = |y: &[f64], best: &[f64]| {
        let zeta = |p: &[f64]| -> Vec<f64> { x.iter().zip(p).map(|(xi, pi)| (xi - pi) / (a * a)).collect() };
        let (zy, zb) = (zeta(y), zeta(best));
        let mut f = vec![0.0; x.len()];
        let mut u_star = probe.points()[0].as_slice();
        let mut lo = f64::INFINITY;
        for u in probe.points() {
            sys.eval_into(y, u, &mut f);
            let v = dot(&zy, &f);
            if v < lo {
                lo = v;
                u_star = u;
            }
        }
        sys.eval_into(best, u_star, &mut f);
        dot(&zb, &f)
    };
    envelope_adversarial(clf, x, a, cfg.envelope_target(), cfg.v_bar, l, &cfg.envelope_options(), &score)
}

/// Full per-sample pipeline. Budget failures are reported with the failing stage.
pub fn infc_feedback(
    sys: &ControlSystem,
    clf: &Clf,
    x: &[f64],
    cfg: &FeedbackConfig,
) -> Result<ControlDecision> {
    cfg.validate()?;
    let tag = |stage| move |e| Error::Feedback { stage, source: Box::new(e) };
    let env = envelope_for(sys, clf, x, cfg).map_err(tag(Stage::Envelope))?;
    select_control(sys, &env, cfg).map_err(tag(Stage::ControlSelection))
}

/// Accuracy target a best-effort decision failed to meet.
#[derive(Debug, Clone, PartialEq)]
pub struct Shortfall {
    pub stage: Stage,
    pub target: f64,
    pub achieved: f64,
}

/// Like [`infc_feedback`], but budget overruns fall back to the best bracket found and are
/// reported as shortfalls instead of errors. Other errors still propagate.
pub fn infc_feedback_best_effort(
    sys: &ControlSystem,
    clf: &Clf,
    x: &[f64],
    cfg: &FeedbackConfig,
) -> Result<(ControlDecision, Vec<Shortfall>)> {
    cfg.validate()?;
    let mut shortfalls = Vec::new();
    let env = match envelope_for(sys, clf, x, cfg) {
        Ok(env) => env,
        Err(Error::EnvelopeBudget { target, achieved, best }) => {
            shortfalls.push(Shortfall {
                stage: Stage::Envelope,
                target,
                achieved,
            });
            *best
        }
        Err(e) => return Err(e),
    };
    let decision = match select_control(sys, &env, cfg) {
        Ok(d) => d,
        Err(Error::ControlBudget { target, achieved, best }) => {
            shortfalls.push(Shortfall {
                stage: Stage::ControlSelection,
                target,
                achieved,
            });
            *best
        }
        Err(e) => return Err(e),
    };
    Ok((decision, shortfalls))
}
