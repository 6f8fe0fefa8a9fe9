//! Sample-and-hold closed loop: the feedback is evaluated at `t_k = kδ`, its input is held
//! over `[t_k, t_{k+1})`, and the flow in between is integrated with fixed-step RK4.

use std::fmt;

use crate::clf::Clf;
use crate::error::{Error, Result, Stage};
use crate::feedback::{infc_feedback_best_effort, ControlDecision, FeedbackConfig, Shortfall};
use crate::margins::MarginCertificate;
use crate::ode::Rk4;
use crate::sampling::norm;
use crate::systems::ControlSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// RK4 substeps per sampling period.
    pub substeps: usize,
    /// Record the state at every substep.
    pub dense: bool,
    /// Radius whose entries/exits are logged as events.
    pub target_radius: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            substeps: 10,
            dense: false,
            target_radius: None,
        }
    }
}

/// Input held over one sampling period plus whatever diagnostics produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldInput {
    pub input: Vec<f64>,
    pub decision: Option<ControlDecision>,
    pub shortfalls: Vec<Shortfall>,
}

impl HeldInput {
    pub fn plain(input: Vec<f64>) -> Self {
        Self {
            input,
            decision: None,
            shortfalls: Vec::new(),
        }
    }
}

/// One sample. Envelope and accuracy fields are `NaN` for policies that carry no decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub k: usize,
    pub t: f64,
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    pub value: f64,
    pub envelope_lower: f64,
    pub envelope_upper: f64,
    pub eps_achieved: f64,
    pub eta_achieved: f64,
    pub objective_value: f64,
    pub objective_lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    EnteredTarget,
    LeftTarget,
    BudgetShortfall(Stage),
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::EnteredTarget => f.write_str("entered_target"),
            EventKind::LeftTarget => f.write_str("left_target"),
            EventKind::BudgetShortfall(s) => write!(f, "budget_shortfall_{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub k: usize,
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleHoldRun {
    pub delta: f64,
    pub substeps: usize,
    pub samples: Vec<SampleRecord>,
    /// `(t, x)` at every substep, when requested.
    pub dense_states: Option<Vec<(f64, Vec<f64>)>>,
    pub events: Vec<Event>,
}

impl SampleHoldRun {
    pub fn shortfall_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::BudgetShortfall(_)))
            .count()
    }

    /// Mean of `‖x_k‖` over samples with `t_k ∈ [from, to]`.
    pub fn mean_norm_between(&self, from: f64, to: f64) -> Option<f64> {
        let eps = 1e-9 * self.delta;
        let norms: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.t >= from - eps && s.t <= to + eps)
            .map(|s| norm(&s.state))
            .collect();
        (!norms.is_empty()).then(|| norms.iter().sum::<f64>() / norms.len() as f64)
    }

    fn trace(&self) -> Vec<(f64, &[f64])> {
        match &self.dense_states {
            Some(d) => d.iter().map(|(t, x)| (*t, x.as_slice())).collect(),
            None => self.samples.iter().map(|s| (s.t, s.state.as_slice())).collect(),
        }
    }
}

fn sample_count(delta: f64, horizon: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !(horizon >= delta) {
        return Err(Error::invalid(format!("horizon {horizon} is shorter than delta {delta}")));
    }
    Ok((horizon / delta + 1e-9).floor() as usize)
}

/// Closed loop under an arbitrary sampled policy `policy(k, t_k, x_k)`.
pub fn simulate_with<P>(
    sys: &ControlSystem,
    x0: &[f64],
    delta: f64,
    horizon: f64,
    opts: &SimOptions,
    mut policy: P,
) -> Result<SampleHoldRun>
where
    P: FnMut(usize, f64, &[f64]) -> Result<HeldInput>,
{
    let n_samples = sample_count(delta, horizon)?;
    if opts.substeps == 0 {
        return Err(Error::invalid("substeps must be at least 1"));
    }
    if x0.len() != sys.state_dim() {
        return Err(Error::invalid(format!(
            "initial state has dimension {}, system `{}` expects {}",
            x0.len(),
            sys.name(),
            sys.state_dim()
        )));
    }
    let h = delta / opts.substeps as f64;
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len());
    let mut samples = Vec::with_capacity(n_samples + 1);
    let mut events = Vec::new();
    let mut dense = opts.dense.then(|| vec![(0.0, x.clone())]);
    let mut inside: Option<bool> = None;

    for k in 0..=n_samples {
        let t = k as f64 * delta;
        if let Some(r) = opts.target_radius {
            let now = norm(&x) <= r;
            match (inside, now) {
                (Some(false) | None, true) => events.push(Event {
                    k,
                    t,
                    kind: EventKind::EnteredTarget,
                    detail: format!("|x| = {:e}", norm(&x)),
                }),
                (Some(true), false) => events.push(Event {
                    k,
                    t,
                    kind: EventKind::LeftTarget,
                    detail: format!("|x| = {:e}", norm(&x)),
                }),
                _ => {}
            }
            inside = Some(now);
        }

        let held = policy(k, t, &x)?;
        if !sys.input_box().contains(&held.input) {
            return Err(Error::invalid(format!("policy input {:?} leaves the input box", held.input)));
        }
        for s in &held.shortfalls {
            events.push(Event {
                k,
                t,
                kind: EventKind::BudgetShortfall(s.stage),
                detail: format!("target {:e}, achieved {:e}", s.target, s.achieved),
            });
        }
        let nan = f64::NAN;
        let record = match &held.decision {
            Some(d) => SampleRecord {
                k,
                t,
                state: x.clone(),
                input: held.input.clone(),
                value: d.envelope.query_value,
                envelope_lower: d.envelope.lower_bound,
                envelope_upper: d.envelope.upper_value,
                eps_achieved: d.envelope.epsilon_achieved,
                eta_achieved: d.eta_achieved,
                objective_value: d.objective_value,
                objective_lower_bound: d.objective_lower_bound,
            },
            None => SampleRecord {
                k,
                t,
                state: x.clone(),
                input: held.input.clone(),
                value: nan,
                envelope_lower: nan,
                envelope_upper: nan,
                eps_achieved: nan,
                eta_achieved: nan,
                objective_value: nan,
                objective_lower_bound: nan,
            },
        };
        samples.push(record);
        if k == n_samples {
            break;
        }

        let u = held.input;
        let mut field = |_t: f64, s: &[f64], out: &mut [f64]| sys.eval_into(s, &u, out);
        for j in 0..opts.substeps {
            let tj = (k as f64 + j as f64 / opts.substeps as f64) * delta;
            rk.step(&mut field, tj, &mut x, h);
            if let Some(d) = dense.as_mut() {
                let tn = (k as f64 + (j + 1) as f64 / opts.substeps as f64) * delta;
                d.push((tn, x.clone()));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("state diverged to a non-finite value at t = {t}")));
        }
    }

    Ok(SampleHoldRun {
        delta,
        substeps: opts.substeps,
        samples,
        dense_states: dense,
        events,
    })
}

/// Closed loop under the InfC-feedback. Budget overruns continue with the best-effort
/// decision and are logged as events.
pub fn simulate(
    sys: &ControlSystem,
    clf: &Clf,
    cfg: &FeedbackConfig,
    x0: &[f64],
    delta: f64,
    horizon: f64,
    opts: &SimOptions,
) -> Result<SampleHoldRun> {
    cfg.validate()?;
    simulate_with(sys, x0, delta, horizon, opts, |_, _, x| {
        let (decision, shortfalls) = infc_feedback_best_effort(sys, clf, x, cfg)?;
        Ok(HeldInput {
            input: decision.input.clone(),
            decision: Some(decision),
            shortfalls,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub start_radius_r_big: f64,
    pub target_radius: f64,
    pub bounded: bool,
    /// First time the trajectory left `B_{R*}`.
    pub exit_time: Option<f64>,
    /// First time the trajectory was inside `B_r`.
    pub entered_at: Option<f64>,
    /// Start of the final uninterrupted stretch inside `B_r`, running to the horizon.
    pub settled_at: Option<f64>,
    /// The final stretch inside `B_r` covers at least the last [`SETTLE_FRACTION`] of the run.
    pub stayed: bool,
    pub reaching_time_bound: Option<f64>,
}

/// Fraction of the horizon a trajectory must finish inside `B_r` to count as having stayed.
pub const SETTLE_FRACTION: f64 = 0.2;

/// Practical-stability verdict over the recorded trajectory (dense states when available).
pub fn verdict(
    run: &SampleHoldRun,
    big_r: f64,
    r: f64,
    r_star: f64,
    reaching_time_bound: Option<f64>,
) -> Result<StabilityVerdict> {
    if !(r > 0.0 && r < big_r) {
        return Err(Error::invalid(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    if r_star < big_r {
        return Err(Error::invalid(format!("R* = {r_star} is below R = {big_r}")));
    }
    let trace = run.trace();
    let exit_time = trace.iter().find(|(_, x)| norm(x) > r_star).map(|(t, _)| *t);
    let entry = trace.iter().position(|(_, x)| norm(x) <= r);
    let settled = match trace.iter().rposition(|(_, x)| norm(x) > r) {
        None => (!trace.is_empty()).then_some(0),
        Some(i) => (i + 1 < trace.len()).then_some(i + 1),
    };
    let (t0, t1) = (trace.first().map_or(0.0, |p| p.0), trace.last().map_or(0.0, |p| p.0));
    let settled_at = settled.map(|i| trace[i].0);
    let stayed = settled_at.is_some_and(|ts| t1 - ts >= SETTLE_FRACTION * (t1 - t0) - 1e-9);
    Ok(StabilityVerdict {
        start_radius_r_big: big_r,
        target_radius: r,
        bounded: exit_time.is_none(),
        exit_time,
        entered_at: entry.map(|i| trace[i].0),
        settled_at,
        stayed,
        reaching_time_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRecord {
    pub k: usize,
    /// `V_α(x_{k+1}) − V_α(x_k) ≤ −δw̄/2`, from certified brackets.
    pub decayed: bool,
    /// `V_α(x_{k+1}) < V_α(x_k)`, from certified brackets.
    pub strictly_decreased: bool,
    /// Certified upper bound on `V_α(x_{k+1}) − V_α(x_k)`.
    pub amount: f64,
}

/// Sample-wise decay of the envelope over Case-1 samples (`V_α(x_k) ≥ v*/2`, certified).
pub fn samplewise_decay_check(run: &SampleHoldRun, cert: &MarginCertificate) -> Vec<DecayRecord> {
    let need = 0.5 * run.delta * cert.w_bar;
    run.samples
        .windows(2)
        .filter(|w| w[0].envelope_lower >= 0.5 * cert.v_star)
        .map(|w| {
            let amount = w[1].envelope_upper - w[0].envelope_lower;
            DecayRecord {
                k: w[0].k,
                decayed: amount <= -need,
                strictly_decreased: amount < 0.0,
                amount,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{single_integrator, InputBox};

    #[test]
    fn zero_dynamics_hold_state() {
        let sys = ControlSystem::new("still", 2, InputBox::symmetric(1, 1.0).unwrap(), |_x: &[f64], _u: &[f64], out: &mut [f64]| {
            out.fill(0.0)
        })
        .unwrap();
        let run = simulate_with(&sys, &[0.3, -0.2], 0.1, 1.0, &SimOptions::default(), |_, _, _| {
            Ok(HeldInput::plain(vec![0.5]))
        })
        .unwrap();
        assert_eq!(run.samples.len(), 11);
        assert!(run.samples.iter().all(|s| s.state == vec![0.3, -0.2]));
    }

    #[test]
    fn forced_scalar_descends_linearly() {
        let sys = single_integrator(1);
        let run = simulate_with(&sys, &[1.0], 0.1, 0.5, &SimOptions::default(), |_, _, _| {
            Ok(HeldInput::plain(vec![-1.0]))
        })
        .unwrap();
        assert_eq!(run.samples.len(), 6);
        for s in &run.samples {
            assert!((s.state[0] - (1.0 - 0.1 * s.k as f64)).abs() < 1e-14);
            assert_eq!(s.t, s.k as f64 * 0.1);
        }
    }

    #[test]
    fn dense_states_cover_substeps() {
        let sys = single_integrator(1);
        let opts = SimOptions {
            substeps: 4,
            dense: true,
            target_radius: None,
        };
        let run = simulate_with(&sys, &[1.0], 0.1, 0.5, &opts, |_, _, _| Ok(HeldInput::plain(vec![-1.0]))).unwrap();
        assert_eq!(run.dense_states.as_ref().unwrap().len(), 1 + 5 * 4);
    }

    #[test]
    fn rejects_bad_timing() {
        let sys = single_integrator(1);
        let p = |_: usize, _: f64, _: &[f64]| Ok(HeldInput::plain(vec![0.0]));
        assert!(simulate_with(&sys, &[1.0], 0.0, 1.0, &SimOptions::default(), p).is_err());
        assert!(simulate_with(&sys, &[1.0], 0.1, 0.05, &SimOptions::default(), p).is_err());
    }

    #[test]
    fn verdict_cases() {
        let sys = single_integrator(1);
        let still = simulate_with(&sys, &[0.0], 0.1, 1.0, &SimOptions::default(), |_, _, _| {
            Ok(HeldInput::plain(vec![0.0]))
        })
        .unwrap();
        let v = verdict(&still, 2.0, 0.1, 3.0, None).unwrap();
        assert!(v.bounded && v.stayed);
        assert_eq!(v.entered_at, Some(0.0));

        let away = simulate_with(&sys, &[2.5], 0.1, 1.0, &SimOptions::default(), |_, _, _| {
            Ok(HeldInput::plain(vec![1.0]))
        })
        .unwrap();
        let v = verdict(&away, 2.0, 0.1, 3.0, None).unwrap();
        assert!(!v.bounded);
        assert!((v.exit_time.unwrap() - 0.6).abs() < 1e-12);
        assert!(verdict(&away, 2.0, 2.0, 3.0, None).is_err());

        // dips into B_r, leaves, and comes back for good
        let dip = simulate_with(&sys, &[0.15], 0.1, 1.0, &SimOptions::default(), |k, _, _| {
            Ok(HeldInput::plain(vec![[-1.0, 1.0, -0.6].get(k).copied().unwrap_or(0.0)]))
        })
        .unwrap();
        let v = verdict(&dip, 2.0, 0.1, 3.0, None).unwrap();
        assert!((v.entered_at.unwrap() - 0.1).abs() < 1e-12);
        assert!((v.settled_at.unwrap() - 0.3).abs() < 1e-12);
        assert!(v.stayed);
    }

    #[test]
    fn target_events_logged() {
        let sys = single_integrator(1);
        let opts = SimOptions {
            target_radius: Some(0.25),
            ..SimOptions::default()
        };
        let run = simulate_with(&sys, &[0.5], 0.1, 1.0, &opts, |_, _, _| Ok(HeldInput::plain(vec![-1.0]))).unwrap();
        let kinds: Vec<EventKind> = run.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::EnteredTarget, EventKind::LeftTarget]);
    }
}
