//! Stability-margin certificate: the constants of the practical-stability argument and the
//! admissible ranges of `α`, `δ`, `ε` and `η` they imply.
//!
//! Every sup/inf constant is estimated from deterministic quasi-random samples and inflated
//! (sups) or deflated (infs) by [`SAFETY_FACTOR`]. The resulting bounds are typically many
//! orders of magnitude below the values used in practice; the certificate says what the
//! theory guarantees, not what is needed.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::clf::{probe_uniformity_at, Clf, Ladder, ProbeOptions};
use crate::error::{Error, Result};
use crate::feedback::ControlDecision;
use crate::sampling::{ball_points, norm, QuasiSampler};
use crate::systems::{estimate_constants, ControlSystem, SAFETY_FACTOR};

/// Relative tolerance when looking a radius up in a table.
const LOOKUP_TOL: f64 = 1e-9;

/// Sphere-sampled comparison functions `α₁(s) = min_{‖x‖=s} V`, `α₂(s) = max_{‖x‖=s} V`,
/// made monotone: `ρ_V` is the running minimum of `α₁` from the right and `λ_V` inverts the
/// running maximum of `α₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoLambda {
    radii: Vec<f64>,
    rho: Vec<f64>,
    alpha2: Vec<f64>,
}

impl RhoLambda {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// `ρ_V(s)` at the largest grid radius `≤ s`; zero below the grid.
    pub fn rho(&self, s: f64) -> f64 {
        match self.floor_index(s) {
            Some(i) => self.rho[i],
            None => 0.0,
        }
    }

    /// `α₂` (monotone) at the smallest grid radius `≥ s`: an upper bound for `V` on `B_s`.
    pub fn sup_on_ball(&self, s: f64) -> Option<f64> {
        let i = self.radii.partition_point(|&r| r < s * (1.0 - LOOKUP_TOL));
        self.alpha2.get(i).copied()
    }

    /// `λ_V(v)`: the largest grid radius whose sphere maximum is at most `v`, so that
    /// `V(x) ≥ v ⇒ ‖x‖ ≥ λ_V(v)`. Zero if no grid radius qualifies.
    pub fn lambda(&self, v: f64) -> f64 {
        let i = self.alpha2.partition_point(|&a| a <= v * (1.0 + LOOKUP_TOL * 1e-3));
        if i == 0 {
            0.0
        } else {
            self.radii[i - 1]
        }
    }

    fn floor_index(&self, s: f64) -> Option<usize> {
        let i = self.radii.partition_point(|&r| r <= s * (1.0 + LOOKUP_TOL));
        i.checked_sub(1)
    }
}

/// Builds the `ρ_V`/`λ_V` tables on a strictly increasing radius grid.
pub fn rho_lambda(
    clf: &Clf,
    dim: usize,
    radius_grid: &[f64],
    sphere_samples: usize,
    seed: u64,
) -> Result<RhoLambda> {
    if radius_grid.is_empty() {
        return Err(Error::invalid("radius grid is empty"));
    }
    if radius_grid[0] <= 0.0 || radius_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radius grid must be positive and strictly increasing"));
    }
    if sphere_samples == 0 {
        return Err(Error::invalid("need at least one sphere sample"));
    }
    let mut s = QuasiSampler::new(dim, seed);
    let mut dirs: Vec<Vec<f64>> = (0..sphere_samples).map(|_| s.next_on_unit_sphere()).collect();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = sign;
            dirs.push(e);
        }
    }
    let mut buf = vec![0.0; dim];
    let (mut a1, mut a2) = (Vec::with_capacity(radius_grid.len()), Vec::with_capacity(radius_grid.len()));
    for &r in radius_grid {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for d in &dirs {
            for (b, di) in buf.iter_mut().zip(d) {
                *b = r * di;
            }
            let v = clf.value(&buf);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        a1.push(lo);
        a2.push(hi);
    }
    for i in (0..a1.len().saturating_sub(1)).rev() {
        a1[i] = a1[i].min(a1[i + 1]);
    }
    for i in 1..a2.len() {
        a2[i] = a2[i].max(a2[i - 1]);
    }
    Ok(RhoLambda {
        radii: radius_grid.to_vec(),
        rho: a1,
        alpha2: a2,
    })
}

/// Sampled oscillation of `V` versus distance on a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusTable {
    distances: Vec<f64>,
    oscillation: Vec<f64>,
}

impl ModulusTable {
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn oscillation(&self) -> &[f64] {
        &self.oscillation
    }

    /// `ω_V(ε)`: the largest tabulated distance whose oscillation is at most `ε` (0 if none).
    pub fn omega(&self, eps: f64) -> f64 {
        let i = self.oscillation.partition_point(|&o| o <= eps);
        if i == 0 {
            0.0
        } else {
            self.distances[i - 1]
        }
    }

    /// Oscillation bound at distance `d` (smallest tabulated distance `≥ d`).
    pub fn at(&self, d: f64) -> Option<f64> {
        if d == 0.0 {
            return Some(0.0);
        }
        let i = self.distances.partition_point(|&x| x < d * (1.0 - LOOKUP_TOL));
        self.oscillation.get(i).copied()
    }
}

/// Estimates `sup{|V(x) − V(y)| : ‖x − y‖ ≤ d}` on `B(0, ball_radius)` by paired sampling
/// with the usual inflation; the table is made nondecreasing in `d`.
pub fn modulus_of_continuity(
    clf: &Clf,
    dim: usize,
    ball_radius: f64,
    distance_grid: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<ModulusTable> {
    if !(ball_radius > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    if distance_grid.iter().any(|d| *d < 0.0) || distance_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("distance grid must be nonnegative and strictly increasing"));
    }
    let origin = vec![0.0; dim];
    let anchors = ball_points(&origin, ball_radius, pairs, seed);
    let values: Vec<f64> = anchors.iter().map(|x| clf.value(x)).collect();
    let mut dir_sampler = QuasiSampler::new(dim, seed ^ 0x9e37_79b9);
    let dirs: Vec<Vec<f64>> = (0..pairs).map(|_| dir_sampler.next_on_unit_sphere()).collect();
    let mut y = vec![0.0; dim];
    let mut osc = Vec::with_capacity(distance_grid.len());
    let mut running: f64 = 0.0;
    for &d in distance_grid {
        let mut m: f64 = 0.0;
        for ((x, vx), u) in anchors.iter().zip(&values).zip(&dirs) {
            let mut placed = false;
            for sign in [1.0, -1.0] {
                for ((yi, xi), ui) in y.iter_mut().zip(x).zip(u) {
                    *yi = xi + sign * d * ui;
                }
                if norm(&y) <= ball_radius {
                    placed = true;
                    break;
                }
            }
            if placed {
                m = m.max((clf.value(&y) - vx).abs());
            }
        }
        running = running.max(SAFETY_FACTOR * m);
        osc.push(running);
    }
    Ok(ModulusTable {
        distances: distance_grid.to_vec(),
        oscillation: osc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateOptions {
    pub seed: u64,
    /// Radius-table step as a fraction of the target radius `r`.
    pub table_step_fraction: f64,
    pub sphere_samples: usize,
    pub constant_samples: usize,
    pub modulus_pairs: usize,
    pub probe_samples: usize,
    /// Evaluate the `δ`/`ε` bounds at this `α` instead of `α_max`.
    pub alpha: Option<f64>,
    /// Evaluate the `ε` bounds at this `δ` instead of `δ_max`.
    pub delta: Option<f64>,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            table_step_fraction: 0.01,
            sphere_samples: 2048,
            constant_samples: 4000,
            modulus_pairs: 2000,
            probe_samples: 48,
            alpha: None,
            delta: None,
        }
    }
}

/// One candidate bound in a constraint group; the group's value is the minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub group: &'static str,
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginCertificate {
    pub big_r: f64,
    pub r: f64,
    pub r_star_big: f64,
    pub v_bar: f64,
    pub v_star_cap: f64,
    pub theta: f64,
    pub v_star: f64,
    pub r_star: f64,
    pub f_bar: f64,
    pub lipschitz_l_f: f64,
    pub w_bar: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub alpha_max: f64,
    pub alpha_used: f64,
    pub delta_max: f64,
    pub delta_used: f64,
    pub eps_bound: f64,
    pub eta_bound: f64,
    pub reaching_time: f64,
    /// Smallest admissible Dini-uniformity step over unflagged probe points (0 if all flagged).
    pub mu: f64,
    pub probe_points: usize,
    /// Probe points where no admissible step was found (excluded from the `μ` bound).
    pub probe_excluded: usize,
    pub omega_table: ModulusTable,
    pub bounds: Vec<Bound>,
}

fn push(bounds: &mut Vec<Bound>, group: &'static str, name: &'static str, value: f64) {
    bounds.push(Bound { group, name, value });
}

fn group_min(bounds: &[Bound], group: &str) -> f64 {
    bounds
        .iter()
        .filter(|b| b.group == group)
        .map(|b| b.value)
        .fold(f64::INFINITY, f64::min)
}

fn require_positive(bounds: &[Bound], group: &str) -> Result<f64> {
    let v = group_min(bounds, group);
    if v > 0.0 && v.is_finite() {
        return Ok(v);
    }
    let culprit = bounds
        .iter()
        .find(|b| b.group == group && !(b.value > 0.0))
        .map(|b| format!("{}: {}", group, b.name))
        .unwrap_or_else(|| group.to_string());
    Err(Error::infeasible(culprit, format!("bound = {v:e}")))
}

/// Runs the constant recipe and the constraint chain.
pub fn build_certificate(
    sys: &ControlSystem,
    clf: &Clf,
    big_r: f64,
    r: f64,
    opts: &CertificateOptions,
) -> Result<MarginCertificate> {
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(Error::invalid(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    let n = sys.state_dim();
    let seed = opts.seed;

    // comparison functions on a uniform grid reaching well past R
    const MAX_GROWTH: i32 = 30;
    let step = r * opts.table_step_fraction;
    let reach = big_r * 1.1f64.powi(MAX_GROWTH);
    let count = (reach / step).ceil() as usize;
    let grid: Vec<f64> = (1..=count).map(|i| i as f64 * step).collect();
    let table = rho_lambda(clf, n, &grid, opts.sphere_samples, seed)?;

    let v_bar = SAFETY_FACTOR * table.sup_on_ball(big_r).expect("grid covers R");
    let mut r_star_big = None;
    for j in 1..=MAX_GROWTH {
        let cand = big_r * 1.1f64.powi(j);
        if table.rho(cand) > v_bar {
            r_star_big = Some(cand);
            break;
        }
    }
    let r_star_big = r_star_big.ok_or_else(|| {
        Error::infeasible("R*", format!("rho_V stays below V_bar = {v_bar:e} up to {reach:e}"))
    })?;
    let theta = table.rho(r_star_big);
    let v_star_cap = SAFETY_FACTOR * table.sup_on_ball(r_star_big).expect("grid covers R*");
    let v_star = table.rho(r);
    if !(v_star > 0.0) {
        return Err(Error::infeasible("v* = rho_V(r)", "rho_V vanishes at the target radius"));
    }
    let r_star = table.lambda(v_star / 4.0);
    if !(r_star <= r) {
        return Err(Error::infeasible("r* <= r", format!("r* = {r_star}, r = {r}")));
    }
    if !(r_star > 0.0) {
        return Err(Error::infeasible(
            "r* = lambda_V(v*/4)",
            "no grid radius has a sphere maximum below v*/4; refine the table",
        ));
    }

    let outer = r_star_big + (2.0 * v_star_cap).sqrt();
    let consts = estimate_constants(sys, outer, opts.constant_samples, seed)?;
    let (f_bar, l_f) = (consts.f_bar, consts.lipschitz_l_f);
    let w_bar = annulus_inf(clf, n, 0.5 * r_star, outer, opts.constant_samples, seed) / SAFETY_FACTOR;

    let diameter = 2.0 * outer;
    let distances: Vec<f64> = (0..=80).rev().map(|j| diameter * 0.5f64.powi(j)).collect();
    let omega_table = modulus_of_continuity(clf, n, outer, &distances, opts.modulus_pairs, seed)?;

    let mut bounds = Vec::new();

    push(&mut bounds, "w_bar", "inf w on the annulus r*/2 <= |x| <= R* + sqrt(2V*)", w_bar);
    if !(w_bar > 0.0) {
        return Err(Error::infeasible(
            "w_bar",
            format!("decay rate vanishes on the annulus [{:e}, {outer:e}]", 0.5 * r_star),
        ));
    }

    push(&mut bounds, "eps1", "2 L_f eps1 <= w_bar/20", w_bar / (40.0 * l_f));
    push(&mut bounds, "eps1", "case-2 containment eps1 <= v*/8", v_star / 8.0);
    push(&mut bounds, "eps1", "overshoot V_bar + eps1 <= Theta", theta - v_bar);
    let eps1 = require_positive(&bounds, "eps1")?;
    let eps2 = v_star / 8.0;

    let s_star = (2.0 * v_star_cap).sqrt();
    push(&mut bounds, "alpha", "sqrt(2V*) alpha <= 1", 1.0 / s_star);
    push(&mut bounds, "alpha", "sqrt(2V*) alpha <= r*/2", 0.5 * r_star / s_star);
    push(&mut bounds, "alpha", "sqrt(2V*) alpha <= omega_V(eps1)", omega_table.omega(eps1) / s_star);
    push(&mut bounds, 
        "alpha",
        "sandwich: sqrt(2V_bar) alpha <= omega_V(eps1/2)",
        omega_table.omega(0.5 * eps1) / (2.0 * v_bar).sqrt(),
    );
    push(&mut bounds, "alpha", "alpha < 1", 1.0);
    let alpha_max = require_positive(&bounds, "alpha")?;
    let alpha = opts.alpha.unwrap_or(alpha_max);

    push(&mut bounds, "delta", "delta f_bar^2/(2 alpha^2) <= w_bar/20", w_bar * alpha * alpha / (10.0 * f_bar * f_bar));
    push(&mut bounds, "delta", "delta w_bar/2 <= v*/4", v_star / (2.0 * w_bar));
    push(&mut bounds, 
        "delta",
        "sqrt(2V*)/alpha L_f f_bar delta <= w_bar/20",
        w_bar * alpha / (20.0 * s_star * l_f * f_bar),
    );
    push(&mut bounds, "delta", "delta f_bar <= omega_V(eps2)", omega_table.omega(eps2) / f_bar);
    push(&mut bounds, "delta", "delta < 1", 1.0);
    let delta_max = require_positive(&bounds, "delta")?;
    let delta = opts.delta.unwrap_or(delta_max);

    let (mu, probe_points, probe_excluded) = probe_mu(sys, clf, r_star_big, w_bar / 5.0, opts)?;
    push(&mut bounds, "eps", "eps^2 <= delta w_bar/20", (delta * w_bar / 20.0).sqrt());
    push(&mut bounds, "eps", "2 L_f eps^2 <= w_bar/20", (w_bar / (40.0 * l_f)).sqrt());
    push(&mut bounds, 
        "eps",
        "eps <= w_bar alpha^2/(10(f_bar^2 + 2 alpha^2))",
        w_bar * alpha * alpha / (10.0 * (f_bar * f_bar + 2.0 * alpha * alpha)),
    );
    push(&mut bounds, "eps", "sandwich: eps^2 < eps1/2", (0.5 * eps1).sqrt());
    if mu > 0.0 {
        push(&mut bounds, "eps", "eps^2 <= mu (Dini uniformity at nu = w_bar/5)", mu.sqrt());
    }
    let eps_bound = require_positive(&bounds, "eps")?;
    push(&mut bounds, "eta", "eta <= w_bar/20", w_bar / 20.0);
    let eta_bound = require_positive(&bounds, "eta")?;

    Ok(MarginCertificate {
        big_r,
        r,
        r_star_big,
        v_bar,
        v_star_cap,
        theta,
        v_star,
        r_star,
        f_bar,
        lipschitz_l_f: l_f,
        w_bar,
        eps1,
        eps2,
        alpha_max,
        alpha_used: alpha,
        delta_max,
        delta_used: delta,
        eps_bound,
        eta_bound,
        reaching_time: 4.0 * (v_bar - 0.5 * v_star) / w_bar,
        mu,
        probe_points,
        probe_excluded,
        omega_table,
        bounds,
    })
}

fn annulus_inf(clf: &Clf, dim: usize, inner: f64, outer: f64, samples: usize, seed: u64) -> f64 {
    let mut s = QuasiSampler::new(dim + 1, seed ^ 0x5bd1_e995);
    let mut m = f64::INFINITY;
    for i in 0..samples {
        let p = s.next_unit();
        let mut d: Vec<f64> = p[..dim].iter().map(|v| 2.0 * v - 1.0).collect();
        let l = norm(&d);
        if l < 1e-6 {
            continue;
        }
        // every other sample sits on the inner sphere, where radial rates are smallest
        let rad = if i % 2 == 0 { inner } else { inner + (outer - inner) * p[dim] };
        d.iter_mut().for_each(|v| *v *= rad / l);
        m = m.min(clf.decay_rate(&d));
    }
    m
}

/// Dini-uniformity probe at tolerance `nu` over `B_{radius}` with directions `f(y, vertices)`.
/// Returns `(μ over unflagged points, points probed, points flagged)`.
fn probe_mu(
    sys: &ControlSystem,
    clf: &Clf,
    radius: f64,
    nu: f64,
    opts: &CertificateOptions,
) -> Result<(f64, usize, usize)> {
    let n = sys.state_dim();
    let points = ball_points(&vec![0.0; n], radius, opts.probe_samples, opts.seed ^ 0x27d4_eb2f);
    let vertices = sys.input_box().vertices();
    let probe = ProbeOptions {
        ladder: Ladder {
            start: 0.1,
            mu_min: 1e-9,
        },
        reference_mu_min: 1e-11,
    };
    let mut mu = f64::INFINITY;
    let mut excluded = 0;
    for y in &points {
        let dirs: Vec<Vec<f64>> = vertices.iter().map(|u| sys.eval(y, u)).collect();
        let p = probe_uniformity_at(clf, std::slice::from_ref(y), &dirs, nu, &probe)?;
        if p.violated() {
            excluded += 1;
        } else {
            mu = mu.min(p.mu);
        }
    }
    Ok((if mu.is_finite() { mu } else { 0.0 }, points.len(), excluded))
}

/// `inf_u ⟨ζ, f(y, u)⟩ ≤ −(3/4)·w̄`, using the certified lower bound.
pub fn check_decay_objective(decision: &ControlDecision, cert: &MarginCertificate) -> bool {
    decision.objective_lower_bound <= -0.75 * cert.w_bar
}

impl MarginCertificate {
    fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("R", self.big_r),
            ("r", self.r),
            ("R_star", self.r_star_big),
            ("V_bar", self.v_bar),
            ("V_star_cap", self.v_star_cap),
            ("Theta", self.theta),
            ("v_star", self.v_star),
            ("r_star", self.r_star),
            ("f_bar", self.f_bar),
            ("L_f", self.lipschitz_l_f),
            ("w_bar", self.w_bar),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("alpha_max", self.alpha_max),
            ("alpha_used", self.alpha_used),
            ("delta_max", self.delta_max),
            ("delta_used", self.delta_used),
            ("eps_bound", self.eps_bound),
            ("eta_bound", self.eta_bound),
            ("T_alpha", self.reaching_time),
            ("mu", self.mu),
            ("probe_points", self.probe_points as f64),
            ("probe_excluded", self.probe_excluded as f64),
        ]
    }

    /// Flat `name = value` text, one scalar per line.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.scalars() {
            let _ = writeln!(out, "{k} = {v:e}");
        }
        out
    }

    /// Human-readable constraint report naming the binding bound of each group.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{self}");
        let mut groups: Vec<&str> = Vec::new();
        for b in &self.bounds {
            if !groups.contains(&b.group) {
                groups.push(b.group);
            }
        }
        for g in groups {
            let m = group_min(&self.bounds, g);
            let _ = writeln!(out, "[{g}] = {m:e}");
            for b in self.bounds.iter().filter(|b| b.group == g) {
                let mark = if b.value == m { "binding" } else { "" };
                let _ = writeln!(out, "  {:<55} {:>14.6e} {mark}", b.name, b.value);
            }
        }
        let _ = writeln!(
            out,
            "probe: {} of {} points flagged (no admissible step at nu = w_bar/5); excluded",
            self.probe_excluded, self.probe_points
        );
        out
    }
}

impl fmt::Display for MarginCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "certificate R = {}, r = {}: R* = {:.4}, v* = {:.4e}, r* = {:.4e}, w_bar = {:.4e}",
            self.big_r, self.r, self.r_star_big, self.v_star, self.r_star, self.w_bar
        )
    }
}

/// Parses `name = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `name = value`", i + 1)))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("line {}: `{}` is not a number", i + 1, v.trim())))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clf::{nonholonomic_clf, quadratic_clf};
    use crate::systems::single_integrator;

    fn grid(step: f64, to: f64) -> Vec<f64> {
        (1..=(to / step).round() as usize).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn quadratic_tables() {
        let q = quadratic_clf(1.0);
        let t = rho_lambda(&q, 2, &grid(0.01, 2.0), 64, 0).unwrap();
        for &s in &[0.1, 0.5, 1.0, 1.7] {
            assert!((t.rho(s) - s * s).abs() < 1e-12, "{s}");
        }
        assert!((t.lambda(0.25) - 0.5).abs() <= 0.01 + 1e-12);
        assert!(t.lambda(0.2) * t.lambda(0.2) <= 0.2);
        assert_eq!(t.rho(0.001), 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let q = quadratic_clf(1.0);
        assert!(rho_lambda(&q, 2, &[], 8, 0).is_err());
        assert!(rho_lambda(&q, 2, &[0.2, 0.1], 8, 0).is_err());
    }

    #[test]
    fn nonholonomic_rho_is_quadratic_with_golden_ratio_constant() {
        let v = nonholonomic_clf(0.01);
        let t = rho_lambda(&v, 3, &[0.5, 1.0, 2.0], 2048, 1).unwrap();
        let c = 1.5 - 1.25f64.sqrt();
        assert!(t.rho(1.0) >= c - 1e-12);
        assert!(t.rho(1.0) - c < 5e-3, "{}", t.rho(1.0));
    }

    #[test]
    fn modulus_quadratic() {
        let q = quadratic_clf(1.0);
        let d: Vec<f64> = (0..10).map(|j| 1e-3 * 2f64.powi(j)).collect();
        let m = modulus_of_continuity(&q, 2, 2.0, &d, 500, 0).unwrap();
        for (di, o) in m.distances().iter().zip(m.oscillation()) {
            assert!(*o <= 1.1 * 4.0 * di + 1e-12);
            assert!(*o >= 0.5 * 4.0 * di - di * di, "{di} {o}");
        }
        assert_eq!(m.at(0.0), Some(0.0));
        assert_eq!(m.omega(0.0), 0.0);
        assert!(m.omega(1.0) > 0.1);
    }

    #[test]
    fn scalar_demo_certificate() {
        let sys = single_integrator(1);
        let v = quadratic_clf(1.0);
        let c = build_certificate(&sys, &v, 1.0, 0.1, &CertificateOptions::default()).unwrap();
        assert!((c.v_star - 0.01).abs() < 1e-6);
        assert!((c.r_star - 0.05).abs() < 1e-6, "{}", c.r_star);
        assert!(c.r_star <= c.r);
        assert!(c.theta > c.v_bar);
        assert!(c.delta_max > 0.0 && c.eps_bound > 0.0 && c.eta_bound > 0.0 && c.alpha_max > 0.0);
    }

    #[test]
    fn r_not_below_big_r_rejected() {
        let sys = single_integrator(1);
        let v = quadratic_clf(1.0);
        assert!(build_certificate(&sys, &v, 1.0, 1.0, &CertificateOptions::default()).is_err());
    }

    #[test]
    fn vanishing_decay_rate_is_infeasible() {
        let sys = single_integrator(1);
        let v = crate::clf::Clf::new("flat-w", |x| x[0] * x[0], |_| 0.0);
        match build_certificate(&sys, &v, 1.0, 0.1, &CertificateOptions::default()) {
            Err(Error::Infeasible { constraint, .. }) => assert!(constraint.contains("w_bar")),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn kv_round_trip() {
        let sys = single_integrator(1);
        let v = quadratic_clf(1.0);
        let c = build_certificate(&sys, &v, 1.0, 0.1, &CertificateOptions::default()).unwrap();
        let kv = parse_kv(&c.to_kv()).unwrap();
        assert_eq!(kv["v_star"], c.v_star);
        assert_eq!(kv["eps_bound"], c.eps_bound);
        assert!(parse_kv("a = b").is_err());
        assert!(c.report().contains("binding"));
    }
}
