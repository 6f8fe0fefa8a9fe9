//! Config-driven experiments: accuracy sweeps, certificates, CSV output, and a self-test.
//!
//! Config files are INI-style:
//!
//! ```ini
//! [system]
//! name = nonholonomic
//! clf = nonholonomic
//! decay_coefficient = 0.01
//!
//! [simulation]
//! x0 = 1, 0.5, -0.1
//! delta = 0.005
//! horizon = 10
//!
//! [feedback]
//! alpha = 0.1
//! eta_sweep = 1e-2, 1e-5, 1e-8
//!
//! [verdict]
//! R = 2
//! r = 0.1
//! ```
//!
//! Optional keys: `simulation.substeps` (10), `simulation.dense` (false),
//! `feedback.eps_policy` (`tie-to-eta`, or a list of `ε_x` matching the sweep),
//! `feedback.input_grid_res` (21), `feedback.inject` (true), `feedback.max_evaluations`,
//! `verdict.R_star` (1.5·R), `run.seed` (0), `run.output_dir` (`out`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ini::Ini;

use crate::clf::{clf_by_name, Clf};
use crate::error::{Error, Result};
use crate::feedback::FeedbackConfig;
use crate::infconv::EnvelopeOptions;
use crate::margins::{build_certificate, CertificateOptions, MarginCertificate};
use crate::sampling::{ball_points, norm};
use crate::sim::{samplewise_decay_check, simulate, verdict, DecayRecord, SampleHoldRun, SimOptions, StabilityVerdict};
use crate::systems::{system_by_name, ControlSystem, SAFETY_FACTOR};

#[derive(Debug, Clone, PartialEq)]
pub enum EpsPolicy {
    /// `ε_x² = η_x`.
    TieToEta,
    /// One `ε_x` per sweep entry.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system_name: String,
    pub clf_name: String,
    pub decay_coefficient: f64,
    pub x0: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
    pub substeps: usize,
    pub dense: bool,
    pub alpha: f64,
    pub eta_sweep: Vec<f64>,
    pub eps_policy: EpsPolicy,
    pub input_grid_res: usize,
    pub inject: bool,
    pub max_evaluations: usize,
    pub big_r: f64,
    pub r: f64,
    pub r_star: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("system", &["name", "clf", "decay_coefficient"]),
    ("simulation", &["x0", "delta", "horizon", "substeps", "dense"]),
    (
        "feedback",
        &["alpha", "eta_sweep", "eps_policy", "input_grid_res", "inject", "max_evaluations"],
    ),
    ("verdict", &["R", "r", "R_star"]),
    ("run", &["seed", "output_dir"]),
];

struct Sections<'a>(&'a Ini);

impl Sections<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.0.section(Some(section)).and_then(|p| p.get(key)).map(str::trim)
    }

    fn required(&self, section: &str, key: &str) -> Result<&str> {
        self.raw(section, key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}` in section [{section}]")))
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str, text: &str) -> Result<T> {
        text.parse()
            .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse `{text}`")))
    }

    fn number(&self, section: &str, key: &str) -> Result<f64> {
        let t = self.required(section, key)?;
        self.parse(section, key, t)
    }

    fn opt<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.raw(section, key) {
            Some(t) => self.parse(section, key, t),
            None => Ok(default),
        }
    }

    fn list(&self, section: &str, key: &str, text: &str) -> Result<Vec<f64>> {
        text.split(',')
            .map(|p| self.parse(section, key, p.trim()))
            .collect()
    }
}

impl ExperimentConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (section, props) in ini.iter() {
            let Some(name) = section else {
                if !props.is_empty() {
                    return Err(Error::Config("keys outside of any section".into()));
                }
                continue;
            };
            let known = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::Config(format!("unknown section [{name}]")))?;
            for (k, _) in props.iter() {
                if !known.1.contains(&k) {
                    return Err(Error::Config(format!("unknown key `{k}` in section [{name}]")));
                }
            }
        }
        let s = Sections(&ini);
        let big_r = s.number("verdict", "R")?;
        let eta_sweep = s.list("feedback", "eta_sweep", s.required("feedback", "eta_sweep")?)?;
        let eps_policy = match s.raw("feedback", "eps_policy") {
            None | Some("tie-to-eta") => EpsPolicy::TieToEta,
            Some(t) => EpsPolicy::Explicit(s.list("feedback", "eps_policy", t)?),
        };
        let cfg = Self {
            system_name: s.required("system", "name")?.to_string(),
            clf_name: s.required("system", "clf")?.to_string(),
            decay_coefficient: s.opt("system", "decay_coefficient", 0.01)?,
            x0: s.list("simulation", "x0", s.required("simulation", "x0")?)?,
            delta: s.number("simulation", "delta")?,
            horizon: s.number("simulation", "horizon")?,
            substeps: s.opt("simulation", "substeps", 10)?,
            dense: s.opt("simulation", "dense", false)?,
            alpha: s.number("feedback", "alpha")?,
            eta_sweep,
            eps_policy,
            input_grid_res: s.opt("feedback", "input_grid_res", 21)?,
            inject: s.opt("feedback", "inject", true)?,
            max_evaluations: s.opt("feedback", "max_evaluations", EnvelopeOptions::default().max_evaluations)?,
            big_r,
            r: s.number("verdict", "r")?,
            r_star: s.opt("verdict", "R_star", 1.5 * big_r)?,
            seed: s.opt("run", "seed", 0)?,
            output_dir: PathBuf::from(s.opt("run", "output_dir", "out".to_string())?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_ini_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.eta_sweep.is_empty() {
            return bad("eta_sweep is empty".into());
        }
        if self.eta_sweep.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("every eta must be positive".into());
        }
        if let EpsPolicy::Explicit(v) = &self.eps_policy {
            if v.len() != self.eta_sweep.len() || v.iter().any(|e| !(*e > 0.0)) {
                return bad("explicit eps_policy needs one positive value per eta".into());
            }
        }
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.horizon > 0.0 && self.horizon >= self.delta) {
            return bad(format!("horizon must be at least delta, got {}", self.horizon));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.input_grid_res < 2 {
            return bad("input_grid_res must be at least 2".into());
        }
        if !(self.r > 0.0 && self.r < self.big_r && self.big_r <= self.r_star) {
            return bad(format!(
                "need 0 < r < R <= R_star, got r = {}, R = {}, R_star = {}",
                self.r, self.big_r, self.r_star
            ));
        }
        Ok(())
    }

    pub fn eps_for(&self, index: usize) -> f64 {
        match &self.eps_policy {
            EpsPolicy::TieToEta => self.eta_sweep[index].sqrt(),
            EpsPolicy::Explicit(v) => v[index],
        }
    }

    fn resolve(&self) -> Result<(ControlSystem, Clf)> {
        let sys = system_by_name(&self.system_name)?;
        let clf = clf_by_name(&self.clf_name, self.decay_coefficient)?;
        if self.x0.len() != sys.state_dim() {
            return Err(Error::Config(format!(
                "x0 has {} entries, system `{}` has dimension {}",
                self.x0.len(),
                sys.name(),
                sys.state_dim()
            )));
        }
        Ok((sys, clf))
    }

    pub fn certificate_options(&self) -> CertificateOptions {
        CertificateOptions {
            seed: self.seed,
            alpha: Some(self.alpha),
            delta: Some(self.delta),
            ..CertificateOptions::default()
        }
    }

    /// `V̄` used to size the envelope search: the sampled sup of `V` over `B_{R*}`, inflated.
    fn operating_v_bar(&self, clf: &Clf) -> f64 {
        let pts = ball_points(&vec![0.0; self.x0.len()], self.r_star, 4000, self.seed);
        let sup = pts.iter().map(|p| clf.value(p)).fold(clf.value(&self.x0), f64::max);
        SAFETY_FACTOR * sup
    }

    pub fn feedback_config(&self, index: usize, clf: &Clf) -> FeedbackConfig {
        FeedbackConfig {
            inject: self.inject,
            input_grid_res: self.input_grid_res,
            envelope: EnvelopeOptions {
                max_evaluations: self.max_evaluations,
                ..EnvelopeOptions::default()
            },
            ..FeedbackConfig::new(self.alpha, self.eps_for(index), self.eta_sweep[index], self.operating_v_bar(clf))
        }
    }
}

/// Label used in file names, e.g. `1e-2`.
pub fn eta_label(eta: f64) -> String {
    format!("{eta:e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub eta: f64,
    pub eps_x: f64,
    pub run: SampleHoldRun,
    pub verdict: StabilityVerdict,
    pub terminal_mean_norm: f64,
    pub decay: Option<Vec<DecayRecord>>,
}

impl SweepPoint {
    /// Fraction of Case-1 samples with a certified strict decrease.
    pub fn strict_decrease_fraction(&self) -> Option<f64> {
        let d = self.decay.as_ref()?;
        (!d.is_empty()).then(|| d.iter().filter(|r| r.strictly_decreased).count() as f64 / d.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// `None` when the certificate is infeasible for this configuration.
    pub certificate: Option<MarginCertificate>,
    pub certificate_error: Option<String>,
}

/// Runs every sweep point (concurrently) without touching the file system.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let (sys, clf) = cfg.resolve()?;
    let (certificate, certificate_error) = match build_certificate(&sys, &clf, cfg.big_r, cfg.r, &cfg.certificate_options()) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let opts = SimOptions {
        substeps: cfg.substeps,
        dense: cfg.dense,
        target_radius: Some(cfg.r),
    };
    let runs: Vec<Result<SampleHoldRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.eta_sweep.len())
            .map(|i| {
                let fb = cfg.feedback_config(i, &clf);
                let (sys, clf, opts) = (&sys, &clf, &opts);
                scope.spawn(move || simulate(sys, clf, &fb, &cfg.x0, cfg.delta, cfg.horizon, opts))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let mut points = Vec::with_capacity(runs.len());
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        let v = verdict(
            &run,
            cfg.big_r,
            cfg.r,
            cfg.r_star,
            certificate.as_ref().map(|c| c.reaching_time),
        )?;
        let terminal = run
            .mean_norm_between(0.8 * cfg.horizon, cfg.horizon)
            .expect("terminal window holds samples");
        let decay = certificate.as_ref().map(|c| samplewise_decay_check(&run, c));
        points.push(SweepPoint {
            eta: cfg.eta_sweep[i],
            eps_x: cfg.eps_for(i),
            run,
            verdict: v,
            terminal_mean_norm: terminal,
            decay,
        });
    }
    Ok(SweepResult {
        points,
        certificate,
        certificate_error,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_run_csv(path: &Path, run: &SampleHoldRun, clf: &Clf) -> Result<()> {
    let n = run.samples[0].state.len();
    let m = run.samples[0].input.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|i| format!("u_{i}")));
    header.extend(["V", "V_alpha_lo", "V_alpha_hi", "eps_achieved", "eta_achieved"].map(String::from));
    w.write_record(&header)?;
    let sub = run.substeps;
    for (k, s) in run.samples.iter().enumerate() {
        let mut row: Vec<String> = vec![s.t.to_string()];
        row.extend(s.state.iter().map(f64::to_string));
        row.extend(s.input.iter().map(f64::to_string));
        for v in [s.value, s.envelope_lower, s.envelope_upper, s.eps_achieved, s.eta_achieved] {
            row.push(v.to_string());
        }
        w.write_record(&row)?;
        // interior substeps of the period that starts here
        if let (Some(dense), true) = (&run.dense_states, k + 1 < run.samples.len()) {
            for (t, x) in &dense[k * sub + 1..(k + 1) * sub] {
                let mut row: Vec<String> = vec![t.to_string()];
                row.extend(x.iter().map(f64::to_string));
                row.extend(s.input.iter().map(f64::to_string));
                row.push(clf.value(x).to_string());
                row.extend(std::iter::repeat_n(String::new(), 4));
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_events_csv(path: &Path, run: &SampleHoldRun) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "t", "event", "detail"])?;
    for e in &run.events {
        w.write_record([e.k.to_string(), e.t.to_string(), e.kind.to_string(), e.detail.clone()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_plot_csv(path: &Path, run: &SampleHoldRun, clf: &Clf) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "norm_x", "V"])?;
    let trace: Vec<(f64, &[f64])> = match &run.dense_states {
        Some(d) => d.iter().map(|(t, x)| (*t, x.as_slice())).collect(),
        None => run.samples.iter().map(|s| (s.t, s.state.as_slice())).collect(),
    };
    for (t, x) in trace {
        w.write_record([t.to_string(), norm(x).to_string(), clf.value(x).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "eta",
        "eps_x",
        "terminal_mean_norm",
        "first_entry_time",
        "settled_time",
        "stayed",
        "bounded",
        "case1_samples",
        "case1_strict_decrease_fraction",
        "min_decay_amount",
        "max_decay_amount",
        "budget_shortfalls",
    ])?;
    for p in &sweep.points {
        let d = p.decay.as_deref().unwrap_or(&[]);
        let min = d.iter().map(|r| r.amount).reduce(f64::min);
        let max = d.iter().map(|r| r.amount).reduce(f64::max);
        w.write_record([
            p.eta.to_string(),
            p.eps_x.to_string(),
            p.terminal_mean_norm.to_string(),
            fmt_opt(p.verdict.entered_at),
            fmt_opt(p.verdict.settled_at),
            p.verdict.stayed.to_string(),
            p.verdict.bounded.to_string(),
            d.len().to_string(),
            fmt_opt(p.strict_decrease_fraction()),
            fmt_opt(min),
            fmt_opt(max),
            p.run.shortfall_count().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes all artifacts of a sweep; returns the files written.
pub fn write_outputs(cfg: &ExperimentConfig, sweep: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    let clf = clf_by_name(&cfg.clf_name, cfg.decay_coefficient)?;
    let mut files = Vec::new();
    for p in &sweep.points {
        let label = eta_label(p.eta);
        let run_path = dir.join(format!("run_eta_{label}.csv"));
        write_run_csv(&run_path, &p.run, &clf)?;
        let ev_path = dir.join(format!("run_eta_{label}_events.csv"));
        write_events_csv(&ev_path, &p.run)?;
        let plot_path = dir.join(format!("plot_eta_{label}.csv"));
        write_plot_csv(&plot_path, &p.run, &clf)?;
        files.extend([run_path, ev_path, plot_path]);
    }
    let summary = dir.join("summary.csv");
    write_summary(&summary, sweep)?;
    files.push(summary);
    Ok(files)
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dense: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.dense |= self.dense;
    }
}

/// `run <config>`: sweep, write artifacts, return the sweep for reporting.
pub fn run_experiment(config: &Path, overrides: &Overrides) -> Result<(ExperimentConfig, SweepResult)> {
    let mut cfg = ExperimentConfig::load(config)?;
    overrides.apply(&mut cfg);
    let (_, _) = cfg.resolve()?;
    prepare_dir(&cfg.output_dir)?;
    let sweep = run_sweep(&cfg)?;
    write_outputs(&cfg, &sweep, &cfg.output_dir)?;
    Ok((cfg, sweep))
}

/// `certify <config>`: writes `certificate.txt` and `certificate_report.txt`.
pub fn emit_certificate(config: &Path, overrides: &Overrides) -> Result<(MarginCertificate, PathBuf)> {
    let mut cfg = ExperimentConfig::load(config)?;
    overrides.apply(&mut cfg);
    let (sys, clf) = cfg.resolve()?;
    let cert = build_certificate(&sys, &clf, cfg.big_r, cfg.r, &cfg.certificate_options())?;
    prepare_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join("certificate.txt");
    fs::write(&path, cert.to_kv())?;
    fs::write(cfg.output_dir.join("certificate_report.txt"), cert.report())?;
    Ok((cert, path))
}

/// One line of the self-test report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick deterministic property checks over every layer.
pub fn selftest() -> Vec<Check> {
    use crate::clf::{nonholonomic_clf, quadratic_clf};
    use crate::infconv::{check_eps_subgradient, check_taylor, envelope_auto, verify_localization, verify_sandwich};
    use crate::sampling::QuasiSampler;
    use crate::systems::single_integrator;

    let mut out = Vec::new();
    let mut record = |name, check: &dyn Fn() -> Result<(bool, String)>| {
        let (passed, detail) = check().unwrap_or_else(|e| (false, e.to_string()));
        out.push(Check { name, passed, detail });
    };
    let opts = EnvelopeOptions::default();
    let q = quadratic_clf(1.0);
    let v = nonholonomic_clf(0.01);

    record("quadratic envelope oracle", &|| {
        let mut s = QuasiSampler::new(2, 11);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x: Vec<f64> = s.next_in_unit_ball().iter().map(|c| 2.0 * c).collect();
            let e = envelope_auto(&q, &x, 0.1, 1e-6, q.value(&x), &opts)?;
            let exact = q.value(&x) / 1.02;
            if !(e.lower_bound <= exact + 1e-12 && exact <= e.upper_value + 1e-12) {
                return Ok((false, format!("bracket misses oracle at {x:?}")));
            }
            worst = worst.max(e.epsilon_achieved);
        }
        Ok((worst <= 1e-6, format!("max gap {worst:e}")))
    });

    record("minimizer localization and sandwich", &|| {
        let mut s = QuasiSampler::new(3, 12);
        for _ in 0..20 {
            let x = s.next_in_unit_ball();
            let vx = v.value(&x);
            let e = envelope_auto(&v, &x, 0.05, 1e-6, vx, &opts)?;
            if !verify_localization(&e, vx) {
                return Ok((false, format!("localization fails at {x:?}")));
            }
            let l2 = verify_sandwich(&q, &x, 0.01, 1e-3, 3.0, None, &opts)?;
            if !l2.holds {
                return Ok((false, format!("sandwich fails at {x:?}")));
            }
        }
        Ok((true, "20 points".into()))
    });

    record("Taylor and eps-subgradient inequalities", &|| {
        let mut s = QuasiSampler::new(6, 13);
        for _ in 0..10 {
            let p = s.next_cube();
            let x = p[..3].to_vec();
            let e = envelope_auto(&v, &x, 0.1, 1e-6, v.value(&x), &opts)?;
            let t = check_taylor(&e, &v, 0.1 * p[3], &p[3..], &opts)?;
            let z = check_eps_subgradient(&e, &v, &p[3..]);
            if !(t.holds && z.holds) {
                return Ok((false, format!("violation at {x:?}")));
            }
        }
        Ok((true, "10 draws".into()))
    });

    record("RK4 fourth-order convergence", &|| {
        let exact = 1f64.sin();
        let err = |n| (crate::ode::integrate(|t, _, o| o[0] = t.cos(), 0.0, &[0.0], 1.0, n)[0] - exact).abs();
        let ratio = err(4) / err(8);
        Ok(((12.0..=20.0).contains(&ratio), format!("error ratio {ratio:.3}")))
    });

    record("scalar certificate", &|| {
        let c = build_certificate(&single_integrator(1), &q, 1.0, 0.1, &CertificateOptions::default())?;
        let ok = (c.v_star - 0.01).abs() <= 1e-3 && (c.r_star - 0.05).abs() <= 1e-3 && c.r_star <= c.r;
        Ok((ok, format!("v* = {}, r* = {}", c.v_star, c.r_star)))
    });

    out
}

/// Sorted key/value view of a certificate file.
pub fn read_certificate(path: &Path) -> Result<BTreeMap<String, f64>> {
    crate::margins::parse_kv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[system]\nname = scalar\nclf = quadratic\n[simulation]\nx0 = 0.8\ndelta = 0.01\nhorizon = 0.2\n[feedback]\nalpha = 0.1\neta_sweep = 1e-2, 1e-6\n[verdict]\nR = 1\nr = 0.1\n";

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = ExperimentConfig::from_ini_str(MINIMAL).unwrap();
        assert_eq!(c.x0, vec![0.8]);
        assert_eq!(c.eta_sweep, vec![1e-2, 1e-6]);
        assert_eq!(c.eps_policy, EpsPolicy::TieToEta);
        assert_eq!(c.substeps, 10);
        assert_eq!(c.r_star, 1.5);
        assert!((c.eps_for(1) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn config_errors() {
        let missing = MINIMAL.replace("alpha = 0.1\n", "");
        assert!(matches!(ExperimentConfig::from_ini_str(&missing), Err(Error::Config(_))));
        let zero_horizon = MINIMAL.replace("horizon = 0.2", "horizon = 0");
        assert!(matches!(ExperimentConfig::from_ini_str(&zero_horizon), Err(Error::Config(_))));
        let typo = MINIMAL.replace("alpha", "alpah");
        assert!(matches!(ExperimentConfig::from_ini_str(&typo), Err(Error::Config(_))));
        let empty = MINIMAL.replace("eta_sweep = 1e-2, 1e-6", "eta_sweep = ");
        assert!(ExperimentConfig::from_ini_str(&empty).is_err());
        let unknown = ExperimentConfig::from_ini_str(&MINIMAL.replace("name = scalar", "name = warp")).unwrap();
        assert!(matches!(unknown.resolve(), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn labels() {
        assert_eq!(eta_label(1e-2), "1e-2");
        assert_eq!(eta_label(1e-8), "1e-8");
    }

    #[test]
    fn scalar_sweep_writes_expected_rows() {
        let cfg = ExperimentConfig::from_ini_str(MINIMAL).unwrap();
        let sweep = run_sweep(&cfg).unwrap();
        assert_eq!(sweep.points.len(), 2);
        let dir = std::env::temp_dir().join(format!("infc-exp-{}", std::process::id()));
        let files = write_outputs(&cfg, &sweep, &dir).unwrap();
        let text = fs::read_to_string(dir.join("run_eta_1e-2.csv")).unwrap();
        assert_eq!(text.lines().count(), 1 + 21);
        assert!(text.starts_with("t,x_1,u_1,V,V_alpha_lo,V_alpha_hi,eps_achieved,eta_achieved"));
        assert!(files.iter().all(|f| f.exists()));
        let _ = fs::remove_dir_all(dir);
    }
}
