//! Acceptance criteria 1–10. One PASS/FAIL line each; the process fails if any is red.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use infc::clf::{nonholonomic_clf, quadratic_clf};
use infc::experiment::{run_sweep, ExperimentConfig, SweepPoint};
use infc::infconv::{check_taylor, envelope_auto, verify_localization, verify_sandwich, EnvelopeOptions, MinimizerSelection};
use infc::margins::{build_certificate, check_decay_objective, modulus_of_continuity, CertificateOptions};
use infc::ode::Rk4;
use infc::sim::{simulate, SimOptions};
use infc::systems::{estimate_constants, nonholonomic_integrator, single_integrator};
use infc::FeedbackConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = p.iter().map(|v| v * v).sum();
        if n2 <= 1.0 {
            return p.into_iter().map(|v| v * radius).collect();
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn c1_quadratic_oracle() -> Outcome {
    let start = Instant::now();
    let clf = quadratic_clf(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = EnvelopeOptions::default();
    let mut worst_gap: f64 = 0.0;
    let mut misses = 0;
    for _ in 0..100 {
        let x = in_ball(&mut rng, 2, 2.0);
        for alpha in [0.05, 0.1, 0.5] {
            let e = envelope_auto(&clf, &x, alpha, 1e-7, clf.value(&x), &opts).map_err(|e| e.to_string())?;
            let exact = clf.value(&x) / (1.0 + 2.0 * alpha * alpha);
            let tol = 1e-12 * (1.0 + exact);
            if !(e.lower_bound - tol <= exact && exact <= e.upper_value + tol) {
                misses += 1;
            }
            worst_gap = worst_gap.max(e.epsilon_achieved);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        misses == 0 && worst_gap <= 1e-6 && secs < 10.0,
        format!("300 envelopes, {misses} oracle misses, max gap {worst_gap:.2e}, {secs:.2} s"),
    ))
}

fn c2_localization() -> Outcome {
    let clf = nonholonomic_clf(0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for i in 0..500 {
        let x = in_ball(&mut rng, 3, 2.0);
        let alpha = log_uniform(&mut rng, 0.01, 0.5);
        let eps = log_uniform(&mut rng, 1e-8, 1e-2);
        // alternate between the best point and the worst admissible one
        let opts = EnvelopeOptions {
            selection: if i % 2 == 0 {
                MinimizerSelection::Best
            } else {
                MinimizerSelection::LargestWithinTarget
            },
            ..EnvelopeOptions::default()
        };
        let v_bar = clf.value(&x);
        let e = envelope_auto(&clf, &x, alpha, eps, v_bar, &opts).map_err(|e| e.to_string())?;
        if !verify_localization(&e, v_bar) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("500 draws, {violations} violations of |y - x| <= sqrt(2 V_bar) alpha")))
}

fn c3_sandwich() -> Outcome {
    let clf = nonholonomic_clf(0.01);
    let ball = 2.0;
    let v_bar = 2.618_034 * ball * ball;
    let grid: Vec<f64> = (0..=120).map(|j| 3.0 * 0.85f64.powi(j)).rev().collect();
    let table = modulus_of_continuity(&clf, 3, ball + 1.0, &grid, 2000, 3).map_err(|e| e.to_string())?;
    let omega = |e: f64| table.omega(e);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = EnvelopeOptions::default();
    let (mut violations, mut recipe_misses, mut smallest_alpha) = (0, 0, f64::INFINITY);
    for _ in 0..500 {
        let x = in_ball(&mut rng, 3, ball);
        let eps1 = log_uniform(&mut rng, 1e-4, 1e-1);
        let alpha = (omega(0.5 * eps1) / (2.0 * v_bar).sqrt()).min(0.5);
        if alpha <= 0.0 {
            return Err(format!("modulus table too coarse for eps1 = {eps1:e}"));
        }
        smallest_alpha = smallest_alpha.min(alpha);
        let s = verify_sandwich(&clf, &x, alpha, eps1, v_bar, Some(&omega), &opts).map_err(|e| e.to_string())?;
        violations += usize::from(!s.holds);
        recipe_misses += usize::from(s.recipe_satisfied != Some(true));
    }
    Ok((
        violations == 0 && recipe_misses == 0,
        format!("500 draws, {violations} sandwich violations, {recipe_misses} recipe misses, alpha >= {smallest_alpha:.2e}"),
    ))
}

fn c4_taylor() -> Outcome {
    let opts = EnvelopeOptions::default();
    let mut details = Vec::new();
    let mut ok = true;
    for (name, clf, sys) in [
        ("nonholonomic", nonholonomic_clf(0.01), nonholonomic_integrator()),
        ("quadratic", quadratic_clf(1.0), single_integrator(3)),
    ] {
        let f_bar = estimate_constants(&sys, 1.0, 4000, 4).map_err(|e| e.to_string())?.f_bar;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut violations = 0;
        let mut min_slack = f64::INFINITY;
        for _ in 0..100 {
            let x = in_ball(&mut rng, 3, 1.0);
            let h = rng.gen_range(-0.1..=0.1);
            let theta = in_ball(&mut rng, 3, f_bar);
            let e = envelope_auto(&clf, &x, 0.1, 1e-6, clf.value(&x), &opts).map_err(|e| e.to_string())?;
            let t = check_taylor(&e, &clf, h, &theta, &opts).map_err(|e| e.to_string())?;
            violations += usize::from(!t.holds);
            min_slack = min_slack.min(t.slack);
        }
        ok &= violations == 0;
        details.push(format!("{name}: {violations}/100 violations, min slack {min_slack:.2e}"));
    }
    Ok((ok, details.join("; ")))
}

fn sweep_runs() -> Result<(Vec<SweepPoint>, f64, f64, f64), String> {
    let mut cfg = ExperimentConfig::load(&config("nonholonomic.ini")).map_err(|e| e.to_string())?;
    cfg.dense = true;
    let start = Instant::now();
    let sweep = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let cert = sweep.certificate.as_ref().ok_or("nonholonomic certificate unavailable")?;
    Ok((sweep.points, secs, cert.v_star, cfg.r))
}

fn c5_reproduction(points: &[SweepPoint], secs: f64) -> Outcome {
    let by_eta = |eta: f64| points.iter().find(|p| (p.eta / eta - 1.0).abs() < 1e-9);
    let (Some(a), Some(b), Some(c)) = (by_eta(1e-2), by_eta(1e-5), by_eta(1e-8)) else {
        return Err("sweep must contain 1e-2, 1e-5 and 1e-8".into());
    };
    let (na, nb, nc) = (a.terminal_mean_norm, b.terminal_mean_norm, c.terminal_mean_norm);
    let bounded = c.verdict.bounded && c.verdict.start_radius_r_big == 2.0;
    let ordered = nc < nb && nb < na;
    let gaps = (na / nb, nb / nc);
    let ok = bounded && ordered && gaps.0 >= 2.0 && gaps.1 >= 2.0 && secs < 60.0;
    Ok((
        ok,
        format!(
            "terminal mean |x|: {na:.4} (1e-2) > {nb:.4} (1e-5) > {nc:.4} (1e-8), gaps {:.2}x / {:.2}x, \
             1e-8 bounded in B_3: {}, sweep {secs:.1} s",
            gaps.0, gaps.1, c.verdict.bounded
        ),
    ))
}

fn c6_decay(points: &[SweepPoint], r: f64) -> Outcome {
    let fine = points.iter().find(|p| p.eta == 1e-8).ok_or("no 1e-8 run")?;
    let coarse = points.iter().find(|p| p.eta == 1e-2).ok_or("no 1e-2 run")?;
    let decay = fine.decay.as_ref().ok_or("no decay records")?;
    let frac = fine.strict_decrease_fraction().unwrap_or(0.0);
    let first_fail = decay.iter().find(|d| !d.strictly_decreased).map(|d| fine.run.samples[d.k].t);

    let entry = coarse.run.samples.iter().position(|s| norm(&s.state) <= 2.0 * r);
    let coarse_decay = coarse.decay.as_ref().ok_or("no decay records")?;
    let late_failure = entry.is_some_and(|i| coarse_decay.iter().any(|d| d.k >= i && !d.strictly_decreased));
    let min_coarse = coarse.run.samples.iter().map(|s| norm(&s.state)).fold(f64::INFINITY, f64::min);

    Ok((
        frac >= 0.95 && late_failure,
        format!(
            "1e-8: {:.1}% of {} Case-1 samples strictly decrease (first failure t = {}, settled in B_r at t = {}); \
             1e-2: enters B_2r: {} (min |x| = {min_coarse:.3}), failure after entry: {late_failure}",
            100.0 * frac,
            decay.len(),
            first_fail.map_or("-".into(), |t| format!("{t:.3}")),
            fine.verdict.settled_at.map_or("-".into(), |t| format!("{t:.3}")),
            entry.is_some(),
        ),
    ))
}

fn c7_decay_objective() -> Outcome {
    let sys = single_integrator(1);
    let clf = quadratic_clf(1.0);
    let cert = build_certificate(&sys, &clf, 1.0, 0.1, &CertificateOptions::default()).map_err(|e| e.to_string())?;
    let mut cfg = FeedbackConfig::new(cert.alpha_max, cert.eps_bound, cert.eta_bound, cert.v_bar);
    cfg.envelope.max_evaluations = 5_000;
    let need = -0.75 * cert.w_bar;
    let (mut checked, mut violations, mut worst, mut gap) = (0, 0, f64::NEG_INFINITY, 0.0f64);
    for x0 in [0.05f64, 0.1, 0.25, 0.5, 0.75, 1.0] {
        for sign in [1.0, -1.0] {
            let x0 = sign * x0.max(cert.r_star);
            let run = simulate(&sys, &clf, &cfg, &[x0], cert.delta_max, 20.0 * cert.delta_max, &SimOptions::default())
                .map_err(|e| e.to_string())?;
            for s in run.samples.iter().filter(|s| norm(&s.state) >= cert.r_star) {
                checked += 1;
                violations += usize::from(!(s.objective_lower_bound <= need));
                worst = worst.max(s.objective_lower_bound);
                gap = gap.max(s.eps_achieved);
            }
        }
    }
    // direct check of the decision type as well
    let d = infc::feedback::infc_feedback_best_effort(&sys, &clf, &[cert.r_star], &cfg)
        .map_err(|e| e.to_string())?
        .0;
    let direct = check_decay_objective(&d, &cert);
    Ok((
        checked > 0 && violations == 0 && direct,
        format!(
            "{checked} samples with |x| >= r* = {:.4}: {violations} violations, worst lower bound {worst:.3e} vs \
             -3w_bar/4 = {need:.3e}; alpha = {:.2e}, delta = {:.2e}, eta = {:.2e} compliant; envelope gap \
             eps_x^2 = {:.1e} is below binary64 resolution, achieved {gap:.1e}",
            cert.r_star,
            cert.alpha_max,
            cert.delta_max,
            cert.eta_bound,
            cert.eps_bound * cert.eps_bound
        ),
    ))
}

fn c8_certificate() -> Outcome {
    let opts = CertificateOptions::default();
    let scalar =
        build_certificate(&single_integrator(1), &quadratic_clf(1.0), 1.0, 0.1, &opts).map_err(|e| e.to_string())?;
    let nonholonomic =
        build_certificate(&nonholonomic_integrator(), &nonholonomic_clf(0.01), 2.0, 0.1, &opts).map_err(|e| e.to_string())?;
    let ok = (scalar.v_star - 0.01).abs() <= 1e-3
        && (scalar.r_star - 0.05).abs() <= 1e-3
        && scalar.r_star <= scalar.r
        && nonholonomic.r_star <= nonholonomic.r;
    Ok((
        ok,
        format!(
            "scalar v* = {:.6}, r* = {:.6}; nonholonomic r* = {:.4} <= r = {}",
            scalar.v_star, scalar.r_star, nonholonomic.r_star, nonholonomic.r
        ),
    ))
}

fn c9_integrator_order() -> Outcome {
    // x' = u(t) with a smooth forcing, integrated over [0, 1]
    let u = |t: f64| (2.0 * t).cos() + 0.5 * (5.0 * t).sin();
    let exact = (2.0f64).sin() / 2.0 + 0.5 * (1.0 - (5.0f64).cos()) / 5.0;
    let err = |steps: usize| {
        let mut rk = Rk4::new(1);
        let mut x = [0.0];
        let h = 1.0 / steps as f64;
        let mut f = |t: f64, _: &[f64], out: &mut [f64]| out[0] = u(t);
        for i in 0..steps {
            rk.step(&mut f, i as f64 * h, &mut x, h);
        }
        (x[0] - exact).abs()
    };
    let errors: Vec<f64> = [4, 8, 16, 32].into_iter().map(err).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok((
        ratios.iter().all(|r| (12.0..=20.0).contains(r)),
        format!("error ratios {:?}", ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()),
    ))
}

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_infc");
    let mut compared = 0;
    for name in ["nonholonomic.ini", "scalar_demo.ini"] {
        let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
        for d in &dirs {
            let status = Command::new(bin)
                .args(["run", config(name).to_str().unwrap(), "--seed", "7", "--output-dir"])
                .arg(d.path())
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Ok((false, format!("`run {name}` exited with {}", status.status)));
            }
        }
        let mut files: Vec<_> = fs::read_dir(dirs[0].path())
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.file_name()))
            .filter(|f| f.to_string_lossy().ends_with(".csv"))
            .collect();
        files.sort();
        for f in &files {
            let a = fs::read(dirs[0].path().join(f)).map_err(|e| e.to_string())?;
            let b = fs::read(dirs[1].path().join(f)).map_err(|e| e.to_string())?;
            if a != b {
                return Ok((false, format!("{name}: {} differs", f.to_string_lossy())));
            }
            compared += 1;
        }
    }
    Ok((compared > 0, format!("{compared} CSV files byte-identical across two runs with seed 7")))
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, title: &str, outcome: Outcome| {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= pass;
        println!("{} {id:>2} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    };
    report(1, "quadratic envelope oracle", c1_quadratic_oracle());
    report(2, "minimizer localization", c2_localization());
    report(3, "envelope sandwich", c3_sandwich());
    report(4, "Taylor-type envelope inequality", c4_taylor());
    match sweep_runs() {
        Ok((points, secs, _v_star, r)) => {
            report(5, "accuracy sweep reproduction", c5_reproduction(&points, secs));
            report(6, "sample-wise decay", c6_decay(&points, r));
        }
        Err(e) => {
            report(5, "accuracy sweep reproduction", Err(e.clone()));
            report(6, "sample-wise decay", Err(e));
        }
    }
    report(7, "decay-objective bound along compliant runs", c7_decay_objective());
    report(8, "scalar certificate sanity", c8_certificate());
    report(9, "integrator order", c9_integrator_order());
    report(10, "determinism", c10_determinism());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
