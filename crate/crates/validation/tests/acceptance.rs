//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use aiofl_core::metrics::{iau, isu, itae, opi};
use aiofl_core::observer::error_matrix;
use aiofl_core::plant::PlantState;
use aiofl_core::tuner::{ga_optimize, GaConfig, SearchSpace};
use aiofl_core::{
    check_relative_degree, lyapunov_validate, preset, rk4_step, slfjm_default_params, Error, Eso, ObserverConfig,
    ObserverVariant, OpiWeights, RunRecord, Sample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(failures: Vec<String>, ok_detail: String) -> Outcome {
    if failures.is_empty() {
        Outcome { pass: true, detail: ok_detail }
    } else {
        Outcome { pass: false, detail: failures.join("; ") }
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str, failures: &mut Vec<String>) {
    if elapsed.as_secs_f64() >= limit_s {
        failures.push(format!("{what} took {elapsed:.2?}, limit {limit_s} s"));
    }
}

fn relative_degree() -> Outcome {
    let t0 = Instant::now();
    let p = slfjm_default_params();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples: Vec<PlantState> =
        (0..100).map(|_| PlantState(std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))).collect();
    let mut f = Vec::new();
    let rep = match check_relative_degree(&p, &samples, 1e-6) {
        Ok(r) => r,
        Err(e) => return Outcome { pass: false, detail: e.to_string() },
    };
    let hand = p.km * p.kg * p.ks / (p.rm * p.jh * p.jl);
    if rep.rho != 4 {
        f.push(format!("rho = {}", rep.rho));
    }
    if rep.residuals.len() != 3 || rep.residuals.iter().any(|r| *r >= 1e-6) {
        f.push(format!("residuals {:?}", rep.residuals));
    }
    for c in [rep.final_coefficient, rep.final_range.0, rep.final_range.1] {
        if ((c - hand) / hand).abs() >= 1e-6 {
            f.push(format!("final coefficient {c} vs {hand}"));
        }
    }
    within(t0.elapsed(), 1.0, "check", &mut f);
    verdict(
        f,
        format!(
            "rho=4, max residual {:.1e}, LgLf3h={:.4} (hand {:.4}), {:.2?}",
            rep.residuals.iter().fold(0.0f64, |a, b| a.max(*b)),
            rep.final_coefficient,
            hand,
            t0.elapsed()
        ),
    )
}

/// Integrator chain driven by `f_T = sin t` under a LESO. Returns the
/// largest plant-state estimation error after `settle` and the steady-state
/// peak of the extended-state error over the last two periods.
fn chain_errors(omega0: f64, settle: f64) -> (f64, f64) {
    let cfg = ObserverConfig {
        rho: 4,
        omega0,
        a: vec![5.0, 10.0, 10.0, 5.0, 1.0],
        b0: 1.0,
        variant: ObserverVariant::Linear,
    };
    let eso = Eso::new(cfg).unwrap();
    let dt = 1e-4;
    let tf = 10.0 + 4.0 * std::f64::consts::PI;
    let steps = (tf / dt).round() as usize;
    // [x1..x4, xi1..xi5]
    let mut s = [0.0f64; 9];
    let mut state_err = 0.0f64;
    let mut ext_err = 0.0f64;
    let rhs = |t: f64, s: &[f64; 9]| {
        let mut d = [0.0; 9];
        d[0] = s[1];
        d[1] = s[2];
        d[2] = s[3];
        d[3] = t.sin();
        eso.derivative_into(&s[4..9], s[0], 0.0, &mut d[4..9]);
        d
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        if t >= settle {
            for i in 0..4 {
                state_err = state_err.max((s[i] - s[4 + i]).abs());
            }
        }
        if t >= 10.0 {
            ext_err = ext_err.max((t.sin() - s[8]).abs());
        }
        if k < steps {
            s = rk4_step(rhs, t, &s, dt).unwrap();
        }
    }
    (state_err, ext_err)
}

fn observer_convergence() -> Outcome {
    let t0 = Instant::now();
    let mut f = Vec::new();
    let (e50, _) = chain_errors(50.0, 2.0);
    if e50 >= 1e-2 {
        f.push(format!("state-estimate error after 2 s at omega0=50 is {e50:.3e}"));
    }
    let peaks: Vec<f64> = [25.0, 50.0, 100.0, 200.0].iter().map(|&w| chain_errors(w, 2.0).1).collect();
    if !peaks.windows(2).all(|w| w[1] < w[0]) {
        f.push(format!("extended-state peaks not strictly decreasing: {peaks:?}"));
    }
    within(t0.elapsed(), 10.0, "suite", &mut f);
    verdict(
        f,
        format!(
            "max |x-xi| after 2 s = {e50:.2e} at omega0=50; f_T error peaks {:?}, {:.2?}",
            peaks.iter().map(|p| format!("{p:.2e}")).collect::<Vec<_>>(),
            t0.elapsed()
        ),
    )
}

type Mat5 = [[f64; 5]; 5];

fn mat_mul(a: &Mat5, b: &Mat5) -> Mat5 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..5).map(|k| a[i][k] * b[k][j]).sum()))
}

/// `P = ∫₀^∞ e^{Aᵀt} e^{At} dt`, by RK4 on `Ẏ = AᵀY + YA`, `Y(0) = I`.
fn lyapunov_by_quadrature(a: &Mat5) -> Mat5 {
    let at: Mat5 = std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]));
    let field = |y: &Mat5| -> Mat5 {
        let l = mat_mul(&at, y);
        let r = mat_mul(y, a);
        std::array::from_fn(|i| std::array::from_fn(|j| l[i][j] + r[i][j]))
    };
    let axpy = |y: &Mat5, h: f64, k: &Mat5| -> Mat5 {
        std::array::from_fn(|i| std::array::from_fn(|j| y[i][j] + h * k[i][j]))
    };
    let h = 1e-3;
    let mut y: Mat5 = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }));
    let mut p = [[0.0; 5]; 5];
    for _ in 0..80_000 {
        let k1 = field(&y);
        let k2 = field(&axpy(&y, h / 2.0, &k1));
        let k3 = field(&axpy(&y, h / 2.0, &k2));
        let k4 = field(&axpy(&y, h, &k3));
        // integral of Y over the step by the same Runge–Kutta weights
        let y2 = axpy(&y, h / 2.0, &k1);
        let y3 = axpy(&y, h / 2.0, &k2);
        let y4 = axpy(&y, h, &k3);
        for i in 0..5 {
            for j in 0..5 {
                p[i][j] += h / 6.0 * (y[i][j] + 2.0 * y2[i][j] + 2.0 * y3[i][j] + y4[i][j]);
                y[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
    }
    p
}

fn lyapunov_certificate() -> Outcome {
    let t0 = Instant::now();
    let a = [5.0, 10.0, 10.0, 5.0, 1.0];
    let mut f = Vec::new();
    let rep = lyapunov_validate(&a, 50.0, 1.0).unwrap();
    if !rep.hurwitz {
        f.push("binomial coefficients reported non-Hurwitz".into());
    }
    let Some(p) = rep.p.as_ref() else {
        return Outcome { pass: false, detail: "no P returned".into() };
    };
    if !(rep.lambda_min > 0.0) {
        f.push(format!("lambda_min = {}", rep.lambda_min));
    }
    let t_solve = t0.elapsed();
    let am = error_matrix(&a);
    let a5: Mat5 = std::array::from_fn(|i| std::array::from_fn(|j| am[(i, j)]));
    let oracle = lyapunov_by_quadrature(&a5);
    let scale = oracle.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut diff = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            diff = diff.max((p[(i, j)] - oracle[i][j]).abs() / scale);
        }
    }
    if diff >= 1e-8 {
        f.push(format!("P differs from quadrature oracle by {diff:.2e} (relative)"));
    }
    // leading principal minors of the oracle, by Gaussian elimination
    let mut m = oracle;
    for k in 0..5 {
        if !(m[k][k] > 0.0) {
            f.push(format!("oracle P not positive definite (pivot {k} = {})", m[k][k]));
            break;
        }
        for i in k + 1..5 {
            let r = m[i][k] / m[k][k];
            for j in k..5 {
                m[i][j] -= r * m[k][j];
            }
        }
    }
    for w in [25.0, 50.0, 100.0, 200.0] {
        let b1 = lyapunov_validate(&a, w, 1.0).unwrap().bound_constant;
        let b2 = lyapunov_validate(&a, 2.0 * w, 1.0).unwrap().bound_constant;
        if b2 != b1 / 2.0 {
            f.push(format!("bound at {} is {b2}, half of {b1} expected", 2.0 * w));
        }
    }
    within(t_solve, 1.0, "validator", &mut f);
    verdict(
        f,
        format!(
            "hurwitz, lambda in [{:.4}, {:.4}], |P - oracle|/|P| = {diff:.1e}, exact halving, {t_solve:.2?}",
            rep.lambda_min, rep.lambda_max
        ),
    )
}

enum RunOutcome {
    Finished { itae: f64, isu: f64, record: RunRecord },
    Diverged { t: f64 },
}

fn run_preset(name: &str, f: &mut Vec<String>) -> RunOutcome {
    let p = preset(name).unwrap();
    let t0 = Instant::now();
    let res = p.run();
    within(t0.elapsed(), 60.0, name, f);
    match res {
        Ok(record) => {
            let h = p.metrics.tf;
            RunOutcome::Finished { itae: itae(&record, h).unwrap(), isu: isu(&record, h).unwrap(), record }
        }
        Err(Error::Diverged { t, .. }) => RunOutcome::Diverged { t },
        Err(e) => panic!("{name}: {e}"),
    }
}

fn scenario_orderings() -> Outcome {
    let mut f = Vec::new();
    let mut notes = Vec::new();
    for (s, check_isu) in [(1, true), (2, false), (3, true)] {
        let l = run_preset(&format!("s{s}-leso"), &mut f);
        let n = run_preset(&format!("s{s}-inleso"), &mut f);
        match (&l, &n) {
            (RunOutcome::Finished { itae: il, isu: ul, .. }, RunOutcome::Finished { itae: in_, isu: un, .. }) => {
                notes.push(format!("s{s}: ITAE {in_:.2} vs {il:.2}, ISU {un:.2} vs {ul:.2}"));
                if !(in_ < il) {
                    f.push(format!("s{s}: INLESO ITAE {in_:.2} not below LESO {il:.2}"));
                }
                if check_isu && !(un < ul) {
                    f.push(format!("s{s}: INLESO ISU {un:.2} not below LESO {ul:.2}"));
                }
            }
            _ => {
                for (tag, o) in [("leso", &l), ("inleso", &n)] {
                    if let RunOutcome::Diverged { t } = o {
                        f.push(format!("s{s}-{tag} diverged at t={t:.3}"));
                    }
                }
            }
        }
    }
    verdict(f, notes.join("; "))
}

fn tracking_sanity() -> Outcome {
    let mut f = Vec::new();
    let mut notes = Vec::new();
    for name in ["s1-leso", "s1-inleso"] {
        match run_preset(name, &mut f) {
            RunOutcome::Finished { record, .. } => {
                let e = record.samples.iter().filter(|s| s.t >= 2.0).map(|s| (s.y - s.r).abs()).fold(0.0, f64::max);
                notes.push(format!("{name} max|y-r| after 2 s = {e:.3}"));
                if e >= 4.5 {
                    f.push(format!("{name}: max |y-r| after 2 s is {e:.3} (limit 4.5)"));
                }
            }
            RunOutcome::Diverged { t } => f.push(format!("{name} diverged at t={t:.3}")),
        }
    }
    for name in ["s2-leso", "s2-inleso"] {
        match run_preset(name, &mut f) {
            RunOutcome::Finished { record, .. } => {
                // last time the error is outside the 5% band
                let last_out = record
                    .samples
                    .iter()
                    .filter(|s| s.t >= 10.0 && (s.y - s.r).abs() > 0.05 * 45.0)
                    .map(|s| s.t)
                    .fold(10.0, f64::max);
                notes.push(format!("{name} settles into 5% band by t={last_out:.3}"));
                if last_out > 13.0 {
                    f.push(format!("{name}: still outside the 5% band at t={last_out:.3}"));
                }
            }
            RunOutcome::Diverged { t } => f.push(format!("{name} diverged at t={t:.3}")),
        }
    }
    verdict(f, notes.join("; "))
}

fn synth(tf: f64, dt: f64, err: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> RunRecord {
    let n = (tf / dt).round() as usize;
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            Sample { t, r: 0.0, y: err(t), u: u(t), ..Sample::default() }
        })
        .collect();
    RunRecord { samples }
}

fn metric_oracles() -> Outcome {
    use std::f64::consts::PI;
    let mut f = Vec::new();
    let dt = 1e-3;
    let tp = 2.0 * PI;
    let cases: Vec<(&str, f64, f64)> = vec![
        ("itae y=r", itae(&synth(6.0, dt, |_| 0.0, |_| 0.0), 6.0).unwrap(), 0.0),
        ("itae e=1", itae(&synth(6.0, dt, |_| 1.0, |_| 0.0), 6.0).unwrap(), 18.0),
        ("itae e=sin", itae(&synth(7.0, dt, f64::sin, |_| 0.0), tp).unwrap(), 4.0 * PI),
        ("isu u=0", isu(&synth(6.0, dt, |_| 0.0, |_| 0.0), 6.0).unwrap(), 0.0),
        ("isu u=2", isu(&synth(6.0, dt, |_| 0.0, |_| 2.0), 6.0).unwrap(), 24.0),
        ("iau u=2", iau(&synth(6.0, dt, |_| 0.0, |_| 2.0), 6.0).unwrap(), 12.0),
        ("isu u=sin", isu(&synth(7.0, dt, |_| 0.0, f64::sin), tp).unwrap(), PI),
        ("iau u=sin", iau(&synth(7.0, dt, |_| 0.0, f64::sin), tp).unwrap(), 4.0),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in &cases {
        let e = (got - want).abs();
        worst = worst.max(e);
        if e >= 1e-4 {
            f.push(format!("{name}: {got} vs {want}"));
        }
    }
    let w = OpiWeights::reference(6.0);
    let o = opi(10.0, 2.0, 2.7, &w);
    if o != 1.4 {
        f.push(format!("opi example gave {o:?}, expected 1.4"));
    }
    if opi(0.0, 0.0, 0.0, &w) != 0.0 {
        f.push("opi of zero indices is nonzero".into());
    }
    verdict(f, format!("{} analytic cases, worst error {worst:.1e}; opi = 1.4", cases.len()))
}

fn rk4_order() -> Outcome {
    let err = |h: f64| {
        let n = (1.0 / h).round() as usize;
        let mut x = [1.0];
        for i in 0..n {
            x = rk4_step(|_, x: &[f64; 1]| [-x[0]], i as f64 * h, &x, h).unwrap();
        }
        (x[0] - (-1.0f64).exp()).abs()
    };
    let e = err(1e-3);
    let ratio = err(0.1) / err(0.05);
    let mut f = Vec::new();
    if e >= 1e-10 {
        f.push(format!("error at h=1e-3 is {e:.2e}"));
    }
    if ratio < 14.0 {
        f.push(format!("halving ratio {ratio:.2}"));
    }
    verdict(f, format!("|x(1)-1/e| = {e:.2e} at h=1e-3, halving ratio {ratio:.2}"))
}

fn tuner_sphere() -> Outcome {
    let mut f = Vec::new();
    let mut notes = Vec::new();
    let space = SearchSpace::uniform(5, -5.0, 5.0);
    for seed in [1, 2, 3] {
        let cfg = GaConfig { budget: 5000, seed, ..GaConfig::default() };
        let res = ga_optimize(|x: &[f64]| x.iter().map(|v| v * v).sum(), &space, &cfg).unwrap();
        notes.push(format!("seed {seed}: {:.2e} in {} evals", res.fitness, res.evaluations));
        if !(res.fitness < 1e-3) {
            f.push(format!("seed {seed}: best fitness {}", res.fitness));
        }
        if !res.history.windows(2).all(|w| w[1] <= w[0]) {
            f.push(format!("seed {seed}: history not monotone"));
        }
        if res.evaluations > 5000 {
            f.push(format!("seed {seed}: {} evaluations exceed the budget", res.evaluations));
        }
    }
    verdict(f, notes.join("; "))
}

/// Builds the `aiofl` binary for the current profile and returns its path.
fn aiofl_binary() -> PathBuf {
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let mut build = Command::new(env!("CARGO"));
    build.args(["build", "--quiet", "-p", "aiofl-cli", "--bin", "aiofl"]);
    if profile_dir.file_name().is_some_and(|n| n == "release") {
        build.arg("--release");
    }
    let status = build.current_dir(env!("CARGO_MANIFEST_DIR")).status().expect("spawn cargo");
    assert!(status.success(), "building aiofl failed");
    profile_dir.join(format!("aiofl{}", std::env::consts::EXE_SUFFIX))
}

fn simulate_once(bin: &Path, preset_name: &str, out: &Path) -> (Option<i32>, Option<Vec<u8>>) {
    let status = Command::new(bin)
        .args(["simulate", "--preset", preset_name, "--seed", "7", "--no-plots", "--out"])
        .arg(out)
        .output()
        .expect("spawn aiofl");
    (status.status.code(), std::fs::read(out.join("record.csv")).ok())
}

fn determinism() -> Outcome {
    let bin = aiofl_binary();
    let dir = tempfile::tempdir().unwrap();
    let mut f = Vec::new();
    let mut notes = Vec::new();
    for name in aiofl_core::PRESET_NAMES {
        let (ca, a) = simulate_once(&bin, name, &dir.path().join(format!("{name}-a")));
        let (cb, b) = simulate_once(&bin, name, &dir.path().join(format!("{name}-b")));
        match (a, b) {
            (Some(a), Some(b)) if a == b && ca == cb => {
                let rows = a.iter().filter(|&&c| c == b'\n').count() - 1;
                notes.push(format!("{name}: identical ({rows} rows, exit {})", ca.unwrap_or(-1)));
            }
            (Some(_), Some(_)) => f.push(format!("{name}: records or exit codes differ")),
            _ => f.push(format!("{name}: record.csv missing")),
        }
    }
    verdict(f, notes.join("; "))
}

fn main() {
    let criteria: [Check; 9] = [
        ("relative degree", relative_degree),
        ("observer convergence on the integrator chain", observer_convergence),
        ("Lyapunov validator", lyapunov_certificate),
        ("scenario orderings", scenario_orderings),
        ("tracking sanity", tracking_sanity),
        ("metric oracles", metric_oracles),
        ("integrator order", rk4_order),
        ("tuner on the sphere", tuner_sphere),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {id} ({name}): {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
