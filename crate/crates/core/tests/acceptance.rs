//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=1,5,10` runs a subset; `ACCEPTANCE_WORKERS` caps the
//! worker threads of the parallel sweeps (default: one per core).

use std::process::Command;
use std::time::Instant;

use contpid::cli::{gaussian_grid, gaussian_point_data, gaussian_sweep, GaussianPoint, model_runs, GaussianRow, ModelRun, ModelSweep};
use contpid::copula::{CopulaFamily, CopulaModel};
use contpid::estimator::{
    batch_gradients, log_mean_exp, log_weights, objective_value, rosenblatt_sample, train_with_pair, Batch,
    EstimatorConfig, FittedPair, PhiGradient, Workspace,
};
use contpid::nets::{InferenceNet, ThetaNet};
use contpid::numerics::{derive_seed, RngStream};
use contpid::oracle::{binary_grid_pid, discrete_broja, gaussian_unique_exact, quantize_model, DiscreteJoint};
use contpid::pid::{decompose, PidReport, Units};
use contpid::pseudoobs::pseudo_observations;
use contpid::simgen::{
    gen_gaussian_triple, simulate_network, te_matrix, GaussianTriple, ModelKind, NetworkSpec,
};
use contpid::stats::spearman;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    std::env::var("ACCEPTANCE_WORKERS").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
}

fn selected(id: u32) -> bool {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').any(|s| s.trim() == id.to_string()),
        Err(_) => true,
    }
}

fn m1_sweep() -> ModelSweep {
    ModelSweep {
        kind: ModelKind::M1,
        w1: 0.5,
        rho12: 0.3,
        w2_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
        runs: 3,
        samples: 3000,
        direct_u2: false,
    }
}

fn m2_sweep() -> ModelSweep {
    ModelSweep {
        kind: ModelKind::M2,
        direct_u2: true,
        ..m1_sweep()
    }
}

/// Per-w2 mean of `f(report)`, normalized by I(Y:(X1,X2)) per run.
fn normalized_curve(runs: &[ModelRun], grid: &[f64], f: impl Fn(&ModelRun) -> f64) -> Vec<f64> {
    grid.iter()
        .map(|&w2| {
            let g: Vec<f64> = runs
                .iter()
                .filter(|r| r.w2 == w2)
                .map(|r| if r.report.i_y_x12 > 0.0 { f(r) / r.report.i_y_x12 } else { 0.0 })
                .collect();
            g.iter().sum::<f64>() / g.len() as f64
        })
        .collect()
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len()).max_by(|&i, &j| xs[i].total_cmp(&xs[j])).unwrap()
}

fn fmt_curve(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

// ---- 1, 2 ----

fn gaussian_rows() -> Vec<GaussianRow> {
    let points = gaussian_grid(&[0.2, 0.4, 0.6, 0.8], &[0.0, 0.2, 0.4, 0.6], None, 0).unwrap();
    gaussian_sweep(&points, 3000, &EstimatorConfig::default(), workers(), false).unwrap()
}

/// Closed form at the pair copulas fitted to the row's own data, when both
/// are Gaussian or independent. Separates sampling error from estimator error.
fn fitted_closed_form(r: &GaussianRow) -> Option<f64> {
    let point = GaussianPoint {
        triple: GaussianTriple::new(r.rho1, r.rho2, r.rho12).ok()?,
        seed: r.seed,
    };
    let p = pseudo_observations(&gaussian_point_data(&point, 3000).ok()?).ok()?;
    let f = FittedPair::fit(&p).ok()?;
    let rho = |m: &CopulaModel| match m.family {
        CopulaFamily::Gaussian => Some(m.theta),
        CopulaFamily::Independence => Some(0.0),
        _ => None,
    };
    Some(gaussian_unique_exact(rho(&f.c_y1)?, rho(&f.c_y2)?))
}

fn print_rows(rows: &[GaussianRow]) {
    for r in rows {
        let fitted = fitted_closed_form(r).map_or("n/a".to_string(), |v| format!("{:+.4}", r.u1_estimate - v));
        println!(
            "    rho1 {:.1} rho2 {:.1}: estimate {:.4} exact {:.4} error {:+.4} (vs closed form at fitted copulas {fitted})",
            r.rho1, r.rho2, r.u1_estimate, r.u1_exact, r.error
        );
    }
}

fn c1(rows: &[GaussianRow]) -> Outcome {
    print_rows(rows);
    let worst = rows.iter().map(|r| r.error.abs()).fold(0.0, f64::max);
    outcome(worst <= 0.03, format!("max |U1 - exact| = {worst:.4} nats (tolerance 0.03)"))
}

fn c2(rows: &[GaussianRow]) -> Outcome {
    let low = rows.iter().map(|r| r.error).fold(f64::INFINITY, f64::min);
    outcome(low >= -0.02, format!("min (U1 - exact) = {low:+.4} nats (must be >= -0.02)"))
}

// ---- 3 ----

/// P(X >= k) for X ~ Binomial(n, 1/2).
fn binomial_upper_tail(n: u64, k: u64) -> f64 {
    let mut c = 1.0f64;
    let mut total = 0.0;
    for i in 0..=n {
        if i >= k {
            total += c;
        }
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    total / 2f64.powi(n as i32)
}

fn c3() -> Outcome {
    let pair = FittedPair {
        c_y1: CopulaModel::new(CopulaFamily::Gaussian, 0.8).unwrap(),
        c_y2: CopulaModel::new(CopulaFamily::Gaussian, 0.4).unwrap(),
    };
    // a partly trained state, so the proposal is neither exact nor arbitrary
    let cfg = EstimatorConfig {
        iterations: 200,
        window: 20,
        seed: 3,
        ..Default::default()
    };
    let fit = train_with_pair(&pair, &cfg).unwrap();
    let (net, inf): (&ThetaNet, &InferenceNet) = (&fit.theta_net, &fit.inference_net);
    let a_values = [1usize, 5, 20, 50];
    let seeds = 50;
    let outer = 10_000;
    let a_max = *a_values.last().unwrap();
    // nested draws: the A-sample bound of each outer sample uses the first A
    // of one shared set of inner draws
    let mut neg_b2 = vec![vec![0.0; seeds]; a_values.len()];
    for s in 0..seeds {
        let mut rng = RngStream::new(derive_seed(1000, s as u64));
        for _ in 0..outer {
            let x = rosenblatt_sample(&pair, net, [rng.uniform(), rng.uniform(), rng.uniform()]);
            let eps: Vec<f64> = (0..a_max).map(|_| rng.uniform()).collect();
            let lw = log_weights(&pair, &net.params, &inf.params, x.u1, x.u2, &eps);
            for (k, &a) in a_values.iter().enumerate() {
                neg_b2[k][s] += log_mean_exp(&lw[..a]) / outer as f64;
            }
        }
    }
    let means: Vec<f64> = neg_b2.iter().map(|v| v.iter().sum::<f64>() / seeds as f64).collect();
    let mut pass = means.windows(2).all(|w| w[1] >= w[0]);
    let mut parts = Vec::new();
    for k in 0..a_values.len() - 1 {
        let wins = (0..seeds).filter(|&s| neg_b2[k + 1][s] > neg_b2[k][s]).count() as u64;
        let p = binomial_upper_tail(seeds as u64, wins);
        pass &= p < 0.01;
        parts.push(format!("A {}->{}: {wins}/{seeds} up, p = {p:.1e}", a_values[k], a_values[k + 1]));
    }
    outcome(pass, format!("mean -B2 = [{}]; {}", fmt_curve(&means), parts.join("; ")))
}

// ---- 4 ----

fn random_problem(seed: u64) -> (FittedPair, Vec<f64>, Vec<f64>, Batch) {
    use CopulaFamily::*;
    let mut rng = RngStream::new(derive_seed(4040, seed));
    let families = [
        (Gaussian, 0.6),
        (Gaussian, -0.4),
        (Clayton, 1.5),
        (Gumbel, 1.7),
        (Frank, -4.0),
        (Clayton180, 0.8),
        (Independence, 0.0),
    ];
    let mut pick = || {
        let (f, t) = families[rng.index(families.len())];
        CopulaModel::new(f, t).unwrap()
    };
    let pair = FittedPair {
        c_y1: pick(),
        c_y2: pick(),
    };
    let mut theta = ThetaNet::init(&mut rng).params;
    for p in theta.iter_mut() {
        *p += 0.4 * rng.normal();
    }
    let mut phi = InferenceNet::init(&mut rng).params;
    for p in phi.iter_mut() {
        *p += 0.2 * rng.normal();
    }
    let batch = Batch::draw(&mut rng, 3, 4);
    (pair, theta, phi, batch)
}

fn c4() -> Outcome {
    let h = 1e-5;
    let (mut checked, mut worst, mut bad) = (0usize, 0.0f64, 0usize);
    let mut ws = Workspace::new();
    for seed in 0..100 {
        let (pair, theta, phi, batch) = random_problem(seed);
        let g = batch_gradients(&pair, &theta, &phi, &batch, PhiGradient::Naive, &mut ws);
        let f = |t: &[f64], p: &[f64]| objective_value(&pair, t, p, &batch);
        let mut check = |got: f64, fd: f64| {
            if got.abs() > 1e-6 {
                let rel = ((got - fd) / got).abs();
                checked += 1;
                worst = worst.max(rel);
                if rel > 1e-4 {
                    bad += 1;
                }
            }
        };
        for i in 0..theta.len() {
            let (mut p, mut q) = (theta.clone(), theta.clone());
            p[i] += h;
            q[i] -= h;
            check(g.theta[i], (f(&p, &phi) - f(&q, &phi)) / (2.0 * h));
        }
        for i in 0..phi.len() {
            let (mut p, mut q) = (phi.clone(), phi.clone());
            p[i] += h;
            q[i] -= h;
            check(g.phi[i], (f(&theta, &p) - f(&theta, &q)) / (2.0 * h));
        }
    }
    outcome(
        bad == 0,
        format!("{checked} coordinates over 100 configurations, worst relative error {worst:.2e}, {bad} above 1e-4"),
    )
}

// ---- 5 ----

fn binary(f: impl Fn(usize, usize) -> usize) -> DiscreteJoint {
    let mut p = vec![0.0; 8];
    for a in 0..2 {
        for b in 0..2 {
            p[(f(a, b) * 2 + a) * 2 + b] += 0.25;
        }
    }
    DiscreteJoint::new(2, 2, 2, p).unwrap()
}

fn c5() -> Outcome {
    let start = Instant::now();
    let xor = discrete_broja(&binary(|a, b| a ^ b)).unwrap().in_units(Units::Bits);
    let and_table = binary(|a, b| a & b);
    let and = discrete_broja(&and_table).unwrap().in_units(Units::Bits);
    let grid = binary_grid_pid(&and_table, 100).unwrap().in_units(Units::Bits);
    let xor_ok = (xor.s - 1.0).abs() <= 1e-6 && [xor.u1, xor.u2, xor.r].iter().all(|t| t.abs() <= 1e-6);
    let and_ok = (grid.r - 0.3113).abs() <= 1e-3
        && (grid.s - 0.5).abs() <= 1e-3
        && (and.r - grid.r).abs() <= 1e-3
        && (and.s - grid.s).abs() <= 1e-3
        && and.u1 <= 1e-3
        && and.u2 <= 1e-3;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        xor_ok && and_ok && secs < 1.0,
        format!(
            "XOR S = {:.6} bits; AND R = {:.4} S = {:.4} U1 = {:.1e} U2 = {:.1e} bits (grid R = {:.4} S = {:.4}); {secs:.3} s",
            xor.s, and.r, and.s, and.u1, and.u2, grid.r, grid.s
        ),
    )
}

// ---- 6, 7, 8 ----

fn c6(m1: &[ModelRun], m2: &[ModelRun]) -> Outcome {
    let grid = m1_sweep().w2_grid;
    let s = normalized_curve(m1, &grid, |r| r.report.s);
    let r = normalized_curve(m1, &grid, |r| r.report.r);
    let u2 = normalized_curve(m2, &grid, |r| r.report.u2);
    println!("    M1 S/I  {}", fmt_curve(&s));
    println!("    M1 R/I  {}", fmt_curve(&r));
    println!("    M2 U2/I {}", fmt_curve(&u2));
    let nearest = (0..grid.len())
        .min_by(|&i, &j| (grid[i] - 0.5).abs().total_cmp(&(grid[j] - 0.5).abs()))
        .unwrap();
    let worst_u2 = u2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pass = argmax(&s) == nearest && argmax(&r) == nearest && worst_u2 <= 0.1;
    outcome(
        pass,
        format!(
            "M1 argmax S/I at w2 = {}, R/I at w2 = {} (want {}); M2 max U2/I = {worst_u2:.4} (limit 0.1)",
            grid[argmax(&s)],
            grid[argmax(&r)],
            grid[nearest]
        ),
    )
}

fn c7(m1: &[ModelRun]) -> Outcome {
    let grid = m1_sweep().w2_grid;
    let discrete: Vec<_> = grid
        .iter()
        .map(|&w2| discrete_broja(&quantize_model(ModelKind::M1, 0.5, w2, 0.3, 16, 3).unwrap()).unwrap())
        .collect();
    let norm = |f: &dyn Fn(&contpid::oracle::DiscretePid) -> f64| -> Vec<f64> {
        discrete.iter().map(|d| f(d) / d.i_y_x12).collect()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    let terms: [(&str, Box<dyn Fn(&PidReport) -> f64>, Vec<f64>); 3] = [
        ("S", Box::new(|r: &PidReport| r.s), norm(&|d| d.s)),
        ("R", Box::new(|r: &PidReport| r.r), norm(&|d| d.r)),
        ("U1", Box::new(|r: &PidReport| r.u1), norm(&|d| d.u1)),
    ];
    for (name, f, disc) in terms.iter() {
        let cont = normalized_curve(m1, &grid, |r| f(&r.report));
        let rho = spearman(&cont, disc);
        println!("    {name:<2} continuous {}", fmt_curve(&cont));
        println!("    {name:<2} discrete   {}", fmt_curve(disc));
        pass &= rho >= 0.8;
        parts.push(format!("{name}: {rho:.3}"));
    }
    outcome(pass, format!("Spearman rank correlation {} (each must be >= 0.8)", parts.join(", ")))
}

fn c8(m2: &[ModelRun]) -> Outcome {
    let grid = m2_sweep().w2_grid;
    let mut worst: f64 = 0.0;
    let mut worst_run: f64 = 0.0;
    for &w2 in &grid {
        let g: Vec<&ModelRun> = m2.iter().filter(|r| r.w2 == w2).collect();
        let n = g.len() as f64;
        let direct = g.iter().map(|r| r.u2_direct.unwrap()).sum::<f64>() / n;
        let indirect = g.iter().map(|r| r.report.u2).sum::<f64>() / n;
        println!("    w2 {w2:.1}: U2 direct {direct:.4} indirect {indirect:.4}");
        worst = worst.max((direct - indirect).abs());
        for r in g {
            worst_run = worst_run.max((r.u2_direct.unwrap() - r.report.u2).abs());
        }
    }
    outcome(
        worst <= 0.05,
        format!("max |U2 direct - U2 indirect| = {worst:.4} nats over grid means (limit 0.05); largest single run {worst_run:.4}"),
    )
}

// ---- 9 ----

fn c9() -> Outcome {
    let series = simulate_network(&NetworkSpec::default()).unwrap();
    let rep = te_matrix(&series, &EstimatorConfig::default(), workers()).unwrap();
    let k = rep.names.len();
    let mut worst: f64 = 0.0;
    for i in 0..k {
        println!(
            "    {:<3} TE {}  residual {}",
            rep.names[i],
            fmt_curve(&rep.te[i]),
            fmt_curve(&rep.residual[i])
        );
        for j in 0..k {
            worst = worst.max(rep.residual[i][j].abs());
        }
    }
    let block = |src: std::ops::Range<usize>, dst: std::ops::Range<usize>| {
        let mut v = Vec::new();
        for i in src {
            for j in dst.clone() {
                v.push(rep.te[i][j]);
            }
        }
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (xy, yx) = (block(0..3, 3..6), block(3..6, 0..3));
    outcome(
        worst <= 0.05 && xy > yx,
        format!("max |TE - (S + U1)| = {worst:.4} nats (limit 0.05); mean TE X->Y {xy:.4} vs Y->X {yx:.4}"),
    )
}

// ---- 10 ----

fn strip_timing(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    if let Some(o) = v.as_object_mut() {
        o.remove("timing");
    }
    v
}

fn c10() -> Outcome {
    let fast = EstimatorConfig {
        iterations: 60,
        window: 10,
        batch_size: 32,
        inner_samples: 8,
        seed: 9,
        ..Default::default()
    };
    let mut same = Vec::new();

    let data = gen_gaussian_triple(&GaussianTriple::new(0.7, 0.3, 0.2).unwrap(), 500, 5).unwrap();
    same.push(("decompose", decompose(&data, &fast).unwrap().report == decompose(&data, &fast).unwrap().report));

    let pts = gaussian_grid(&[0.6], &[0.2], None, 4).unwrap();
    same.push((
        "gaussian sweep",
        gaussian_sweep(&pts, 400, &fast, 2, false).unwrap() == gaussian_sweep(&pts, 400, &fast, 1, false).unwrap(),
    ));

    let sweep = ModelSweep {
        w2_grid: vec![0.2, 0.6],
        runs: 2,
        samples: 300,
        ..m2_sweep()
    };
    same.push(("model sweep", model_runs(&sweep, &fast, 2).unwrap() == model_runs(&sweep, &fast, 1).unwrap()));

    let spec = NetworkSpec {
        n_record: 3200,
        t_burn: 50.0,
        n_y: 20,
        ..Default::default()
    };
    let s1 = simulate_network(&spec).unwrap();
    same.push(("network simulation", s1 == simulate_network(&spec).unwrap()));
    let sub = contpid::simgen::TimeSeries {
        names: s1.names[..2].to_vec(),
        channels: s1.channels[..2].to_vec(),
    };
    same.push(("te matrix", te_matrix(&sub, &fast, 2).unwrap() == te_matrix(&sub, &fast, 1).unwrap()));

    // the binary, end to end
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.csv");
    contpid::cli::write_dataset(&input, &data).unwrap();
    let input = input.to_str().unwrap();
    let bin = env!("CARGO_BIN_EXE_contpid");
    let cmds: [&[&str]; 2] = [
        &[
            "estimate", "--input", input, "--iterations", "60", "--window", "10", "--batch-size", "32", "--inner-samples",
            "8", "--seed", "11", "--direct-u2",
        ],
        &["quantize", "--model", "m2", "--w2", "0.4"],
    ];
    for args in cmds {
        let a = Command::new(bin).args(args).output().unwrap();
        let b = Command::new(bin).args(args).output().unwrap();
        let equal = a.status.success()
            && if args[0] == "estimate" {
                strip_timing(&a.stdout) == strip_timing(&b.stdout)
            } else {
                a.stdout == b.stdout
            };
        same.push((args[0], equal));
    }

    let failed: Vec<&str> = same.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} repeated jobs reproduced exactly", same.len())
        } else {
            format!("differing output: {}", failed.join(", "))
        },
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        if !selected(id) {
            return;
        }
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} criterion {id} ({name}): {} [{secs:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o, secs));
    };

    let timed = |label: &str, f: &mut dyn FnMut() -> Vec<ModelRun>| {
        let start = Instant::now();
        let out = f();
        println!("  ({label}: {:.1} s)", start.elapsed().as_secs_f64());
        out
    };
    let rows = if selected(1) || selected(2) {
        let start = Instant::now();
        let rows = gaussian_rows();
        println!("  (Gaussian grid: {:.1} s)", start.elapsed().as_secs_f64());
        rows
    } else {
        Vec::new()
    };
    run(1, "Gaussian agreement", &mut || c1(&rows));
    run(2, "upper-bound property", &mut || c2(&rows));
    run(3, "bound monotone in A", &mut c3);
    run(4, "gradient correctness", &mut c4);
    run(5, "discrete oracle exactness", &mut c5);

    let w = workers();
    let m1 = if selected(6) || selected(7) {
        timed("M1 sweep", &mut || model_runs(&m1_sweep(), &EstimatorConfig::default(), w).unwrap())
    } else {
        Vec::new()
    };
    let m2 = if selected(6) || selected(8) {
        timed("M2 sweep with direct U2", &mut || model_runs(&m2_sweep(), &EstimatorConfig::default(), w).unwrap())
    } else {
        Vec::new()
    };
    run(6, "model sweeps", &mut || c6(&m1, &m2));
    run(7, "discrete-continuous agreement", &mut || c7(&m1));
    run(8, "direct/indirect consistency", &mut || c8(&m2));
    run(9, "transfer-entropy identity", &mut c9);
    run(10, "determinism", &mut c10);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" (criteria {failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
