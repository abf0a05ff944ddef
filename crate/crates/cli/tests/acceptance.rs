//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p sqsolve-cli --test acceptance -- --nocapture` to
//! see the per-criterion lines. Statistical checks are seeded and therefore
//! deterministic; wall-clock figures are printed but never gated.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqsolve_cli::experiment::{
    fit_log_slope, run_convergence_experiment, run_scaling_experiment, ExperimentMode,
    ExperimentSpec, SolverSpec,
};
use sqsolve_cli::gen::{generate, GeneratorSpec, SpectrumProfile};
use sqsolve_cli::solve::SolverId;
use sqsolve_core::solvers::{
    coord_descent_solve, dual_kaczmarz_solve, dual_kaczmarz_step, kaczmarz_solve, kaczmarz_step,
};
use sqsolve_core::{
    oracle, DescriptionBasis, OversampledAccess, SolverConfig, SparseDescription, VectorSq,
};

fn check(name: &str, pass: bool, details: String, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "[acceptance] {name}: {verdict} ({details}; {:.1}s)",
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "{name}: {details}");
}

fn dense_generator(rows: usize, cols: usize, kappa: f64, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        rows,
        cols,
        profile: SpectrumProfile::Linear { kappa },
        sparsity: None,
        spd: false,
        consistent: true,
        residual: 0.0,
        seed,
    }
}

fn solver_spec(id: SolverId, epsilon: f64) -> SolverSpec {
    SolverSpec {
        id,
        epsilon,
        delta: 0.01,
        iterations: None,
        sample_count: None,
        batch: None,
        early_stop: None,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Criterion 1: randomized Kaczmarz reproduces the (1 - kappa_F^-2)^T rate
/// envelope on a dense 100x50 instance with kappa = 10, within a factor 3,
/// at T = kappa_F^2 and T = 2 kappa_F^2.
#[test]
fn c01_kaczmarz_rate() {
    let started = Instant::now();
    let generator = dense_generator(100, 50, 10.0, 1001);
    let inst = generate(&generator).unwrap();
    let kf_sq = inst.summary.kappa_f * inst.summary.kappa_f;

    let mut details = Vec::new();
    let mut pass = true;
    for factor in [1.0, 2.0] {
        let t = (factor * kf_sq).ceil() as usize;
        let spec = ExperimentSpec {
            generator: generator.clone(),
            solver: SolverSpec {
                iterations: Some(t),
                ..solver_spec(SolverId::Kaczmarz, 0.2)
            },
            trials: 200,
            master_seed: 11,
            mode: ExperimentMode::Convergence,
            output: None,
            format: None,
        };
        let report = run_convergence_experiment(&spec, 4).unwrap();
        let mean_sq = report.summary.mean_squared_error.unwrap();
        let envelope = 3.0 * (1.0 - 1.0 / kf_sq).powi(t as i32);
        pass &= mean_sq <= envelope;
        details.push(format!(
            "T={t}: mean_sq={mean_sq:.4} envelope={envelope:.4}"
        ));
    }
    check("C1 kaczmarz-rate", pass, details.join(", "), started);
}

/// Criterion 2: the sampled dual solver with the prescribed d and T schedules
/// reaches mean squared relative error <= 2 eps^2 on a 30x20 instance.
#[test]
fn c02_sampled_dual_end_to_end() {
    let started = Instant::now();
    let eps = 0.2;
    let spec = ExperimentSpec {
        generator: dense_generator(30, 20, 1.1, 302),
        solver: solver_spec(SolverId::DualSampled, eps),
        trials: 100,
        master_seed: 22,
        mode: ExperimentMode::Convergence,
        output: None,
        format: None,
    };
    let report = run_convergence_experiment(&spec, 4).unwrap();
    let mean_sq = report.summary.mean_squared_error.unwrap();
    let d = report.records[0].d.unwrap();
    let t = report.records[0].t;
    let pass = mean_sq <= 2.0 * eps * eps;
    check(
        "C2 sampled-dual-schedule",
        pass,
        format!(
            "d={d} T={t} mean_sq={mean_sq:.4} bound={:.4}",
            2.0 * eps * eps
        ),
        started,
    );
}

/// Criterion 3: estimator deviation statistics on the fixed seed-0 5x5
/// instance: |empirical mean| <= 4 SE and variance within 1.1x the bound
/// ||A||_F^2 ||x||^2 / (d min_j ||A_{*j}||^2), for d in {10, 100}.
#[test]
fn c03_estimator_statistics() {
    let started = Instant::now();
    let inst = generate(&dense_generator(5, 5, 2.0, 0)).unwrap();
    let msq = Arc::new(inst.matrix.to_matrix_sq().unwrap());
    let mut y = SparseDescription::empty(msq.clone(), DescriptionBasis::MatrixRows);
    y.add(0, 0.9);
    y.add(2, -0.6);
    y.add(4, 0.3);
    let x = y.materialize();
    let bound_scale = msq.frobenius_sq() * norm(&x).powi(2) / msq.min_col_norm_sq();

    let reps = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut pass = true;
    let mut details = Vec::new();
    for d in [10usize, 100] {
        let (mean, var) = oracle::mu_statistics(&msq, 1, &y, d, reps, &mut rng).unwrap();
        let se = (var / reps as f64).sqrt();
        let bound = bound_scale / d as f64;
        pass &= mean.abs() <= 4.0 * se && var <= 1.1 * bound;
        details.push(format!(
            "d={d}: |mean|={:.2e} 4SE={:.2e} var={:.3} bound={:.3}",
            mean.abs(),
            4.0 * se,
            var,
            bound
        ));
    }
    check("C3 estimator-statistics", pass, details.join(", "), started);
}

/// Criterion 4: sampling a length-64 vector matches the exact distribution
/// within total variation 0.02 over 1e5 draws, and the draw sequence is a
/// pure function of the seed.
#[test]
fn c04_sq_distribution() {
    let started = Instant::now();
    let mut seed_rng = ChaCha8Rng::seed_from_u64(64);
    let v: Vec<f64> = (0..64)
        .map(|_| rand::Rng::random::<f64>(&mut seed_rng) * 2.0 - 1.0)
        .collect();
    let sq = VectorSq::build(&v).unwrap();
    let exact = oracle::exact_distribution(&v).unwrap();

    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut counts = vec![0u64; 64];
    let mut first = Vec::with_capacity(draws);
    for _ in 0..draws {
        let i = sq.sample(&mut rng).unwrap();
        counts[i] += 1;
        first.push(i);
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    let tv = oracle::tv_distance(&empirical, &exact).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let second: Vec<usize> = (0..draws).map(|_| sq.sample(&mut rng).unwrap()).collect();
    let deterministic = first == second;

    check(
        "C4 sq-distribution",
        tv <= 0.02 && deterministic,
        format!("tv={tv:.4} deterministic={deterministic}"),
        started,
    );
}

/// Criterion 5: rejection sampling from a solved 10x8 system follows the
/// exact solution distribution (TV <= 0.02 over 1e5 accepted draws), the
/// mean attempt count sits in [phi/2, 2 phi], and the norm estimator at
/// eps = 0.05, delta = 0.01 is within 5% in at least 90 of 100 seeded runs.
#[test]
fn c05_rejection_and_norm() {
    let started = Instant::now();
    let inst = generate(&dense_generator(10, 8, 2.0, 108)).unwrap();
    let msq = Arc::new(inst.matrix.to_matrix_sq().unwrap());
    let summary = &inst.summary;
    let cfg = SolverConfig::new(0.05, summary.kappa, summary.kappa_f, 515);
    let out = dual_kaczmarz_solve(&msq, &inst.b, &cfg, None).unwrap();
    let x = out.description.materialize();
    let x_norm = norm(&x);
    let mut oa = OversampledAccess::build(&out.description).unwrap();
    let phi = oa.phi_given_norm(x_norm);
    oa.set_phi_hat(phi);

    let exact = oracle::exact_distribution(&x).unwrap();
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut counts = vec![0u64; x.len()];
    let mut attempts_total = 0usize;
    for _ in 0..draws {
        let (j, attempts) = oa.rejection_sample_with_attempts(&mut rng).unwrap();
        counts[j] += 1;
        attempts_total += attempts;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    let tv = oracle::tv_distance(&empirical, &exact).unwrap();
    let mean_attempts = attempts_total as f64 / draws as f64;
    let attempts_ok = mean_attempts >= 0.5 * phi && mean_attempts <= 2.0 * phi;

    let mut within = 0;
    let runs = 100;
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(5500 + run);
        let est = oa.estimate_norm(0.05, 0.01, &mut rng).unwrap();
        if (est.value - x_norm).abs() / x_norm <= 0.05 {
            within += 1;
        }
    }

    check(
        "C5 rejection-and-norm",
        tv <= 0.02 && attempts_ok && within >= 90,
        format!(
            "tv={tv:.4} mean_attempts={mean_attempts:.2} phi={phi:.2} norm_hits={within}/{runs}"
        ),
        started,
    );
}

/// Criterion 6: iterations-to-target of the averaged solver scale as
/// kappa^2: the fitted log-log slope over kappa in {2, 5, 10} lies in
/// [1.5, 2.5] on 200x100 dense instances at eps = 0.1. The log-spaced
/// spectrum keeps a constant fraction of the error mass near sigma_min, so
/// the asymptotic rate is what the hitting times measure.
#[test]
fn c06_averaged_scaling() {
    let started = Instant::now();
    let mut generator = dense_generator(200, 100, 2.0, 600);
    generator.profile = SpectrumProfile::Geometric { kappa: 2.0 };
    let spec = ExperimentSpec {
        generator,
        solver: solver_spec(SolverId::AveragedExact, 0.1),
        trials: 15,
        master_seed: 66,
        mode: ExperimentMode::Scaling {
            kappas: vec![2.0, 5.0, 10.0],
            target_error: 0.1,
        },
        output: None,
        format: None,
    };
    let report = run_scaling_experiment(&spec, 4).unwrap();
    let scaling = report.summary.scaling.unwrap();
    let pass = scaling.slope >= 1.5 && scaling.slope <= 2.5;
    let points: Vec<String> = scaling
        .points
        .iter()
        .map(|(k, it)| format!("kappa={k:.1}:iters={it:.0}"))
        .collect();
    check(
        "C6 averaged-scaling",
        pass,
        format!("slope={:.2} [{}]", scaling.slope, points.join(" ")),
        started,
    );
}

/// Criterion 7: on an s = 5 row-sparse instance the per-step inner-product
/// flop count never exceeds 2s and the iterate carries at most s*T nonzeros.
#[test]
fn c07_row_sparse_budgets() {
    let started = Instant::now();
    let s = 5;
    let mut generator = dense_generator(60, 40, 3.0, 700);
    generator.sparsity = Some(s);
    let inst = generate(&generator).unwrap();
    let msq = inst.matrix.to_matrix_sq().unwrap();
    let t = 200;
    let cfg =
        SolverConfig::new(0.2, inst.summary.kappa, inst.summary.kappa_f, 77).with_iterations(t);
    let out = kaczmarz_solve(&msq, &inst.b, &cfg, None).unwrap();

    let max_flops = out.trace.inner_flops.iter().copied().max().unwrap();
    let nnz = out.x.iter().filter(|&&v| v != 0.0).count();
    let pass = msq.row_sparsity() <= s && max_flops <= 2 * s as u64 && nnz <= s * t;
    check(
        "C7 row-sparse-budgets",
        pass,
        format!(
            "row_sparsity={} max_step_flops={max_flops} (cap {}) nnz={nnz} (cap {})",
            msq.row_sparsity(),
            2 * s,
            s * t
        ),
        started,
    );
}

/// Criterion 8: coordinate descent on a diagonally dominant SPD 50x50
/// instance contracts the mean squared error per step within a factor two of
/// 1 - 1/(Tr(A) ||A^-1||), averaged over 500 seeds.
#[test]
fn c08_spd_coordinate_descent() {
    let started = Instant::now();
    let mut generator = dense_generator(50, 50, 1.3, 800);
    generator.spd = true;
    let inst = generate(&generator).unwrap();
    let msq = inst.matrix.to_matrix_sq().unwrap();
    let summary = &inst.summary;
    let dense = inst.matrix.to_dense();
    let x_star = oracle::min_norm_least_squares(&dense, &inst.b).unwrap();

    let theory = 1.0 / (summary.trace.unwrap() * summary.inv_norm);
    let t = (2.0 / theory).ceil() as usize;
    let trials = 500;
    let mut mean_curve = vec![0.0f64; t + 1];
    for trial in 0..trials as u64 {
        let cfg =
            SolverConfig::new(0.2, summary.kappa, summary.kappa_f, 8000 + trial).with_iterations(t);
        let out = coord_descent_solve(&msq, &inst.b, &cfg, Some(&x_star)).unwrap();
        mean_curve[0] += norm(&x_star).powi(2);
        for (k, e) in out.trace.error_norms.iter().enumerate() {
            mean_curve[k + 1] += e * e;
        }
    }
    let half = t / 2;
    let rate = (mean_curve[t] / mean_curve[half]).powf(1.0 / (t - half) as f64);
    let decrement = 1.0 - rate;
    let pass = decrement >= 0.5 * theory && decrement <= 2.0 * theory;
    check(
        "C8 spd-coordinate-descent",
        pass,
        format!("decrement={decrement:.5} theory={theory:.5} T={t}"),
        started,
    );
}

/// Criterion 9: the measured oversampling ratio phi stays within 50 T^2 on
/// consistent systems (basic sampled dual solver, 10-seed grid), and the
/// averaged variant's phi grows with kappa with fitted exponent at most 6.
#[test]
fn c09_phi_diagnostics() {
    let started = Instant::now();
    let spec = ExperimentSpec {
        generator: dense_generator(16, 8, 1.5, 900),
        solver: solver_spec(SolverId::DualSampled, 0.25),
        trials: 10,
        master_seed: 99,
        mode: ExperimentMode::Convergence,
        output: None,
        format: None,
    };
    let report = run_convergence_experiment(&spec, 4).unwrap();
    let mut basic_ok = true;
    let mut worst = 0.0f64;
    for r in &report.records {
        let phi = r.phi.unwrap();
        let cap = 50.0 * (r.t as f64) * (r.t as f64);
        worst = worst.max(phi / cap);
        basic_ok &= phi <= cap;
    }

    // Averaged variant over a kappa grid; phi fitted against kappa.
    let mut points = Vec::new();
    for (i, &kappa) in [2.0f64, 4.0, 8.0].iter().enumerate() {
        let spec = ExperimentSpec {
            generator: dense_generator(20, 10, kappa, 910 + i as u64),
            solver: solver_spec(SolverId::Averaged, 0.35),
            trials: 3,
            master_seed: 991 + i as u64,
            mode: ExperimentMode::Convergence,
            output: None,
            format: None,
        };
        let report = run_convergence_experiment(&spec, 3).unwrap();
        let mean_phi =
            report.records.iter().filter_map(|r| r.phi).sum::<f64>() / report.records.len() as f64;
        points.push((report.records[0].kappa, mean_phi));
    }
    let exponent = fit_log_slope(&points);
    let pass = basic_ok && exponent <= 6.0;
    let grid: Vec<String> = points
        .iter()
        .map(|(k, p)| format!("kappa={k:.1}:phi={p:.1}"))
        .collect();
    check(
        "C9 phi-diagnostics",
        pass,
        format!(
            "max phi/(50T^2)={worst:.3} averaged exponent={exponent:.2} [{}]",
            grid.join(" ")
        ),
        started,
    );
}

/// Criterion 10: primal and dual Kaczmarz produce identical iterates (to
/// 1e-10 entrywise) when driven by the same row sequence, on 20 random
/// instances.
#[test]
fn c10_primal_dual_equivalence() {
    let started = Instant::now();
    let mut max_dev = 0.0f64;
    for inst_idx in 0..20u64 {
        let rows = 6 + (inst_idx as usize % 5) * 4;
        let cols = 4 + (inst_idx as usize % 4) * 3;
        let inst = generate(&dense_generator(rows, cols, 3.0, 1000 + inst_idx)).unwrap();
        let msq = Arc::new(inst.matrix.to_matrix_sq().unwrap());
        let mut x = vec![0.0; cols];
        let mut y = SparseDescription::empty(msq.clone(), DescriptionBasis::MatrixRows);
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + inst_idx);
        for _ in 0..80 {
            let r = msq.sample_row(&mut rng).unwrap();
            kaczmarz_step(&msq, &inst.b, &mut x, r).unwrap();
            dual_kaczmarz_step(&inst.b, &mut y, r).unwrap();
            let xd = y.materialize();
            for j in 0..cols {
                max_dev = max_dev.max((x[j] - xd[j]).abs());
            }
        }
    }
    check(
        "C10 primal-dual-equivalence",
        max_dev <= 1e-10,
        format!("max entrywise deviation={max_dev:.2e}"),
        started,
    );
}
