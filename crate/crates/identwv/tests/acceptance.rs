//! End-to-end acceptance checks. Each test writes one
//! `criterion N: PASS|FAIL ...` line with its wall time to stderr, then asserts.
//! The line goes straight to the stderr handle so it shows up even when the
//! test harness captures output.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use identwv::bench::{run_benchmark, BenchConfig, SummaryRow};
use identwv::sim::{simulate, simulate_from, SimulationSpec};
use identwv_core::ident::{coefficient_vote, final_recovery_with_scale, occurrence_vote};
use identwv_core::linalg::{least_squares, select};
use identwv_core::solver::solve_sparse_matrix;
use identwv_core::weak::weak_integrals;
use identwv_core::{
    add_noise, assemble, default_reference_set, identify, nsr_sigma, score, Coefficients, Dataset, EquationId,
    FeatureLibrary, Grid, NoiseSpec, SparseSolveParams, TestFunctionConfig, TestFunctionGrid, TestFunctionParams,
    VotingConfig,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(n: u32, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let within = elapsed <= budget;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} {detail} [{:.1}s of {}s]\n", elapsed.as_secs_f64(), budget.as_secs());
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(within, "criterion {n} over time budget: {:.1}s", elapsed.as_secs_f64());
}

fn default_identify(data: &Dataset, eq: EquationId, solver_seed: u64) -> identwv_core::Score {
    let lib = FeatureLibrary::default_for(eq.spatial_dims()).unwrap();
    let tfs = TestFunctionGrid::for_library(data.grid(), &lib, &TestFunctionConfig::default()).unwrap();
    let refs = default_reference_set(eq.spatial_dims()).unwrap();
    let solver = SparseSolveParams { seed: solver_seed, ..Default::default() };
    let result = identify(data, &lib, &tfs, &refs, &solver, &VotingConfig::default()).unwrap();
    score(&eq.true_coefficients(&lib).unwrap(), &result.coefficients).unwrap()
}

#[test]
fn criterion_1_noiseless_exactness() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for eq in [EquationId::Heat, EquationId::TransportDiffusion, EquationId::BurgersDiffusion, EquationId::Kdv] {
        let data = simulate(&SimulationSpec::default_for(eq)).unwrap();
        let mut exact = 0;
        let mut worst: f64 = 0.0;
        for seed in 0..5 {
            let s = default_identify(&data, eq, seed);
            if s.exact_support() && s.e2 <= 1e-2 {
                exact += 1;
            }
            worst = worst.max(s.e2);
        }
        pass &= exact == 5;
        detail.push(format!("{}: {exact}/5 max_e2={worst:.1e}", eq.as_str()));
    }
    report(1, pass, start.elapsed(), Duration::from_secs(120), &detail.join(", "));
}

fn kdv_bench(method: &str, levels: &str) -> Vec<SummaryRow> {
    let text = format!("equation = \"kdv\"\nlevels = [{levels}]\ntrials = 20\nseed = 2024\nmethod = \"{method}\"\n");
    let cfg = BenchConfig::parse(&text).unwrap();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let result = run_benchmark(&cfg, jobs).unwrap();
    assert!(result.trials.iter().all(|t| t.ok()));
    result.summary
}

#[test]
fn criterion_2_kdv_noise_robustness() {
    let start = Instant::now();
    let text = "equation = \"kdv\"\nlevels = [0.3]\ntrials = 20\nseed = 2024\n";
    let cfg = BenchConfig::parse(text).unwrap();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let at_03 = run_benchmark(&cfg, jobs).unwrap();
    let exact = at_03.trials.iter().filter(|t| t.tpr == 1.0 && t.ppv == 1.0).count();
    let exact_rate = exact as f64 / at_03.trials.len() as f64;

    let wv = kdv_bench("ident_wv", "0.2, 0.3");
    let uniform = kdv_bench("uniform", "0.2, 0.3");
    let mut dominates = true;
    let mut detail = vec![format!("exact@0.3={exact}/20")];
    for (w, u) in wv.iter().zip(&uniform) {
        dominates &= w.mean_tpr >= u.mean_tpr && w.mean_ppv >= u.mean_ppv;
        detail.push(format!(
            "nsr {}: wv tpr/ppv {:.3}/{:.3} vs uniform {:.3}/{:.3}",
            w.level, w.mean_tpr, w.mean_ppv, u.mean_tpr, u.mean_ppv
        ));
    }
    let pass = exact_rate >= 0.6 && dominates;
    report(2, pass, start.elapsed(), Duration::from_secs(600), &detail.join(", "));
}

#[test]
fn criterion_3_weak_residual_convergence() {
    let start = Instant::now();
    // One fine trajectory; coarser levels are exact subsamples of it. The test
    // functions keep their physical size, so their cell counts double per level.
    let spec = SimulationSpec { n_x: 1024, n_t: 1024, oversample_x: 2, oversample_t: 16, ..SimulationSpec::default_for(EquationId::Kdv) };
    let fine = simulate(&spec).unwrap();
    let lib = FeatureLibrary::build(3, 2, 1, false).unwrap();
    let truth = EquationId::Kdv.true_coefficients(&lib).unwrap();
    let mut errors = Vec::new();
    for stride in [8, 4, 2, 1] {
        let data = fine.subsample(stride, stride).unwrap();
        let m = 16 * 8 / stride;
        let params = TestFunctionParams { halfwidth_x: m, halfwidth_t: m, stride_x: m, stride_t: m, order_x: 5, order_t: 5 };
        let tfs = TestFunctionGrid::place_uniform(data.grid(), params).unwrap();
        let sys = assemble(&data, &lib, &tfs).unwrap();
        errors.push(sys.residual(&truth).unwrap().amax());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.len() == 3 && ratios.iter().all(|&r| r >= 8.0);
    let detail = format!(
        "max|e| {} ratios {}",
        errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
        ratios.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>().join(" ")
    );
    report(3, pass, start.elapsed(), Duration::from_secs(60), &detail);
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn restricted_residual(a: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> f64 {
    least_squares(&select(a, None, cols), y).residual_norm()
}

#[test]
fn criterion_4_sparse_solver_oracle() {
    let start = Instant::now();
    let instances = 200;
    let (mut near_optimal, mut noiseless, mut noiseless_exact) = (0, 0, 0);
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + i as u64);
        let l = rng.random_range(5..=10);
        let k = rng.random_range(1..=3);
        let noise = if i % 2 == 0 { 0.0 } else { rng.random_range(0.0..=0.05) };
        let a = DMatrix::from_fn(50, l, |_, _| StandardNormal.sample(&mut rng));
        let mut cols: Vec<usize> = (0..l).collect();
        for j in 0..k {
            let pick = rng.random_range(j..l);
            cols.swap(j, pick);
        }
        let mut planted: Vec<usize> = cols[..k].to_vec();
        planted.sort_unstable();
        let mut x = DVector::zeros(l);
        for &j in &planted {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x[j] = sign * rng.random_range(0.5..2.0);
        }
        let y = &a * &x + DVector::from_fn(50, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise * z
        });

        let sol = solve_sparse_matrix(&a, &y, &vec![1.0; l], &SparseSolveParams::default()).unwrap();
        let support = sol.coefficients.support();
        let got = restricted_residual(&a, &y, &support);
        let best = combinations(l, support.len())
            .iter()
            .map(|c| restricted_residual(&a, &y, c))
            .fold(f64::INFINITY, f64::min);
        if got <= 1.05 * best || got <= 1e-12 * y.norm() {
            near_optimal += 1;
        }
        if noise == 0.0 {
            noiseless += 1;
            if support == planted {
                noiseless_exact += 1;
            }
        }
    }
    let near_rate = near_optimal as f64 / instances as f64;
    let exact_rate = noiseless_exact as f64 / noiseless as f64;
    let pass = near_rate >= 0.95 && exact_rate >= 0.99;
    let detail =
        format!("near-optimal {near_optimal}/{instances}, noiseless exact {noiseless_exact}/{noiseless}");
    report(4, pass, start.elapsed(), Duration::from_secs(60), &detail);
}

#[test]
fn criterion_5_indicator_dual_forms() {
    let start = Instant::now();
    let u = |x: f64, t: f64| 1.0 + 0.5 * (2.0 * PI * x - 3.0 * t).sin() + 0.3 * (4.0 * PI * x + t).cos();
    let u_x = |x: f64, t: f64| PI * (2.0 * PI * x - 3.0 * t).cos() - 1.2 * PI * (4.0 * PI * x + t).sin();
    let u_xx = |x: f64, t: f64| {
        -2.0 * PI * PI * (2.0 * PI * x - 3.0 * t).sin() - 4.8 * PI * PI * (4.0 * PI * x + t).cos()
    };
    let u_t = |x: f64, t: f64| -1.5 * (2.0 * PI * x - 3.0 * t).cos() - 0.3 * (4.0 * PI * x + t).sin();
    type Field<'a> = &'a dyn Fn(f64, f64) -> f64;
    // (u^2)_x, (u^2)_xx, (u^2)_t: β = 2, so u^(β-1) = u. Bump orders are the
    // smallest admissible ones, which makes the quadrature error second order.
    let cases: [(&str, usize, usize, Field); 3] = [("(u^2)_x", 1, 0, &u_x), ("(u^2)_xx", 2, 0, &u_xx), ("(u^2)_t", 0, 1, &u_t)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, alpha, gamma, derivative) in cases {
        let mut on_phi = Vec::new();
        let mut gaps = Vec::new();
        for k in 0..5 {
            let n = 32usize << k;
            let grid = Grid::new_1d(0.0, 1.0, n, 1.0, n).unwrap();
            let data = Dataset::from_fn(grid.clone(), u).unwrap();
            let deriv = Dataset::from_fn(grid.clone(), derivative).unwrap();
            let m = n / 8;
            let params = TestFunctionParams {
                halfwidth_x: m,
                halfwidth_t: m,
                stride_x: m,
                stride_t: m,
                order_x: alpha + 1,
                order_t: gamma + 1,
            };
            let tfs = TestFunctionGrid::place_uniform(&grid, params).unwrap();
            let sign = if (alpha + gamma) % 2 == 1 { -1.0 } else { 1.0 };
            let form_phi: Vec<f64> = weak_integrals(data.values(), &data, &tfs, [alpha, 0], gamma)
                .unwrap()
                .iter()
                .map(|v| 2.0 * v.abs())
                .collect();
            let form_u: Vec<f64> = weak_integrals(deriv.values(), &deriv, &tfs, [0, 0], 0)
                .unwrap()
                .iter()
                .map(|v| 2.0 * (sign * v).abs())
                .collect();
            gaps.push(form_phi.iter().zip(&form_u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            on_phi.push(form_phi);
        }
        // Richardson estimate of the quadrature error of the derivative-on-φ form.
        let measured: Vec<f64> = on_phi
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs() * 4.0 / 3.0).fold(0.0, f64::max))
            .collect();
        let within = gaps.iter().zip(&measured).all(|(g, e)| *g <= 1.25 * e);
        let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
        let about_four = ratios[1..].iter().all(|r| (3.5..=4.5).contains(r));
        pass &= within && about_four;
        detail.push(format!(
            "{name}: gap {:.1e}->{:.1e} ratios {}",
            gaps[0],
            gaps[gaps.len() - 1],
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ")
        ));
    }
    report(5, pass, start.elapsed(), Duration::from_secs(30), &detail.join(", "));
}

#[test]
fn criterion_6_algebraic_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut failures = Vec::new();

    // NSR shift invariance on dyadic data and shifts, so that U + c is exact.
    let grid = Grid::new_1d(0.0, 1.0, 64, 1.0, 32).unwrap();
    for _ in 0..50 {
        let values: Vec<f64> = (0..grid.num_points()).map(|_| rng.random_range(-4096i64..4096) as f64 / 1024.0).collect();
        let data = Dataset::new(grid.clone(), values).unwrap();
        let c = rng.random_range(-(1i64 << 20)..(1i64 << 20)) as f64 / 256.0;
        let level = rng.random_range(0.01..1.0);
        let base = nsr_sigma(&data, level).unwrap();
        if nsr_sigma(&data.shifted(c), level).unwrap().to_bits() != base.to_bits() {
            failures.push(format!("nsr shift c={c}"));
        }
        let spec = NoiseSpec { sigma_nsr: level, seed: 5 };
        let noisy = add_noise(&data, spec).unwrap();
        let noisy_shifted = add_noise(&data.shifted(c), spec).unwrap();
        let same_noise = noisy
            .values()
            .iter()
            .zip(data.values())
            .zip(noisy_shifted.values().iter().zip(data.shifted(c).values()))
            .all(|((n, u), (ns, us))| n - u == ns - us || ((n - u) - (ns - us)).abs() <= 1e-12 * (1.0 + c.abs()));
        if !same_noise {
            failures.push(format!("noise draw shift c={c}"));
        }
    }

    // Rescaled restricted LS equals plain restricted LS.
    let kdv = simulate(&SimulationSpec { n_x: 256, n_t: 256, ..SimulationSpec::default_for(EquationId::Kdv) }).unwrap();
    let lib = FeatureLibrary::default_for(1).unwrap();
    let tfs = TestFunctionGrid::for_library(kdv.grid(), &lib, &TestFunctionConfig::default()).unwrap();
    let sys = assemble(&kdv, &lib, &tfs).unwrap();
    for _ in 0..20 {
        let size = rng.random_range(1..=4);
        let mut c: Vec<usize> = (0..lib.len()).collect();
        for j in 0..size {
            let pick = rng.random_range(j..c.len());
            c.swap(j, pick);
        }
        let mut c = c[..size].to_vec();
        c.sort_unstable();
        let scale: Vec<f64> = (0..lib.len()).map(|_| 10f64.powf(rng.random_range(-6.0..6.0))).collect();
        let (rescaled, _) = final_recovery_with_scale(&sys, &scale, &c).unwrap();
        let plain = least_squares(&select(&sys.w, None, &c), &sys.b);
        let mut direct = Coefficients::zeros(lib.len());
        for (&l, z) in c.iter().zip(&plain.coefficients) {
            direct.0[l] = *z;
        }
        let diff: f64 = rescaled.values().iter().zip(direct.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm: f64 = direct.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        if diff > 1e-10 * norm {
            failures.push(format!("rescaled LS {c:?}: rel {:.1e}", diff / norm));
        }
    }

    // Voting monotonicity and nesting on random subresults.
    for _ in 0..200 {
        let l = rng.random_range(3..12);
        let m = rng.random_range(1..8);
        let subs: Vec<Coefficients> = (0..m)
            .map(|_| {
                Coefficients(
                    (0..l).map(|_| if rng.random_bool(0.4) { rng.random_range(-5.0..5.0) } else { 0.0 }).collect(),
                )
            })
            .collect();
        let (r1, r2) = {
            let a: f64 = rng.random_range(0.0..=1.0);
            let b: f64 = rng.random_range(0.0..=1.0);
            (a.min(b), a.max(b))
        };
        let (v1, v2) = {
            let a: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(0.0..1.0);
            (a.min(b), a.max(b))
        };
        let (_, b_lo) = occurrence_vote(&subs, r1).unwrap();
        let (_, b_hi) = occurrence_vote(&subs, r2).unwrap();
        if !b_hi.iter().all(|j| b_lo.contains(j)) {
            failures.push("rho monotonicity".into());
        }
        let c_lo = coefficient_vote(&subs, &b_lo, v1);
        let c_hi = coefficient_vote(&subs, &b_lo, v2);
        if !c_hi.iter().all(|j| c_lo.contains(j)) {
            failures.push("v monotonicity".into());
        }
        if !c_lo.iter().all(|j| b_lo.contains(j)) || !b_lo.iter().all(|&j| j < l) {
            failures.push("C ⊆ B ⊆ {1..L}".into());
        }
    }

    // Nesting on a full pipeline run.
    let noisy = add_noise(&kdv, NoiseSpec { sigma_nsr: 0.2, seed: 3 }).unwrap();
    let result = identify(
        &noisy,
        &lib,
        &tfs,
        &default_reference_set(1).unwrap(),
        &SparseSolveParams::default(),
        &VotingConfig::default(),
    )
    .unwrap();
    let nested = result.support_c.iter().all(|j| result.support_b.contains(j))
        && result.support_b.iter().all(|&j| j < lib.len())
        && result.coefficients.support().iter().all(|j| result.support_c.contains(j));
    if !nested {
        failures.push("pipeline nesting".into());
    }

    let pass = failures.is_empty();
    let detail = if pass { "all invariants hold".to_string() } else { failures.join("; ") };
    report(6, pass, start.elapsed(), Duration::from_secs(10), &detail);
}

#[test]
fn criterion_7_metric_examples() {
    let start = Instant::now();
    let a = Coefficients(vec![1.0, 0.0, 2.0]);
    let same = score(&a, &a).unwrap();
    let scaled = score(&a, &Coefficients(vec![0.9, 0.0, 1.8])).unwrap();
    let swapped = score(&a, &Coefficients(vec![1.0, 3.0, 0.0])).unwrap();
    let pass = (same.tpr, same.ppv, same.e2) == (1.0, 1.0, 0.0)
        && (scaled.tpr, scaled.ppv) == (1.0, 1.0)
        && (scaled.e2 - 0.1).abs() <= 1e-15
        && (swapped.tpr, swapped.ppv) == (0.5, 0.5);
    let detail = format!("e2(0.9a)={:.17}, swapped tpr/ppv {}/{}", scaled.e2, swapped.tpr, swapped.ppv);
    report(7, pass, start.elapsed(), Duration::from_secs(1), &detail);
}

fn slice(data: &Dataset, n: usize) -> &[f64] {
    let len = data.grid().slice_len();
    &data.values()[n * len..(n + 1) * len]
}

#[test]
fn criterion_8_simulator_fidelity() {
    let start = Instant::now();

    let heat_spec = SimulationSpec::default_for(EquationId::Heat);
    let heat = simulate_from(&heat_spec, |x, _| (2.0 * PI * x).sin()).unwrap();
    let g = heat.grid();
    let decay = (-0.1592 * (2.0 * PI).powi(2) * g.t_max()).exp();
    let heat_err = slice(&heat, g.n_t())
        .iter()
        .enumerate()
        .map(|(i, v)| (v - (2.0 * PI * g.x().point(i)).sin() * decay).abs())
        .fold(0.0, f64::max);

    let tr_spec = SimulationSpec::default_for(EquationId::Transport);
    let tr = simulate(&tr_spec).unwrap();
    let g = tr.grid();
    let (x0, x1) = tr_spec.x_range;
    let period = x1 - x0;
    let mut tr_err: f64 = 0.0;
    for n in 0..=g.n_t() {
        let t = g.time(n);
        for (i, v) in slice(&tr, n).iter().enumerate() {
            let x = (g.x().point(i) - t - x0).rem_euclid(period) + x0;
            let exact = identwv::sim::initial_value(EquationId::Transport, tr_spec.omega, x, 0.0);
            tr_err = tr_err.max((v - exact).abs());
        }
    }

    let kdv = simulate(&SimulationSpec::default_for(EquationId::Kdv)).unwrap();
    let g = kdv.grid();
    let cells = g.x().cells;
    let integral = |n: usize, p: i32| slice(&kdv, n)[..cells].iter().map(|v| v.powi(p)).sum::<f64>() * g.x().step();
    let (mass0, mom0) = (integral(0, 1), integral(0, 2));
    let (mut mass_drift, mut mom_drift): (f64, f64) = (0.0, 0.0);
    for n in 0..=g.n_t() {
        mass_drift = mass_drift.max(((integral(n, 1) - mass0) / mass0).abs());
        mom_drift = mom_drift.max(((integral(n, 2) - mom0) / mom0).abs());
    }

    let pass = heat_err <= 1e-4 && tr_err <= 1e-8 && mass_drift <= 1e-4 && mom_drift <= 1e-4;
    let detail = format!(
        "heat {heat_err:.1e}, transport {tr_err:.1e}, kdv mass {mass_drift:.1e} momentum {mom_drift:.1e}"
    );
    report(8, pass, start.elapsed(), Duration::from_secs(60), &detail);
}

#[test]
fn criterion_9_porous_medium_2d() {
    let start = Instant::now();
    let spec = SimulationSpec::default_for(EquationId::Pm2d);
    let data = simulate(&spec).unwrap();
    assert_eq!((spec.n_x, spec.n_y, spec.n_t), (64, 64, 100));
    assert_eq!(default_reference_set(2).unwrap().len(), 8);
    let s = default_identify(&data, EquationId::Pm2d, 0);
    let pass = s.exact_support() && s.e2 <= 5e-2;
    let detail = format!("tpr {} ppv {} e2 {:.1e}", s.tpr, s.ppv, s.e2);
    report(9, pass, start.elapsed(), Duration::from_secs(300), &detail);
}

fn run_bench_cli(config: &std::path::Path, out: &std::path::Path, jobs: usize) -> Vec<u8> {
    let run = std::process::Command::new(env!("CARGO_BIN_EXE_identwv"))
        .args(["bench", "--config"])
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .args(["--jobs", &jobs.to_string()])
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    std::fs::read(out.join("summary.csv")).unwrap()
}

#[test]
fn criterion_10_bench_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    std::fs::write(
        &config,
        "equation = \"burgers\"\nlevels = [0.0, 0.1, 0.3]\ntrials = 6\nseed = 99\n\n[simulation]\nn_t = 128\n",
    )
    .unwrap();
    let first = run_bench_cli(&config, &dir.path().join("a"), 1);
    let second = run_bench_cli(&config, &dir.path().join("b"), 1);
    let parallel = run_bench_cli(&config, &dir.path().join("c"), 4);
    let pass = !first.is_empty() && first == second && first == parallel;
    let detail = format!("{} bytes, repeat {}, jobs 1 vs 4 {}", first.len(), first == second, first == parallel);
    report(10, pass, start.elapsed(), Duration::from_secs(120), &detail);
}
