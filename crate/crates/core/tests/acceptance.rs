//! Acceptance checks. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities and then asserts the verdict.

use obstacle_slowing::analysis::stats::{self, ks_pvalue, ks_statistic, poisson_chi_square};
use obstacle_slowing::analysis::{check_invariants, InvariantSpec};
use obstacle_slowing::config::ExperimentConfig;
use obstacle_slowing::ensemble::InitialLaw;
use obstacle_slowing::experiment::{convergence_table, run, Command, RunOptions};
use obstacle_slowing::kinetic::{
    backward_expectation, lambda_f, solve_forward, CollisionKernel, SpeedGrid,
};
use obstacle_slowing::meso::{collide, run_meso_ensemble, MesoOptions};
use obstacle_slowing::micro::{estimate_overlap, run_micro_ensemble, sample_tube, MicroOptions};
use obstacle_slowing::params::ModelParams;
use obstacle_slowing::profile::SlowingProfile;
use obstacle_slowing::rng::{stream, Lane};
use rand::Rng;
use std::time::Instant;

const CLOSED_FORM_UNIT_TOL: f64 = 1e-12;
const CLOSED_FORM_AFFINE_TOL: f64 = 1e-10;
const SAMPLER_MIN_PVALUE: f64 = 0.01;
const FORWARD_STEP_DRIFT_TOL: f64 = 1e-12;
const BINOMIAL_SIGMAS: f64 = 3.0;
const LAMBDA_F_MC_SIGMAS: f64 = 3.0;
const LAMBDA_F_GRID_REL_TOL: f64 = 0.02;
const LAMBDA_F_POINT_TOL: f64 = 1e-12;
const BACKWARD_MC_SIGMAS: f64 = 3.0;
const CONVERGENCE_SIGMAS: f64 = 5.0;
const CONVERGENCE_EPS_SLOPE: f64 = 0.1;
const OVERLAP_CI_Z: f64 = 1.96;

fn verdict(name: &str, pass: bool, detail: String) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn unit() -> SlowingProfile {
    SlowingProfile::constant(1.0).unwrap()
}

#[test]
fn closed_form_crossing_law() {
    let start = Instant::now();
    let unit = unit();
    let affine = SlowingProfile::affine(1.0, 1.0, None).unwrap();
    let mut rng = stream(101, Lane::Auxiliary, 0);
    let (mut worst_unit, mut worst_affine) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let v: f64 = rng.random_range(0.0..3.0);
        let kappa: f64 = rng.random_range(0.0..1.5);
        let h: f64 = rng.random();
        let deficit = 2.0 * kappa * (1.0 - h * h).sqrt();
        let expected_unit = (v - deficit).max(0.0);
        let expected_affine = ((1.0 + v) * (-deficit).exp() - 1.0).max(0.0);
        worst_unit = worst_unit.max((unit.exit_speed(v, kappa, h).unwrap() - expected_unit).abs());
        worst_affine = worst_affine.max((affine.exit_speed(v, kappa, h).unwrap() - expected_affine).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "closed-form crossing law",
        worst_unit <= CLOSED_FORM_UNIT_TOL && worst_affine <= CLOSED_FORM_AFFINE_TOL && elapsed < 1.0,
        format!("max err S=1 {worst_unit:.2e} (tol {CLOSED_FORM_UNIT_TOL:.0e}), S=1+u {worst_affine:.2e} (tol {CLOSED_FORM_AFFINE_TOL:.0e}), {elapsed:.3}s (< 1s)"),
    );
}

#[test]
fn sampler_laws() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [2usize, 3] {
        let params = ModelParams::new(d, 0.05, 0.5, 1.0).unwrap();
        let mut counts = Vec::with_capacity(10_000);
        let mut impacts = Vec::new();
        for i in 0..10_000 {
            let tube = sample_tube(&mut stream(202 + d as u64, Lane::Tube, i), &params, 1.0).unwrap();
            counts.push(tube.count_in(0.0, 1.0) as u64);
            impacts.extend(tube.crossings.iter().map(|c| c.impact));
        }
        let chi = poisson_chi_square(&counts, params.sigma());
        let n = impacts.len();
        let ks = ks_statistic(&mut impacts, |h| h.powi(d as i32 - 1));
        let p_ks = ks_pvalue(ks, n);
        pass &= chi.pvalue >= SAMPLER_MIN_PVALUE && p_ks >= SAMPLER_MIN_PVALUE;
        detail.push(format!(
            "d={d}: sigma={:.4} chi2 p={:.3} KS(h^{}) p={:.3} n={n}",
            params.sigma(),
            chi.pvalue,
            d - 1,
            p_ks
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 10.0;
    verdict("sampler laws", pass, format!("{}; {elapsed:.2}s (< 10s)", detail.join("; ")));
}

fn invariant_runs(d: usize, with_logs: bool) -> Vec<obstacle_slowing::ensemble::EnsembleRun> {
    let params = ModelParams::new(d, 0.05, 0.3, 1.0).unwrap();
    let law = InitialLaw::Uniform { min: 0.3, max: 1.0 };
    let snaps: Vec<f64> = (1..10).map(|i| 0.2 * i as f64).collect();
    let mut micro = MicroOptions::new(2.0, 1000, 303 + d as u64);
    micro.snapshot_times = snaps.clone();
    micro.keep_logs = with_logs;
    micro.full_positions = with_logs;
    let mut meso = MesoOptions::new(2.0, 1000, 313 + d as u64);
    meso.snapshot_times = snaps;
    meso.keep_logs = with_logs;
    meso.full_positions = with_logs;
    vec![
        run_micro_ensemble(&unit(), &params, &law, &micro).unwrap(),
        run_meso_ensemble(&unit(), &params, &law, &meso).unwrap(),
    ]
}

#[test]
fn mass_conservation() {
    let mut exact = true;
    let mut ensembles = 0;
    for d in [2, 3] {
        for run in invariant_runs(d, true) {
            ensembles += 1;
            let report = check_invariants(&run.logs, &run.snapshots, &InvariantSpec::new(2.0));
            exact &= report.check("mass_conservation").unwrap().passed;
            for snap in &run.snapshots {
                exact &= snap.moving_count() + snap.stopped_count() == run.replicas;
            }
        }
    }
    let kernel = CollisionKernel::new(&unit(), &ModelParams::new(2, 0.05, 0.5, 1.0).unwrap());
    let grid = SpeedGrid::from_initial(&InitialLaw::Uniform { min: 0.2, max: 1.0 }, 1.0, 500).unwrap();
    let sol = solve_forward(&kernel, &grid, 1.0, 1e-3, &[]).unwrap();
    verdict(
        "mass conservation",
        exact && sol.steps >= 1000 && sol.max_step_drift <= FORWARD_STEP_DRIFT_TOL,
        format!(
            "{ensembles} particle ensembles exact per replica: {exact}; forward solver {} steps, max relative drift per step {:.2e} (tol {FORWARD_STEP_DRIFT_TOL:.0e})",
            sol.steps, sol.max_step_drift
        ),
    );
}

#[test]
fn monotonicity_and_support() {
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [2, 3] {
        for (engine, run) in ["micro", "meso"].iter().zip(invariant_runs(d, true)) {
            let report = check_invariants(&run.logs, &run.snapshots, &InvariantSpec::new(2.0));
            if !report.all_passed {
                eprintln!("{report}");
            }
            pass &= report.all_passed;
            detail.push(format!(
                "{engine} d={d}: {} ({} checks, max support ratio {:.6})",
                if report.all_passed { "ok" } else { "violations" },
                report.checks.len(),
                report.check("support").unwrap().worst
            ));
        }
    }
    verdict("monotonicity and support", pass, detail.join("; "));
}

#[test]
fn stopping_kernel() {
    let mut rng = stream(505, Lane::Auxiliary, 0);
    let n = 100_000u64;
    let mut pass = true;
    let mut worst = 0.0f64;
    for case in 0..10u64 {
        let profile = match case % 3 {
            0 => SlowingProfile::constant(rng.random_range(0.5..2.0)).unwrap(),
            1 => SlowingProfile::affine(rng.random_range(0.5..2.0), rng.random_range(0.0..1.5), None).unwrap(),
            _ => SlowingProfile::tabulate(|u| 1.5 + 0.5 * (3.0 * u).cos(), 4.0, 200).unwrap(),
        };
        let d = rng.random_range(2..=4usize);
        let kappa = rng.random_range(0.1..1.0);
        let target_a: f64 = rng.random_range(0.0..2.4 * kappa);
        let u = profile.invert_a(target_a.min(profile.a_max())).unwrap().max(1e-3);
        let params = ModelParams::new(d, 0.05, kappa, 1.0).unwrap();
        let kernel = CollisionKernel::new(&profile, &params);
        let k = kernel.k_of_u(u);
        let mut crng = stream(515, Lane::Jumps, case);
        let stops = (0..n)
            .filter(|_| collide(&mut crng, &profile, &params, u).unwrap() == 0.0)
            .count() as u64;
        let freq = stops as f64 / n as f64;
        let se = (k * (1.0 - k) / n as f64).sqrt();
        let ok = if se == 0.0 { freq == k } else { (freq - k).abs() <= BINOMIAL_SIGMAS * se };
        if se > 0.0 {
            worst = worst.max((freq - k).abs() / se);
        }
        pass &= ok;
    }
    verdict(
        "stopping kernel",
        pass,
        format!("10 random (profile, kappa, d, u), 1e5 collisions each; worst |freq - k|/se = {worst:.2} (limit {BINOMIAL_SIGMAS})"),
    );
}

#[test]
fn lambda_f_consistency() {
    let params = ModelParams::new(2, 0.05, 0.5, 1.0).unwrap();
    let kernel = CollisionKernel::new(&unit(), &params);
    let point = obstacle_slowing::analysis::SpeedDistribution::from_weighted(
        vec![(0.6, 1.0)],
        obstacle_slowing::analysis::Provenance::Kinetic,
    )
    .unwrap();
    let lf_point = lambda_f(&kernel, &point);
    let point_ok = (lf_point - 0.96).abs() <= LAMBDA_F_POINT_TOL;

    let (t, h) = (0.5, 0.05);
    let law = InitialLaw::Uniform { min: 0.3, max: 1.0 };
    let mut opts = MesoOptions::new(t + h, 1_000_000, 606);
    opts.snapshot_times = vec![t - h, t];
    let run = run_meso_ensemble(&unit(), &params, &law, &opts).unwrap();
    let n = run.replicas as f64;
    let (before, mid, after) = (&run.snapshots[0], &run.snapshots[1], &run.snapshots[2]);
    let window = (after.stopped_count() - before.stopped_count()) as f64 / n;
    let fd = window / (2.0 * h);
    let fd_se = (window * (1.0 - window) / n).sqrt() / (2.0 * h);
    let contributions = stats::mean_stderr(mid.records.iter().map(|r| {
        if r.stopped {
            0.0
        } else {
            kernel.sigma() * r.speed * kernel.k_of_u(r.speed)
        }
    }));
    let lf_meso = lambda_f(&kernel, &mid.moving_law(obstacle_slowing::analysis::Provenance::Meso)) / n;
    let se = (fd_se * fd_se + contributions.stderr * contributions.stderr).sqrt();
    let meso_ok = (fd - lf_meso).abs() <= LAMBDA_F_MC_SIGMAS * se;

    let r_max = 1.0;
    let grid = SpeedGrid::from_initial(&law, r_max, 1000).unwrap();
    let dt = 1e-3 / (kernel.sigma() * r_max);
    let dh = 0.01;
    let sol = solve_forward(&kernel, &grid, t + dh, dt, &[t - dh, t]).unwrap();
    let (g0, g1, g2) = (&sol.snapshots[0].1, &sol.snapshots[1].1, &sol.snapshots[2].1);
    let fd_grid = (g2.stopped_mass() - g0.stopped_mass()) / (2.0 * dh);
    let lf_grid = lambda_f(&kernel, &g1.as_distribution());
    let grid_rel = (fd_grid / lf_grid - 1.0).abs();
    let grid_ok = grid_rel <= LAMBDA_F_GRID_REL_TOL;

    verdict(
        "lambda_F consistency",
        point_ok && meso_ok && grid_ok,
        format!(
            "point mass {lf_point:.12} (0.96); meso 1e6: FD {fd:.5} vs lambda_F {lf_meso:.5}, |diff|/se = {:.2} (limit {LAMBDA_F_MC_SIGMAS}); grid: FD {fd_grid:.5} vs {lf_grid:.5}, rel {grid_rel:.2e} (tol {LAMBDA_F_GRID_REL_TOL})",
            (fd - lf_meso).abs() / se
        ),
    );
}

#[test]
fn backward_oracle_equivalence() {
    let start = Instant::now();
    let params = ModelParams::new(2, 0.05, 0.5, 1.0).unwrap();
    let (r0, t, n_max) = (0.75, 1.0, 8);
    assert!(params.sigma() * r0 * t <= 1.5);
    let tests: [(&str, fn(f64) -> f64); 5] = [
        ("stopped", |r| if r == 0.0 { 1.0 } else { 0.0 }),
        ("r", |r| r),
        ("r^2", |r| r * r),
        ("exp(-2r)", |r| (-2.0 * r).exp()),
        ("sqrt(r)", f64::sqrt),
    ];
    let mut pass = true;
    let mut worst = 0.0f64;
    for (label, profile) in [
        ("S=1", unit()),
        ("S=1+u", SlowingProfile::affine(1.0, 1.0, None).unwrap()),
    ] {
        let kernel = CollisionKernel::new(&profile, &params);
        let run = run_meso_ensemble(
            &profile,
            &params,
            &InitialLaw::Point { speed: r0 },
            &MesoOptions::new(t, 1_000_000, 707),
        )
        .unwrap();
        let snap = run.final_snapshot();
        for (name, phi) in tests {
            let oracle = backward_expectation(&kernel, phi, r0, t, n_max).unwrap();
            let mc = snap.mean_of(phi);
            let gap = (oracle.value - mc.mean).abs();
            let limit = BACKWARD_MC_SIGMAS * mc.stderr + oracle.remainder_bound;
            worst = worst.max(gap / limit);
            if gap > limit {
                pass = false;
                println!("  {label} {name}: backward {:.6} meso {:.6} +- {:.1e}", oracle.value, mc.mean, mc.stderr);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 120.0;
    verdict(
        "backward-oracle equivalence",
        pass,
        format!("2 profiles x 5 test functions, sigma r0 t = 1.5, N_max = {n_max}; worst gap/limit {worst:.2}; {elapsed:.1}s (< 120s)"),
    );
}

#[test]
fn boltzmann_grad_convergence() {
    let start = Instant::now();
    let profile = unit();
    let base = ModelParams::new(2, 0.08, 0.5, 1.0).unwrap();
    let law = InitialLaw::Point { speed: 1.0 };
    let (v0, t, replicas, seed) = (1.0, 1.0, 100_000, 808);
    let meso = run_meso_ensemble(&profile, &base, &law, &MesoOptions::new(t, replicas, seed)).unwrap();
    let epsilons = [0.08, 0.04, 0.02];
    let micro: Vec<_> = epsilons
        .iter()
        .map(|&eps| {
            let params = base.with_epsilon(eps).unwrap();
            (eps, run_micro_ensemble(&profile, &params, &law, &MicroOptions::new(t, replicas, seed)).unwrap())
        })
        .collect();
    let table = convergence_table(&meso, &micro);
    for row in &table {
        let d = row.discrepancy;
        println!(
            "  eps={:<5} W1={:.4e} (se {:.1e})  stopped gap={:.4e} (se {:.1e})  micro stopped={:.4} meso stopped={:.4}",
            row.epsilon,
            d.w1,
            d.w1_noise,
            d.stopped_gap,
            d.stopped_gap_stderr,
            micro.iter().find(|m| m.0 == row.epsilon).unwrap().1.final_snapshot().stopped_fraction().estimate,
            meso.final_snapshot().stopped_fraction().estimate,
        );
    }
    let monotone_w1 = table.windows(2).all(|w| w[1].discrepancy.w1 <= w[0].discrepancy.w1);
    let monotone_gap = table.windows(2).all(|w| w[1].discrepancy.stopped_gap <= w[0].discrepancy.stopped_gap);
    let last = table.last().unwrap();
    let d = last.discrepancy;
    let slack = CONVERGENCE_EPS_SLOPE * last.epsilon * v0;
    let w1_ok = d.w1 <= CONVERGENCE_SIGMAS * d.w1_noise + slack;
    let gap_ok = d.stopped_gap <= CONVERGENCE_SIGMAS * d.stopped_gap_stderr + slack;
    // the micro engine flags a particle stopped only once its speed reaches the
    // threshold, which takes (eps/kappa) ln(v/threshold) inside the obstacle
    let delay = last.epsilon / base.kappa * (v0 / (1e-6 * v0)).ln();
    println!("  micro time to reach the default stop threshold from v=1 at eps={}: {delay:.3}", last.epsilon);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "Boltzmann-Grad convergence",
        monotone_w1 && monotone_gap && w1_ok && gap_ok && elapsed < 600.0,
        format!(
            "W1 nonincreasing {monotone_w1}, gap nonincreasing {monotone_gap}; at eps=0.02 W1 {:.3e} <= {:.3e}: {w1_ok}, gap {:.3e} <= {:.3e}: {gap_ok}; {elapsed:.1}s",
            d.w1,
            CONVERGENCE_SIGMAS * d.w1_noise + slack,
            d.stopped_gap,
            CONVERGENCE_SIGMAS * d.stopped_gap_stderr + slack
        ),
    );
}

#[test]
fn overlap_rarity() {
    // rare-overlap regime: mean overlapping pairs per tube well below 1
    let (lambda, length, tubes) = (0.02, 10.0, 4_000_000u64);
    let epsilons = [0.08, 0.04, 0.02, 0.01];
    let estimates: Vec<_> = epsilons
        .iter()
        .map(|&eps| {
            let params = ModelParams::new(2, eps, 0.5, lambda).unwrap();
            estimate_overlap(&params, length, tubes, 909, None).unwrap()
        })
        .collect();
    // weighted least squares through the origin, weights 1/se^2
    let (num, den) = estimates.iter().fold((0.0, 0.0), |(n, d), e| {
        let w = 1.0 / (e.probability.stderr * e.probability.stderr);
        (n + w * e.epsilon * e.probability.estimate, d + w * e.epsilon * e.epsilon)
    });
    let c = num / den;
    let mut pass = true;
    for e in &estimates {
        let p = stats::proportion(e.probability.successes, e.probability.trials, OVERLAP_CI_Z);
        let fitted = c * e.epsilon;
        let inside = fitted >= p.lower && fitted <= p.upper;
        pass &= inside;
        println!(
            "  eps={:<5} P={:.4e} CI=[{:.4e}, {:.4e}] c*eps={fitted:.4e} {}",
            e.epsilon,
            p.estimate,
            p.lower,
            p.upper,
            if inside { "inside" } else { "outside" }
        );
    }
    let sigma = 2.0 * lambda;
    let leading = (std::f64::consts::PI - 4.0 / 3.0) * sigma * sigma * length;
    verdict(
        "overlap rarity",
        pass,
        format!("lambda={lambda}, L={length}, {tubes} tubes per eps; fitted c = {c:.4} (leading-order pair rate {leading:.4}); each P(eps) within its 95% CI of c*eps: {pass}"),
    );
}

const REPRO_CONFIG: &str = r#"
dimension = 2
kappa = 0.5
lambda = 1.0
epsilons = [0.08, 0.04]
t_final = 1.0
snapshots = [0.5]
replicas = 5000
master_seed = 1010

[profile]
kind = "affine"
s0 = 1.0
slope = 0.5

[initial]
kind = "uniform"
min = 0.4
max = 1.0

[kinetic]
cells = 200
n_max = 4
"#;

#[test]
fn reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.toml");
    std::fs::write(&path, REPRO_CONFIG).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    let mut compared = 0;
    let mut identical = true;
    for command in [Command::Micro, Command::Meso, Command::Kinetic, Command::Compare, Command::Converge] {
        let outputs: Vec<_> = [1usize, 4]
            .iter()
            .map(|&threads| {
                let out = dir.path().join(format!("{}-{threads}", command.name()));
                let options = RunOptions {
                    threads: Some(threads),
                    seed: None,
                    out_dir: Some(out),
                };
                run(command, &loaded, &options).unwrap()
            })
            .collect();
        for (a, b) in outputs[0].files.iter().zip(&outputs[1].files) {
            if a.extension().is_some_and(|e| e == "csv") {
                compared += 1;
                identical &= std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
            }
        }
    }
    verdict(
        "reproducibility",
        identical && compared > 0,
        format!("{compared} CSV artifacts across 5 subcommands byte-identical between 1 and 4 threads: {identical}"),
    );
}
