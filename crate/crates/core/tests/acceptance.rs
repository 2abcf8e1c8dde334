//! Acceptance checks. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dprgda::diagnostics::{gradient_mapping, hvp, min_eigenvalue, sosp_check, EigenSettings};
use dprgda::escape::{run, Mode, RunHooks, StepRecord, StopReason};
use dprgda::experiment::{run_on, ExperimentConfig};
use dprgda::oracle::{full_gradient, ExactMinimax, MinimaxOracle};
use dprgda::params::{escape_scalings, AlgoParams, ClipPlacement, ProblemConstants};
use dprgda::privacy::{
    account, advanced_composition_epsilon, calibrate_for, clip, gaussian_sigma, IncrementalSensitivity,
    MethodKind, PrivacyBudget, PrivacyConfig, QueryClass,
};
use dprgda::problems::{MatrixSensingInstance, MatrixSensingSpec, QuadraticForm, QuadraticSaddle};
use dprgda::spider::{incremental_update, inner_loop, refresh, IterateState};
use dprgda::{vecops, Domain, NoiseScale, RandomSource, Stream, ValueFunction};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn matrix_sensing_table() -> Outcome {
    let mut rgda = Vec::new();
    let mut spider = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut ranked_above = 0;
    for seed in 0..5u64 {
        let base = ExperimentConfig { seed, ..ExperimentConfig::default() };
        let instance = base.load_instance().expect("instance");
        let a = run_on(&base, &instance).expect("dp-rgda run");
        let b = run_on(&ExperimentConfig { method: MethodKind::DpSpiderMin, ..base.clone() }, &instance).expect("spider run");
        println!(
            "    seed {seed}: dp-rgda phi {:.4} grad {:.4} lambda_min {:.4} ({:.1}s) | dp-spider-min phi {:.4}",
            a.summary.phi, a.summary.grad_norm, a.summary.lambda_min, a.summary.wall_time_s, b.summary.phi
        );
        slowest = slowest.max(a.summary.wall_time_s).max(b.summary.wall_time_s);
        if a.summary.phi < b.summary.phi {
            ranked_above += 1;
        }
        rgda.push(a.summary);
        spider.push(b.summary.phi);
    }
    let phi = median(rgda.iter().map(|s| s.phi).collect());
    let grad = median(rgda.iter().map(|s| s.grad_norm).collect());
    let lam = median(rgda.iter().map(|s| s.lambda_min).collect());
    let sp = median(spider);
    let pass = phi <= 2.0 && grad <= 1.0 && lam >= -0.10 && sp >= 3.0 * phi && slowest <= 300.0;
    outcome(
        pass,
        format!(
            "median dp-rgda phi {phi:.4} (<= 2.0), grad {grad:.4} (<= 1.0), lambda_min {lam:.4} (>= -0.10); \
             dp-spider-min phi {sp:.2} (>= 3x); dp-rgda ahead in {ranked_above}/5 seeds; slowest run {slowest:.1}s (<= 300s)"
        ),
    )
}

struct SanityRun {
    phi: f64,
    grad: f64,
    iterations: usize,
    reason: StopReason,
    descent_steps: usize,
    worst_increase: f64,
}

fn sanity_run(instance: &MatrixSensingInstance, params: &AlgoParams, x0: &[f64], y0: &[f64], seed: u64) -> SanityRun {
    let mut descent_steps = 0;
    let mut worst_increase = f64::NEG_INFINITY;
    let mut obs = |r: &StepRecord<'_>| {
        if r.mode == Mode::Descent && vecops::norm(&r.inner.v_out) >= params.alpha {
            descent_steps += 1;
            worst_increase = worst_increase.max(instance.value(r.x_next) - instance.value(r.x));
        }
    };
    let mut hooks = RunHooks { observer: Some(&mut obs), ..Default::default() };
    let out = run(instance, &mut RandomSource::new(seed), x0, y0, params, &NoiseScale::zero(), &mut hooks).expect("run");
    SanityRun {
        phi: instance.value(&out.x_out),
        grad: vecops::norm(&instance.value_gradient(&out.x_out)),
        iterations: out.iterations,
        reason: out.reason,
        descent_steps,
        worst_increase,
    }
}

fn non_private_sanity() -> Outcome {
    let cfg = ExperimentConfig { private: false, full_batch: true, ..ExperimentConfig::default() };
    let instance = cfg.load_instance().expect("instance");
    let params = AlgoParams { big_t: 400, ..cfg.resolved_params(instance.n) };
    let (x0, y0) = instance.initial_point(&mut RandomSource::new(cfg.seed));
    let base = sanity_run(&instance, &params, &x0, &y0, cfg.seed);
    // The default start sits near a minimum and never takes a descent step.
    // A far start with the inner step matched to the 1/n curvature of y does.
    let far: Vec<f64> = x0.iter().map(|v| 10.0 * v).collect();
    let tuned = AlgoParams { lambda: instance.n as f64 / 6.0, inner_k: 30, ..params.clone() };
    let moved = sanity_run(&instance, &tuned, &far, &y0, cfg.seed);
    let pass = base.phi < 0.05 && base.grad < 0.05 && base.worst_increase <= 1e-8 && moved.worst_increase <= 1e-8;
    let detail = [("default start", &base), ("10x start, lambda n/6, K 30", &moved)]
        .iter()
        .map(|(name, r)| {
            format!(
                "{name}: phi {:.3e} grad {:.3e} after {} iterations ({:?}), {} descent steps, largest phi increase {:.2e}",
                r.phi, r.grad, r.iterations, r.reason, r.descent_steps, r.worst_increase
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, format!("{detail} (thresholds 0.05, slack 1e-8)"))
}

/// Per-sample gradients that ignore the iterate, for sensitivity checks.
struct FixedGradients {
    grads: Vec<Vec<f64>>,
}

impl MinimaxOracle for FixedGradients {
    fn num_samples(&self) -> usize {
        self.grads.len()
    }
    fn dim_x(&self) -> usize {
        self.grads[0].len()
    }
    fn dim_y(&self) -> usize {
        1
    }
    fn sample_gradient(&self, _x: &[f64], _y: &[f64], i: usize, gx: &mut [f64], gy: &mut [f64]) {
        gx.copy_from_slice(&self.grads[i]);
        gy[0] = 0.0;
    }
}

fn privacy_suite() -> Outcome {
    let mut rng = RandomSource::new(31);
    // clip norm bound
    let mut clip_err: f64 = 0.0;
    for _ in 0..1000 {
        let scale = rng.stream(Stream::Baseline).random_range(0.0..5.0);
        let x = rng.gaussian_vec(Stream::Baseline, 7, scale);
        let c = rng.stream(Stream::Baseline).random_range(0.1..3.0);
        let got = vecops::norm(&clip(&x, c));
        clip_err = clip_err.max((got - vecops::norm(&x).min(c)).abs());
    }

    // exhaustive single-sample swaps on a 5-sample dataset
    let c_v = 1.0;
    let n = 5;
    let mut base: Vec<Vec<f64>> = (0..n).map(|_| rng.gaussian_vec(Stream::Baseline, 3, 1.5)).collect();
    base[2] = vec![3.0, 0.0, 0.0];
    let mut replacements: Vec<Vec<f64>> = (0..40).map(|k| rng.gaussian_vec(Stream::Baseline, 3, 0.1 * k as f64)).collect();
    replacements.push(vec![-3.0, 0.0, 0.0]);
    let params = AlgoParams { clip_refresh: c_v, clip_placement: ClipPlacement::PerSample, ..AlgoParams::default() }.full_batch(n);
    let query = |grads: &[Vec<f64>]| {
        let oracle = FixedGradients { grads: grads.to_vec() };
        refresh(&oracle, &mut RandomSource::new(0), &[0.0; 3], &[0.0], &params, &NoiseScale::zero()).v
    };
    let original = query(&base);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for r in &replacements {
            let mut swapped = base.clone();
            swapped[i] = r.clone();
            worst = worst.max(vecops::distance(&query(&swapped), &original));
        }
    }
    let bound = 2.0 * c_v / n as f64;

    // accountant re-substitution
    let target = PrivacyBudget::new(1.0, 5e-7).unwrap();
    let schedule = [QueryClass::refresh(1.0, 200, 40), QueryClass::incremental(1.0, 50, 2000)];
    let alloc = account(&schedule, &target, 2.5e-7).unwrap();
    let resub = (advanced_composition_epsilon(alloc.per_query_eps, alloc.queries, alloc.delta_prime) - target.epsilon).abs();

    // Gaussian sigma by Monte Carlo
    let sigma = gaussian_sigma(1.0, 2.0, 1e-6).unwrap();
    let draws = 100_000;
    let noise = rng.gaussian_vec(Stream::GaussianNoise, draws, sigma);
    let mean = noise.iter().sum::<f64>() / draws as f64;
    let sd = (noise.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
    let mc_rel = (sd / sigma - 1.0).abs();

    let pass = clip_err <= 1e-12 && worst <= bound + 1e-12 && (worst - bound).abs() <= 1e-12 && resub < 1e-9 && mc_rel < 0.02;
    outcome(
        pass,
        format!(
            "clip error {clip_err:.1e}; swap sensitivity max {worst:.15} vs bound {bound}; \
             accountant residual {resub:.1e}; Monte Carlo sigma off by {:.2}%",
            100.0 * mc_rel
        ),
    )
}

fn spider_exactness() -> Outcome {
    let quad = QuadraticSaddle::new(
        DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, -0.4, 0.1, 0.0, 0.1, 0.7]),
        DMatrix::from_row_slice(3, 2, &[0.3, -0.2, 0.5, 0.1, -0.1, 0.4]),
        DMatrix::from_row_slice(2, 2, &[-1.5, 0.3, 0.3, -1.0]),
        (0..6).map(|i| vec![0.1 * i as f64, -0.2, 0.05 * i as f64]).collect(),
        (0..6).map(|i| vec![0.3 - 0.1 * i as f64, 0.2]).collect(),
    )
    .unwrap();
    let sensing = MatrixSensingInstance::generate(
        &mut RandomSource::new(3),
        &MatrixSensingSpec { p: 4, q: 3, rank: 2, n: 8, sigma_noise: 0.01, target_scale: 1.0 },
    )
    .unwrap();
    let mut rng = RandomSource::new(41);
    let mut worst: f64 = 0.0;
    let mut noop_ok = true;
    fn check<O: MinimaxOracle>(o: &O, rng: &mut RandomSource, worst: &mut f64, noop_ok: &mut bool) {
        let params = AlgoParams { clip_refresh: 1e12, clip_incremental: 1e12, ..AlgoParams::default() }.full_batch(o.num_samples());
        for _ in 0..50 {
            let path: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
                .map(|_| (rng.gaussian_vec(Stream::Baseline, o.dim_x(), 1.0), rng.gaussian_vec(Stream::Baseline, o.dim_y(), 1.0)))
                .collect();
            let mut est = refresh(o, rng, &path[0].0, &path[0].1, &params, &NoiseScale::zero());
            for w in path.windows(2) {
                est = incremental_update(o, rng, &est, (&w[0].0, &w[0].1), (&w[1].0, &w[1].1), &params, &NoiseScale::zero());
            }
            let (gx, gy) = full_gradient(o, &path[3].0, &path[3].1);
            *worst = worst.max(vecops::distance(&est.v, &gx)).max(vecops::distance(&est.u, &gy));
            let same = incremental_update(o, rng, &est, (&path[3].0, &path[3].1), (&path[3].0, &path[3].1), &params, &NoiseScale::zero());
            *noop_ok &= same == est;
        }
    }
    check(&quad, &mut rng, &mut worst, &mut noop_ok);
    check(&sensing, &mut rng, &mut worst, &mut noop_ok);
    outcome(
        worst <= 1e-10 && noop_ok,
        format!("3-step telescoping max error {worst:.2e} (<= 1e-10); zero-move increment no-op: {noop_ok}"),
    )
}

fn inner_contraction() -> Outcome {
    // mu = 1, L = 2
    let hy = DMatrix::from_row_slice(2, 2, &[-1.5, 0.5, 0.5, -1.5]);
    let make = |domain| {
        QuadraticSaddle::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 2, &[0.6, -0.2, 0.3, 0.9]),
            hy.clone(),
            vec![vec![0.0, 0.0]; 4],
            vec![vec![1.0, 0.5], vec![-0.5, 2.0], vec![0.3, -0.3], vec![0.0, 1.0]],
        )
        .unwrap()
        .with_domain(domain)
    };
    let quad = make(Domain::Unconstrained);
    let (mu, l) = (quad.mu(), quad.inner_lipschitz());
    let lambda = 1.0 / (6.0 * l);
    let params = AlgoParams { inner_k: 60, lambda, clip_refresh: 1e9, clip_incremental: 1e9, ..AlgoParams::default() }.full_batch(4);
    let mut rng = RandomSource::new(51);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let x = rng.gaussian_vec(Stream::Baseline, 2, 1.0);
        let y0 = rng.gaussian_vec(Stream::Baseline, 2, 5.0);
        let state = IterateState { t: 0, x: &x, x_prev: None, y: &y0, estimators: None };
        let r = inner_loop(&quad, &mut rng, &state, &params, &NoiseScale::zero());
        let ys = quad.inner_maximizer(&x);
        let d: Vec<f64> = r.inner_path.iter().map(|s| vecops::distance(&s.y, &ys)).collect();
        for w in d.windows(2).filter(|w| w[0] > 1e-9) {
            worst_ratio = worst_ratio.max(w[1] / w[0]);
        }
    }
    let limit = 1.0 - lambda * mu + 1e-3;

    let mut mapping_ok = 0;
    let ball = make(Domain::Ball { radius: 0.8 });
    for k in 0..100 {
        let p = if k % 2 == 0 { &quad } else { &ball };
        let x = rng.gaussian_vec(Stream::Baseline, 2, 1.0);
        let y = p.domain.projected(&rng.gaussian_vec(Stream::Baseline, 2, 3.0));
        let g = vecops::norm(&gradient_mapping(p, &x, &y, lambda).unwrap());
        if 0.5 * mu * vecops::distance(&y, &p.inner_maximizer(&x)) <= g + 1e-12 {
            mapping_ok += 1;
        }
    }
    outcome(
        worst_ratio <= limit && mapping_ok == 100 && (mu - 1.0).abs() < 1e-12 && (l - 2.0).abs() < 1e-12,
        format!("worst per-step ratio {worst_ratio:.6} (<= {limit:.6}); strong-concavity mapping bound held at {mapping_ok}/100 points"),
    )
}

fn escape_behaviour() -> Outcome {
    let constants = ProblemConstants::default();
    let (alpha, eta_h) = (0.05, 0.5);
    let sc = escape_scalings(&constants, alpha, eta_h, 2.0, 1e-3, 2);
    let params = AlgoParams {
        eta: 0.1,
        eta_h,
        alpha,
        radius: sc.radius,
        t_thres: sc.t_thres,
        d_bar: sc.d_bar,
        big_t: sc.t_thres + 10,
        inner_k: 1,
        ..AlgoParams::default()
    }
    .full_batch(1);
    let saddle = QuadraticSaddle::separable(&[1.0, -0.5], &[-1.0], 1).unwrap();
    let bowl = QuadraticSaddle::separable(&[1.0, 1.0], &[-1.0], 1).unwrap();
    let mut exits = 0;
    for seed in 0..100 {
        let mut exited = false;
        let mut obs = |r: &StepRecord<'_>| exited |= r.exit_eta.is_some();
        let mut hooks = RunHooks { observer: Some(&mut obs), ..Default::default() };
        run(&saddle, &mut RandomSource::new(seed), &[5e-4, 0.0], &[0.0], &params, &NoiseScale::zero(), &mut hooks).unwrap();
        if exited {
            exits += 1;
        }
    }
    let mut certified = 0;
    for seed in 0..100 {
        let mut early = false;
        let mut obs = |r: &StepRecord<'_>| early |= r.exit_eta.is_some();
        let mut hooks = RunHooks { observer: Some(&mut obs), ..Default::default() };
        let out = run(&bowl, &mut RandomSource::new(seed), &[0.0, 0.0], &[0.0], &params, &NoiseScale::zero(), &mut hooks).unwrap();
        let phi = QuadraticForm::diagonal(&[1.0, 1.0]);
        let cert = sosp_check(&phi, &out.x_out, alpha, constants.rho_phi, &EigenSettings::default()).unwrap();
        if !early && out.reason == StopReason::EscapeExhausted && out.x_out == vec![0.0, 0.0] && cert.passes {
            certified += 1;
        }
    }
    outcome(
        exits >= 90 && certified == 100,
        format!(
            "r {:.4}, t_thres {}, D_bar {:.3e}: saddle exited early in {exits}/100 seeds (>= 90); \
             minimum returned its certified anchor in {certified}/100",
            sc.radius, sc.t_thres, sc.d_bar
        ),
    )
}

fn diagnostics_oracles() -> Outcome {
    // hvp against a dense Hessian from second differences of Phi values
    let micro = MatrixSensingInstance::generate(
        &mut RandomSource::new(61),
        &MatrixSensingSpec { p: 3, q: 3, rank: 1, n: 20, sigma_noise: 0.01, target_scale: 1.0 },
    )
    .unwrap();
    let mut rng = RandomSource::new(62);
    let x = rng.gaussian_vec(Stream::Baseline, micro.dim_x(), 0.8);
    let d = x.len();
    let h = 1e-3;
    let mut hvp_err: f64 = 0.0;
    for j in 0..d {
        let mut ej = vec![0.0; d];
        ej[j] = 1.0;
        let col = hvp(&micro, &x, &ej, 5e-4);
        for i in 0..d {
            let at = |si: f64, sj: f64| {
                let mut z = x.clone();
                z[i] += si * h;
                z[j] += sj * h;
                micro.value(&z)
            };
            let hij = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
            hvp_err = hvp_err.max((col[i] - hij).abs());
        }
    }

    let mut eig_err: f64 = 0.0;
    for seed in 0..10 {
        let g: Vec<f64> = {
            let mut r = RandomSource::new(700 + seed);
            (0..25).map(|_| StandardNormal.sample(r.stream(Stream::Baseline))).collect()
        };
        let m = DMatrix::from_row_slice(5, 5, &g);
        let sym = (&m + m.transpose()) * 0.5;
        let truth = sym.clone().symmetric_eigenvalues().min();
        let est = min_eigenvalue(&QuadraticForm::new(sym), &[0.0; 5], &EigenSettings::default()).unwrap();
        eig_err = eig_err.max((est.value - truth).abs());
    }

    let full = MatrixSensingInstance::generate(&mut RandomSource::new(63), &MatrixSensingSpec::default()).unwrap();
    let mut grad_rel: f64 = 0.0;
    for _ in 0..20 {
        let x = rng.gaussian_vec(Stream::Baseline, full.dim_x(), 0.5);
        let g = DVector::from_vec(full.value_gradient(&x));
        let fd: Vec<f64> = (0..x.len())
            .map(|j| {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[j] += 1e-5;
                b[j] -= 1e-5;
                (full.value(&a) - full.value(&b)) / 2e-5
            })
            .collect();
        grad_rel = grad_rel.max((&g - DVector::from_vec(fd)).norm() / g.norm());
    }
    outcome(
        hvp_err <= 1e-4 && eig_err <= 1e-4 && grad_rel <= 1e-5,
        format!("hvp vs dense Hessian {hvp_err:.2e} (<= 1e-4); lambda_min vs dense {eig_err:.2e} (<= 1e-4); value gradient relative error {grad_rel:.2e} (<= 1e-5)"),
    )
}

fn drift_bound() -> Outcome {
    // Ten samples sharing one curvature: gradient differences are sample
    // independent, so deviation comes from the injected noise alone.
    let hx = DMatrix::from_row_slice(3, 3, &[0.8, 0.1, 0.0, 0.1, -0.3, 0.2, 0.0, 0.2, 0.5]);
    let b = DMatrix::from_row_slice(3, 2, &[0.2, 0.0, -0.1, 0.3, 0.4, 0.1]);
    let hy = DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.2, -1.2]);
    let mut data = RandomSource::new(80);
    let sx: Vec<Vec<f64>> = (0..10).map(|_| data.gaussian_vec(Stream::Data, 3, 0.3)).collect();
    let sy: Vec<Vec<f64>> = (0..10).map(|_| data.gaussian_vec(Stream::Data, 2, 0.3)).collect();
    let p = QuadraticSaddle::new(hx.clone(), b.clone(), hy.clone(), sx, sy).unwrap();
    let mut full = DMatrix::zeros(5, 5);
    full.view_mut((0, 0), (3, 3)).copy_from(&hx);
    full.view_mut((0, 3), (3, 2)).copy_from(&b);
    full.view_mut((3, 0), (2, 3)).copy_from(&b.transpose());
    full.view_mut((3, 3), (2, 2)).copy_from(&hy);
    let lipschitz = full.symmetric_eigenvalues().abs().max();

    let params = AlgoParams { big_t: 40, inner_k: 3, period_q: 10, s1: 10, s2: 4, lambda: 0.3, clip_refresh: 50.0, ..AlgoParams::default() };
    let privacy = PrivacyConfig {
        budget: PrivacyBudget::new(4.0, 1e-5).unwrap(),
        incremental: IncrementalSensitivity::LipschitzScaled { lipschitz },
        ..PrivacyConfig::new(PrivacyBudget::new(4.0, 1e-5).unwrap())
    };
    let cal = calibrate_for(MethodKind::DpRgda, &params, &privacy, 10).unwrap();
    let dim = 5.0;
    let b1 = dim * cal.noise.sigma_refresh_x.powi(2);
    let b2 = dim * cal.noise.sigma_inc_x.powi(2);
    // The bound holds per step with probability 1 - delta1; a run-wide check
    // over big_t steps takes delta1 = 0.05 / big_t (union bound).
    let log_run = (params.big_t as f64 / 0.05).ln();
    let log_step = (1.0f64 / 0.05).ln();
    let mut step_checks = 0usize;
    let mut step_misses = 0usize;

    let trials = 200;
    let mut held = 0;
    for seed in 0..trials {
        let mut ok = true;
        let mut movement = 0.0;
        let mut x_prev: Option<Vec<f64>> = None;
        let mut y_prev: Vec<f64> = vec![0.0; 2];
        let mut obs = |r: &StepRecord<'_>| {
            if r.inner.refreshed {
                movement = 0.0;
            } else if let Some(xp) = &x_prev {
                movement += vecops::distance(r.x, xp).powi(2);
            }
            let s = r.inner.selected_k;
            let mut yk = y_prev.clone();
            for step in &r.inner.inner_path[..=s] {
                movement += vecops::distance(&step.y, &yk).powi(2);
                yk = step.y.clone();
            }
            let (gx, gy) = full_gradient(&p, r.x, &r.inner.y_next);
            let dev = vecops::distance(&r.inner.v_out, &gx).powi(2) + vecops::distance(&r.inner.u_out, &gy).powi(2);
            ok &= dev <= log_run * (b2 * movement + b1);
            step_checks += 1;
            step_misses += usize::from(dev > log_step * (b2 * movement + b1));
            x_prev = Some(r.x.to_vec());
            y_prev = r.inner.y_next.clone();
        };
        let mut hooks = RunHooks { observer: Some(&mut obs), ..Default::default() };
        run(&p, &mut RandomSource::new(seed), &[1.0, -1.0, 0.5], &[0.0, 0.0], &params, &cal.noise, &mut hooks).unwrap();
        if ok {
            held += 1;
        }
    }
    let frac = held as f64 / trials as f64;
    outcome(
        frac >= 0.95,
        format!(
            "drift bound held along the whole run in {held}/{trials} trials (>= 95%); \
             per-step misses at delta1 = 0.05: {step_misses}/{step_checks}; rate verification not attempted"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 matrix-sensing table reproduction", matrix_sensing_table),
        ("2 non-private sanity", non_private_sanity),
        ("3 privacy unit suite", privacy_suite),
        ("4 recursive estimator exactness", spider_exactness),
        ("5 inner-loop contraction", inner_contraction),
        ("6 escape behaviour", escape_behaviour),
        ("7 diagnostics oracles", diagnostics_oracles),
        ("8 estimator drift bound", drift_bound),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {} [{:.1}s]", o.detail, started.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
