use dprgda::escape::{run, RunHooks, StepRecord};
use dprgda::experiment::{compare, run_experiment, write_outputs, ExperimentConfig, Summary};
use dprgda::oracle::{full_gradient, ExactMinimax, MinimaxOracle};
use dprgda::privacy::{calibrate_for, MethodKind};
use dprgda::problems::{MatrixSensingInstance, MatrixSensingSpec};
use dprgda::trajectory::{Trajectory, CSV_HEADER};
use dprgda::{vecops, Error, RandomSource, ValueFunction};
use nalgebra::DMatrix;

fn micro(method: MethodKind, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        problem: MatrixSensingSpec { p: 4, q: 4, rank: 1, n: 40, sigma_noise: 0.01, target_scale: 1.0 },
        method,
        seed,
        eig_every: 5,
        ..ExperimentConfig::default()
    };
    for (k, v) in [("big_t", "30"), ("s1", "20"), ("s2", "10"), ("period_q", "5"), ("inner_k", "3")] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

const METHODS: [MethodKind; 3] = [MethodKind::DpRgda, MethodKind::DpSgda, MethodKind::DpSpiderMin];

#[test]
fn same_seed_reproduces_the_trajectory_byte_for_byte() {
    for m in METHODS {
        let a = run_experiment(&micro(m, 9)).unwrap();
        let b = run_experiment(&micro(m, 9)).unwrap();
        assert_eq!(a.trajectory.to_csv(), b.trajectory.to_csv(), "{m:?}");
        assert_eq!(a.x_out, b.x_out);
        let c = run_experiment(&micro(m, 10)).unwrap();
        assert_ne!(a.trajectory.to_csv(), c.trajectory.to_csv());
    }
}

#[test]
fn every_method_stays_within_the_target_budget() {
    for m in METHODS {
        let cfg = micro(m, 1);
        let r = run_experiment(&cfg).unwrap();
        let spent = r.summary.eps_spent.unwrap();
        assert!(spent <= cfg.epsilon + 1e-9, "{m:?} spent {spent}");
        assert!(r.report.composed_eps <= cfg.epsilon + 1e-9);
        assert!(r.report.composed_delta <= cfg.delta * (1.0 + 1e-12));
        let rows = &r.trajectory.rows;
        assert!(rows.windows(2).all(|w| w[0].eps_spent <= w[1].eps_spent));
    }
}

#[test]
fn non_private_runs_record_no_spend() {
    let cfg = ExperimentConfig { private: false, ..micro(MethodKind::DpRgda, 2) };
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.summary.eps_spent, None);
    assert!(r.trajectory.rows.iter().all(|row| row.eps_spent.is_none()));
}

#[test]
fn written_outputs_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_experiment(&micro(MethodKind::DpRgda, 3)).unwrap();
    write_outputs(&r, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    assert_eq!(Trajectory::from_csv(&csv).unwrap(), r.trajectory);
    assert_eq!(r.trajectory.len(), r.summary.iterations + 1);
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary, r.summary);
    for f in ["budget.json", "budget.txt", "iterate.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn saved_instance_gives_the_same_run_as_regeneration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = micro(MethodKind::DpRgda, 4);
    let inst = cfg.load_instance().unwrap();
    let path = dir.path().join("instance.json");
    std::fs::write(&path, serde_json::to_string(&inst).unwrap()).unwrap();
    let loaded = ExperimentConfig { instance: Some(path), ..cfg.clone() };
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&loaded).unwrap();
    assert_eq!(a.trajectory.to_csv(), b.trajectory.to_csv());
}

#[test]
fn compare_ranks_by_phi_and_rejects_mixed_instances() {
    let configs: Vec<_> = METHODS.iter().map(|&m| ExperimentConfig { instance_seed: Some(0), ..micro(m, 5) }).collect();
    let cmp = compare(&configs).unwrap();
    assert_eq!(cmp.rows.len(), 3);
    assert!(cmp.rows.windows(2).all(|w| w[0].phi <= w[1].phi));

    let mut mixed = configs.clone();
    mixed[1].instance_seed = Some(1);
    assert!(matches!(compare(&mixed), Err(Error::Config(_))));
    let mut budgets = configs;
    budgets[2].epsilon = 1.0;
    assert!(matches!(compare(&budgets), Err(Error::Config(_))));
}

/// Lipschitz constant of `y -> grad_x f(x, y)`, exact because the map is linear.
fn coupling_norm(inst: &MatrixSensingInstance, x: &[f64]) -> f64 {
    let (dx, dy) = (inst.dim_x(), inst.dim_y());
    let (g0, _) = full_gradient(inst, x, &vec![0.0; dy]);
    let mut cols = Vec::with_capacity(dx * dy);
    for i in 0..dy {
        let mut y = vec![0.0; dy];
        y[i] = 1.0;
        let (gx, _) = full_gradient(inst, x, &y);
        cols.extend(gx.iter().zip(&g0).map(|(a, b)| a - b));
    }
    DMatrix::from_column_slice(dx, dy, &cols).singular_values().max()
}

#[test]
fn estimator_deviation_splits_into_noise_and_inner_error() {
    let cfg = micro(MethodKind::DpRgda, 6);
    let inst = cfg.load_instance().unwrap();
    let params = cfg.resolved_params(inst.n);
    let noise = calibrate_for(MethodKind::DpRgda, &params, &cfg.privacy().unwrap(), inst.n).unwrap().noise;
    let mut rng = RandomSource::new(6);
    let (x0, y0) = inst.initial_point(&mut rng);
    let mut checked = 0;
    let mut obs = |r: &StepRecord<'_>| {
        let grad_phi = inst.value_gradient(r.x);
        let (gx, _) = full_gradient(&inst, r.x, &r.inner.y_next);
        let alpha_t = vecops::distance(&r.inner.v_out, &gx);
        let inner_err = vecops::distance(&r.inner.y_next, &inst.inner_maximizer(r.x));
        let lhs = vecops::distance(&r.inner.v_out, &grad_phi);
        assert!(lhs <= alpha_t + coupling_norm(&inst, r.x) * inner_err + 1e-9, "t = {}", r.t);
        checked += 1;
    };
    let mut hooks = RunHooks { observer: Some(&mut obs), ..Default::default() };
    let out = run(&inst, &mut rng, &x0, &y0, &params, &noise, &mut hooks).unwrap();
    assert_eq!(checked, out.iterations);
}

#[test]
fn infeasible_budget_is_reported() {
    let cfg = ExperimentConfig { epsilon: 1e-14, ..micro(MethodKind::DpRgda, 0) };
    assert!(matches!(run_experiment(&cfg), Err(Error::InfeasibleBudget(_))));
}
