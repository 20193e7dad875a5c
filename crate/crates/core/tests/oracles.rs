//! Frozen reference values, each computed here by an independent route.

use nalgebra::{DMatrix, DVector};

use adgt::algorithms::UpdateVariant;
use adgt::datasets::{partition_uniform, synthetic_logistic, StandardizeScope};
use adgt::graph::{build_topology, metropolis_weights, TopologyKind};
use adgt::harness::{
    build_problem, grid_search_gt, reproduce_experiment, AlgorithmSpec, Budget, DataSource, Engine, ExperimentConfig,
    Family, ObjectiveSpec, OutputSpec, ReproduceOptions, TopologySpec, SCHEMA_VERSION,
};
use adgt::objectives::{LocalObjective, ObjectiveEnsemble};
use adgt::theory::{ceiling, gamma_min, BoundInputs};

fn cfg(agents: usize, objective: ObjectiveSpec, kind: TopologyKind) -> ExperimentConfig {
    ExperimentConfig {
        schema: SCHEMA_VERSION,
        seed: 42,
        agents,
        objective,
        topology: TopologySpec { kind, ratio: None, path: None },
        algorithm: AlgorithmSpec::default(),
        budget: Budget::default(),
        threads: None,
        reference: None,
        output: OutputSpec::default(),
    }
}

/// Newton's method on the summed logistic loss.
fn newton(ens: &ObjectiveEnsemble) -> DVector<f64> {
    let p = ens.dim();
    let mut x = DVector::zeros(p);
    for _ in 0..100 {
        let g = ens.gradient(&x);
        if g.norm() < 1e-14 {
            break;
        }
        let mut h = DMatrix::zeros(p, p);
        for f in ens.locals() {
            let LocalObjective::Logistic { features, labels: _, rho } = f else { panic!("logistic expected") };
            for r in 0..features.nrows() {
                let a = features.row(r).transpose();
                let s = 1.0 / (1.0 + (-a.dot(&x)).exp());
                h += &a * a.transpose() * (s * (1.0 - s));
            }
            for k in 0..p {
                h[(k, k)] += rho;
            }
        }
        x -= h.lu().solve(&g).expect("hessian is positive definite");
    }
    x
}

#[test]
fn logistic_reference_matches_newton() {
    let objective = ObjectiveSpec::Logistic {
        data: DataSource::Synthetic { dim: 4, samples: 40 },
        samples_per_agent: Some(10),
        rho: 0.01,
        standardize_scope: StandardizeScope::Local,
    };
    let p = build_problem(&cfg(4, objective, TopologyKind::Star)).unwrap();
    assert_eq!(p.ensemble.dim(), 5);
    assert!(p.ensemble.gradient(&p.x_star).norm() <= 1e-12);
    let x = newton(&p.ensemble);
    assert!((&x - &p.x_star).norm() <= 1e-8, "{}", (&x - &p.x_star).norm());
}

/// Two agents whose summed Hessian is `diag(lo, hi)`.
fn split_quadratic(lo: f64, hi: f64, dir: &tempfile::TempDir) -> ExperimentConfig {
    let h = DVector::from_vec(vec![lo / 2.0, hi / 2.0]);
    let locals = vec![
        LocalObjective::quadratic(h.clone(), DVector::from_vec(vec![0.3, -0.7])).unwrap(),
        LocalObjective::quadratic(h, DVector::from_vec(vec![0.5, 0.1])).unwrap(),
    ];
    let ens = ObjectiveEnsemble::new(locals).unwrap().with_constants().unwrap();
    let path = dir.path().join(format!("q-{lo}-{hi}.json"));
    std::fs::write(&path, serde_json::to_string(&ens.to_file()).unwrap()).unwrap();
    let mut c = cfg(2, ObjectiveSpec::File { path }, TopologyKind::Line);
    c.algorithm.engine = Engine::Centralized;
    c
}

/// Contraction of `x ↦ x − α(Hx + b)` for diagonal `H`.
fn gd_rate(alpha: f64, spectrum: &[f64]) -> f64 {
    spectrum.iter().map(|d| (1.0 - alpha * d).abs()).fold(0.0, f64::max)
}

#[test]
fn gd_grid_winner_follows_exact_rate() {
    let dir = tempfile::tempdir().unwrap();
    for (lo, hi) in [(1.0, 2.0), (0.02, 2.0)] {
        let c = split_quadratic(lo, hi, &dir);
        let p = build_problem(&c).unwrap();
        assert!((p.centralized_smoothness() - hi).abs() < 1e-12);
        let grid: Vec<f64> = [0.1, 0.5, 1.0, 1.9].iter().map(|m| m / hi).collect();
        let r = grid_search_gt(&p, Engine::Centralized, UpdateVariant::Compact, &Budget { max_iters: 20_000, tol: 1e-8 }, &grid).unwrap();
        let best = grid.iter().copied().min_by(|a, b| gd_rate(*a, &[lo, hi]).total_cmp(&gd_rate(*b, &[lo, hi]))).unwrap();
        assert_eq!(r.winner_alpha(), Some(best), "spectrum ({lo}, {hi})");
    }
    // well conditioned: 1/L; badly conditioned: 1.9/L
    assert!(gd_rate(0.5, &[1.0, 2.0]) < gd_rate(0.95, &[1.0, 2.0]));
    assert!(gd_rate(0.95, &[0.02, 2.0]) < gd_rate(0.5, &[0.02, 2.0]));
}

#[test]
fn ceiling_spot_values() {
    let c = ceiling(&BoundInputs::new(0.5, 3.0, 1.0, 0.0));
    assert!((c.lemma_bound - 0.25 / 5.25).abs() < 1e-15);
    // 80-digit fixed-point evaluation
    let d = 0.044_056_253_745_625_f64;
    assert!((c.root_bound - d).abs() / d < 1e-12);
    assert_eq!(c.d, c.root_bound);
    assert!((gamma_min(c.d, 1.0) - 11.349_126_570_927_57).abs() < 1e-9);
}

#[test]
fn partitions() {
    let s = synthetic_logistic(2_000, 3, 9);
    let p = partition_uniform(&s, 16, 25, 42).unwrap();
    let mut all: Vec<usize> = p.agent_indices.concat();
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), 400);
    assert_eq!(p, partition_uniform(&s, 16, 25, 42).unwrap());

    let whole = partition_uniform(&s, 1, s.len(), 3).unwrap();
    assert_eq!(whole.agent_indices, vec![(0..s.len()).collect::<Vec<_>>()]);
}

#[test]
fn random_graph_example() {
    let t = build_topology(TopologyKind::Random, 16, Some(0.35), 42).unwrap();
    assert_eq!(t.edges().len(), 42);
    assert!(t.is_connected());
    let lam = metropolis_weights(&build_topology(TopologyKind::Line, 16, None, 0).unwrap()).unwrap().lambda();
    assert!(lam > 0.95 && lam < 1.0);
}

#[test]
fn desk_families() {
    let opts = ReproduceOptions { max_iters: Some(20_000), ..Default::default() };
    let q = reproduce_experiment(Family::QuadraticScenarios, &opts).unwrap();
    for case in &q.report.cases {
        assert!(case.method("adgt").unwrap().status.converged(), "{}", case.label);
    }
    let l = reproduce_experiment(Family::LogisticTopologies, &opts).unwrap();
    let star = l.report.case("star").unwrap();
    assert!(star.method("adgt").unwrap().status.converged());
    assert!(star.method("method-dm").unwrap().status.converged());
}
