use std::ffi::{CStr, CString};
use std::ptr;

use adgt_ffi::*;

fn last_error() -> String {
    let p = adgt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn cycle_four_lambda_and_weights() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(adgt_topology_build(AdgtTopologyKind::Cycle, 4, 0.0, 1, &mut t), AdgtStatus::Ok);
        assert_eq!(adgt_topology_agents(t), 4);
        assert_eq!(adgt_topology_edge_count(t), 4);
        let (mut i, mut j) = (0usize, 0usize);
        assert_eq!(adgt_topology_edge(t, 0, &mut i, &mut j), AdgtStatus::Ok);
        assert!(i < j);
        assert_eq!(adgt_topology_edge(t, 4, &mut i, &mut j), AdgtStatus::OutOfRange);

        let mut w = ptr::null_mut();
        assert_eq!(adgt_mixing_metropolis(t, &mut w), AdgtStatus::Ok);
        assert!((adgt_mixing_lambda(w) - 1.0 / 3.0).abs() < 1e-12);
        let mut v = 0.0;
        assert_eq!(adgt_mixing_weight(w, 0, 1, &mut v), AdgtStatus::Ok);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(adgt_mixing_weight(w, 0, 2, &mut v), AdgtStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(adgt_mixing_weight(w, 9, 0, &mut v), AdgtStatus::OutOfRange);
        adgt_mixing_free(w);
        adgt_topology_free(t);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(adgt_topology_build(AdgtTopologyKind::Ladder, 5, 0.0, 1, &mut t), AdgtStatus::Graph);
        assert!(t.is_null());
        assert!(last_error().contains("even"));
        assert_eq!(adgt_topology_build(AdgtTopologyKind::Star, 4, 0.0, 1, ptr::null_mut()), AdgtStatus::NullPointer);
        assert_eq!(adgt_mixing_lambda(ptr::null()).is_nan(), true);
        adgt_topology_free(ptr::null_mut());
        let (mut d, mut g) = (0.0, 0.0);
        assert_eq!(adgt_theory_ceiling(1.5, 3.0, 1.0, 0.0, &mut d, &mut g), AdgtStatus::Theory);
        assert!(last_error().contains("lambda"));
    }
}

#[test]
fn quadratic_run_converges() {
    unsafe {
        let mut t = ptr::null_mut();
        let mut w = ptr::null_mut();
        let mut e = ptr::null_mut();
        assert_eq!(adgt_topology_build(AdgtTopologyKind::Random, 8, 0.5, 3, &mut t), AdgtStatus::Ok);
        assert_eq!(adgt_mixing_metropolis(t, &mut w), AdgtStatus::Ok);
        let taus = [1.0; 8];
        assert_eq!(adgt_ensemble_quadratic(8, 4, taus.as_ptr(), 3, &mut e), AdgtStatus::Ok);
        assert_eq!(adgt_ensemble_dim(e), 4);

        let x = [0.0; 4];
        let mut g = [1.0; 4];
        assert_eq!(adgt_ensemble_gradient(e, 0, x.as_ptr(), g.as_mut_ptr()), AdgtStatus::Ok);
        // gradient at zero is b, drawn from [0, 1)
        assert!(g.iter().all(|v| (0.0..1.0).contains(v)));
        assert_eq!(adgt_ensemble_gradient(e, 8, x.as_ptr(), g.as_mut_ptr()), AdgtStatus::OutOfRange);

        let mut tr = ptr::null_mut();
        assert_eq!(adgt_run(w, e, AdgtPolicy::Adgt, 1.0, 1e-3, 20_000, 1e-8, &mut tr), AdgtStatus::Ok);
        let (mut st, mut its) = (AdgtRunStatus::Diverged, 0u64);
        assert_eq!(adgt_trace_status(tr, &mut st, &mut its), AdgtStatus::Ok);
        assert_eq!(st, AdgtRunStatus::Converged);
        assert_eq!(adgt_trace_len(tr), its as usize + 1);
        let mut rec = AdgtTraceRecord::default();
        assert_eq!(adgt_trace_record(tr, its as usize, &mut rec), AdgtStatus::Ok);
        assert_eq!(rec.k, its);
        assert!(rec.residual <= 1e-8);
        assert!(rec.alpha_min <= rec.alpha_mean && rec.alpha_mean <= rec.alpha_max);
        assert_eq!(adgt_trace_record(tr, its as usize + 1, &mut rec), AdgtStatus::OutOfRange);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
        assert_eq!(adgt_trace_write_csv(tr, path.as_ptr()), AdgtStatus::Ok);
        let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(csv.lines().count(), its as usize + 2);

        let mut bad = ptr::null_mut();
        assert_eq!(adgt_run(w, e, AdgtPolicy::Fixed, 1.0, -1.0, 10, 1e-8, &mut bad), AdgtStatus::InvalidArgument);
        assert!(bad.is_null());

        adgt_trace_free(tr);
        adgt_ensemble_free(e);
        adgt_mixing_free(w);
        adgt_topology_free(t);
    }
}

#[test]
fn json_config_run_and_config_errors() {
    let cfg = CString::new(
        r#"{"schema": 1, "seed": 5, "agents": 6,
            "objective": {"kind": "quadratic", "dim": 2, "taus": [1, 1, 1, 1, 1, 1]},
            "topology": {"kind": "star"},
            "budget": {"max_iters": 0, "tol": 1e-8}}"#,
    )
    .unwrap();
    unsafe {
        let mut tr = ptr::null_mut();
        assert_eq!(adgt_run_config_json(cfg.as_ptr(), &mut tr), AdgtStatus::Ok);
        assert_eq!(adgt_trace_len(tr), 1);
        let (mut st, mut its) = (AdgtRunStatus::Converged, 7u64);
        adgt_trace_status(tr, &mut st, &mut its);
        assert_eq!((st, its), (AdgtRunStatus::BudgetExhausted, 0));
        adgt_trace_free(tr);

        let bad = CString::new(r#"{"schema": 9}"#).unwrap();
        let mut tr = ptr::null_mut();
        assert_eq!(adgt_run_config_json(bad.as_ptr(), &mut tr), AdgtStatus::Config);
        assert!(tr.is_null());
        assert_eq!(adgt_run_config_json(ptr::null(), &mut tr), AdgtStatus::NullPointer);
    }
}

#[test]
fn theory_ceiling_matches_library() {
    let (mut d, mut g) = (0.0, 0.0);
    unsafe {
        assert_eq!(adgt_theory_ceiling(0.5, 3.0, 1.0, 0.0, &mut d, &mut g), AdgtStatus::Ok);
    }
    let want = adgt::theory::ceiling_D(&adgt::theory::BoundInputs::new(0.5, 3.0, 1.0, 0.0));
    assert_eq!(d, want);
    assert_eq!(g, 1.0 / (2.0 * d));
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(adgt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
