use fockcut::convergence::{run_study, sectored_vs_dense, StudyPlan};
use fockcut::models::{ModelSpec, SpinBosonModel};
use fockcut::{Axis, DecayFunction, SpinSystem, TruncationSpec};

fn plan(model: ModelSpec, cutoffs: Vec<usize>, guard: usize) -> StudyPlan {
    StudyPlan {
        model,
        decay: DecayFunction::exponential(1.0),
        ks: vec![0, 1],
        times: vec![0.5, 1.0],
        cutoffs,
        lattice_sides: vec![1, 2],
        guard,
    }
}

#[test]
fn every_model_computes_without_error_rows() {
    let plans = [
        plan(ModelSpec::Free, vec![2, 4, 8], 4),
        plan(ModelSpec::Displaced { gamma: 0.3 }, vec![3, 6, 9], 6),
        plan(ModelSpec::TwoMode, vec![1, 2, 3], 4),
        plan(ModelSpec::SpinBoson { j: 0.5, gamma: 0.5, sites: 2, r: None }, vec![1, 2, 3], 3),
        plan(ModelSpec::SpinBosonMulti { j: 0.5, gammas: vec![0.4, 0.2], sites: 2 }, vec![1, 2], 2),
    ];
    for p in plans {
        let report = run_study(&p).unwrap();
        assert!(!report.rows.is_empty(), "{}", report.model);
        for row in &report.rows {
            assert!(row.error.is_none(), "{} {}: {:?}", report.model, row.check, row.error);
            assert!(row.measured.is_finite());
        }
    }
}

#[test]
fn multi_mode_sectors_match_full_space() {
    let spec = TruncationSpec::with_guard(2, 2).unwrap();
    let model = SpinBosonModel::multi(0.5, vec![0.4, 0.2], SpinSystem::chain(2).unwrap(), spec).unwrap();
    assert!(sectored_vs_dense(&model, Axis::X, 1, 1.3).unwrap() < 1e-9);
}

#[test]
fn studies_reject_other_lattice_dimensions() {
    let p = plan(ModelSpec::SpinBoson { j: 0.5, gamma: 0.5, sites: 2, r: Some(1) }, vec![1, 2], 2);
    assert!(run_study(&p).is_err());
}
