use fockcut::convergence::{free_closed_form_residual, free_evolution, run_study, sectored_vs_dense, ConvergenceReport, ReportRow};
use fockcut::dynamics::{evolve_oracle, free_phase};
use fockcut::fock::{verify_identities_with, IDENTITY_TOLERANCE};
use fockcut::linalg::{self, C64, I};
use fockcut::models::{FreeRegularization, ModelSpec, SpinBosonModel, TwoModeFrame};
use fockcut::seminorm::{combined_seminorm, lassner_opnorm, lassner_sum};
use fockcut::{Axis, FockOperator, ProjectionFamily, RelevantState, SpinBosonOperator, SpinSystem, TruncationSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Header plus rows, the shape of every JSON output.
#[derive(Debug, Serialize)]
pub struct Report<R> {
    pub command: &'static str,
    pub model: String,
    pub passed: bool,
    pub rows: Vec<R>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub formula: String,
    pub measured: f64,
    pub worst_index: Option<usize>,
    pub cases: usize,
    pub bound: f64,
    pub passed: bool,
}

/// Ladder, projection and regularization identities. With `inject_fault`
/// the annihilation matrix gets a spurious entry, which the first shift
/// identity must catch.
pub fn verify(cfg: &RunConfig, inject_fault: bool) -> Result<Report<VerifyRow>, CliError> {
    let d = cfg.truncation.ambient_dim;
    let range = cfg.truncation.identity_range;
    if inject_fault && d < 3 {
        return Err(CliError::Config("fault injection needs ambient_dim ≥ 3".into()));
    }
    let spec = TruncationSpec::new(d, range, d - range)?;
    let mut a = FockOperator::annihilation(&spec);
    if inject_fault {
        a = a.with_entry(2, 0, C64::new(1.0, 0.0));
    }
    let mut rows: Vec<VerifyRow> = verify_identities_with(&spec, range, &a)?
        .checks
        .into_iter()
        .map(|c| VerifyRow {
            check: c.name.to_string(),
            formula: c.formula.to_string(),
            measured: c.max_deviation,
            worst_index: Some(c.worst_index),
            cases: c.cases,
            bound: IDENTITY_TOLERANCE,
            passed: c.max_deviation <= IDENTITY_TOLERANCE,
        })
        .collect();

    let top = range.min(20);
    let mut worst = (0.0f64, 0usize);
    for l in 0..=top {
        let dev = FreeRegularization::new(&TruncationSpec::new(d, l, d - l)?, l)?.discrepancy();
        if dev > worst.0 || dev.is_nan() {
            worst = (dev, l);
        }
    }
    rows.push(exact_row("regularization", "a_L† a_L = Q_L N Q_L", worst.0, Some(worst.1), top + 1));

    let algebra = ProjectionFamily::new(spec).algebra_defect()?;
    rows.push(exact_row("projection-algebra", "Π_l Π_s = δ_{ls} Π_l, Σ Π_l = 1", algebra, None, d + 1));

    if d >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut norm = 0.0f64;
        for _ in 0..cfg.samples {
            let l = rng.gen_range(0..=(d - 2).min(20));
            let t = rng.gen_range(-10.0..10.0);
            norm = norm.max(linalg::spectral_norm(free_phase(l, t, &spec)?.entries()));
        }
        let bound = 3.0 + IDENTITY_TOLERANCE;
        rows.push(VerifyRow {
            check: "phase-norm".into(),
            formula: "‖F_L(t)‖ ≤ 3".into(),
            measured: norm,
            worst_index: None,
            cases: cfg.samples,
            bound,
            passed: norm <= bound,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(Report { command: "verify", model: cfg.model.name().into(), passed, rows })
}

fn exact_row(check: &str, formula: &str, measured: f64, worst_index: Option<usize>, cases: usize) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        formula: formula.into(),
        measured,
        worst_index,
        cases,
        bound: IDENTITY_TOLERANCE,
        passed: measured <= IDENTITY_TOLERANCE,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveRow {
    pub observable: String,
    pub cutoff: usize,
    pub volume: Option<usize>,
    pub t: f64,
    pub decay: String,
    pub k: u32,
    /// Summed form; single-mode observables only.
    pub seminorm: Option<f64>,
    pub seminorm_opnorm: Option<f64>,
    pub residual: f64,
    /// What the evolved operator was compared with.
    pub reference: String,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One regularized evolution per `(t, L)`, summarized by its seminorms
/// and its distance to an independent route.
pub fn evolve(cfg: &RunConfig) -> Result<Report<EvolveRow>, CliError> {
    let mut points = Vec::new();
    for t in cfg.times() {
        for l in cfg.cutoffs() {
            points.push((t, l));
        }
    }
    let rows: Vec<EvolveRow> = points
        .par_iter()
        .flat_map_iter(|&(t, l)| match evolve_point(cfg, t, l) {
            Ok(rows) => rows,
            Err(e) => vec![failed_row(cfg, t, l, &e)],
        })
        .collect();
    let passed = rows.iter().all(|r| r.passed);
    Ok(Report { command: "evolve", model: cfg.model.name().into(), passed, rows })
}

struct Evolved {
    observable: &'static str,
    volume: Option<usize>,
    seminorms: Vec<(Option<f64>, Option<f64>)>,
    residual: f64,
    reference: &'static str,
    tolerance: f64,
}

fn evolve_point(cfg: &RunConfig, t: f64, l: usize) -> Result<Vec<EvolveRow>, fockcut::Error> {
    let spec = TruncationSpec::with_guard(l, cfg.guard())?;
    let f = &cfg.decay;
    let boson_norms = |x: &FockOperator| -> Result<Vec<(Option<f64>, Option<f64>)>, fockcut::Error> {
        cfg.ks
            .iter()
            .map(|&k| {
                let sum = if x.space().is_single_mode() { Some(lassner_sum(x, f, k)?.upper()) } else { None };
                Ok((sum, Some(lassner_opnorm(x, f, k)?)))
            })
            .collect()
    };
    let e = match &cfg.model {
        ModelSpec::Free => {
            let x = free_evolution(&spec, l, t)?.operator;
            Evolved {
                observable: "a",
                volume: None,
                seminorms: boson_norms(&x)?,
                residual: free_closed_form_residual(&spec, l, t)?,
                reference: "closed_form",
                tolerance: 1e-9,
            }
        }
        ModelSpec::Displaced { .. } => {
            let a = FockOperator::annihilation(&spec);
            let h = cfg.model.hamiltonian()?.boson_operator(&spec.space(), Some(l))?;
            let x = evolve_oracle(&h, &a, t)?.operator;
            let u = linalg::expm(&(h.entries() * (I * t)));
            let dense = linalg::mul3(&u, a.entries(), &u.adjoint());
            let trusted = x.trusted().unwrap_or(0);
            let mut residual = 0.0f64;
            for r in 0..=trusted {
                for c in 0..=trusted {
                    residual = residual.max((x.entry(r, c) - dense[(r, c)]).norm());
                }
            }
            Evolved {
                observable: "a",
                volume: None,
                seminorms: boson_norms(&x)?,
                residual,
                reference: "exponential",
                tolerance: 1e-9,
            }
        }
        ModelSpec::TwoMode => {
            let frame = TwoModeFrame::new(l + cfg.guard())?;
            let b = frame.big_b();
            let x = evolve_oracle(&frame.hamiltonian(l)?, b, t)?.operator;
            Evolved {
                observable: "B",
                volume: None,
                seminorms: boson_norms(&x)?,
                residual: x.deviation(b)?,
                reference: "unevolved",
                tolerance: 1e-10,
            }
        }
        ModelSpec::SpinBoson { j, gamma, sites, .. } => spin_point(SpinBosonModel::new(*j, *gamma, SpinSystem::chain(*sites)?, spec)?, cfg, t)?,
        ModelSpec::SpinBosonMulti { j, gammas, sites } => {
            spin_point(SpinBosonModel::multi(*j, gammas.clone(), SpinSystem::chain(*sites)?, spec)?, cfg, t)?
        }
    };
    Ok(cfg
        .ks
        .iter()
        .zip(e.seminorms)
        .map(|(&k, (seminorm, opnorm))| EvolveRow {
            observable: e.observable.into(),
            cutoff: l,
            volume: e.volume,
            t,
            decay: f.name(),
            k,
            seminorm,
            seminorm_opnorm: opnorm,
            residual: e.residual,
            reference: e.reference.into(),
            tolerance: e.tolerance,
            passed: e.residual <= e.tolerance,
            error: None,
        })
        .collect())
}

fn spin_point(model: SpinBosonModel, cfg: &RunConfig, t: f64) -> Result<Evolved, fockcut::Error> {
    let x = SpinBosonOperator::spin(&model.sys.pauli(Axis::X, 0)?, &model.boson_space());
    let evolved = model.sectored()?.evolve(&x, t)?.operator;
    let psi = RelevantState::all_up(&model.sys);
    let seminorms = cfg.ks.iter().map(|&k| Ok((Some(combined_seminorm(&evolved, &cfg.decay, k, &psi)?), None))).collect::<Result<_, fockcut::Error>>()?;
    Ok(Evolved {
        observable: "sigma_x[0]",
        volume: Some(model.volume()),
        seminorms,
        residual: sectored_vs_dense(&model, Axis::X, 0, t)?,
        reference: "full_space",
        tolerance: 1e-9,
    })
}

fn failed_row(cfg: &RunConfig, t: f64, l: usize, e: &fockcut::Error) -> EvolveRow {
    EvolveRow {
        observable: String::new(),
        cutoff: l,
        volume: None,
        t,
        decay: cfg.decay.name(),
        k: cfg.ks[0],
        seminorm: None,
        seminorm_opnorm: None,
        residual: f64::NAN,
        reference: String::new(),
        tolerance: f64::NAN,
        passed: false,
        error: Some(e.to_string()),
    }
}

pub fn study(cfg: &RunConfig) -> Result<Report<ReportRow>, CliError> {
    let ConvergenceReport { model, rows } = run_study(&cfg.plan())?;
    let passed = rows.iter().all(|r| r.satisfied);
    Ok(Report { command: "study", model, passed, rows })
}
