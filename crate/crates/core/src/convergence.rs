//! Convergence studies: measured Cauchy gaps, tails and residuals next to
//! their analytic bounds, collected as report rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{alpha_spin_closed_form, evolve_oracle, interaction_commutator_formula, Evolution, EvolutionResult};
use crate::error::{Error, Result};
use crate::fock::{FockOperator, TruncationSpec};
use crate::linalg::{self, Vector, I};
use crate::models::{FreeRegularization, ModelSpec, SpinBosonModel, TwoModeFrame};
use crate::seminorm::{combined_seminorm, lassner_opnorm_weighted, lassner_sum_weighted, DecayFunction, SeminormValue, Weighting};
use crate::spin::{strong_seminorm_vec, Axis, RelevantState, SpinSystem};
use crate::tensor::SpinBosonOperator;

/// Relative slack allowed when a measured value meets its bound with equality.
pub const BOUND_SLACK: f64 = 1e-12;

fn within(measured: f64, bound: f64) -> bool {
    measured <= bound * (1.0 + BOUND_SLACK) + BOUND_SLACK
}

/// One measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub check: String,
    pub cutoff: Option<usize>,
    pub cutoff_ref: Option<usize>,
    pub volume: Option<usize>,
    pub t: f64,
    pub decay: String,
    pub k: u32,
    pub measured: f64,
    pub measured_opnorm: Option<f64>,
    pub bound: Option<f64>,
    pub satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportRow {
    pub fn new(check: impl Into<String>, t: f64, decay: &DecayFunction, k: u32, measured: f64) -> Self {
        ReportRow {
            check: check.into(),
            cutoff: None,
            cutoff_ref: None,
            volume: None,
            t,
            decay: decay.name(),
            k,
            measured,
            measured_opnorm: None,
            bound: None,
            satisfied: true,
            error: None,
        }
    }

    pub fn cutoffs(mut self, cutoff: usize, cutoff_ref: Option<usize>) -> Self {
        self.cutoff = Some(cutoff);
        self.cutoff_ref = cutoff_ref;
        self
    }

    pub fn volume(mut self, v: usize) -> Self {
        self.volume = Some(v);
        self
    }

    pub fn opnorm(mut self, v: f64) -> Self {
        self.measured_opnorm = Some(v);
        self
    }

    /// Marks the row satisfied when `measured ≤ bound`.
    pub fn bounded_by(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self.satisfied = within(self.measured, bound);
        self
    }

    /// Marks the row satisfied when `measured < bound`, for trends.
    pub fn strictly_below(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self.satisfied = self.measured < bound;
        self
    }

    fn failed(check: &str, t: f64, decay: &DecayFunction, k: u32, err: &Error) -> Self {
        ReportRow { satisfied: false, error: Some(err.to_string()), ..ReportRow::new(check, t, decay, k, f64::NAN) }
    }

    fn sort_key(&self) -> (String, usize, usize, usize, u64, String, u32) {
        (
            self.check.clone(),
            self.volume.unwrap_or(0),
            self.cutoff.unwrap_or(0),
            self.cutoff_ref.unwrap_or(0),
            self.t.to_bits(),
            self.decay.clone(),
            self.k,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub rows: Vec<ReportRow>,
}

impl ConvergenceReport {
    pub fn new(model: impl Into<String>) -> Self {
        ConvergenceReport { model: model.into(), rows: Vec::new() }
    }

    /// Puts rows in a fixed order independent of how they were computed.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            let (ka, kb) = (a.sort_key(), b.sort_key());
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.satisfied)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| !r.satisfied)
    }

    pub fn rows_for<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.check == check)
    }
}

/// `2 Σ_{s=M+1}^{L} f(s − 1) s^{k + 1/2}`.
pub fn bound_free_gap(f: &DecayFunction, k: u32, m: usize, l: usize) -> f64 {
    (m + 1..=l).map(|s| 2.0 * f.eval(s as f64 - 1.0) * (s as f64).powf(k as f64 + 0.5)).sum()
}

/// `c_k ((2^k + 1)(L + 1)^{3/2})^l` with the upper bracket of `c_k`.
pub fn bound_field_power(f: &DecayFunction, k: u32, cutoff: usize, l: u32) -> Result<f64> {
    let ck = f.moment(k)?.upper;
    Ok(ck * field_rate(k, cutoff).powi(l as i32))
}

fn field_rate(k: u32, cutoff: usize) -> f64 {
    (2f64.powi(k as i32) + 1.0) * (cutoff as f64 + 1.0).powf(1.5)
}

/// `c_k (exp(|2tγ|(2^k + 1)(L + 1)^{3/2} / |V|) − 1)`.
pub fn bound_interaction_tail(f: &DecayFunction, k: u32, cutoff: usize, volume: usize, t: f64, gamma: f64) -> Result<f64> {
    let ck = f.moment(k)?.upper;
    Ok(ck * ((2.0 * t * gamma).abs() * field_rate(k, cutoff) / volume as f64).exp_m1())
}

/// `(2/|V|)^l`.
pub fn bound_spin_commutator(volume: usize, l: u32) -> f64 {
    (2.0 / volume as f64).powi(l as i32)
}

/// Seminorms of the difference of two evolutions of the same operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub sum: SeminormValue,
    pub opnorm: f64,
}

/// `‖α_L(X) − α_M(X)‖`, computed from the increments `α(X) − X` so that
/// the support certified by each evolution carries over to the difference.
pub fn cauchy_gap(
    x: &FockOperator,
    left: &EvolutionResult<FockOperator>,
    right: &EvolutionResult<FockOperator>,
    f: &DecayFunction,
    k: u32,
    weighting: Weighting,
) -> Result<Gap> {
    let dl = left.increment(x)?;
    let dr = right.increment(x)?;
    let support = match (dl.support(), dr.support()) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    let mut diff = dl.sub(&dr)?;
    if let Some(s) = support {
        diff = diff.with_support(s);
    }
    let trusted = diff.trusted().unwrap_or(0);
    if support.is_some_and(|s| s > trusted) && diff.growth().is_none() {
        return Err(Error::Untrusted(format!("gap is supported up to {} but trusted only to {trusted}", support.unwrap_or(0))));
    }
    Ok(Gap { sum: lassner_sum_weighted(&diff, f, k, weighting)?, opnorm: lassner_opnorm_weighted(&diff, f, k, weighting)? })
}

/// Evolution of `a` under `Q_L N Q_L`, by diagonalization.
pub fn free_evolution(spec: &TruncationSpec, cutoff: usize, t: f64) -> Result<EvolutionResult<FockOperator>> {
    let h = FreeRegularization::new(spec, cutoff)?.projected;
    Ok(evolve_oracle(&h, &FockOperator::annihilation(spec), t)?.with_cutoff(cutoff))
}

/// Gap between the free evolutions at cutoffs `M < L`, on an ambient space
/// `guard` grades above `L`.
pub fn free_gap(m: usize, l: usize, t: f64, f: &DecayFunction, k: u32, guard: usize) -> Result<Gap> {
    let spec = TruncationSpec::with_guard(l.max(m), guard.max(2))?;
    let a = FockOperator::annihilation(&spec);
    cauchy_gap(&a, &free_evolution(&spec, l, t)?, &free_evolution(&spec, m, t)?, f, k, Weighting::Number)
}

/// The second-power gap against the bound obtained from first-power gaps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InductionCheck {
    /// `‖α_L(a²) − α_M(a²)‖^{f,k}`
    pub measured: f64,
    /// `‖α_L(a) − α_M(a)‖^{xf,k+1}`
    pub first_power: f64,
    /// The `l = 0` row, which the weight `x f(x)` cannot see.
    pub boundary: f64,
    pub bound: f64,
}

pub fn induction_check(m: usize, l: usize, t: f64, f: &DecayFunction, k: u32, guard: usize) -> Result<InductionCheck> {
    let spec = TruncationSpec::with_guard(l.max(m), guard.max(3))?;
    let a = FockOperator::annihilation(&spec);
    let a2 = a.compose(&a)?;
    let hl = FreeRegularization::new(&spec, l)?.projected;
    let hm = FreeRegularization::new(&spec, m)?.projected;
    let (el, em) = (Evolution::new(&hl)?, Evolution::new(&hm)?);
    let measured = cauchy_gap(&a2, &el.evolve(&a2, t)?, &em.evolve(&a2, t)?, f, k, Weighting::Number)?.sum.upper();
    let first_power = cauchy_gap(&a, &el.evolve(&a, t)?, &em.evolve(&a, t)?, &f.times_x(), k + 1, Weighting::Number)?.sum.upper();
    let diff = el.evolve(&a2, t)?.operator.sub(&em.evolve(&a2, t)?.operator)?;
    let boundary = f.eval(0.0) * 2f64.powi(k as i32) * diff.entries()[(0, 2)].norm();
    Ok(InductionCheck { measured, first_power, boundary, bound: 6.0 * first_power + boundary })
}

/// `(a_L + a_L†)^l` in the `M`-weighted seminorms, as
/// `(‖f(M) X M^k‖, summed form)`.
pub fn field_power_seminorm(spec: &TruncationSpec, cutoff: usize, l: u32, f: &DecayFunction, k: u32) -> Result<(f64, f64)> {
    let al = FockOperator::annihilation(spec).cutoff(cutoff, 0)?;
    let phi = al.add(&al.adjoint())?;
    let mut p = FockOperator::identity(&spec.space());
    for _ in 0..l {
        p = p.compose(&phi)?;
    }
    let p = p.with_support(cutoff);
    Ok((one_sided_norm(&p, f, k)?, lassner_sum_weighted(&p, f, k, Weighting::Shifted)?.upper()))
}

/// `‖f(M) X M^k‖` on the trusted block.
pub fn one_sided_norm(x: &FockOperator, f: &DecayFunction, k: u32) -> Result<f64> {
    let idx = x.trusted_indices();
    let block = x.trusted_block();
    let g: Vec<f64> = idx.iter().map(|&i| x.space().grade(i) as f64 + 1.0).collect();
    let m = linalg::Mat::from_fn(block.nrows(), block.ncols(), |r, c| block[(r, c)] * f.eval(g[r]) * g[c].powi(k as i32));
    Ok(linalg::spectral_norm(&m))
}

/// `‖[σ_3^V, σ_α^i]_l ψ‖`.
pub fn spin_commutator_norm(sys: &SpinSystem, axis: Axis, slot: usize, l: u32, psi: &Vector) -> Result<f64> {
    let c = sys.mean_magnetization().commutator_power(&sys.pauli(axis, slot)?, l as usize)?;
    strong_seminorm_vec(&c, psi)
}

/// Combined seminorm of `β(σ_α^i ⊗ 1) − σ_α^i ⊗ 1`, with `β` the evolution
/// under the interaction alone.
pub fn interaction_spin_tail(model: &SpinBosonModel, axis: Axis, slot: usize, t: f64, f: &DecayFunction, k: u32, psi: &RelevantState) -> Result<f64> {
    let x = SpinBosonOperator::spin(&model.sys.pauli(axis, slot)?, &model.boson_space());
    let evolved = model.interaction_only()?.evolve(&x, t)?.operator;
    combined_seminorm(&evolved.sub(&x)?, f, k, psi)
}

/// Tail of the evolved boson mode beyond first order in `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeTail {
    /// Combined seminorm of `α(a) − a − iγtσ_3^V [a_L + a_L†, a]`.
    pub measured: f64,
    /// `max_n ‖[a_L + a_L†, a]_n‖ / (6 · 4^{n−2})` over `2 ≤ n ≤ n_max`.
    pub scale: f64,
    /// `(3/2) e^{|4tγ|} · scale`.
    pub envelope: f64,
}

pub fn mode_tail(model: &SpinBosonModel, t: f64, f: &DecayFunction, k: u32, psi: &RelevantState, n_max: u32) -> Result<ModeTail> {
    if model.modes() != 1 {
        return Err(Error::InvalidParameter("the mode tail is defined for one boson mode".into()));
    }
    let spec = &model.spec;
    let l = model.cutoff();
    let gamma = model.gammas[0];
    let a = FockOperator::annihilation(spec);
    let x = SpinBosonOperator::boson(model.volume(), &a);
    let evolved = model.sectored()?.evolve(&x, t)?.operator;
    let first = interaction_commutator_formula(l, 1, spec)?;
    let linear = SpinBosonOperator::product(&model.sys.mean_magnetization(), &first).scale(I * gamma * t);
    let rest = evolved.sub(&x)?.sub(&linear)?;
    let measured = combined_seminorm(&rest, f, k, psi)?;

    let phi = model.field(0)?;
    let mut c = a.clone();
    let mut scale = 0.0f64;
    for n in 1..=n_max {
        c = phi.commutator(&c)?;
        if n >= 2 {
            let v = lassner_sum_weighted(&c.clone().with_support(l + 1), f, k, Weighting::Shifted)?.upper();
            scale = scale.max(v / (6.0 * 4f64.powi(n as i32 - 2)));
        }
    }
    Ok(ModeTail { measured, scale, envelope: 1.5 * (4.0 * t * gamma).abs().exp() * scale })
}

/// `e^{iγmt(a_L + a_L†)} a e^{−iγmt(a_L + a_L†)}`: the evolved mode seen
/// from a spin state of magnetization `m`.
pub fn reduced_mode(gamma: f64, m: f64, cutoff: usize, t: f64, spec: &TruncationSpec) -> Result<FockOperator> {
    let al = FockOperator::annihilation(spec).cutoff(cutoff, 0)?;
    let h = al.add(&al.adjoint())?.scale(linalg::real(gamma * m));
    let a = FockOperator::annihilation(spec);
    let out = Evolution::new(&h)?.evolve(&a, t)?;
    out.increment(&a)?.add(&a)
}

/// Both refinement orders of the doubly indexed family `α_{V,L}(a)`, seen
/// at a spin state with one spin down.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderOfLimits {
    pub cutoffs: Vec<usize>,
    pub volumes: Vec<usize>,
    /// Successive gaps refining `L` first, then `|V|`.
    pub cutoff_first: Vec<f64>,
    /// Successive gaps refining `|V|` first, then `L`.
    pub volume_first: Vec<f64>,
    /// Distance between the last distinct estimates of the two orders.
    pub disagreement: f64,
    /// Larger of the two final steps.
    pub tolerance: f64,
}

impl OrderOfLimits {
    pub fn agree(&self) -> bool {
        self.disagreement <= self.tolerance
    }
}

/// Magnetization of `|V|` spins with exactly one down.
pub fn one_down_magnetization(volume: usize) -> f64 {
    1.0 - 2.0 / volume as f64
}

pub fn order_of_limits(gamma: f64, t: f64, f: &DecayFunction, k: u32, cutoffs: &[usize], volumes: &[usize], guard: usize) -> Result<OrderOfLimits> {
    if cutoffs.len() < 2 || volumes.len() < 2 {
        return Err(Error::InvalidParameter("need at least two cutoffs and two volumes".into()));
    }
    let lmax = *cutoffs.iter().max().unwrap_or(&0);
    let spec = TruncationSpec::with_guard(lmax, guard.max(2))?;
    let at = |l: usize, v: usize| reduced_mode(gamma, one_down_magnetization(v), l, t, &spec).map(|x| x.with_support(lmax + 1));
    let dist = |x: &FockOperator, y: &FockOperator| -> Result<f64> {
        let d = x.sub(y)?.with_support(lmax + 1);
        Ok(lassner_sum_weighted(&d, f, k, Weighting::Shifted)?.upper())
    };
    let (nl, nv) = (cutoffs.len(), volumes.len());
    let mut path_a = Vec::new();
    for &l in cutoffs {
        path_a.push(at(l, volumes[0])?);
    }
    for &v in &volumes[1..] {
        path_a.push(at(cutoffs[nl - 1], v)?);
    }
    let mut path_b = Vec::new();
    for &v in volumes {
        path_b.push(at(cutoffs[0], v)?);
    }
    for &l in &cutoffs[1..] {
        path_b.push(at(l, volumes[nv - 1])?);
    }
    let steps = |p: &[FockOperator]| -> Result<Vec<f64>> { p.windows(2).map(|w| dist(&w[1], &w[0])).collect() };
    let cutoff_first = steps(&path_a)?;
    let volume_first = steps(&path_b)?;
    // both paths end at the same pair; compare the estimates one step earlier
    let ea = &path_a[path_a.len() - 2];
    let eb = &path_b[path_b.len() - 2];
    let disagreement = dist(ea, eb)?;
    let tolerance = cutoff_first.last().copied().unwrap_or(0.0).max(volume_first.last().copied().unwrap_or(0.0));
    Ok(OrderOfLimits { cutoffs: cutoffs.to_vec(), volumes: volumes.to_vec(), cutoff_first, volume_first, disagreement, tolerance })
}

/// What to measure in a study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub model: ModelSpec,
    pub decay: DecayFunction,
    pub ks: Vec<u32>,
    pub times: Vec<f64>,
    pub cutoffs: Vec<usize>,
    /// Linear sizes of the spin lattices; `|V|` is the square of each.
    pub lattice_sides: Vec<usize>,
    pub guard: usize,
}

impl StudyPlan {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.decay.validate()?;
        if self.times.is_empty() {
            return Err(Error::InvalidParameter("the time grid is empty".into()));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("times must be finite".into()));
        }
        if self.ks.is_empty() {
            return Err(Error::InvalidParameter("no seminorm powers k given".into()));
        }
        if self.cutoffs.len() < 2 {
            return Err(Error::InvalidParameter("a study needs at least two cutoffs".into()));
        }
        if self.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("cutoffs must be strictly increasing".into()));
        }
        if let ModelSpec::SpinBoson { r: Some(r), .. } = self.model {
            if r != 2 {
                return Err(Error::InvalidParameter(format!("studies run on square lattices (r = 2), got r = {r}")));
            }
        }
        Ok(())
    }
}

/// Runs every check that applies to the plan's model; a check that fails to
/// compute becomes a failed row carrying the error.
pub fn run_study(plan: &StudyPlan) -> Result<ConvergenceReport> {
    plan.validate()?;
    let mut report = ConvergenceReport::new(plan.model.name());
    let mut jobs: Vec<(f64, u32)> = Vec::new();
    for &t in &plan.times {
        for &k in &plan.ks {
            jobs.push((t, k));
        }
    }
    let rows: Vec<Vec<ReportRow>> = jobs.par_iter().map(|&(t, k)| study_point(plan, t, k)).collect();
    report.rows = rows.into_iter().flatten().collect();
    report.sort();
    Ok(report)
}

fn study_point(plan: &StudyPlan, t: f64, k: u32) -> Vec<ReportRow> {
    let f = &plan.decay;
    // checks that do not depend on t (or on k) run once
    let first_t = t.to_bits() == plan.times[0].to_bits();
    let first_k = k == plan.ks[0];
    let mut rows = Vec::new();
    let mut guarded = |check: &str, r: Result<Vec<ReportRow>>| match r {
        Ok(v) => rows.extend(v),
        Err(e) => rows.push(ReportRow::failed(check, t, f, k, &e)),
    };
    match &plan.model {
        ModelSpec::Free => {
            guarded("free_gap", free_rows(plan, t, k));
            guarded("induction", induction_rows(plan, t, k));
        }
        ModelSpec::TwoMode => {
            if first_k {
                guarded("two_mode_b_invariant", two_mode_rows(plan, t, k));
            }
        }
        ModelSpec::Displaced { .. } => guarded("displaced_gap", displaced_rows(plan, t, k)),
        ModelSpec::SpinBoson { j, gamma, .. } => {
            if first_t && first_k {
                guarded("spin_commutator", spin_commutator_rows(plan, k));
            }
            if first_t {
                guarded("field_power", field_power_rows(plan, k));
            }
            guarded("interaction_spin_tail", interaction_tail_rows(plan, *gamma, t, k));
            guarded("mode_tail", mode_tail_rows(plan, *gamma, t, k));
            guarded("spin_closed_form", spin_closed_form_rows(plan, *j, *gamma, t, k));
            guarded("order_of_limits", order_rows(plan, *gamma, t, k));
        }
        ModelSpec::SpinBosonMulti { .. } => guarded("multi_mode_gap", multi_rows(plan, t, k)),
    }
    rows
}

fn pairs(cutoffs: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    cutoffs.windows(2).map(|w| (w[0], w[1]))
}

fn free_rows(plan: &StudyPlan, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    for (m, l) in pairs(&plan.cutoffs) {
        let gap = free_gap(m, l, t, f, k, plan.guard)?;
        rows.push(
            ReportRow::new("free_gap", t, f, k, gap.sum.upper())
                .cutoffs(l, Some(m))
                .opnorm(gap.opnorm)
                .bounded_by(bound_free_gap(f, k, m, l)),
        );
        if let Some(p) = previous {
            rows.push(ReportRow::new("free_gap_decreasing", t, f, k, gap.sum.upper()).cutoffs(l, Some(m)).strictly_below(p));
        }
        previous = Some(gap.sum.upper());
    }
    Ok(rows)
}

fn induction_rows(plan: &StudyPlan, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    pairs(&plan.cutoffs)
        .map(|(m, l)| {
            let c = induction_check(m, l, t, f, k, plan.guard)?;
            Ok(ReportRow::new("induction", t, f, k, c.measured).cutoffs(l, Some(m)).bounded_by(c.bound))
        })
        .collect()
}

fn two_mode_rows(plan: &StudyPlan, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let per_mode = plan.cutoffs.last().copied().unwrap_or(1) + plan.guard.max(2);
    let frame = TwoModeFrame::new(per_mode)?;
    // every regularization evolves B trivially, so all gaps vanish
    let b = frame.big_b();
    let mut rows = Vec::new();
    for &l in &plan.cutoffs {
        let out = evolve_oracle(&frame.hamiltonian(l)?, b, t)?;
        let dev = out.operator.deviation(b)?;
        rows.push(ReportRow::new("two_mode_b_invariant", t, f, k, dev).cutoffs(l, None).bounded_by(1e-10));
    }
    Ok(rows)
}

fn displaced_rows(plan: &StudyPlan, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let lmax = plan.cutoffs.last().copied().unwrap_or(1);
    let spec = TruncationSpec::with_guard(lmax, plan.guard.max(2))?;
    let a = FockOperator::annihilation(&spec);
    let expr = plan.model.hamiltonian()?;
    let evolve = |l: usize| -> Result<EvolutionResult<FockOperator>> {
        let h = expr.boson_operator(&spec.space(), Some(l))?;
        let mut out = evolve_oracle(&h, &a, t)?;
        out.increment_support = Some(l + 1);
        Ok(out.with_cutoff(l))
    };
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    for (m, l) in pairs(&plan.cutoffs) {
        let gap = cauchy_gap(&a, &evolve(l)?, &evolve(m)?, f, k, Weighting::Number)?;
        let mut row = ReportRow::new("displaced_gap", t, f, k, gap.sum.upper()).cutoffs(l, Some(m)).opnorm(gap.opnorm);
        if let Some(p) = previous {
            row = row.strictly_below(p);
        }
        previous = Some(gap.sum.upper());
        rows.push(row);
    }
    Ok(rows)
}

fn multi_rows(plan: &StudyPlan, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let ModelSpec::SpinBosonMulti { j, gammas, sites } = &plan.model else {
        return Err(Error::InvalidParameter("not a multi-mode model".into()));
    };
    let f = &plan.decay;
    let lmax = plan.cutoffs.last().copied().unwrap_or(1);
    let spec = TruncationSpec::with_guard(lmax, plan.guard.max(2))?;
    let sys = SpinSystem::chain(*sites)?;
    let psi = RelevantState::all_up(&sys);
    let evolved = |l: usize| -> Result<SpinBosonOperator> {
        let model = SpinBosonModel::multi(*j, gammas.clone(), sys.clone(), spec.with_cutoff(l)?)?;
        let a0 = FockOperator::lowering(&model.boson_space(), 0)?;
        Ok(model.sectored()?.evolve(&SpinBosonOperator::boson(*sites, &a0), t)?.operator)
    };
    let mut rows = Vec::new();
    for (m, l) in pairs(&plan.cutoffs) {
        let d = evolved(l)?.sub(&evolved(m)?)?;
        let v = combined_seminorm(&d, f, k, &psi)?;
        rows.push(ReportRow::new("multi_mode_gap", t, f, k, v).cutoffs(l, Some(m)).volume(*sites));
    }
    Ok(rows)
}

fn volumes(plan: &StudyPlan) -> Vec<usize> {
    plan.lattice_sides.iter().map(|s| s * s).collect()
}

fn spin_commutator_rows(plan: &StudyPlan, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let mut rows = Vec::new();
    for &side in &plan.lattice_sides {
        let sys = SpinSystem::square(side)?;
        let psi = RelevantState::all_up(&sys);
        for l in 0..=3u32 {
            let v = spin_commutator_norm(&sys, Axis::X, 0, l, psi.vector())?;
            rows.push(
                ReportRow::new(format!("spin_commutator_l{l}"), 0.0, f, k, v)
                    .volume(sys.len())
                    .bounded_by(bound_spin_commutator(sys.len(), l)),
            );
        }
    }
    Ok(rows)
}

fn field_power_rows(plan: &StudyPlan, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let mut rows = Vec::new();
    for &l in &plan.cutoffs {
        let spec = TruncationSpec::with_guard(l, plan.guard.max(2))?;
        for p in 1..=3u32 {
            let (op, sum) = field_power_seminorm(&spec, l, p, f, k)?;
            rows.push(
                ReportRow::new(format!("field_power_l{p}"), 0.0, f, k, sum)
                    .cutoffs(l, None)
                    .opnorm(op)
                    .bounded_by(bound_field_power(f, k, l, p)?),
            );
        }
    }
    Ok(rows)
}

fn spin_boson_model(plan: &StudyPlan, j: f64, gamma: f64, side: usize, cutoff: usize) -> Result<SpinBosonModel> {
    let spec = TruncationSpec::with_guard(cutoff, plan.guard.max(2))?;
    SpinBosonModel::new(j, gamma, SpinSystem::square(side)?, spec)
}

fn interaction_tail_rows(plan: &StudyPlan, gamma: f64, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let mut rows = Vec::new();
    for &side in &plan.lattice_sides {
        for &l in &plan.cutoffs {
            let model = spin_boson_model(plan, 0.0, gamma, side, l)?;
            let psi = RelevantState::all_up(&model.sys);
            let v = interaction_spin_tail(&model, Axis::X, 0, t, f, k, &psi)?;
            rows.push(
                ReportRow::new("interaction_spin_tail", t, f, k, v)
                    .cutoffs(l, None)
                    .volume(model.volume())
                    .bounded_by(bound_interaction_tail(f, k, l, model.volume(), t, gamma)?),
            );
        }
    }
    Ok(rows)
}

fn mode_tail_rows(plan: &StudyPlan, gamma: f64, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let side = plan.lattice_sides.iter().copied().find(|&s| s >= 2).unwrap_or(1);
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    for &l in &plan.cutoffs {
        let model = spin_boson_model(plan, 1.0, gamma, side, l)?;
        let psi = RelevantState::all_up(&model.sys);
        let tail = mode_tail(&model, t, f, k, &psi, 6)?;
        rows.push(
            ReportRow::new("mode_tail_envelope", t, f, k, tail.measured)
                .cutoffs(l, None)
                .volume(model.volume())
                .bounded_by(tail.envelope),
        );
        if let Some(p) = previous {
            rows.push(
                ReportRow::new("mode_tail_decreasing", t, f, k, tail.measured)
                    .cutoffs(l, None)
                    .volume(model.volume())
                    .strictly_below(p),
            );
        }
        previous = Some(tail.measured);
    }
    Ok(rows)
}

fn spin_closed_form_rows(plan: &StudyPlan, j: f64, gamma: f64, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let l = plan.cutoffs[0];
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    for &side in &plan.lattice_sides {
        let model = spin_boson_model(plan, j, gamma, side, l)?;
        let psi = RelevantState::all_up(&model.sys);
        let c = alpha_spin_closed_form(&model, Axis::X, 0, t, f, k, &psi)?;
        rows.push(ReportRow::new("spin_closed_form_finite", t, f, k, c.residual_finite).cutoffs(l, None).volume(model.volume()));
        let mut row = ReportRow::new("spin_closed_form_limit", t, f, k, c.residual_limit).cutoffs(l, None).volume(model.volume());
        if let Some(p) = previous {
            row = row.strictly_below(p);
        }
        previous = Some(c.residual_limit);
        rows.push(row);
    }
    Ok(rows)
}

fn order_rows(plan: &StudyPlan, gamma: f64, t: f64, k: u32) -> Result<Vec<ReportRow>> {
    let f = &plan.decay;
    let vols: Vec<usize> = volumes(plan).into_iter().filter(|&v| v > 2).collect();
    // nothing to compare without two lattices past the degenerate |V| ≤ 2
    if vols.len() < 2 {
        return Ok(Vec::new());
    }
    let o = order_of_limits(gamma, t, f, k, &plan.cutoffs, &vols, plan.guard)?;
    Ok(vec![ReportRow::new("order_of_limits", t, f, k, o.disagreement).bounded_by(o.tolerance)])
}

/// Distance between the regularized dynamics of one spin component computed
/// sector by sector and on the full tensor space.
pub fn sectored_vs_dense(model: &SpinBosonModel, axis: Axis, slot: usize, t: f64) -> Result<f64> {
    let x = SpinBosonOperator::spin(&model.sys.pauli(axis, slot)?, &model.boson_space());
    let a = SpinBosonOperator::boson(model.volume(), &FockOperator::lowering(&model.boson_space(), 0)?);
    let h = model.hamiltonian()?;
    let sectored = model.sectored()?;
    let mut worst = 0.0f64;
    for y in [&x, &a] {
        let s = sectored.evolve(y, t)?.operator;
        let d = crate::dynamics::evolve_oracle_tensor(&h, y, t)?.operator;
        worst = worst.max(s.distance(&d)?);
    }
    Ok(worst)
}

/// The free evolution at cutoff `L` against its closed form, entrywise on
/// the trusted region.
pub fn free_closed_form_residual(spec: &TruncationSpec, cutoff: usize, t: f64) -> Result<f64> {
    let oracle = free_evolution(spec, cutoff, t)?;
    let closed = crate::dynamics::closed_form_free(cutoff, t, spec)?;
    oracle.operator.deviation(&closed.operator)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_gaps_meet_bound_and_shrink() {
        let f = DecayFunction::exponential(1.0);
        for k in 0..=2 {
            let mut last = f64::INFINITY;
            for (m, l) in [(3, 6), (6, 12), (12, 24)] {
                let g = free_gap(m, l, 0.5, &f, k, 6).unwrap();
                assert_eq!(g.sum.truncation_bound, 0.0);
                assert!(g.sum.value <= bound_free_gap(&f, k, m, l), "k={k} ({m},{l}): {} > {}", g.sum.value, bound_free_gap(&f, k, m, l));
                assert!(g.sum.value < last);
                last = g.sum.value;
            }
        }
    }

    #[test]
    fn spin_commutators_meet_bound() {
        for side in 1..=3 {
            let sys = SpinSystem::square(side).unwrap();
            let psi = RelevantState::all_up(&sys);
            for l in 0..=3 {
                let v = spin_commutator_norm(&sys, Axis::X, 0, l, psi.vector()).unwrap();
                assert!(within(v, bound_spin_commutator(sys.len(), l)));
            }
        }
    }

    #[test]
    fn reduced_mode_matches_sectored_evolution() {
        let (gamma, t) = (0.4, 0.7);
        let f = DecayFunction::exponential(1.0);
        for side in [1usize, 2] {
            let l = 4;
            let spec = TruncationSpec::with_guard(l, 3).unwrap();
            let model = SpinBosonModel::new(1.3, gamma, SpinSystem::chain(side * side).unwrap(), spec.clone()).unwrap();
            let v = model.volume();
            let psi = if v >= 2 { RelevantState::with_down(&model.sys, 0).unwrap() } else { RelevantState::all_up(&model.sys) };
            let m = psi.magnetization();
            let a = FockOperator::annihilation(&spec);
            let full = model.sectored().unwrap().evolve(&SpinBosonOperator::boson(v, &a), t).unwrap().operator;
            let reduced = reduced_mode(gamma, m, l, t, &spec).unwrap();
            let d = full.sub(&SpinBosonOperator::boson(v, &reduced)).unwrap();
            assert!(combined_seminorm(&d, &f, 1, &psi).unwrap() < 1e-10);
        }
    }

    #[test]
    fn report_sort_is_deterministic() {
        let f = DecayFunction::exponential(1.0);
        let mut r = ConvergenceReport::new("x");
        r.rows.push(ReportRow::new("b", 1.0, &f, 0, 1.0));
        r.rows.push(ReportRow::new("a", 2.0, &f, 1, 1.0).cutoffs(4, Some(2)));
        r.rows.push(ReportRow::new("a", 1.0, &f, 1, 1.0).cutoffs(4, Some(2)));
        r.sort();
        let order: Vec<(String, f64)> = r.rows.iter().map(|x| (x.check.clone(), x.t)).collect();
        assert_eq!(order, vec![("a".into(), 1.0), ("a".into(), 2.0), ("b".into(), 1.0)]);
    }
}
