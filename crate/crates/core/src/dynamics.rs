//! Heisenberg evolution `X ↦ e^{iHt} X e^{−iHt}` by eigendecomposition, by
//! the multiple-commutator series, and by closed forms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{Band, FockOperator, Growth, TruncationSpec};
use crate::linalg::{self, HermitianEigen, Mat, C64, I, ONE};
use crate::models::SpinBosonModel;
use crate::seminorm::{combined_seminorm, DecayFunction};
use crate::spin::{Axis, RelevantState, SpinOperator, SpinSystem};
use crate::tensor::SpinBosonOperator;

pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    Series,
    ClosedForm,
    Sectored,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult<O> {
    pub operator: O,
    pub time: f64,
    pub method: Method,
    pub cutoff: Option<usize>,
    pub volume: Option<usize>,
    pub series_terms: Option<usize>,
    pub remainder_bound: Option<f64>,
    pub unitarity_defect: Option<f64>,
    /// When set, `operator − X` vanishes outside grades `≤ increment_support`.
    pub increment_support: Option<usize>,
}

impl<O> EvolutionResult<O> {
    fn new(operator: O, time: f64, method: Method) -> Self {
        EvolutionResult {
            operator,
            time,
            method,
            cutoff: None,
            volume: None,
            series_terms: None,
            remainder_bound: None,
            unitarity_defect: None,
            increment_support: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn with_volume(mut self, volume: usize) -> Self {
        self.volume = Some(volume);
        self
    }
}

impl EvolutionResult<FockOperator> {
    /// `α(X) − X`, carrying the support that the evolution guarantees.
    pub fn increment(&self, x: &FockOperator) -> Result<FockOperator> {
        let d = self.operator.sub(x)?;
        Ok(match self.increment_support {
            Some(k) => d.with_support(k),
            None => d,
        })
    }
}

/// What the trust rule needs to know about a Hamiltonian.
#[derive(Clone, Copy, Debug)]
struct HamiltonianMeta {
    trusted: usize,
    mixing: usize,
    support: Option<usize>,
}

impl HamiltonianMeta {
    fn of(h: &FockOperator) -> Result<Self> {
        let trusted = h
            .trusted()
            .ok_or_else(|| Error::Untrusted(format!("hamiltonian `{}` has an empty trusted region", h.label())))?;
        let mixing = h.mixing().ok_or_else(|| {
            Error::Untrusted(format!("hamiltonian `{}` has no bound on where it changes the grade", h.label()))
        })?;
        if mixing > trusted {
            return Err(Error::Untrusted(format!(
                "hamiltonian `{}` changes grade up to {mixing} but is trusted only to {trusted}",
                h.label()
            )));
        }
        let support = h.support().filter(|&s| s <= trusted);
        Ok(HamiltonianMeta { trusted, mixing, support })
    }
}

/// Diagonalized Hamiltonian, reusable across times.
#[derive(Clone, Debug)]
pub struct Evolution {
    hamiltonian: FockOperator,
    eig: HermitianEigen,
    meta: HamiltonianMeta,
    defect: f64,
}

impl Evolution {
    pub fn new(h: &FockOperator) -> Result<Self> {
        let meta = HamiltonianMeta::of(h)?;
        let herm = linalg::hermiticity_defect(&h.trusted_block());
        if !(herm <= HERMITICITY_TOLERANCE) {
            return Err(Error::NotHermitian(herm));
        }
        let eig = HermitianEigen::new(h.entries());
        let defect = linalg::unitarity_defect(&eig.vectors);
        if !(defect <= UNITARITY_TOLERANCE) {
            return Err(Error::NonUnitary(defect));
        }
        Ok(Evolution { hamiltonian: h.clone(), eig, meta, defect })
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.defect
    }

    /// `e^{iHt}`.
    pub fn propagator(&self, t: f64) -> Mat {
        self.eig.propagator(t)
    }

    /// `e^{iHt} X e^{−iHt}`.
    pub fn evolve(&self, x: &FockOperator, t: f64) -> Result<EvolutionResult<FockOperator>> {
        let u = self.propagator(t);
        let op = sandwich(&u, self.meta, x, &u, self.meta)?;
        let mut out = EvolutionResult::new(op, t, Method::Oracle);
        out.unitarity_defect = Some(self.defect);
        if let Some(s) = self.meta.support {
            out.increment_support = Some(s + x.band().lower.max(x.band().raise));
        }
        Ok(out)
    }
}

/// `U_l X U_r†` with trusted-region bookkeeping.
///
/// Outside grades `≤ K`, with `K` the larger mixing grade, both unitaries
/// preserve the grade, so an entry between grades `≤ T` only involves
/// entries of `X` between grades `≤ max(T, K)`.
fn sandwich(ul: &Mat, ml: HamiltonianMeta, x: &FockOperator, ur: &Mat, mr: HamiltonianMeta) -> Result<FockOperator> {
    let tx = x.trusted().ok_or_else(|| Error::Untrusted(format!("`{}` has an empty trusted region", x.label())))?;
    let k = ml.mixing.max(mr.mixing);
    let trusted = tx.min(ml.trusted).min(mr.trusted);
    if k > trusted {
        return Err(Error::Untrusted(format!(
            "evolution mixes grades up to {k}, beyond the trusted region {trusted} of `{}`",
            x.label()
        )));
    }
    let entries = linalg::mul3(ul, x.entries(), &ur.adjoint());
    let band = Band { lower: x.band().lower + k, raise: x.band().raise + k };
    let growth = match x.growth() {
        Some(g) if x.space().is_single_mode() => {
            let spread = (x.band().width() + 1) as f64;
            Some(Growth { coeff: (spread * g.coeff).max(linalg::max_abs(&entries)), ..g })
        }
        _ => None,
    };
    let support = x.support().map(|s| s.max(k));
    let label = format!("α({})", x.label());
    Ok(FockOperator::from_parts(x.space().clone(), entries, Some(trusted), band, support, growth, label)?
        .with_mixing(x.mixing().map(|m| m.max(k))))
}

/// Eigendecomposition route.
pub fn evolve_oracle(h: &FockOperator, x: &FockOperator, t: f64) -> Result<EvolutionResult<FockOperator>> {
    Evolution::new(h)?.evolve(x, t)
}

/// Operators the commutator series can act on.
pub trait Observable: Clone {
    /// `[h, self]`.
    fn bracket(&self, h: &Self) -> Result<Self>;
    fn add_scaled(&self, c: C64, rhs: &Self) -> Result<Self>;
    fn trusted_grade(&self) -> Option<usize>;
    /// Certified bound on the norm of the represented operator.
    fn norm_bound(&self) -> Option<f64>;
}

impl Observable for FockOperator {
    fn bracket(&self, h: &Self) -> Result<Self> {
        h.commutator(self)
    }

    fn add_scaled(&self, c: C64, rhs: &Self) -> Result<Self> {
        FockOperator::add_scaled(self, c, rhs)
    }

    fn trusted_grade(&self) -> Option<usize> {
        self.trusted()
    }

    fn norm_bound(&self) -> Option<f64> {
        FockOperator::norm_bound(self)
    }
}

impl Observable for SpinBosonOperator {
    fn bracket(&self, h: &Self) -> Result<Self> {
        h.commutator(self)
    }

    fn add_scaled(&self, c: C64, rhs: &Self) -> Result<Self> {
        SpinBosonOperator::add_scaled(self, c, rhs)
    }

    fn trusted_grade(&self) -> Option<usize> {
        self.trusted()
    }

    fn norm_bound(&self) -> Option<f64> {
        let t = self.trusted()?;
        let supported = self.blocks().all(|(_, _, b)| b.support().is_some_and(|s| s <= t));
        supported.then(|| linalg::spectral_norm(&self.to_dense()))
    }
}

/// `[h, [h, … [h, x]]]` with `depth` brackets.
pub fn multiple_commutator<O: Observable>(h: &O, x: &O, depth: usize) -> Result<O> {
    let mut acc = x.clone();
    for d in 1..=depth {
        acc = acc.bracket(h)?;
        if acc.trusted_grade().is_none() {
            return Err(Error::TrustExhausted { depth: d });
        }
    }
    Ok(acc)
}

/// Hard stop for the series.
pub const MAX_SERIES_TERMS: usize = 400;

/// `Σ_{m ≤ M} (it)^m/m! [H, X]_m`, with `M` the first order at which the
/// certified remainder drops below `tol`.
///
/// The remainder is anchored at the last computed commutator `C_M`:
/// `Σ_{m>M} |t|^m (2‖H‖)^{m−M} ‖C_M‖ / m!`. Anchoring at `C_M` rather than
/// at `X` keeps the bound finite when `X` itself is unbounded.
pub fn evolve_series<O: Observable>(h: &O, x: &O, t: f64, tol: f64) -> Result<EvolutionResult<O>> {
    if t == 0.0 {
        let mut out = EvolutionResult::new(x.clone(), t, Method::Series);
        out.series_terms = Some(0);
        out.remainder_bound = Some(0.0);
        return Ok(out);
    }
    let hn = h
        .norm_bound()
        .ok_or_else(|| Error::Remainder("the hamiltonian is not certified bounded".into()))?;
    let y = 2.0 * hn * t.abs();
    let mut sum = x.clone();
    let mut term = x.clone();
    // |t|^m / m!
    let mut weight = 1.0;
    let mut phase = ONE;
    for m in 1..=MAX_SERIES_TERMS {
        term = term.bracket(h)?;
        if term.trusted_grade().is_none() {
            return Err(Error::TrustExhausted { depth: m });
        }
        weight *= t.abs() / m as f64;
        phase *= I * t.signum();
        sum = sum.add_scaled(phase * weight, &term)?;
        let mf = m as f64;
        if y < mf + 2.0 {
            let Some(cn) = term.norm_bound() else { continue };
            let remainder = cn * weight * (y / (mf + 1.0)) / (1.0 - y / (mf + 2.0));
            if remainder <= tol {
                let mut out = EvolutionResult::new(sum, t, Method::Series);
                out.series_terms = Some(m);
                out.remainder_bound = Some(remainder);
                return Ok(out);
            }
        }
    }
    Err(Error::Remainder(format!("no certified remainder below {tol:e} within {MAX_SERIES_TERMS} terms")))
}

/// `F_L(t) = 1 − Q_L + e^{itL} Π_L + e^{−it} Q_{L−1}`.
pub fn free_phase(cutoff: usize, t: f64, spec: &TruncationSpec) -> Result<FockOperator> {
    let d = spec.ambient_dim;
    if cutoff + 2 > d {
        return Err(Error::Range { index: cutoff + 2, ambient: d });
    }
    let space = spec.space();
    let phase_top = (I * t * cutoff as f64).exp();
    let phase_low = (-I * t).exp();
    let values = move |n: usize| -> C64 {
        if n < cutoff {
            phase_low
        } else if n == cutoff {
            phase_top
        } else {
            ONE
        }
    };
    let dim = space.dim();
    let m = Mat::from_fn(dim, dim, |r, c| if r == c { values(r) } else { C64::new(0.0, 0.0) });
    FockOperator::from_parts(space, m, Some(d), Band::DIAGONAL, None, Some(Growth::bounded(1.0)), format!("F_{cutoff}({t})"))
}

/// `F_L(t) a`, the evolution of `a` under `Q_L N Q_L`.
pub fn closed_form_free(cutoff: usize, t: f64, spec: &TruncationSpec) -> Result<EvolutionResult<FockOperator>> {
    let f = free_phase(cutoff, t, spec)?;
    let a = FockOperator::annihilation(spec);
    let op = f.compose(&a)?.with_label(format!("α_{cutoff}({t})(a)"));
    let mut out = EvolutionResult::new(op, t, Method::ClosedForm).with_cutoff(cutoff);
    out.increment_support = Some(cutoff + 1);
    Ok(out)
}

/// `(L^m Π_L + (−1)^m Q_{L−1}) a`, for `m ≥ 1`.
pub fn free_commutator_formula(cutoff: usize, m: u32, spec: &TruncationSpec) -> Result<FockOperator> {
    if m == 0 {
        return Err(Error::InvalidParameter("the closed form holds for m ≥ 1; order 0 is a itself".into()));
    }
    let a = FockOperator::annihilation(spec);
    let pi = FockOperator::projection_pi(cutoff, spec)?.scale(linalg::real((cutoff as f64).powi(m as i32)));
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let low = match cutoff {
        0 => FockOperator::zero(&spec.space()),
        l => FockOperator::projection_q(l - 1, spec)?.scale(linalg::real(sign)),
    };
    pi.add(&low)?.compose(&a)
}

/// `[a_L + a_L†, a]_n` from its expansion in ladder operators and
/// projections, for `n ≤ 2`.
pub fn interaction_commutator_formula(cutoff: usize, n: u32, spec: &TruncationSpec) -> Result<FockOperator> {
    let a = FockOperator::annihilation(spec);
    let ad = a.adjoint();
    let pi = |l: usize| FockOperator::projection_pi(l, spec);
    let l = cutoff;
    match n {
        0 => Ok(a),
        1 => {
            // a² Π_{L+1} + a a† Π_L − Q_L
            let t1 = a.compose(&a)?.compose(&pi(l + 1)?)?;
            let t2 = a.compose(&ad)?.compose(&pi(l)?)?;
            t1.add(&t2)?.sub(&FockOperator::projection_q(l, spec)?)
        }
        2 => {
            if l == 0 {
                return Err(Error::InvalidParameter("the second-order expansion needs L ≥ 1".into()));
            }
            // a³ Π_{L+1} + a² a† (Π_L + Π_{L+1}) − 2a Π_{L+1} − a (a†)² Π_{L−1}
            let a2 = a.compose(&a)?;
            let t1 = a2.compose(&a)?.compose(&pi(l + 1)?)?;
            let t2 = a2.compose(&ad)?.compose(&pi(l)?.add(&pi(l + 1)?)?)?;
            let t3 = a.compose(&pi(l + 1)?)?.scale(linalg::real(2.0));
            let t4 = a.compose(&ad)?.compose(&ad)?.compose(&pi(l - 1)?)?;
            t1.add(&t2)?.sub(&t3)?.sub(&t4)
        }
        _ => Err(Error::InvalidParameter(format!("no closed expansion of order {n}"))),
    }
}

/// Evolution under a Hamiltonian that is block diagonal over the
/// magnetization sectors of a spin system, `H = ⊕_m h_m`.
pub struct SectorEvolution {
    sites: usize,
    /// Sector (number of up spins) of each spin basis state.
    sector_of: Vec<usize>,
    sectors: Vec<Evolution>,
}

impl SectorEvolution {
    /// `hamiltonian(m)` builds the boson Hamiltonian of the sector with
    /// magnetization `m`.
    pub fn new(sys: &SpinSystem, hamiltonian: impl Fn(f64) -> Result<FockOperator> + Sync) -> Result<Self> {
        let sectors = sys.sectors();
        let evolutions: Vec<Evolution> = sectors
            .par_iter()
            .map(|s| hamiltonian(s.magnetization).and_then(|h| Evolution::new(&h)))
            .collect::<Result<_>>()?;
        let sector_of = (0..sys.dim()).map(|b| sys.ups(b)).collect();
        Ok(SectorEvolution { sites: sys.len(), sector_of, sectors: evolutions })
    }

    pub fn sector(&self, ups: usize) -> &Evolution {
        &self.sectors[ups]
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.sectors.iter().map(|e| e.defect).fold(0.0, f64::max)
    }

    /// `α(X)_{s s'} = U_{m(s)} X_{s s'} U_{m(s')}†`.
    pub fn evolve(&self, x: &SpinBosonOperator, t: f64) -> Result<EvolutionResult<SpinBosonOperator>> {
        if x.sites() != self.sites {
            return Err(Error::DimensionMismatch { left: 1 << self.sites, right: x.spin_dim() });
        }
        let props: Vec<Mat> = self.sectors.par_iter().map(|e| e.propagator(t)).collect();
        let op = x.map_blocks(|r, c, block| {
            let (sr, sc) = (self.sector_of[r], self.sector_of[c]);
            sandwich(&props[sr], self.sectors[sr].meta, block, &props[sc], self.sectors[sc].meta)
        })?;
        let mut out = EvolutionResult::new(op.with_label(format!("α({})", x.label())), t, Method::Sectored);
        out.unitarity_defect = Some(self.unitarity_defect());
        out.volume = Some(self.sites);
        Ok(out)
    }
}

/// Dense matrix exponential on the full tensor space.
pub fn evolve_oracle_tensor(h: &SpinBosonOperator, x: &SpinBosonOperator, t: f64) -> Result<EvolutionResult<SpinBosonOperator>> {
    let th = h.trusted().ok_or_else(|| Error::Untrusted("hamiltonian has an empty trusted region".into()))?;
    let tx = x.trusted().ok_or_else(|| Error::Untrusted("observable has an empty trusted region".into()))?;
    let mut mixing = 0;
    for (_, _, b) in h.blocks() {
        mixing = mixing.max(b.mixing().ok_or_else(|| Error::Untrusted("hamiltonian block without a mixing bound".into()))?);
    }
    let trusted = th.min(tx);
    if mixing > trusted {
        return Err(Error::Untrusted(format!("evolution mixes grades up to {mixing}, beyond {trusted}")));
    }
    let dense = h.to_dense();
    let herm = linalg::hermiticity_defect(&dense);
    if !(herm <= HERMITICITY_TOLERANCE) {
        return Err(Error::NotHermitian(herm));
    }
    // a power series rather than a diagonalization, so that this route
    // shares no numerics with the sector-blocked one
    let u = linalg::expm(&(dense * (I * t)));
    let defect = linalg::unitarity_defect(&u);
    if !(defect <= UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary(defect));
    }
    let evolved = linalg::mul3(&u, &x.to_dense(), &u.adjoint());
    let op = SpinBosonOperator::from_dense(x.sites(), x.boson_space(), &evolved, Some(trusted))?;
    let mut out = EvolutionResult::new(op, t, Method::Oracle);
    out.unitarity_defect = Some(defect);
    Ok(out)
}

/// Closed-form candidates for an evolved spin component and their
/// distances to the exact evolution.
#[derive(Clone, Debug)]
pub struct SpinClosedForm {
    pub exact: SpinBosonOperator,
    /// `σ_α cos²S − 2ε_{3αβ} σ_β sin S cos S + σ_3 σ_α σ_3 sin²S`, `S = 2Jtσ_3^V`.
    pub limit: SpinBosonOperator,
    /// The same with each `σ` replaced by its evolution under the
    /// interaction alone.
    pub finite: SpinBosonOperator,
    pub residual_limit: f64,
    pub residual_finite: f64,
}

/// Evolves `σ_α^i ⊗ 1` under the spin–boson model and compares it with the
/// closed-form candidates in the combined seminorm at `Ψ`.
pub fn alpha_spin_closed_form(
    model: &SpinBosonModel,
    axis: Axis,
    slot: usize,
    t: f64,
    decay: &DecayFunction,
    k: u32,
    psi: &RelevantState,
) -> Result<SpinClosedForm> {
    let sys = &model.sys;
    let space = model.boson_space();
    let lift = |s: &SpinOperator| SpinBosonOperator::spin(s, &space);
    let s3v = sys.mean_magnetization();
    let angle = |z: C64| z * (2.0 * model.j * t);
    let cos2 = s3v.map_diagonal(|z| linalg::real(angle(z).re.cos().powi(2)))?;
    let sin2 = s3v.map_diagonal(|z| linalg::real(angle(z).re.sin().powi(2)))?;
    let sincos = s3v.map_diagonal(|z| linalg::real(angle(z).re.sin() * angle(z).re.cos()))?;
    let sigma = |a: Axis| sys.pauli(a, slot);
    let z = sigma(Axis::Z)?;

    let exact = model.sectored()?.evolve(&lift(&sigma(axis)?), t)?.operator;

    // spin-only candidate
    let mut limit = sigma(axis)?.compose(&cos2)?;
    for beta in Axis::ALL {
        let eps = Axis::epsilon(Axis::Z, axis, beta);
        if eps != 0.0 {
            limit = limit.add_scaled(linalg::real(-2.0 * eps), &sigma(beta)?.compose(&sincos)?)?;
        }
    }
    limit = limit.add(&z.compose(&sigma(axis)?)?.compose(&z)?.compose(&sin2)?)?;
    let limit = lift(&limit);

    let inner = model.interaction_only()?;
    let beta_of = |a: Axis| -> Result<SpinBosonOperator> { Ok(inner.evolve(&lift(&sigma(a)?), t)?.operator) };
    let mut finite = beta_of(axis)?.compose(&lift(&cos2))?;
    for beta in Axis::ALL {
        let eps = Axis::epsilon(Axis::Z, axis, beta);
        if eps != 0.0 {
            finite = finite.add_scaled(linalg::real(-2.0 * eps), &beta_of(beta)?.compose(&lift(&sincos))?)?;
        }
    }
    let zl = lift(&z);
    finite = finite.add(&zl.compose(&beta_of(axis)?)?.compose(&zl)?.compose(&lift(&sin2))?)?;

    let residual_limit = combined_seminorm(&exact.sub(&limit)?, decay, k, psi)?;
    let residual_finite = combined_seminorm(&exact.sub(&finite)?, decay, k, psi)?;
    Ok(SpinClosedForm { exact, limit, finite, residual_limit, residual_finite })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: usize, l: usize) -> TruncationSpec {
        TruncationSpec::new(d, l, d - l).unwrap()
    }

    #[test]
    fn free_evolution_of_annihilation() {
        let s = spec(10, 9);
        let n = FockOperator::number(&s);
        let a = FockOperator::annihilation(&s);
        let out = evolve_oracle(&n, &a, 0.7).unwrap();
        let expected = a.scale((-I * 0.7).exp());
        assert!(out.operator.deviation(&expected).unwrap() < 1e-12);
        assert_eq!(out.operator.trusted(), Some(10));
    }

    #[test]
    fn unbounded_coupling_is_refused() {
        let s = spec(10, 9);
        let a = FockOperator::annihilation(&s);
        let h = a.add(&a.adjoint()).unwrap();
        assert!(matches!(evolve_oracle(&h, &a, 1.0), Err(Error::Untrusted(_))));
        assert!(matches!(multiple_commutator(&h, &a, 40), Err(Error::TrustExhausted { .. })));
    }

    #[test]
    fn non_hermitian_is_refused() {
        let s = spec(6, 3);
        let a = FockOperator::annihilation(&s).cutoff(3, 0).unwrap();
        assert!(matches!(Evolution::new(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn series_agrees_with_oracle_for_cutoff_hamiltonian() {
        let s = spec(16, 10);
        let a = FockOperator::annihilation(&s);
        let h = FockOperator::number(&s).cutoff(10, 0).unwrap();
        let oracle = evolve_oracle(&h, &a, 1.0).unwrap();
        let series = evolve_series(&h, &a, 1.0, 1e-12).unwrap();
        assert!(series.remainder_bound.unwrap() <= 1e-12);
        assert!(oracle.operator.deviation(&series.operator).unwrap() < 1e-9);
        let closed = closed_form_free(10, 1.0, &s).unwrap();
        assert!(oracle.operator.deviation(&closed.operator).unwrap() < 1e-9);
    }

    #[test]
    fn free_commutator_closed_form() {
        let s = spec(14, 10);
        let a = FockOperator::annihilation(&s);
        for l in 1..=6 {
            let h = FockOperator::number(&s).cutoff(l, 0).unwrap();
            for m in 1..=4 {
                let c = multiple_commutator(&h, &a, m).unwrap();
                let f = free_commutator_formula(l, m as u32, &s).unwrap();
                assert!(c.deviation(&f).unwrap() <= 1e-12 * (l as f64).powi(m as i32).max(1.0));
            }
        }
    }

    #[test]
    fn interaction_commutators_low_order() {
        let s = spec(16, 10);
        let a = FockOperator::annihilation(&s);
        for l in 1..=8 {
            let al = a.cutoff(l, 0).unwrap();
            let h = al.add(&al.adjoint()).unwrap();
            for n in 0..=2 {
                let c = multiple_commutator(&h, &a, n).unwrap();
                let f = interaction_commutator_formula(l, n as u32, &s).unwrap();
                assert!(c.deviation(&f).unwrap() < 1e-12, "L={l} n={n}");
            }
        }
    }

    #[test]
    fn group_law() {
        let s = spec(8, 5);
        let a = FockOperator::annihilation(&s);
        let al = a.cutoff(5, 0).unwrap();
        let h = al.add(&al.adjoint()).unwrap().add(&FockOperator::number(&s).cutoff(5, 0).unwrap()).unwrap();
        let ev = Evolution::new(&h).unwrap();
        let two = ev.evolve(&ev.evolve(&a, 0.4).unwrap().operator, 0.9).unwrap();
        let one = ev.evolve(&a, 1.3).unwrap();
        assert!(two.operator.deviation(&one.operator).unwrap() < 1e-12);
    }
}
