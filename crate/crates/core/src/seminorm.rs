//! Decay functions and the weighted seminorms built from them.
//!
//! For a single-mode operator `X`, a decay function `f` and an integer `k`:
//!
//! * the summed form `Σ_{l,s} f(l) s^k |⟨l|X|s⟩|`, which splits into the part
//!   read off the trusted block and a certified bound on the rest;
//! * the operator-norm form `max(‖f(N) X N^k‖, ‖N^k X f(N)‖)` on the trusted
//!   block.
//!
//! With [`Weighting::Shifted`] the number operator `N` is replaced by
//! `M = N + 1`, whose spectrum starts at 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::linalg::{self, Mat};
use crate::spin::RelevantState;
use crate::tensor::SpinBosonOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    /// `e^{−βx}`
    Exponential,
    /// `e^{−β√x}`
    StretchedExponential,
}

/// `f(x) = x^p · g(x)` with `g` one of the [`DecayShape`]s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFunction {
    pub shape: DecayShape,
    pub rate: f64,
    #[serde(default)]
    pub weight_power: u32,
}

impl Default for DecayFunction {
    fn default() -> Self {
        DecayFunction::exponential(1.0)
    }
}

impl DecayFunction {
    pub fn exponential(rate: f64) -> Self {
        DecayFunction { shape: DecayShape::Exponential, rate, weight_power: 0 }
    }

    pub fn stretched(rate: f64) -> Self {
        DecayFunction { shape: DecayShape::StretchedExponential, rate, weight_power: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::InvalidParameter(format!("decay rate must be positive, got {}", self.rate)));
        }
        Ok(())
    }

    /// `x ↦ x f(x)`.
    pub fn times_x(&self) -> Self {
        DecayFunction { weight_power: self.weight_power + 1, ..*self }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = match self.shape {
            DecayShape::Exponential => (-self.rate * x).exp(),
            DecayShape::StretchedExponential => (-self.rate * x.max(0.0).sqrt()).exp(),
        };
        if self.weight_power == 0 {
            g
        } else {
            x.powi(self.weight_power as i32) * g
        }
    }

    pub fn name(&self) -> String {
        let core = match self.shape {
            DecayShape::Exponential => format!("exp(-{}x)", self.rate),
            DecayShape::StretchedExponential => format!("exp(-{}sqrt(x))", self.rate),
        };
        match self.weight_power {
            0 => core,
            1 => format!("x*{core}"),
            p => format!("x^{p}*{core}"),
        }
    }

    /// Certified upper bound on `Σ_{s > start} f(s − offset) s^q`.
    ///
    /// Requires `s − offset ≥ 0` for every `s > start`.
    pub fn tail_bound(&self, q: f64, offset: f64, start: usize) -> Result<f64> {
        self.validate()?;
        let first = start as f64 + 1.0;
        if first - offset < 0.0 {
            return Err(Error::InvalidParameter(format!("tail starting at {first} with offset {offset} evaluates f at a negative point")));
        }
        match self.shape {
            DecayShape::Exponential => self.exponential_tail(q, offset, start),
            DecayShape::StretchedExponential => self.stretched_tail(q, offset, start),
        }
    }

    fn term(&self, q: f64, offset: f64, s: f64) -> f64 {
        self.eval(s - offset) * s.powf(q)
    }

    fn exponential_tail(&self, q: f64, offset: f64, start: usize) -> Result<f64> {
        // the term ratio t(s+1)/t(s) decreases in s, so once it drops below
        // one the remaining terms are dominated by a geometric series
        let p = self.weight_power as f64;
        let mut acc = 0.0;
        let mut s = start as f64 + 1.0;
        for _ in 0..1_000_000 {
            let x = s - offset;
            let t = self.term(q, offset, s);
            if x > 0.0 {
                let ratio = (-self.rate).exp() * ((x + 1.0) / x).powf(p) * ((s + 1.0) / s).powf(q.max(0.0));
                if ratio < 1.0 {
                    return Ok(acc + t / (1.0 - ratio));
                }
            }
            acc += t;
            s += 1.0;
        }
        Err(Error::Remainder(format!("tail of {} did not reach geometric decay", self.name())))
    }

    fn stretched_tail(&self, q: f64, offset: f64, start: usize) -> Result<f64> {
        let p = self.weight_power as f64;
        let r = p + q.max(0.0);
        // e^{−β√(s−o)} ≤ e^{−c√s}, with c = β/√2 once s ≥ 2o
        let c = if offset <= 0.0 { self.rate } else { self.rate / 2f64.sqrt() };
        let decreasing_from = ((2.0 * r / c).powi(2)).ceil();
        let from = (start as f64).max(decreasing_from).max(2.0 * offset.max(0.0)).max(1.0);
        let mut acc = 0.0;
        let mut s = start as f64 + 1.0;
        while s <= from {
            acc += self.term(q, offset, s);
            s += 1.0;
        }
        // (s − o)^p ≤ (1 + |o|/from)^p s^p for negative offsets
        let amp = if offset < 0.0 { (1.0 + offset.abs() / from).powf(p) } else { 1.0 };
        // Σ_{s > from} A s^r e^{−c√s} ≤ 2A ∫_{√from}^∞ u^{2r+1} e^{−cu} du
        let n = (2.0 * r + 1.0).ceil() as u32;
        let u0 = from.sqrt();
        Ok(acc + 2.0 * amp * upper_gamma_poly(n, c, u0))
    }

    /// Bracket on `c_k = Σ_{l ≥ 1} f(l) l^k`.
    pub fn moment(&self, k: u32) -> Result<Bracket> {
        let cutoff = 64usize;
        let partial: f64 = (1..=cutoff).map(|l| self.term(k as f64, 0.0, l as f64)).sum();
        let tail = self.tail_bound(k as f64, 0.0, cutoff)?;
        Ok(Bracket { lower: partial, upper: partial + tail })
    }

    /// Numerical membership test: `f > 0` on `(0, ∞)` sampled, and
    /// `f(x)(1 + x)^k` bounded and eventually decaying for `k ≤ max_k`.
    pub fn admissibility(&self, max_k: u32) -> Admissibility {
        let grid: Vec<f64> = (0..=600).map(|i| 10f64.powf(-3.0 + 12.0 * i as f64 / 600.0)).collect();
        // positivity is only observable where the exponential is representable
        let exponent = |x: f64| match self.shape {
            DecayShape::Exponential => self.rate * x,
            DecayShape::StretchedExponential => self.rate * x.sqrt(),
        };
        let positive = grid.iter().filter(|&&x| exponent(x) < 700.0).all(|&x| self.eval(x) > 0.0);
        let mut sups = Vec::new();
        let mut decaying = true;
        for k in 0..=max_k {
            let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x) * (1.0 + x).powi(k as i32)).collect();
            let sup = vals.iter().cloned().fold(0.0, f64::max);
            let last = *vals.last().unwrap();
            if !sup.is_finite() || !(last <= 1e-6 * sup) {
                decaying = false;
            }
            sups.push(sup);
        }
        Admissibility { positive, decaying, sups }
    }
}

impl fmt::Display for DecayFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `∫_{u0}^∞ u^n e^{−cu} du` for integer `n`.
fn upper_gamma_poly(n: u32, c: f64, u0: f64) -> f64 {
    // e^{−c u0} Σ_{j=0}^{n} n!/(n−j)! u0^{n−j} / c^{j+1}
    let mut sum = 0.0;
    let mut falling = 1.0;
    for j in 0..=n {
        sum += falling * u0.powi((n - j) as i32) / c.powi(j as i32 + 1);
        falling *= (n - j) as f64;
    }
    (-c * u0).exp() * sum
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub positive: bool,
    pub decaying: bool,
    /// Sampled `sup_x f(x)(1 + x)^k` for each `k`.
    pub sups: Vec<f64>,
}

impl Admissibility {
    pub fn passed(&self) -> bool {
        self.positive && self.decaying
    }
}

/// Whether powers and decay weights use `N` or `M = N + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Number,
    Shifted,
}

impl Weighting {
    fn offset(self) -> f64 {
        match self {
            Weighting::Number => 0.0,
            Weighting::Shifted => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormForm {
    #[default]
    Sum,
    OpNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormIndex {
    pub decay: DecayFunction,
    pub k: u32,
    #[serde(default)]
    pub form: SeminormForm,
    #[serde(default)]
    pub weighting: Weighting,
}

impl SeminormIndex {
    pub fn new(decay: DecayFunction, k: u32) -> Self {
        SeminormIndex { decay, k, form: SeminormForm::Sum, weighting: Weighting::Number }
    }

    pub fn shifted(mut self) -> Self {
        self.weighting = Weighting::Shifted;
        self
    }

    pub fn opnorm(mut self) -> Self {
        self.form = SeminormForm::OpNorm;
        self
    }

    /// Evaluates this index on `x`: the certified upper value for the
    /// summed form, the trusted-block value for the operator-norm form.
    pub fn evaluate(&self, x: &FockOperator) -> Result<f64> {
        match self.form {
            SeminormForm::Sum => Ok(lassner_sum_weighted(x, &self.decay, self.k, self.weighting)?.upper()),
            SeminormForm::OpNorm => lassner_opnorm_weighted(x, &self.decay, self.k, self.weighting),
        }
    }
}

/// Summed-form value split into the part read off the trusted block and a
/// certified bound on everything outside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeminormValue {
    pub value: f64,
    pub truncation_bound: f64,
}

impl SeminormValue {
    pub fn upper(&self) -> f64 {
        self.value + self.truncation_bound
    }
}

fn weight(w: Weighting, n: usize) -> f64 {
    n as f64 + w.offset()
}

/// `Σ f(l) s^k |X_ls|` with `N` weights. See [`lassner_sum_weighted`].
pub fn lassner_sum(x: &FockOperator, f: &DecayFunction, k: u32) -> Result<SeminormValue> {
    lassner_sum_weighted(x, f, k, Weighting::Number)
}

/// Summed seminorm of a single-mode operator.
///
/// The value covers `l, s ≤ T`. The truncation bound covers every other
/// entry, using the band and the declared growth of `X`; it is zero when
/// `X` is known to vanish outside its trusted region.
pub fn lassner_sum_weighted(x: &FockOperator, f: &DecayFunction, k: u32, w: Weighting) -> Result<SeminormValue> {
    f.validate()?;
    if !x.space().is_single_mode() {
        return Err(Error::InvalidParameter("summed seminorm needs a single-mode operator".into()));
    }
    let t = x.trusted().ok_or_else(|| Error::Untrusted(format!("`{}` has an empty trusted region", x.label())))?;
    let m = x.entries();
    let mut value = 0.0;
    for l in 0..=t {
        let fl = f.eval(weight(w, l));
        for s in 0..=t {
            let z = m[(l, s)].norm();
            if z > 0.0 {
                value += fl * weight(w, s).powi(k as i32) * z;
            }
        }
    }
    let truncation_bound = if x.support().is_some_and(|s| s <= t) { 0.0 } else { outside_bound(x, f, k, w, t)? };
    Ok(SeminormValue { value, truncation_bound })
}

/// Bound on `Σ f(l) s^k |X_ls|` over pairs with `max(l, s) > t`.
fn outside_bound(x: &FockOperator, f: &DecayFunction, k: u32, w: Weighting, t: usize) -> Result<f64> {
    let growth = x.growth().ok_or_else(|| Error::UnboundedTail(x.label().to_string()))?;
    let band = x.band();
    let w0 = w.offset();
    let q = k as f64 + growth.power;
    let mut total = 0.0;
    // d = s − l runs over the band
    for d in -(band.raise as i64)..=(band.lower as i64) {
        let reach = (-d).max(0) as usize;
        // first omitted column: s > t when d ≥ 0, s > t − |d| otherwise
        let first = (t + 1).saturating_sub(reach);
        // explicit terms up to `edge`, then a certified tail
        let edge = first.max(reach).max(band.lower) + 64;
        for s in first..=edge {
            let l = s as i64 - d;
            if l < 0 {
                continue;
            }
            let entry = growth.at(s.max(l as usize));
            total += f.eval(weight(w, l as usize)) * weight(w, s).powi(k as i32) * entry;
        }
        // for s > edge: (max(l, s) + shift)^p ≤ ((1 + (reach + shift)/edge) s)^p
        // and (s + w0)^k ≤ (1 + w0/edge)^k s^k
        let e = edge as f64;
        let scale = growth.coeff * (1.0 + (reach as f64 + growth.shift) / e).powf(growth.power) * (1.0 + w0 / e).powi(k as i32);
        total += scale * f.tail_bound(q, d as f64 - w0, edge)?;
    }
    Ok(total)
}

/// `max(‖f(N) X N^k‖, ‖N^k X f(N)‖)` on the trusted block.
pub fn lassner_opnorm(x: &FockOperator, f: &DecayFunction, k: u32) -> Result<f64> {
    lassner_opnorm_weighted(x, f, k, Weighting::Number)
}

pub fn lassner_opnorm_weighted(x: &FockOperator, f: &DecayFunction, k: u32, w: Weighting) -> Result<f64> {
    f.validate()?;
    if x.trusted().is_none() {
        return Err(Error::Untrusted(format!("`{}` has an empty trusted region", x.label())));
    }
    let idx = x.trusted_indices();
    let grades: Vec<f64> = idx.iter().map(|&i| weight(w, x.space().grade(i))).collect();
    let block = x.trusted_block();
    let fw: Vec<f64> = grades.iter().map(|&g| f.eval(g)).collect();
    let pw: Vec<f64> = grades.iter().map(|&g| g.powi(k as i32)).collect();
    let left = Mat::from_fn(block.nrows(), block.ncols(), |r, c| block[(r, c)] * fw[r] * pw[c]);
    let right = Mat::from_fn(block.nrows(), block.ncols(), |r, c| block[(r, c)] * pw[r] * fw[c]);
    Ok(linalg::spectral_norm(&left).max(linalg::spectral_norm(&right)))
}

/// Norm of `φ ↦ (1 ⊗ f(M)) Y (1 ⊗ M^k)(Ψ ⊗ φ)` on the trusted region.
///
/// For a product `Y = A ⊗ X` this is `‖AΨ‖ · ‖f(M) X M^k‖`.
pub fn combined_seminorm(y: &SpinBosonOperator, f: &DecayFunction, k: u32, psi: &RelevantState) -> Result<f64> {
    combined_seminorm_weighted(y, f, k, psi, Weighting::Shifted)
}

pub fn combined_seminorm_weighted(
    y: &SpinBosonOperator,
    f: &DecayFunction,
    k: u32,
    psi: &RelevantState,
    w: Weighting,
) -> Result<f64> {
    f.validate()?;
    if psi.dim() != y.spin_dim() {
        return Err(Error::DimensionMismatch { left: y.spin_dim(), right: psi.dim() });
    }
    let space = y.boson_space().clone();
    let t = y.trusted().ok_or_else(|| Error::Untrusted("tensor operator has an empty trusted region".into()))?;
    let idx = space.indices_up_to(t);
    let n = idx.len();
    let grades: Vec<f64> = idx.iter().map(|&i| weight(w, space.grade(i))).collect();
    let v = psi.vector();
    // G_s = Σ_{s'} ψ_{s'} f(M) Y_{s s'} M^k; the norm of the stacked map is
    // the square root of the top eigenvalue of Σ_s G_s† G_s
    let mut gram = Mat::zeros(n, n);
    for (_, blocks) in y.rows() {
        let mut g = Mat::zeros(n, n);
        let mut any = false;
        for (col, block) in blocks {
            let coeff = v[*col];
            if coeff.norm() == 0.0 {
                continue;
            }
            any = true;
            let m = block.entries();
            for (r, &ir) in idx.iter().enumerate() {
                for (c, &ic) in idx.iter().enumerate() {
                    g[(r, c)] += coeff * m[(ir, ic)];
                }
            }
        }
        if !any {
            continue;
        }
        for r in 0..n {
            for c in 0..n {
                g[(r, c)] *= f.eval(grades[r]) * grades[c].powi(k as i32);
            }
        }
        gram += linalg::mul(&g.adjoint(), &g);
    }
    if linalg::max_abs(&gram) == 0.0 {
        return Ok(0.0);
    }
    let eig = linalg::HermitianEigen::new(&gram);
    Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TruncationSpec;

    fn e() -> DecayFunction {
        DecayFunction::exponential(1.0)
    }

    #[test]
    fn moments_of_unit_exponential() {
        let q = (-1f64).exp();
        let expect = [q / (1.0 - q), q / (1.0 - q).powi(2), q * (1.0 + q) / (1.0 - q).powi(3)];
        for (k, &x) in expect.iter().enumerate() {
            let b = e().moment(k as u32).unwrap();
            assert!(b.lower <= x * (1.0 + 1e-14) && x <= b.upper * (1.0 + 1e-14), "k={k}: {b:?} vs {x}");
            assert!(b.upper - b.lower < 1e-20);
        }
    }

    #[test]
    fn tail_bounds_dominate_long_sums() {
        for f in [e(), e().times_x(), DecayFunction::stretched(1.0), DecayFunction::stretched(2.0).times_x()] {
            for (q, off, start) in [(0.5, 1.0, 3usize), (2.5, 0.0, 10), (1.0, -2.0, 0), (3.0, 2.0, 5)] {
                let bound = f.tail_bound(q, off, start).unwrap();
                let direct: f64 = (start + 1..200_000).map(|s| f.eval(s as f64 - off) * (s as f64).powf(q)).sum();
                assert!(direct <= bound * (1.0 + 1e-12), "{f} q={q} off={off}: {direct} > {bound}");
            }
        }
    }

    #[test]
    fn builtin_functions_are_admissible() {
        for f in [e(), DecayFunction::exponential(0.3), DecayFunction::stretched(1.0), e().times_x()] {
            assert!(f.admissibility(12).passed(), "{f}");
        }
    }

    #[test]
    fn single_projection_seminorm() {
        let spec = TruncationSpec::new(12, 10, 2).unwrap();
        let p5 = FockOperator::projection_pi(5, &spec).unwrap();
        let v = lassner_sum(&p5, &e(), 2).unwrap();
        assert!((v.value - (-5f64).exp() * 25.0).abs() < 1e-15);
        assert_eq!(v.truncation_bound, 0.0);
    }

    #[test]
    fn annihilation_seminorm_matches_direct_sum() {
        let spec = TruncationSpec::new(30, 28, 2).unwrap();
        let a = FockOperator::annihilation(&spec);
        for k in 0..3 {
            let v = lassner_sum(&a, &e(), k).unwrap();
            let inside: f64 = (1..=30).map(|s| (-(s as f64 - 1.0)).exp() * (s as f64).powf(k as f64 + 0.5)).sum();
            let all: f64 = (1..=2000).map(|s| (-(s as f64 - 1.0)).exp() * (s as f64).powf(k as f64 + 0.5)).sum();
            assert!((v.value - inside).abs() < 1e-12 * inside);
            assert!(v.upper() >= all * (1.0 - 1e-14));
            assert!(v.truncation_bound < 1e-6);
        }
    }

    #[test]
    fn missing_growth_refuses_tail() {
        let spec = TruncationSpec::new(6, 5, 1).unwrap();
        let a = FockOperator::annihilation(&spec).without_growth();
        assert!(matches!(lassner_sum(&a, &e(), 0), Err(Error::UnboundedTail(_))));
    }

    #[test]
    fn opnorm_of_identity() {
        let spec = TruncationSpec::new(8, 7, 1).unwrap();
        let id = FockOperator::identity(&spec.space());
        assert!((lassner_opnorm(&id, &e(), 0).unwrap() - 1.0).abs() < 1e-14);
    }
}
