//! Number-basis representations of ladder operators, number operators and
//! spectral projections, with bookkeeping of where a finite matrix is exact.
//!
//! A finite matrix can only stand in for an unbounded boson operator on part
//! of the basis. Every [`FockOperator`] therefore carries a *trusted* grade
//! `T`: all matrix elements between basis states of grade `≤ T` coincide with
//! the matrix elements of the infinite-dimensional operator. Products shrink
//! the trusted region according to the band structure of the factors, so a
//! truncation artifact shows up as a smaller trusted region rather than as a
//! silently wrong number.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, C64, ONE, ZERO};

/// Ambient dimension `D`, cutoff `L` and guard margin `G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub ambient_dim: usize,
    pub cutoff: usize,
    pub guard: usize,
}

impl TruncationSpec {
    pub fn new(ambient_dim: usize, cutoff: usize, guard: usize) -> Result<Self> {
        let spec = TruncationSpec { ambient_dim, cutoff, guard };
        spec.validate()?;
        Ok(spec)
    }

    /// Ambient dimension `L + G` for a requested cutoff and guard.
    pub fn with_guard(cutoff: usize, guard: usize) -> Result<Self> {
        Self::new(cutoff + guard, cutoff, guard)
    }

    pub fn validate(&self) -> Result<()> {
        if self.guard < 1 {
            return Err(Error::InvalidTruncation("guard must be at least 1".into()));
        }
        if self.cutoff + self.guard > self.ambient_dim {
            return Err(Error::InvalidTruncation(format!(
                "cutoff {} + guard {} exceeds ambient dimension {}",
                self.cutoff, self.guard, self.ambient_dim
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> FockSpace {
        FockSpace::single(self.ambient_dim)
    }

    /// Same ambient space, different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::new(self.ambient_dim, cutoff, self.ambient_dim.saturating_sub(cutoff).min(self.guard).max(1))
    }
}

/// Truncated boson state space together with the grading used for trusted
/// regions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FockSpace {
    /// `modes` independent modes, each truncated at occupation `cutoff`.
    /// The grade of a basis state is its largest occupation.
    Product { modes: usize, cutoff: usize },
    /// Two modes truncated by total occupation `n_a + n_b ≤ total`.
    /// The grade of a basis state is its total occupation. This truncation
    /// is invariant under mixing of the two modes.
    Pair { total: usize },
}

impl FockSpace {
    pub fn single(cutoff: usize) -> Self {
        FockSpace::Product { modes: 1, cutoff }
    }

    pub fn product(modes: usize, cutoff: usize) -> Self {
        FockSpace::Product { modes, cutoff }
    }

    pub fn pair(total: usize) -> Self {
        FockSpace::Pair { total }
    }

    pub fn is_single_mode(&self) -> bool {
        matches!(self, FockSpace::Product { modes: 1, .. })
    }

    pub fn modes(&self) -> usize {
        match *self {
            FockSpace::Product { modes, .. } => modes,
            FockSpace::Pair { .. } => 2,
        }
    }

    /// Largest grade present in the space.
    pub fn ambient(&self) -> usize {
        match *self {
            FockSpace::Product { cutoff, .. } => cutoff,
            FockSpace::Pair { total } => total,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            FockSpace::Product { modes, cutoff } => (cutoff + 1).pow(modes as u32),
            FockSpace::Pair { total } => (total + 1) * (total + 2) / 2,
        }
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        match *self {
            FockSpace::Product { modes, cutoff } => {
                let base = cutoff + 1;
                let mut occ = vec![0; modes];
                let mut rest = index;
                for slot in occ.iter_mut().rev() {
                    *slot = rest % base;
                    rest /= base;
                }
                occ
            }
            FockSpace::Pair { .. } => {
                // states are listed by total n, then by n_a ascending
                let mut n = 0;
                let mut start = 0;
                while start + n + 1 <= index {
                    start += n + 1;
                    n += 1;
                }
                let na = index - start;
                vec![na, n - na]
            }
        }
    }

    pub fn index_of(&self, occ: &[usize]) -> Option<usize> {
        if occ.len() != self.modes() {
            return None;
        }
        match *self {
            FockSpace::Product { cutoff, .. } => {
                let mut index = 0;
                for &n in occ {
                    if n > cutoff {
                        return None;
                    }
                    index = index * (cutoff + 1) + n;
                }
                Some(index)
            }
            FockSpace::Pair { total } => {
                let n = occ[0] + occ[1];
                if n > total {
                    return None;
                }
                Some(n * (n + 1) / 2 + occ[0])
            }
        }
    }

    pub fn grade(&self, index: usize) -> usize {
        let occ = self.occupations(index);
        match self {
            FockSpace::Product { .. } => occ.into_iter().max().unwrap_or(0),
            FockSpace::Pair { .. } => occ.into_iter().sum(),
        }
    }

    pub fn grades(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| self.grade(i)).collect()
    }

    /// Basis indices whose grade is at most `bound`.
    pub fn indices_up_to(&self, bound: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.grade(i) <= bound).collect()
    }
}

impl fmt::Display for FockSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FockSpace::Product { modes: 1, cutoff } => write!(f, "single mode, D = {cutoff}"),
            FockSpace::Product { modes, cutoff } => write!(f, "{modes} modes, D = {cutoff} each"),
            FockSpace::Pair { total } => write!(f, "two modes, total occupation ≤ {total}"),
        }
    }
}

/// Band structure in grade: the true operator only connects a basis state
/// of grade `g` to states of grade in `[g - lower, g + raise]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Band {
    /// How far the operator can lower the grade (superdiagonal offset).
    pub lower: usize,
    /// How far the operator can raise the grade (subdiagonal offset).
    pub raise: usize,
}

impl Band {
    pub const DIAGONAL: Band = Band { lower: 0, raise: 0 };

    pub fn width(&self) -> usize {
        self.lower + self.raise
    }

    pub fn transpose(self) -> Band {
        Band { lower: self.raise, raise: self.lower }
    }
}

/// Declared growth of the true matrix elements:
/// `|⟨r|X|c⟩| ≤ coeff · (max(grade r, grade c) + shift)^power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub coeff: f64,
    pub shift: f64,
    pub power: f64,
}

impl Growth {
    pub fn bounded(coeff: f64) -> Self {
        Growth { coeff, shift: 1.0, power: 0.0 }
    }

    pub fn polynomial(power: f64) -> Self {
        Growth { coeff: 1.0, shift: 1.0, power }
    }

    pub fn at(&self, grade: usize) -> f64 {
        self.coeff * (grade as f64 + self.shift).powf(self.power)
    }
}

fn min_opt(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        _ => None,
    }
}

/// Complex matrix in a truncated number basis plus exactness metadata.
#[derive(Clone, Debug)]
pub struct FockOperator {
    space: FockSpace,
    entries: Mat,
    trusted: Option<usize>,
    band: Band,
    support: Option<usize>,
    mixing: Option<usize>,
    growth: Option<Growth>,
    label: String,
}

fn max_opt(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    }
}

impl FockOperator {
    /// Wraps a matrix whose entries are exact on grades `≤ trusted`.
    ///
    /// `band` must hold for both the finite matrix and the operator it
    /// represents. `support`, when set, asserts that the operator vanishes
    /// outside grades `≤ support`.
    pub fn from_parts(
        space: FockSpace,
        entries: Mat,
        trusted: Option<usize>,
        band: Band,
        support: Option<usize>,
        growth: Option<Growth>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let dim = space.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: entries.nrows() });
        }
        let ambient = space.ambient();
        let mut op = FockOperator {
            space,
            entries,
            trusted: trusted.map(|t| t.min(ambient)),
            band: Band { lower: band.lower.min(ambient), raise: band.raise.min(ambient) },
            support,
            mixing: None,
            growth,
            label: label.into(),
        };
        op.normalize();
        Ok(op)
    }

    /// An operator known only as a finite matrix: nothing trusted, full band.
    pub fn untrusted(space: FockSpace, entries: Mat, label: impl Into<String>) -> Result<Self> {
        let ambient = space.ambient();
        Self::from_parts(space, entries, None, Band { lower: ambient, raise: ambient }, None, None, label)
    }

    fn normalize(&mut self) {
        if self.band.width() == 0 {
            self.mixing = Some(0);
        }
        if let Some(k) = self.support {
            self.mixing = Some(self.mixing.map_or(k, |m| m.min(k)));
        }
        if let (Some(k), Some(g)) = (self.support, self.growth) {
            if g.power > 0.0 {
                self.growth = Some(Growth::bounded(g.at(k)));
            }
        }
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    pub fn into_entries(self) -> Mat {
        self.entries
    }

    /// Largest grade `T` such that all matrix elements between states of
    /// grade `≤ T` are exact; `None` when nothing is trusted.
    pub fn trusted(&self) -> Option<usize> {
        self.trusted
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn support(&self) -> Option<usize> {
        self.support
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    /// Largest grade touched by entries that change the grade: the true
    /// operator preserves grade outside `grades ≤ mixing`. `None` when no
    /// such bound is known.
    pub fn mixing(&self) -> Option<usize> {
        self.mixing
    }

    /// Declares that the true operator vanishes outside grades `≤ support`.
    /// The caller is responsible for the claim.
    pub(crate) fn with_support(mut self, support: usize) -> Self {
        self.support = Some(self.support.map_or(support, |s| s.min(support)));
        self.normalize();
        self
    }

    /// Declares a bound on the grade-changing part. The caller is
    /// responsible for the claim.
    pub(crate) fn with_mixing(mut self, mixing: Option<usize>) -> Self {
        if let Some(m) = mixing {
            self.mixing = Some(self.mixing.map_or(m, |old| old.min(m)));
        }
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Lowers the trusted region (never raises it).
    pub fn with_trusted(mut self, trusted: Option<usize>) -> Self {
        self.trusted = min_opt(self.trusted, trusted);
        self
    }

    pub fn without_growth(mut self) -> Self {
        self.growth = None;
        self
    }

    /// Replaces one matrix element, keeping the metadata. Used to build
    /// negative controls.
    pub fn with_entry(mut self, row: usize, col: usize, value: C64) -> Self {
        self.entries[(row, col)] = value;
        self
    }

    fn check_space(&self, other: &FockOperator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    // ---- constructors ----

    fn diagonal_with(
        space: &FockSpace,
        values: impl Fn(&[usize]) -> C64,
        support: Option<usize>,
        growth: Option<Growth>,
        label: impl Into<String>,
    ) -> FockOperator {
        let dim = space.dim();
        let mut m = Mat::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = values(&space.occupations(i));
        }
        FockOperator::from_parts(space.clone(), m, Some(space.ambient()), Band::DIAGONAL, support, growth, label)
            .expect("shape matches space")
    }

    pub fn identity(space: &FockSpace) -> FockOperator {
        Self::diagonal_with(space, |_| ONE, None, Some(Growth::bounded(1.0)), "1")
    }

    pub fn zero(space: &FockSpace) -> FockOperator {
        let dim = space.dim();
        FockOperator::from_parts(space.clone(), Mat::zeros(dim, dim), Some(space.ambient()), Band::DIAGONAL, Some(0), Some(Growth::bounded(0.0)), "0")
            .expect("shape matches space")
    }

    /// Annihilation operator of one mode.
    pub fn lowering(space: &FockSpace, mode: usize) -> Result<FockOperator> {
        if mode >= space.modes() {
            return Err(Error::InvalidParameter(format!("mode {mode} of a {}-mode space", space.modes())));
        }
        let dim = space.dim();
        let mut m = Mat::zeros(dim, dim);
        for col in 0..dim {
            let mut occ = space.occupations(col);
            let n = occ[mode];
            if n == 0 {
                continue;
            }
            occ[mode] -= 1;
            let row = space.index_of(&occ).expect("lowered state stays in the space");
            m[(row, col)] = linalg::real((n as f64).sqrt());
        }
        let label = if space.modes() == 1 { "a".to_string() } else { format!("a{mode}") };
        FockOperator::from_parts(
            space.clone(),
            m,
            Some(space.ambient()),
            Band { lower: 1, raise: 0 },
            None,
            Some(Growth::polynomial(0.5)),
            label,
        )
    }

    /// Creation operator of one mode.
    pub fn raising(space: &FockSpace, mode: usize) -> Result<FockOperator> {
        let a = Self::lowering(space, mode)?;
        let label = format!("{}†", a.label);
        Ok(a.adjoint().with_label(label))
    }

    /// `a` on a single mode with ambient dimension `D + 1`.
    pub fn annihilation(spec: &TruncationSpec) -> FockOperator {
        Self::lowering(&spec.space(), 0).expect("single mode")
    }

    pub fn creation(spec: &TruncationSpec) -> FockOperator {
        Self::raising(&spec.space(), 0).expect("single mode")
    }

    /// Occupation number of one mode.
    pub fn number_of(space: &FockSpace, mode: usize) -> Result<FockOperator> {
        if mode >= space.modes() {
            return Err(Error::InvalidParameter(format!("mode {mode} of a {}-mode space", space.modes())));
        }
        Ok(Self::diagonal_with(space, |occ| linalg::real(occ[mode] as f64), None, Some(Growth::polynomial(1.0)), "N"))
    }

    pub fn number(spec: &TruncationSpec) -> FockOperator {
        Self::number_of(&spec.space(), 0).expect("single mode")
    }

    /// `g(n)` of the occupation of one mode, as a diagonal operator. The
    /// caller declares the growth of `g`.
    pub fn number_function(
        space: &FockSpace,
        mode: usize,
        g: impl Fn(usize) -> f64,
        growth: Option<Growth>,
        label: impl Into<String>,
    ) -> Result<FockOperator> {
        if mode >= space.modes() {
            return Err(Error::InvalidParameter(format!("mode {mode} of a {}-mode space", space.modes())));
        }
        Ok(Self::diagonal_with(space, |occ| linalg::real(g(occ[mode])), None, growth, label))
    }

    /// Projection onto occupations of `mode` in `[low, high]`.
    pub fn mode_projection(space: &FockSpace, mode: usize, low: usize, high: usize) -> Result<FockOperator> {
        if mode >= space.modes() {
            return Err(Error::InvalidParameter(format!("mode {mode} of a {}-mode space", space.modes())));
        }
        let ambient = space.ambient();
        if high > ambient {
            return Err(Error::Range { index: high, ambient });
        }
        // with a single mode the projection vanishes above `high`
        let support = if space.is_single_mode() { Some(high) } else { None };
        let label = if low == high { format!("Π{low}") } else if low == 0 { format!("Q{high}") } else { format!("Π[{low},{high}]") };
        Ok(Self::diagonal_with(
            space,
            |occ| if (low..=high).contains(&occ[mode]) { ONE } else { ZERO },
            support,
            Some(Growth::bounded(1.0)),
            label,
        ))
    }

    /// Rank-one projection `Π_l` onto `|l⟩`.
    pub fn projection_pi(l: usize, spec: &TruncationSpec) -> Result<FockOperator> {
        Self::mode_projection(&spec.space(), 0, l, l)
    }

    /// `Q_L = Π_0 + … + Π_L`.
    pub fn projection_q(cutoff: usize, spec: &TruncationSpec) -> Result<FockOperator> {
        Self::mode_projection(&spec.space(), 0, 0, cutoff)
    }

    // ---- algebra ----

    /// Matrix product with trusted-region bookkeeping.
    ///
    /// The product is exact at `(r, c)` when every intermediate state that
    /// can contribute lies inside the trusted regions of both factors. With
    /// bands this gives `min(T_X, T_Y) − min(lower(X), raise(Y))`; when either
    /// factor has support inside `min(T_X, T_Y)`, nothing is lost.
    pub fn compose(&self, rhs: &FockOperator) -> Result<FockOperator> {
        self.check_space(rhs)?;
        let entries = linalg::mul(&self.entries, &rhs.entries);
        let base = min_opt(self.trusted, rhs.trusted);
        let shrink = self.band.lower.min(rhs.band.raise);
        let mut trusted = base.and_then(|b| b.checked_sub(shrink));
        if let Some(b) = base {
            let inside = |s: Option<usize>| s.is_some_and(|k| k <= b);
            if inside(self.support) || inside(rhs.support) {
                trusted = Some(b);
            }
        }
        let support = [self.support.map(|k| k + rhs.band.lower), rhs.support.map(|k| k + self.band.raise)]
            .into_iter()
            .flatten()
            .min();
        let growth = match (self.growth, rhs.growth) {
            (Some(gx), Some(gy)) if self.space.is_single_mode() => {
                let terms = (self.band.width().min(rhs.band.width()) + 1) as f64;
                let reach = self.band.lower.min(rhs.band.raise) as f64;
                Some(Growth {
                    coeff: terms * gx.coeff * gy.coeff,
                    shift: gx.shift.max(gy.shift) + reach,
                    power: gx.power + gy.power,
                })
            }
            _ => None,
        };
        Ok(FockOperator::from_parts(
            self.space.clone(),
            entries,
            trusted,
            Band { lower: self.band.lower + rhs.band.lower, raise: self.band.raise + rhs.band.raise },
            support,
            growth,
            format!("{}·{}", self.label, rhs.label),
        )?
        .with_mixing(max_opt(self.mixing, rhs.mixing)))
    }

    /// `self + c · rhs`.
    pub fn add_scaled(&self, c: C64, rhs: &FockOperator) -> Result<FockOperator> {
        self.check_space(rhs)?;
        let entries = &self.entries + rhs.entries.map(|z| z * c);
        let support = match (self.support, rhs.support) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (Some(x), None) if c == ZERO => Some(x),
            _ => None,
        };
        let growth = match (self.growth, rhs.growth) {
            (Some(gx), Some(gy)) => Some(Growth {
                coeff: gx.coeff + c.norm() * gy.coeff,
                shift: gx.shift.max(gy.shift),
                power: gx.power.max(gy.power),
            }),
            _ => None,
        };
        Ok(FockOperator::from_parts(
            self.space.clone(),
            entries,
            min_opt(self.trusted, rhs.trusted),
            Band { lower: self.band.lower.max(rhs.band.lower), raise: self.band.raise.max(rhs.band.raise) },
            support,
            growth,
            format!("{} + ({c})·{}", self.label, rhs.label),
        )?
        .with_mixing(max_opt(self.mixing, rhs.mixing)))
    }

    pub fn add(&self, rhs: &FockOperator) -> Result<FockOperator> {
        self.add_scaled(ONE, rhs)
    }

    pub fn sub(&self, rhs: &FockOperator) -> Result<FockOperator> {
        self.add_scaled(-ONE, rhs)
    }

    pub fn scale(&self, c: C64) -> FockOperator {
        let mut out = self.clone();
        out.entries = self.entries.map(|z| z * c);
        out.growth = self.growth.map(|g| Growth { coeff: g.coeff * c.norm(), ..g });
        out
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            space: self.space.clone(),
            entries: self.entries.adjoint(),
            trusted: self.trusted,
            band: self.band.transpose(),
            support: self.support,
            mixing: self.mixing,
            growth: self.growth,
            label: format!("({})†", self.label),
        }
    }

    /// `[self, rhs] = self·rhs − rhs·self`.
    pub fn commutator(&self, rhs: &FockOperator) -> Result<FockOperator> {
        let out = self.compose(rhs)?.sub(&rhs.compose(self)?)?;
        Ok(out.with_label(format!("[{}, {}]", self.label, rhs.label)))
    }

    /// Conjugation by projections, `Q_L X Q_L`, the occupation-number cutoff.
    pub fn cutoff(&self, cutoff: usize, mode: usize) -> Result<FockOperator> {
        let q = Self::mode_projection(&self.space, mode, 0, cutoff)?;
        let label = format!("{}_{cutoff}", self.label);
        Ok(q.compose(self)?.compose(&q)?.with_label(label))
    }

    /// Basis indices inside the trusted region.
    pub fn trusted_indices(&self) -> Vec<usize> {
        match self.trusted {
            Some(t) => self.space.indices_up_to(t),
            None => Vec::new(),
        }
    }

    /// The matrix restricted to the trusted region.
    pub fn trusted_block(&self) -> Mat {
        let idx = self.trusted_indices();
        Mat::from_fn(idx.len(), idx.len(), |r, c| self.entries[(idx[r], idx[c])])
    }

    /// Largest elementwise deviation from `other` on the common trusted region.
    pub fn deviation(&self, other: &FockOperator) -> Result<f64> {
        self.check_space(other)?;
        let common = min_opt(self.trusted, other.trusted);
        let idx = match common {
            Some(t) => self.space.indices_up_to(t),
            None => return Ok(0.0),
        };
        let mut worst = 0.0f64;
        for &r in &idx {
            for &c in &idx {
                worst = worst.max((self.entries[(r, c)] - other.entries[(r, c)]).norm());
            }
        }
        Ok(worst)
    }

    /// Largest elementwise deviation on grades `≤ bound`, ignoring metadata.
    pub fn deviation_up_to(&self, other: &FockOperator, bound: usize) -> Result<f64> {
        self.check_space(other)?;
        let idx = self.space.indices_up_to(bound);
        let mut worst = 0.0f64;
        for &r in &idx {
            for &c in &idx {
                worst = worst.max((self.entries[(r, c)] - other.entries[(r, c)]).norm());
            }
        }
        Ok(worst)
    }

    /// Spectral norm of the trusted block.
    pub fn trusted_norm(&self) -> f64 {
        linalg::spectral_norm(&self.trusted_block())
    }

    /// Certified upper bound on the norm of the operator this matrix
    /// represents, if it is bounded.
    pub fn norm_bound(&self) -> Option<f64> {
        if let (Some(k), Some(t)) = (self.support, self.trusted) {
            if k <= t {
                return Some(linalg::spectral_norm(&self.entries));
            }
        }
        match self.growth {
            Some(g) if g.power == 0.0 && self.space.is_single_mode() => {
                // Schur test on a banded matrix with bounded entries
                Some(g.coeff * (self.band.width() + 1) as f64)
            }
            _ => None,
        }
    }
}

impl fmt::Display for FockOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.trusted {
            Some(t) => write!(f, "{} [{}, trusted ≤ {t}]", self.label, self.space),
            None => write!(f, "{} [{}, nothing trusted]", self.label, self.space),
        }
    }
}

/// The spectral projections of `N` on a single mode.
#[derive(Clone, Debug)]
pub struct ProjectionFamily {
    spec: TruncationSpec,
}

impl ProjectionFamily {
    pub fn new(spec: TruncationSpec) -> Self {
        ProjectionFamily { spec }
    }

    pub fn len(&self) -> usize {
        self.spec.ambient_dim + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pi(&self, l: usize) -> Result<FockOperator> {
        FockOperator::projection_pi(l, &self.spec)
    }

    pub fn q(&self, cutoff: usize) -> Result<FockOperator> {
        FockOperator::projection_q(cutoff, &self.spec)
    }

    /// Largest deviation from `Π_kΠ_l = δ_kl Π_l`, `Π_k† = Π_k`,
    /// `Q_L Q_M = Q_L` (L ≤ M) and `Q_L† = Q_L` over the whole family.
    pub fn algebra_defect(&self) -> Result<f64> {
        let d = self.spec.ambient_dim;
        let pis: Vec<_> = (0..=d).map(|l| self.pi(l)).collect::<Result<_>>()?;
        let qs: Vec<_> = (0..=d).map(|l| self.q(l)).collect::<Result<_>>()?;
        let zero = FockOperator::zero(&self.spec.space());
        let mut worst = 0.0f64;
        for (k, pk) in pis.iter().enumerate() {
            worst = worst.max(linalg::hermiticity_defect(pk.entries()));
            for (l, pl) in pis.iter().enumerate() {
                let expected = if k == l { pl } else { &zero };
                worst = worst.max(pk.compose(pl)?.deviation(expected)?);
            }
        }
        for (l, ql) in qs.iter().enumerate() {
            worst = worst.max(linalg::hermiticity_defect(ql.entries()));
            for qm in &qs[l..] {
                worst = worst.max(ql.compose(qm)?.deviation(ql)?);
            }
        }
        Ok(worst)
    }
}

/// One family of projection/ladder identities checked over an index range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub formula: &'static str,
    /// Worst deviation over the index range.
    pub max_deviation: f64,
    /// Index at which the worst deviation occurred.
    pub worst_index: usize,
    pub cases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub ambient_dim: usize,
    pub max_index: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max)
    }

    pub fn failures(&self, tolerance: f64) -> Vec<&IdentityCheck> {
        self.checks.iter().filter(|c| !(c.max_deviation <= tolerance)).collect()
    }

    pub fn passed(&self, tolerance: f64) -> bool {
        self.failures(tolerance).is_empty()
    }
}

/// Tolerance for identities that hold exactly in exact arithmetic.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

struct Tally {
    name: &'static str,
    formula: &'static str,
    worst: f64,
    at: usize,
    cases: usize,
}

impl Tally {
    fn new(name: &'static str, formula: &'static str) -> Self {
        Tally { name, formula, worst: 0.0, at: 0, cases: 0 }
    }

    fn record(&mut self, index: usize, deviation: f64) {
        self.cases += 1;
        if deviation > self.worst || deviation.is_nan() {
            self.worst = deviation;
            self.at = index;
        }
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck { name: self.name, formula: self.formula, max_deviation: self.worst, worst_index: self.at, cases: self.cases }
    }
}

/// Runs the ladder/projection identity suite with the exact annihilation
/// operator of `spec`. See [`verify_identities_with`].
pub fn verify_identities(spec: &TruncationSpec, max_index: usize) -> Result<IdentityReport> {
    verify_identities_with(spec, max_index, &FockOperator::annihilation(spec))
}

/// Checks, for every index up to `max_index ≤ D − 1`,
///
/// * `Π_{l−1} a = a Π_l` and `a† Π_{l−1} = Π_l a†`
/// * `Q_L a = a Q_{L+1}` and `Q_L a† = a† Q_{L−1}`
/// * `[Q_L, a] = Π_L a` and `[Q_L, a†] = −a† Π_L`
/// * `‖Π_l a Π_s‖ = √s δ_{l,s−1}`
/// * `[a, a†] = 1` on the trusted region
///
/// using `a` as the annihilation operator, so a corrupted matrix can be
/// passed in as a negative control.
pub fn verify_identities_with(spec: &TruncationSpec, max_index: usize, a: &FockOperator) -> Result<IdentityReport> {
    let d = spec.ambient_dim;
    if max_index + 1 > d {
        return Err(Error::Range { index: max_index, ambient: d.saturating_sub(1) });
    }
    if a.space() != &spec.space() {
        return Err(Error::DimensionMismatch { left: spec.ambient_dim + 1, right: a.dim() });
    }
    let ad = a.adjoint();
    let pi = |l: usize| FockOperator::projection_pi(l, spec);
    let q = |l: usize| FockOperator::projection_q(l, spec);

    let mut lowering = Tally::new("lowering-shift", "Π_{l-1} a = a Π_l");
    let mut raising = Tally::new("raising-shift", "a† Π_{l-1} = Π_l a†");
    let mut q_lowering = Tally::new("cumulative-lowering", "Q_L a = a Q_{L+1}");
    let mut q_raising = Tally::new("cumulative-raising", "Q_L a† = a† Q_{L-1}");
    let mut comm_lowering = Tally::new("commutator-lowering", "[Q_L, a] = Π_L a");
    let mut comm_raising = Tally::new("commutator-raising", "[Q_L, a†] = -a† Π_L");
    let mut block = Tally::new("block-norm", "‖Π_l a Π_s‖ = √s δ_{l,s-1}");
    let mut ccr = Tally::new("canonical-commutator", "[a, a†] = 1");

    for l in 1..=max_index {
        lowering.record(l, pi(l - 1)?.compose(a)?.deviation(&a.compose(&pi(l)?)?)?);
        raising.record(l, ad.compose(&pi(l - 1)?)?.deviation(&pi(l)?.compose(&ad)?)?);
    }
    for cut in 0..=max_index {
        let ql = q(cut)?;
        q_lowering.record(cut, ql.compose(a)?.deviation(&a.compose(&q(cut + 1)?)?)?);
        if cut >= 1 {
            q_raising.record(cut, ql.compose(&ad)?.deviation(&ad.compose(&q(cut - 1)?)?)?);
        }
        comm_lowering.record(cut, ql.commutator(a)?.deviation(&pi(cut)?.compose(a)?)?);
        comm_raising.record(cut, ql.commutator(&ad)?.deviation(&ad.compose(&pi(cut)?)?.scale(-ONE))?);
    }
    for l in 0..=max_index {
        for s in 0..=max_index + 1 {
            let sandwich = pi(l)?.compose(a)?.compose(&pi(s)?)?;
            let expected = if l + 1 == s { (s as f64).sqrt() } else { 0.0 };
            block.record(l * (max_index + 2) + s, (linalg::spectral_norm(sandwich.entries()) - expected).abs());
        }
    }
    let comm = a.commutator(&ad)?;
    let ident = FockOperator::identity(&spec.space());
    ccr.record(0, comm.deviation(&ident)?);

    Ok(IdentityReport {
        ambient_dim: d,
        max_index,
        checks: vec![
            lowering.finish(),
            raising.finish(),
            q_lowering.finish(),
            q_raising.finish(),
            comm_lowering.finish(),
            comm_raising.finish(),
            block.finish(),
            ccr.finish(),
        ],
    })
}
