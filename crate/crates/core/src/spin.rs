//! Spin-1/2 lattices: Pauli operators, mean magnetization, magnetization
//! sectors and the strong seminorm `‖X‖^Ψ = ‖XΨ‖`.
//!
//! Basis index bit `n − 1 − i` holds site `i` (site 0 is the leftmost
//! tensor factor); bit value 0 is spin up, `σ_z = diag(1, −1)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, C64, I, ONE, ZERO};

/// Default limit on the number of sites (dense dimension 4096).
pub const DEFAULT_MAX_SITES: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinSystem {
    sites: Vec<Vec<i64>>,
}

impl SpinSystem {
    pub fn new(sites: Vec<Vec<i64>>) -> Result<Self> {
        Self::with_cap(sites, DEFAULT_MAX_SITES)
    }

    pub fn with_cap(sites: Vec<Vec<i64>>, cap: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("a lattice needs at least one site".into()));
        }
        if sites.len() > cap {
            return Err(Error::InvalidParameter(format!("{} sites exceed the cap of {cap}", sites.len())));
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::InvalidParameter(format!("duplicate site {s:?}")));
            }
        }
        Ok(SpinSystem { sites })
    }

    /// Sites `0, 1, …, n − 1` on a line.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new((0..n as i64).map(|i| vec![i]).collect())
    }

    /// `side × side` square patch, so `|V| = side²`.
    pub fn square(side: usize) -> Result<Self> {
        let side = side as i64;
        Self::new((0..side).flat_map(|x| (0..side).map(move |y| vec![x, y])).collect())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.sites.len()
    }

    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    pub fn site_index(&self, site: &[i64]) -> Result<usize> {
        self.sites.iter().position(|s| s == site).ok_or_else(|| Error::UnknownSite(site.to_vec()))
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.len() {
            return Err(Error::UnknownSite(vec![slot as i64]));
        }
        Ok(())
    }

    /// Whether the spin at `slot` is up in basis state `index`.
    pub fn is_up(&self, index: usize, slot: usize) -> bool {
        (index >> (self.len() - 1 - slot)) & 1 == 0
    }

    pub fn ups(&self, index: usize) -> usize {
        self.len() - index.count_ones() as usize
    }

    /// Eigenvalue of `σ_3^V` on a basis state.
    pub fn magnetization(&self, index: usize) -> f64 {
        let n = self.len();
        let up = self.ups(index);
        (2.0 * up as f64 - n as f64) / n as f64
    }

    /// `σ_α^i` for the slot-th site.
    pub fn pauli(&self, axis: Axis, slot: usize) -> Result<SpinOperator> {
        self.check_slot(slot)?;
        let string = PauliString { coeff: ONE, factors: vec![(slot, axis)] };
        Ok(SpinOperator::from_pauli(self.len(), string))
    }

    pub fn pauli_at(&self, axis: Axis, site: &[i64]) -> Result<SpinOperator> {
        self.pauli(axis, self.site_index(site)?)
    }

    /// `σ_3^V = (1/|V|) Σ_i σ_3^i`, diagonal.
    pub fn mean_magnetization(&self) -> SpinOperator {
        let diag = (0..self.dim()).map(|b| linalg::real(self.magnetization(b))).collect();
        SpinOperator::diagonal(self.len(), diag).with_label("σ3V")
    }

    pub fn identity(&self) -> SpinOperator {
        SpinOperator::diagonal(self.len(), vec![ONE; self.dim()]).with_label("1")
    }

    /// Basis indices grouped by `σ_3^V` eigenvalue, ascending.
    pub fn sectors(&self) -> Vec<MagnetizationSector> {
        let n = self.len();
        let mut sectors: Vec<MagnetizationSector> = (0..=n)
            .map(|up| MagnetizationSector {
                ups: up,
                magnetization: (2.0 * up as f64 - n as f64) / n as f64,
                indices: Vec::new(),
            })
            .collect();
        for b in 0..self.dim() {
            sectors[self.ups(b)].indices.push(b);
        }
        sectors
    }
}

impl fmt::Display for SpinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} sites", self.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn ordinal(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// Levi-Civita symbol `ε_{αβγ}`.
    pub fn epsilon(a: Axis, b: Axis, c: Axis) -> f64 {
        let (i, j, k) = (a.ordinal(), b.ordinal(), c.ordinal());
        if i == j || j == k || i == k {
            0.0
        } else if (j + 3 - i) % 3 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// The 2×2 Pauli matrix.
    pub fn matrix(self) -> Mat {
        match self {
            Axis::X => Mat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Axis::Y => Mat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
            Axis::Z => Mat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "1" => Ok(Axis::X),
            "y" | "2" => Ok(Axis::Y),
            "z" | "3" => Ok(Axis::Z),
            other => Err(Error::InvalidParameter(format!("unknown axis `{other}`"))),
        }
    }
}

/// `coeff · σ_{α1}^{i1} σ_{α2}^{i2} ⋯` as written (left factor outermost).
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub coeff: C64,
    pub factors: Vec<(usize, Axis)>,
}

impl PauliString {
    fn monomial(&self, n: usize) -> Monomial {
        let dim = 1usize << n;
        let mut target = Vec::with_capacity(dim);
        let mut phase = Vec::with_capacity(dim);
        for b in 0..dim {
            let mut state = b;
            let mut ph = self.coeff;
            for &(slot, axis) in self.factors.iter().rev() {
                let bit = 1usize << (n - 1 - slot);
                let up = state & bit == 0;
                match axis {
                    Axis::X => state ^= bit,
                    Axis::Y => {
                        state ^= bit;
                        ph *= if up { I } else { -I };
                    }
                    Axis::Z => {
                        if !up {
                            ph = -ph;
                        }
                    }
                }
            }
            target.push(state);
            phase.push(ph);
        }
        Monomial { target, phase }
    }
}

/// One nonzero per column: column `b` maps to row `target[b]` with `phase[b]`.
#[derive(Clone, Debug, PartialEq)]
struct Monomial {
    target: Vec<usize>,
    phase: Vec<C64>,
}

impl Monomial {
    fn is_diagonal(&self) -> bool {
        self.target.iter().enumerate().all(|(b, &t)| b == t)
    }

    /// `self · rhs`.
    fn compose(&self, rhs: &Monomial) -> Monomial {
        let target = rhs.target.iter().map(|&t| self.target[t]).collect();
        let phase = rhs.target.iter().zip(&rhs.phase).map(|(&t, &p)| self.phase[t] * p).collect();
        Monomial { target, phase }
    }

    fn adjoint(&self) -> Monomial {
        let mut target = vec![0; self.target.len()];
        let mut phase = vec![ZERO; self.target.len()];
        for (b, (&t, &p)) in self.target.iter().zip(&self.phase).enumerate() {
            target[t] = b;
            phase[t] = p.conj();
        }
        Monomial { target, phase }
    }

    fn to_dense(&self) -> Mat {
        let dim = self.target.len();
        let mut m = Mat::zeros(dim, dim);
        for (b, (&t, &p)) in self.target.iter().zip(&self.phase).enumerate() {
            m[(t, b)] += p;
        }
        m
    }

    fn apply(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for (b, (&t, &p)) in self.target.iter().zip(&self.phase).enumerate() {
            out[t] += p * v[b];
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Monomial(Monomial),
    Dense(Mat),
}

/// Operator on `(C²)^{⊗n}`. Products of Pauli matrices and diagonal
/// operators stay in a one-entry-per-column form until a sum forces a
/// dense matrix.
#[derive(Clone, Debug)]
pub struct SpinOperator {
    sites: usize,
    repr: Repr,
    pauli: Option<PauliString>,
    label: String,
}

impl SpinOperator {
    fn from_pauli(sites: usize, string: PauliString) -> Self {
        let label = string.factors.iter().map(|(s, a)| format!("σ{a:?}{s}")).collect::<Vec<_>>().join("·").to_lowercase();
        SpinOperator { sites, repr: Repr::Monomial(string.monomial(sites)), pauli: Some(string), label }
    }

    pub fn diagonal(sites: usize, values: Vec<C64>) -> Self {
        assert_eq!(values.len(), 1 << sites);
        let target = (0..values.len()).collect();
        SpinOperator { sites, repr: Repr::Monomial(Monomial { target, phase: values }), pauli: None, label: "diag".into() }
    }

    pub fn dense(sites: usize, entries: Mat) -> Result<Self> {
        let dim = 1usize << sites;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: entries.nrows() });
        }
        Ok(SpinOperator { sites, repr: Repr::Dense(entries), pauli: None, label: "dense".into() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    /// The Pauli-string factorization, when the operator was built as one.
    pub fn pauli_string(&self) -> Option<&PauliString> {
        self.pauli.as_ref()
    }

    pub fn is_diagonal(&self) -> bool {
        match &self.repr {
            Repr::Monomial(m) => m.is_diagonal(),
            Repr::Dense(d) => {
                let n = d.nrows();
                (0..n).all(|r| (0..n).all(|c| r == c || d[(r, c)] == ZERO))
            }
        }
    }

    /// Diagonal entries, if the operator is diagonal.
    pub fn diagonal_values(&self) -> Option<Vec<C64>> {
        if !self.is_diagonal() {
            return None;
        }
        Some(match &self.repr {
            Repr::Monomial(m) => m.phase.clone(),
            Repr::Dense(d) => d.diagonal().iter().cloned().collect(),
        })
    }

    pub fn to_dense(&self) -> Mat {
        match &self.repr {
            Repr::Monomial(m) => m.to_dense(),
            Repr::Dense(d) => d.clone(),
        }
    }

    /// Nonzero entries as `(row, col, value)`, column-major.
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        match &self.repr {
            Repr::Monomial(m) => m
                .target
                .iter()
                .zip(&m.phase)
                .enumerate()
                .filter(|(_, (_, p))| **p != ZERO)
                .map(|(b, (&t, &p))| (t, b, p))
                .collect(),
            Repr::Dense(d) => {
                let mut out = Vec::new();
                for c in 0..d.ncols() {
                    for r in 0..d.nrows() {
                        if d[(r, c)] != ZERO {
                            out.push((r, c, d[(r, c)]));
                        }
                    }
                }
                out
            }
        }
    }

    fn check(&self, other: &SpinOperator) -> Result<()> {
        if self.sites != other.sites {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn compose(&self, rhs: &SpinOperator) -> Result<SpinOperator> {
        self.check(rhs)?;
        let repr = match (&self.repr, &rhs.repr) {
            (Repr::Monomial(x), Repr::Monomial(y)) => Repr::Monomial(x.compose(y)),
            _ => Repr::Dense(self.to_dense() * rhs.to_dense()),
        };
        let pauli = match (&self.pauli, &rhs.pauli) {
            (Some(x), Some(y)) => Some(PauliString {
                coeff: x.coeff * y.coeff,
                factors: x.factors.iter().chain(&y.factors).cloned().collect(),
            }),
            _ => None,
        };
        Ok(SpinOperator { sites: self.sites, repr, pauli, label: format!("{}·{}", self.label, rhs.label) })
    }

    pub fn add_scaled(&self, c: C64, rhs: &SpinOperator) -> Result<SpinOperator> {
        self.check(rhs)?;
        let label = format!("{} + ({c})·{}", self.label, rhs.label);
        if let (Repr::Monomial(x), Repr::Monomial(y)) = (&self.repr, &rhs.repr) {
            // same column pattern: the sum keeps one entry per column
            if x.target == y.target {
                let phase = x.phase.iter().zip(&y.phase).map(|(a, b)| a + c * b).collect();
                let repr = Repr::Monomial(Monomial { target: x.target.clone(), phase });
                return Ok(SpinOperator { sites: self.sites, repr, pauli: None, label });
            }
        }
        let dense = self.to_dense() + rhs.to_dense() * c;
        Ok(SpinOperator { sites: self.sites, repr: Repr::Dense(dense), pauli: None, label })
    }

    pub fn add(&self, rhs: &SpinOperator) -> Result<SpinOperator> {
        self.add_scaled(ONE, rhs)
    }

    pub fn sub(&self, rhs: &SpinOperator) -> Result<SpinOperator> {
        self.add_scaled(-ONE, rhs)
    }

    pub fn scale(&self, c: C64) -> SpinOperator {
        let repr = match &self.repr {
            Repr::Monomial(m) => Repr::Monomial(Monomial { target: m.target.clone(), phase: m.phase.iter().map(|p| p * c).collect() }),
            Repr::Dense(d) => Repr::Dense(d * c),
        };
        let pauli = self.pauli.as_ref().map(|p| PauliString { coeff: p.coeff * c, factors: p.factors.clone() });
        SpinOperator { sites: self.sites, repr, pauli, label: self.label.clone() }
    }

    pub fn adjoint(&self) -> SpinOperator {
        let repr = match &self.repr {
            Repr::Monomial(m) => Repr::Monomial(m.adjoint()),
            Repr::Dense(d) => Repr::Dense(d.adjoint()),
        };
        let pauli = self.pauli.as_ref().map(|p| PauliString {
            coeff: p.coeff.conj(),
            factors: p.factors.iter().rev().cloned().collect(),
        });
        SpinOperator { sites: self.sites, repr, pauli, label: format!("({})†", self.label) }
    }

    pub fn commutator(&self, rhs: &SpinOperator) -> Result<SpinOperator> {
        let out = self.compose(rhs)?.sub(&rhs.compose(self)?)?;
        Ok(out.with_label(format!("[{}, {}]", self.label, rhs.label)))
    }

    /// `[self, [self, … [self, x]]]` with `depth` brackets.
    pub fn commutator_power(&self, x: &SpinOperator, depth: usize) -> Result<SpinOperator> {
        let mut acc = x.clone();
        for _ in 0..depth {
            acc = self.commutator(&acc)?;
        }
        Ok(acc)
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: v.len() });
        }
        Ok(match &self.repr {
            Repr::Monomial(m) => m.apply(v),
            Repr::Dense(d) => d * v,
        })
    }

    /// Maps a function over the diagonal of a diagonal operator.
    pub fn map_diagonal(&self, g: impl Fn(C64) -> C64) -> Result<SpinOperator> {
        let values = self
            .diagonal_values()
            .ok_or_else(|| Error::InvalidParameter(format!("`{}` is not diagonal", self.label)))?;
        Ok(SpinOperator::diagonal(self.sites, values.into_iter().map(g).collect()))
    }

    pub fn spectral_norm(&self) -> f64 {
        match &self.repr {
            // one entry per column: the norm is the largest column modulus
            // when the targets are a permutation
            Repr::Monomial(m) if is_permutation(&m.target) => m.phase.iter().fold(0.0, |a, p| a.max(p.norm())),
            _ => linalg::spectral_norm(&self.to_dense()),
        }
    }

    /// Largest entry of the difference.
    pub fn distance(&self, other: &SpinOperator) -> Result<f64> {
        self.check(other)?;
        Ok(linalg::max_abs_diff(&self.to_dense(), &other.to_dense()))
    }
}

fn is_permutation(target: &[usize]) -> bool {
    let mut seen = vec![false; target.len()];
    for &t in target {
        if seen[t] {
            return false;
        }
        seen[t] = true;
    }
    true
}

impl fmt::Display for SpinOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {} sites", self.label, self.sites)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MagnetizationSector {
    /// Number of up spins.
    pub ups: usize,
    pub magnetization: f64,
    pub indices: Vec<usize>,
}

impl MagnetizationSector {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

/// Unit eigenvector of `σ_3^V`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevantState {
    vector: Vector,
    magnetization: f64,
}

impl RelevantState {
    /// Checks that `vector` lies in a single magnetization sector and
    /// normalizes it.
    pub fn new(sys: &SpinSystem, vector: Vector) -> Result<Self> {
        if vector.len() != sys.dim() {
            return Err(Error::DimensionMismatch { left: sys.dim(), right: vector.len() });
        }
        let norm = vector.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("state vector must be nonzero".into()));
        }
        let mut ups = None;
        for (b, z) in vector.iter().enumerate() {
            if z.norm() > 0.0 {
                let u = sys.ups(b);
                match ups {
                    None => ups = Some(u),
                    Some(prev) if prev != u => {
                        return Err(Error::InvalidParameter("state mixes magnetization sectors".into()));
                    }
                    _ => {}
                }
            }
        }
        let n = sys.len();
        let up = ups.expect("nonzero vector");
        Ok(RelevantState { vector: vector.unscale(norm), magnetization: (2.0 * up as f64 - n as f64) / n as f64 })
    }

    pub fn basis(sys: &SpinSystem, index: usize) -> Result<Self> {
        if index >= sys.dim() {
            return Err(Error::Range { index, ambient: sys.dim() - 1 });
        }
        let mut v = Vector::zeros(sys.dim());
        v[index] = ONE;
        Self::new(sys, v)
    }

    /// All spins up, `m = 1`.
    pub fn all_up(sys: &SpinSystem) -> Self {
        Self::basis(sys, 0).expect("index 0 exists")
    }

    /// All spins up except the first `down` sites.
    pub fn with_down(sys: &SpinSystem, down: usize) -> Result<Self> {
        if down > sys.len() {
            return Err(Error::InvalidParameter(format!("{down} down spins on {} sites", sys.len())));
        }
        let n = sys.len();
        let index = (0..down).fold(0usize, |acc, slot| acc | 1 << (n - 1 - slot));
        Self::basis(sys, index)
    }

    pub fn vector(&self) -> &Vector {
        &self.vector
    }

    pub fn magnetization(&self) -> f64 {
        self.magnetization
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// `‖XΨ‖`.
pub fn strong_seminorm(x: &SpinOperator, psi: &RelevantState) -> Result<f64> {
    Ok(x.apply(psi.vector())?.norm())
}

/// Strong seminorm against an arbitrary vector.
pub fn strong_seminorm_vec(x: &SpinOperator, psi: &Vector) -> Result<f64> {
    Ok(x.apply(psi)?.norm())
}
