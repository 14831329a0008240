//! Model Hamiltonians and their occupation-number cutoffs.
//!
//! A Hamiltonian is written as an [`Expr`], a finite sum of spin factors
//! times words in ladder operators. Regularizing replaces every `a_j` by
//! `a_{j,L} = Q_{j,L} a_j Q_{j,L}` and every `a_j†` by its adjoint.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Evolution, SectorEvolution};
use crate::error::{Error, Result};
use crate::fock::{Band, FockOperator, FockSpace, Growth, TruncationSpec};
use crate::linalg::{self, HermitianEigen, Mat, C64, I};
use crate::spin::{SpinOperator, SpinSystem};
use crate::tensor::SpinBosonOperator;

/// Model selection as it appears in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Free,
    Displaced {
        gamma: f64,
    },
    TwoMode,
    SpinBoson {
        j: f64,
        gamma: f64,
        sites: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<u32>,
    },
    SpinBosonMulti {
        j: f64,
        gammas: Vec<f64>,
        sites: usize,
    },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match self {
            ModelSpec::Free | ModelSpec::TwoMode => Ok(()),
            ModelSpec::Displaced { gamma } => finite("gamma", *gamma),
            ModelSpec::SpinBoson { j, gamma, sites, .. } => {
                finite("j", *j)?;
                finite("gamma", *gamma)?;
                SpinSystem::chain(*sites).map(|_| ())
            }
            ModelSpec::SpinBosonMulti { j, gammas, sites } => {
                finite("j", *j)?;
                if gammas.is_empty() {
                    return Err(Error::InvalidParameter("at least one boson mode is needed".into()));
                }
                for g in gammas {
                    finite("gamma", *g)?;
                }
                SpinSystem::chain(*sites).map(|_| ())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Free => "free",
            ModelSpec::Displaced { .. } => "displaced",
            ModelSpec::TwoMode => "two_mode",
            ModelSpec::SpinBoson { .. } => "spin_boson",
            ModelSpec::SpinBosonMulti { .. } => "spin_boson_multi",
        }
    }

    /// The unregularized Hamiltonian.
    pub fn hamiltonian(&self) -> Result<Expr> {
        self.validate()?;
        let n = |m| Expr::word(1.0, vec![Ladder::Raise(m), Ladder::Lower(m)]);
        let field = |m, g: f64| Expr::word(g, vec![Ladder::Lower(m)]).add(&Expr::word(g, vec![Ladder::Raise(m)]));
        Ok(match self {
            ModelSpec::Free => n(0),
            ModelSpec::Displaced { gamma } => n(0).add(&field(0, *gamma)),
            ModelSpec::TwoMode => n(0)
                .add(&n(1))
                .add(&Expr::word(1.0, vec![Ladder::Raise(0), Ladder::Lower(1)]))
                .add(&Expr::word(1.0, vec![Ladder::Raise(1), Ladder::Lower(0)])),
            ModelSpec::SpinBoson { j, gamma, sites, .. } => spin_boson_expr(*j, &[*gamma], *sites)?,
            ModelSpec::SpinBosonMulti { j, gammas, sites } => spin_boson_expr(*j, gammas, *sites)?,
        })
    }
}

fn spin_boson_expr(j: f64, gammas: &[f64], sites: usize) -> Result<Expr> {
    let sys = SpinSystem::chain(sites)?;
    let s3 = sys.mean_magnetization();
    let s3sq = s3.compose(&s3)?;
    let mut expr = Expr::spin(linalg::real(j * sites as f64), s3sq);
    for (m, &g) in gammas.iter().enumerate() {
        expr = expr
            .add(&Expr::term(linalg::real(g), Some(s3.clone()), vec![Ladder::Lower(m)]))
            .add(&Expr::term(linalg::real(g), Some(s3.clone()), vec![Ladder::Raise(m)]));
    }
    Ok(expr)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Lower(usize),
    Raise(usize),
}

#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: C64,
    pub spin: Option<SpinOperator>,
    /// Ladder operators, leftmost applied last.
    pub word: Vec<Ladder>,
}

/// Finite sum of `coeff · spin ⊗ word(a, a†)`.
#[derive(Clone, Debug, Default)]
pub struct Expr {
    pub terms: Vec<Term>,
}

impl Expr {
    pub fn term(coeff: C64, spin: Option<SpinOperator>, word: Vec<Ladder>) -> Self {
        Expr { terms: vec![Term { coeff, spin, word }] }
    }

    pub fn word(coeff: f64, word: Vec<Ladder>) -> Self {
        Self::term(linalg::real(coeff), None, word)
    }

    pub fn spin(coeff: C64, spin: SpinOperator) -> Self {
        Self::term(coeff, Some(spin), Vec::new())
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr { terms: self.terms.iter().chain(&other.terms).cloned().collect() }
    }

    pub fn scale(&self, c: C64) -> Expr {
        Expr { terms: self.terms.iter().map(|t| Term { coeff: t.coeff * c, ..t.clone() }).collect() }
    }

    pub fn has_spin(&self) -> bool {
        self.terms.iter().any(|t| t.spin.is_some())
    }

    pub fn modes(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| &t.word)
            .map(|l| match l {
                Ladder::Lower(m) | Ladder::Raise(m) => m + 1,
            })
            .max()
            .unwrap_or(0)
    }

    fn word_operator(word: &[Ladder], space: &FockSpace, cutoff: Option<usize>) -> Result<FockOperator> {
        let mut acc = FockOperator::identity(space);
        for l in word {
            let (mode, raise) = match *l {
                Ladder::Lower(m) => (m, false),
                Ladder::Raise(m) => (m, true),
            };
            let mut op = FockOperator::lowering(space, mode)?;
            if let Some(cut) = cutoff {
                op = op.cutoff(cut, mode)?;
                if let FockSpace::Product { .. } = space {
                    // grade is the largest occupation; a_{j,L} only moves n_j ≤ L
                    op = op.with_mixing(Some(cut));
                }
            }
            if raise {
                op = op.adjoint();
            }
            acc = acc.compose(&op)?;
        }
        Ok(acc)
    }

    /// The boson operator, substituting `a → a_L` when `cutoff` is set.
    pub fn boson_operator(&self, space: &FockSpace, cutoff: Option<usize>) -> Result<FockOperator> {
        if self.has_spin() {
            return Err(Error::InvalidParameter("expression has spin factors".into()));
        }
        let mut acc = FockOperator::zero(space).without_growth();
        let mut first = true;
        for t in &self.terms {
            let w = Self::word_operator(&t.word, space, cutoff)?.scale(t.coeff);
            acc = if first { w } else { acc.add(&w)? };
            first = false;
        }
        Ok(acc)
    }

    /// The spin ⊗ boson operator, substituting `a → a_L` when `cutoff` is set.
    pub fn tensor_operator(&self, sites: usize, space: &FockSpace, cutoff: Option<usize>) -> Result<SpinBosonOperator> {
        let mut acc = SpinBosonOperator::zero(sites, space);
        for t in &self.terms {
            let w = Self::word_operator(&t.word, space, cutoff)?.scale(t.coeff);
            let piece = match &t.spin {
                Some(s) => SpinBosonOperator::product(s, &w),
                None => SpinBosonOperator::boson(sites, &w),
            };
            acc = acc.add(&piece)?;
        }
        Ok(acc)
    }
}

/// The free Hamiltonian regularized by projection and by substitution.
#[derive(Clone, Debug)]
pub struct FreeRegularization {
    /// `Q_L N Q_L`
    pub projected: FockOperator,
    /// `a_L† a_L`
    pub substituted: FockOperator,
}

impl FreeRegularization {
    pub fn new(spec: &TruncationSpec, cutoff: usize) -> Result<Self> {
        let projected = FockOperator::number(spec).cutoff(cutoff, 0)?;
        let substituted = ModelSpec::Free.hamiltonian()?.boson_operator(&spec.space(), Some(cutoff))?;
        Ok(FreeRegularization { projected, substituted })
    }

    /// Largest entry of the difference over the whole ambient space.
    pub fn discrepancy(&self) -> f64 {
        linalg::max_abs_diff(self.projected.entries(), self.substituted.entries())
    }
}

/// `e^{−iKs}` for Hermitian `K`, as a plain matrix.
fn unitary_from_generator(k: &Mat, s: f64) -> (Mat, f64) {
    let eig = HermitianEigen::new(k);
    let defect = linalg::unitarity_defect(&eig.vectors);
    (eig.apply(|lambda| (-I * lambda * s).exp()), defect)
}

pub const DISPLACEMENT_TOLERANCE: f64 = 1e-8;

/// The shifted mode `b = a + γ` and the spectral projections of `b†b`,
/// built from the truncated displacement `W = exp(γ(a† − a))`.
#[derive(Clone, Debug)]
pub struct DisplacedFrame {
    gamma: f64,
    spec: TruncationSpec,
    b: FockOperator,
    w: Mat,
    unitarity_defect: f64,
    intertwining_defect: f64,
}

impl DisplacedFrame {
    pub fn new(gamma: f64, spec: &TruncationSpec) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be finite".into()));
        }
        let space = spec.space();
        let a = FockOperator::annihilation(spec);
        let id = FockOperator::identity(&space);
        let b = a.add_scaled(linalg::real(gamma), &id)?.with_label("b");
        // W = exp(γ(a† − a)) = exp(−iK) with K = iγ(a† − a) Hermitian
        let gen = (a.entries().adjoint() - a.entries()) * (I * gamma);
        let (w, eig_defect) = unitary_from_generator(&gen, 1.0);
        let unitarity_defect = linalg::unitarity_defect(&w).max(eig_defect);
        // W† a W = a + γ on grades ≤ L
        let lhs = linalg::mul3(&w.adjoint(), a.entries(), &w);
        let l = spec.cutoff;
        let mut intertwining_defect = 0.0f64;
        for r in 0..=l {
            for c in 0..=l {
                intertwining_defect = intertwining_defect.max((lhs[(r, c)] - b.entry(r, c)).norm());
            }
        }
        let defect = unitarity_defect.max(intertwining_defect);
        if !(defect <= DISPLACEMENT_TOLERANCE) {
            return Err(Error::DisplacementDefect { defect, tolerance: DISPLACEMENT_TOLERANCE });
        }
        Ok(DisplacedFrame { gamma, spec: *spec, b, w, unitarity_defect, intertwining_defect })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn b(&self) -> &FockOperator {
        &self.b
    }

    pub fn displacement(&self) -> &Mat {
        &self.w
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    pub fn intertwining_defect(&self) -> f64 {
        self.intertwining_defect
    }

    pub fn defect(&self) -> f64 {
        self.unitarity_defect.max(self.intertwining_defect)
    }

    fn conjugated(&self, x: &FockOperator, label: String) -> Result<FockOperator> {
        let m = linalg::mul3(&self.w.adjoint(), x.entries(), &self.w);
        let ambient = self.spec.ambient_dim;
        FockOperator::from_parts(
            self.spec.space(),
            m,
            Some(self.spec.cutoff),
            Band { lower: ambient, raise: ambient },
            None,
            Some(Growth::bounded(1.0)),
            label,
        )
    }

    /// `W† Π_l W`.
    pub fn pi(&self, l: usize) -> Result<FockOperator> {
        self.conjugated(&FockOperator::projection_pi(l, &self.spec)?, format!("Πb{l}"))
    }

    /// `W† Q_L W`.
    pub fn q(&self, cutoff: usize) -> Result<FockOperator> {
        self.conjugated(&FockOperator::projection_q(cutoff, &self.spec)?, format!("Qb{cutoff}"))
    }

    /// `b_L = Q^b_L b Q^b_L`.
    pub fn b_cutoff(&self, cutoff: usize) -> Result<Mat> {
        let q = self.q(cutoff)?;
        Ok(linalg::mul3(q.entries(), self.b.entries(), q.entries()))
    }

    /// Lowest eigenvalues of `b_L† b_L − γ²` on the range of `Q^b_L`.
    pub fn regularized_spectrum(&self, cutoff: usize, count: usize) -> Result<Vec<f64>> {
        let bl = self.b_cutoff(cutoff)?;
        let h = linalg::mul(&bl.adjoint(), &bl);
        // orthonormal basis of Ran Q^b_L: the first L + 1 columns of W†
        let basis = self.w.adjoint().columns(0, cutoff + 1).into_owned();
        let compressed = linalg::mul3(&basis.adjoint(), &h, &basis);
        let eig = HermitianEigen::new(&compressed);
        Ok(eig.values.iter().take(count).map(|v| v - self.gamma * self.gamma).collect())
    }

    /// Lowest eigenvalues of `a†a + γ(a + a†)` on the ambient space.
    pub fn direct_spectrum(&self, count: usize) -> Result<Vec<f64>> {
        let h = ModelSpec::Displaced { gamma: self.gamma }.hamiltonian()?.boson_operator(&self.spec.space(), None)?;
        let eig = HermitianEigen::new(h.entries());
        Ok(eig.values.iter().take(count).copied().collect())
    }
}

/// Normal modes `A = (a + b)/√2`, `B = (a − b)/√2` on two modes truncated by
/// total occupation.
#[derive(Clone, Debug)]
pub struct TwoModeFrame {
    space: FockSpace,
    a: FockOperator,
    b: FockOperator,
    big_a: FockOperator,
    big_b: FockOperator,
    rotation: Mat,
}

impl TwoModeFrame {
    /// `per_mode` is the occupation each mode must reach; the space keeps
    /// every state with `n_a + n_b ≤ 2 · per_mode`.
    pub fn new(per_mode: usize) -> Result<Self> {
        if per_mode == 0 {
            return Err(Error::InvalidParameter("per-mode cutoff must be positive".into()));
        }
        let space = FockSpace::pair(2 * per_mode);
        let a = FockOperator::lowering(&space, 0)?.with_label("a");
        let b = FockOperator::lowering(&space, 1)?.with_label("b");
        let s = linalg::real(std::f64::consts::FRAC_1_SQRT_2);
        let big_a = a.scale(s).add_scaled(s, &b)?.with_label("A");
        let big_b = a.scale(s).add_scaled(-s, &b)?.with_label("B");
        // R = exp(−(π/4)(a†b − b†a)) = exp(−iK t) with K = i(a†b − b†a), t = −π/4
        let g = linalg::mul(&a.entries().adjoint(), b.entries()) - linalg::mul(&b.entries().adjoint(), a.entries());
        let (rotation, _) = unitary_from_generator(&(g * I), -FRAC_PI_4);
        Ok(TwoModeFrame { space, a, b, big_a, big_b, rotation })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn a(&self) -> &FockOperator {
        &self.a
    }

    pub fn b(&self) -> &FockOperator {
        &self.b
    }

    pub fn big_a(&self) -> &FockOperator {
        &self.big_a
    }

    pub fn big_b(&self) -> &FockOperator {
        &self.big_b
    }

    /// `R` with `R a R† = A`.
    pub fn rotation(&self) -> &Mat {
        &self.rotation
    }

    fn total_preserving(&self, m: Mat, label: String) -> Result<FockOperator> {
        FockOperator::from_parts(self.space.clone(), m, Some(self.space.ambient()), Band::DIAGONAL, None, None, label)
    }

    /// Projection onto `A`-occupation `≤ L`, `R (Q_L ⊗ 1) R†`.
    pub fn q_a(&self, cutoff: usize) -> Result<FockOperator> {
        let q = FockOperator::mode_projection(&self.space, 0, 0, cutoff)?;
        self.total_preserving(linalg::mul3(&self.rotation, q.entries(), &self.rotation.adjoint()), format!("QA{cutoff}"))
    }

    /// `2 A_L† A_L` with `A_L = Q^A_L A Q^A_L`.
    pub fn hamiltonian(&self, cutoff: usize) -> Result<FockOperator> {
        let q = self.q_a(cutoff)?;
        let al = linalg::mul3(q.entries(), self.big_a.entries(), q.entries());
        self.total_preserving(linalg::mul(&al.adjoint(), &al) * linalg::real(2.0), format!("2A{cutoff}†A{cutoff}"))
    }

    /// The unregularized `a†a + b†b + a†b + b†a`.
    pub fn original_hamiltonian(&self) -> Result<FockOperator> {
        ModelSpec::TwoMode.hamiltonian()?.boson_operator(&self.space, None)
    }
}

/// `H_{V,L} = J|V|(σ_3^V)² + Σ_j γ_j (a_{j,L} + a_{j,L}†) σ_3^V`.
#[derive(Clone, Debug)]
pub struct SpinBosonModel {
    pub j: f64,
    pub gammas: Vec<f64>,
    pub sys: SpinSystem,
    pub spec: TruncationSpec,
}

impl SpinBosonModel {
    pub fn new(j: f64, gamma: f64, sys: SpinSystem, spec: TruncationSpec) -> Result<Self> {
        Self::multi(j, vec![gamma], sys, spec)
    }

    pub fn multi(j: f64, gammas: Vec<f64>, sys: SpinSystem, spec: TruncationSpec) -> Result<Self> {
        spec.validate()?;
        if gammas.is_empty() || !j.is_finite() || gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite and at least one mode is needed".into()));
        }
        Ok(SpinBosonModel { j, gammas, sys, spec })
    }

    pub fn modes(&self) -> usize {
        self.gammas.len()
    }

    pub fn cutoff(&self) -> usize {
        self.spec.cutoff
    }

    pub fn volume(&self) -> usize {
        self.sys.len()
    }

    pub fn boson_space(&self) -> FockSpace {
        FockSpace::product(self.modes(), self.spec.ambient_dim)
    }

    /// `a_{j,L} + a_{j,L}†` on the boson space.
    pub fn field(&self, mode: usize) -> Result<FockOperator> {
        let al = FockOperator::lowering(&self.boson_space(), mode)?.cutoff(self.cutoff(), mode)?;
        // the grade of a product state is its largest occupation, and a_{j,L}
        // only moves states with n_j ≤ L, so it changes the grade only there
        Ok(al.add(&al.adjoint())?.with_mixing(Some(self.cutoff())))
    }

    /// Boson Hamiltonian of the sector with magnetization `m`.
    pub fn sector_hamiltonian(&self, m: f64) -> Result<FockOperator> {
        self.sector_hamiltonian_with(self.j, m)
    }

    fn sector_hamiltonian_with(&self, j: f64, m: f64) -> Result<FockOperator> {
        let space = self.boson_space();
        let mut h = FockOperator::identity(&space).scale(linalg::real(j * self.volume() as f64 * m * m));
        for (mode, &g) in self.gammas.iter().enumerate() {
            h = h.add_scaled(linalg::real(g * m), &self.field(mode)?)?;
        }
        Ok(h.with_label(format!("h({m})")))
    }

    /// Regularized Hamiltonian on the full tensor space.
    pub fn hamiltonian(&self) -> Result<SpinBosonOperator> {
        let spec = ModelSpec::SpinBosonMulti { j: self.j, gammas: self.gammas.clone(), sites: self.volume() };
        spec.hamiltonian()?.tensor_operator(self.volume(), &self.boson_space(), Some(self.cutoff()))
    }

    /// `J|V|(σ_3^V)²` and `(J/|V|) Σ_{ij} σ_3^i σ_3^j` as spin operators.
    pub fn kinetic_forms(&self) -> Result<(SpinOperator, SpinOperator)> {
        let s3 = self.sys.mean_magnetization();
        let n = self.volume();
        let squared = s3.compose(&s3)?.scale(linalg::real(self.j * n as f64));
        let mut pair = SpinOperator::diagonal(n, vec![linalg::ZERO; self.sys.dim()]);
        for i in 0..n {
            for k in 0..n {
                let zz = self.sys.pauli(crate::spin::Axis::Z, i)?.compose(&self.sys.pauli(crate::spin::Axis::Z, k)?)?;
                pair = pair.add_scaled(linalg::real(self.j / n as f64), &zz)?;
            }
        }
        Ok((squared, pair))
    }

    /// Sector-blocked evolution under `H_{V,L}`.
    pub fn sectored(&self) -> Result<SectorEvolution> {
        SectorEvolution::new(&self.sys, |m| self.sector_hamiltonian(m))
    }

    /// Sector-blocked evolution under the interaction alone (`J = 0`).
    pub fn interaction_only(&self) -> Result<SectorEvolution> {
        SectorEvolution::new(&self.sys, |m| self.sector_hamiltonian_with(0.0, m))
    }

    /// Evolution of one sector's boson Hamiltonian.
    pub fn sector_evolution(&self, m: f64) -> Result<Evolution> {
        Evolution::new(&self.sector_hamiltonian(m)?)
    }
}
