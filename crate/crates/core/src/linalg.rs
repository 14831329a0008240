//! Dense complex helpers shared by the operator types.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Matrix product through real products, which take the fast path of the
/// linear algebra backend; complex products do not.
pub fn mul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.nrows());
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let a_real = ai.iter().all(|x| *x == 0.0);
    let b_real = bi.iter().all(|x| *x == 0.0);
    let re = if a_real || b_real { &ar * &br } else { &ar * &br - &ai * &bi };
    let im = match (a_real, b_real) {
        (true, true) => return re.map(real),
        (true, false) => &ar * &bi,
        (false, true) => &ai * &br,
        (false, false) => &ar * &bi + &ai * &br,
    };
    re.zip_map(&im, C64::new)
}

/// `a b c`.
pub fn mul3(a: &Mat, b: &Mat, c: &Mat) -> Mat {
    mul(&mul(a, b), c)
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    // largest eigenvalue of m†m, on whichever side is smaller
    let gram = if m.nrows() < m.ncols() { mul(m, &m.adjoint()) } else { mul(&m.adjoint(), m) };
    let top = HermitianEigen::new(&gram).values.last().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// Deviation of `m` from Hermiticity, as the largest entry of `m - m†`.
pub fn hermiticity_defect(m: &Mat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_defect(u: &Mat) -> f64 {
    let n = u.nrows();
    max_abs_diff(&mul(&u.adjoint(), u), &Mat::identity(n, n))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl HermitianEigen {
    /// Diagonalizes each block of indices coupled through nonzero entries
    /// on its own.
    pub fn new(h: &Mat) -> Self {
        let sym = (h + h.adjoint()).scale(0.5);
        let blocks = coupled_blocks(&sym);
        Self::from_blocks(sym, blocks)
    }

    fn from_blocks(sym: Mat, blocks: Vec<Vec<usize>>) -> Self {
        let n = sym.nrows();
        let mut pairs: Vec<(f64, Vector)> = Vec::with_capacity(n);
        for block in blocks {
            let m = block.len();
            let sub = Mat::from_fn(m, m, |r, c| sym[(block[r], block[c])]);
            let eig = SymmetricEigen::new(sub);
            for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
                let mut v = Vector::zeros(n);
                for (r, &i) in block.iter().enumerate() {
                    v[i] = eig.eigenvectors[(r, j)];
                }
                pairs.push((lambda, v));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut vectors = Mat::zeros(n, n);
        for (j, (_, v)) in pairs.iter().enumerate() {
            vectors.set_column(j, v);
        }
        HermitianEigen { values: pairs.into_iter().map(|p| p.0).collect(), vectors }
    }

    /// `V g(Λ) V†` for a scalar function `g` of the eigenvalues.
    pub fn apply(&self, g: impl Fn(f64) -> C64) -> Mat {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let factor = g(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= factor;
            }
        }
        mul(&scaled, &self.vectors.adjoint())
    }

    /// `e^{iHt}`.
    pub fn propagator(&self, t: f64) -> Mat {
        if t == 0.0 {
            let n = self.values.len();
            return Mat::identity(n, n);
        }
        self.apply(|lambda| (I * lambda * t).exp())
    }
}

/// Connected components of the graph with an edge wherever `m` has a
/// nonzero entry, each sorted.
fn coupled_blocks(m: &Mat) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for c in 0..n {
        for r in 0..c {
            if m[(r, c)] != ZERO {
                let (a, b) = (root(&mut parent, r), root(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `e^m` by scaling and squaring a truncated Taylor series.
pub fn expm(m: &Mat) -> Mat {
    let n = m.nrows();
    let norm1 = (0..n).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    // halve until the one-norm is below 1/2; 24 terms then leave less than
    // 0.5^25 / 25! relative error
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m * real(0.5f64.powi(squarings as i32));
    let mut term = Mat::identity(n, n);
    let mut sum = Mat::identity(n, n);
    for j in 1..=24 {
        term = mul(&term, &scaled) * real(1.0 / j as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

/// `e^{iHt}` for a Hermitian `h`, plus the unitarity defect of the eigenvector matrix.
pub fn propagator(h: &Mat, t: f64) -> (Mat, f64) {
    let eig = HermitianEigen::new(h);
    let defect = unitarity_defect(&eig.vectors);
    (eig.propagator(t), defect)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Real diagonal matrix.
pub fn diag(values: impl IntoIterator<Item = f64>) -> Mat {
    let v: Vec<C64> = values.into_iter().map(real).collect();
    Mat::from_diagonal(&Vector::from_vec(v))
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blockwise_eigen_matches_full() {
        // two coupled pairs and a lone index, interleaved
        let mut h = Mat::zeros(5, 5);
        h[(0, 3)] = C64::new(0.5, 0.25);
        h[(3, 0)] = h[(0, 3)].conj();
        h[(1, 4)] = real(2.0);
        h[(4, 1)] = real(2.0);
        for i in 0..5 {
            h[(i, i)] = real(i as f64 - 1.5);
        }
        let eig = HermitianEigen::new(&h);
        let mut full: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
        full.sort_by(f64::total_cmp);
        for (x, y) in eig.values.iter().zip(&full) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(unitarity_defect(&eig.vectors) < 1e-13);
        assert!(max_abs_diff(&eig.apply(real), &h) < 1e-13);
    }

    #[test]
    fn real_split_product_matches_direct() {
        let a = Mat::from_fn(4, 3, |r, c| C64::new(r as f64 - c as f64, (r * c) as f64 * 0.5));
        let b = Mat::from_fn(3, 5, |r, c| C64::new((r + c) as f64, if c == 2 { 1.0 } else { -0.25 }));
        assert!(max_abs_diff(&mul(&a, &b), &(&a * &b)) < 1e-13);
        let br = b.map(|z| real(z.re));
        assert!(max_abs_diff(&mul(&a, &br), &(&a * &br)) < 1e-13);
        assert!(max_abs_diff(&mul(&br.transpose(), &a.transpose()), &(br.transpose() * a.transpose())) < 1e-13);
    }

    #[test]
    fn exponential_matches_diagonalization() {
        let h = Mat::from_fn(6, 6, |r, c| C64::new((r + 2 * c) as f64 * 0.3, r as f64 - c as f64));
        let h = (&h + h.adjoint()) * real(0.5);
        let (u, _) = propagator(&h, 1.7);
        assert!(max_abs_diff(&expm(&(h * (I * 1.7))), &u) < 1e-11);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = diag([1.0, -3.0, 2.0]);
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&Mat::zeros(3, 3)), 0.0);
    }

    #[test]
    fn propagator_of_pauli_x() {
        let x = Mat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let (u, defect) = propagator(&x, 0.3);
        assert!(defect < 1e-14);
        let expected = Mat::identity(2, 2) * real(0.3f64.cos()) + x * (I * 0.3f64.sin());
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }
}
