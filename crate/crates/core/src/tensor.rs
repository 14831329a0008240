//! Operators on spin ⊗ boson space, stored as boson blocks indexed by pairs
//! of spin basis states. Dense form uses the index `s · dim_boson + b`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fock::{FockOperator, FockSpace};
use crate::linalg::{self, Mat, C64, ONE};
use crate::spin::SpinOperator;

#[derive(Clone, Debug)]
pub struct SpinBosonOperator {
    sites: usize,
    space: FockSpace,
    rows: BTreeMap<usize, BTreeMap<usize, FockOperator>>,
    label: String,
}

impl SpinBosonOperator {
    pub fn zero(sites: usize, space: &FockSpace) -> Self {
        SpinBosonOperator { sites, space: space.clone(), rows: BTreeMap::new(), label: "0".into() }
    }

    /// `A ⊗ X`.
    pub fn product(a: &SpinOperator, x: &FockOperator) -> Self {
        let mut out = Self::zero(a.sites(), x.space());
        for (r, c, v) in a.nonzeros() {
            out.rows.entry(r).or_default().insert(c, x.scale(v));
        }
        out.label = format!("{} ⊗ {}", a.label(), x.label());
        out
    }

    pub fn identity(sites: usize, space: &FockSpace) -> Self {
        let mut out = Self::zero(sites, space);
        let id = FockOperator::identity(space);
        for s in 0..1usize << sites {
            out.rows.entry(s).or_default().insert(s, id.clone());
        }
        out.label = "1".into();
        out
    }

    /// `1 ⊗ X`.
    pub fn boson(sites: usize, x: &FockOperator) -> Self {
        let mut out = Self::zero(sites, x.space());
        for s in 0..1usize << sites {
            out.rows.entry(s).or_default().insert(s, x.clone());
        }
        out.label = x.label().to_string();
        out
    }

    /// `A ⊗ 1`.
    pub fn spin(a: &SpinOperator, space: &FockSpace) -> Self {
        Self::product(a, &FockOperator::identity(space)).with_label(a.label())
    }

    /// Splits a dense matrix into blocks; every block gets the given trusted
    /// grade and the full band.
    pub fn from_dense(sites: usize, space: &FockSpace, m: &Mat, trusted: Option<usize>) -> Result<Self> {
        let bdim = space.dim();
        let sdim = 1usize << sites;
        if m.nrows() != sdim * bdim || m.ncols() != sdim * bdim {
            return Err(Error::DimensionMismatch { left: sdim * bdim, right: m.nrows() });
        }
        let mut out = Self::zero(sites, space);
        for r in 0..sdim {
            for c in 0..sdim {
                let block = m.view((r * bdim, c * bdim), (bdim, bdim)).into_owned();
                if linalg::max_abs(&block) == 0.0 {
                    continue;
                }
                let op = FockOperator::untrusted(space.clone(), block, "block")?;
                let op = FockOperator::from_parts(space.clone(), op.into_entries(), trusted, full_band(space), None, None, "block")?;
                out.rows.entry(r).or_default().insert(c, op);
            }
        }
        out.label = "dense".into();
        Ok(out)
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

    pub fn spin_dim(&self) -> usize {
        1 << self.sites
    }

    pub fn boson_space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.space.dim()
    }

    /// Nonzero blocks, row by row.
    pub fn rows(&self) -> impl Iterator<Item = (&usize, &BTreeMap<usize, FockOperator>)> {
        self.rows.iter()
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&FockOperator> {
        self.rows.get(&row).and_then(|r| r.get(&col))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, &FockOperator)> {
        self.rows.iter().flat_map(|(&r, cols)| cols.iter().map(move |(&c, b)| (r, c, b)))
    }

    pub fn block_count(&self) -> usize {
        self.rows.values().map(|c| c.len()).sum()
    }

    /// Smallest trusted grade over all blocks; an operator without blocks is
    /// trusted everywhere.
    pub fn trusted(&self) -> Option<usize> {
        let mut t = Some(self.space.ambient());
        for (_, _, b) in self.blocks() {
            t = match (t, b.trusted()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                _ => None,
            };
        }
        t
    }

    pub fn with_trusted(mut self, trusted: Option<usize>) -> Self {
        for cols in self.rows.values_mut() {
            for b in cols.values_mut() {
                *b = b.clone().with_trusted(trusted);
            }
        }
        self
    }

    fn check(&self, other: &SpinBosonOperator) -> Result<()> {
        if self.sites != other.sites || self.space != other.space {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn add_scaled(&self, c: C64, rhs: &SpinBosonOperator) -> Result<SpinBosonOperator> {
        self.check(rhs)?;
        let mut out = self.clone();
        for (r, col, b) in rhs.blocks() {
            let slot = out.rows.entry(r).or_default();
            let merged = match slot.get(&col) {
                Some(existing) => existing.add_scaled(c, b)?,
                None => b.scale(c),
            };
            slot.insert(col, merged);
        }
        out.label = format!("{} + ({c})·{}", self.label, rhs.label);
        Ok(out)
    }

    pub fn add(&self, rhs: &SpinBosonOperator) -> Result<SpinBosonOperator> {
        self.add_scaled(ONE, rhs)
    }

    pub fn sub(&self, rhs: &SpinBosonOperator) -> Result<SpinBosonOperator> {
        self.add_scaled(-ONE, rhs)
    }

    pub fn scale(&self, c: C64) -> SpinBosonOperator {
        let mut out = self.clone();
        for cols in out.rows.values_mut() {
            for b in cols.values_mut() {
                *b = b.scale(c);
            }
        }
        out
    }

    pub fn adjoint(&self) -> SpinBosonOperator {
        let mut out = Self::zero(self.sites, &self.space);
        for (r, c, b) in self.blocks() {
            out.rows.entry(c).or_default().insert(r, b.adjoint());
        }
        out.label = format!("({})†", self.label);
        out
    }

    pub fn compose(&self, rhs: &SpinBosonOperator) -> Result<SpinBosonOperator> {
        self.check(rhs)?;
        let mut out = Self::zero(self.sites, &self.space);
        for (&r, cols) in &self.rows {
            for (&mid, left) in cols {
                let Some(right_row) = rhs.rows.get(&mid) else { continue };
                for (&c, right) in right_row {
                    let prod = left.compose(right)?;
                    let slot = out.rows.entry(r).or_default();
                    let merged = match slot.get(&c) {
                        Some(existing) => existing.add(&prod)?,
                        None => prod,
                    };
                    slot.insert(c, merged);
                }
            }
        }
        out.label = format!("{}·{}", self.label, rhs.label);
        Ok(out)
    }

    pub fn commutator(&self, rhs: &SpinBosonOperator) -> Result<SpinBosonOperator> {
        let out = self.compose(rhs)?.sub(&rhs.compose(self)?)?;
        Ok(out.with_label(format!("[{}, {}]", self.label, rhs.label)))
    }

    /// Applies `g(row, col, block)` to every block.
    pub fn map_blocks(&self, g: impl Fn(usize, usize, &FockOperator) -> Result<FockOperator>) -> Result<SpinBosonOperator> {
        let mut out = Self::zero(self.sites, &self.space);
        for (r, c, b) in self.blocks() {
            out.rows.entry(r).or_default().insert(c, g(r, c, b)?);
        }
        out.label = self.label.clone();
        Ok(out)
    }

    pub fn to_dense(&self) -> Mat {
        let bdim = self.space.dim();
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for (r, c, b) in self.blocks() {
            m.view_mut((r * bdim, c * bdim), (bdim, bdim)).copy_from(b.entries());
        }
        m
    }

    /// Largest entry of the difference on the common trusted region.
    pub fn distance(&self, other: &SpinBosonOperator) -> Result<f64> {
        self.check(other)?;
        let t = match (self.trusted(), other.trusted()) {
            (Some(x), Some(y)) => x.min(y),
            _ => return Ok(0.0),
        };
        let zero = FockOperator::zero(&self.space);
        let mut worst = 0.0f64;
        let mut keys: Vec<(usize, usize)> = self.blocks().map(|(r, c, _)| (r, c)).collect();
        keys.extend(other.blocks().map(|(r, c, _)| (r, c)));
        keys.sort_unstable();
        keys.dedup();
        for (r, c) in keys {
            let x = self.block(r, c).unwrap_or(&zero);
            let y = other.block(r, c).unwrap_or(&zero);
            worst = worst.max(x.deviation_up_to(y, t)?);
        }
        Ok(worst)
    }
}

fn full_band(space: &FockSpace) -> crate::fock::Band {
    crate::fock::Band { lower: space.ambient(), raise: space.ambient() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TruncationSpec;
    use crate::spin::{Axis, SpinSystem};

    #[test]
    fn dense_form_is_kronecker_product() {
        let sys = SpinSystem::chain(2).unwrap();
        let spec = TruncationSpec::new(4, 3, 1).unwrap();
        let x = sys.pauli(Axis::X, 1).unwrap();
        let a = FockOperator::annihilation(&spec);
        let y = SpinBosonOperator::product(&x, &a);
        let expected = linalg::kron(&x.to_dense(), a.entries());
        assert_eq!(linalg::max_abs_diff(&y.to_dense(), &expected), 0.0);
        let back = SpinBosonOperator::from_dense(2, &spec.space(), &expected, Some(4)).unwrap();
        assert_eq!(linalg::max_abs_diff(&back.to_dense(), &expected), 0.0);
    }

    #[test]
    fn block_product_matches_dense_product() {
        let sys = SpinSystem::chain(2).unwrap();
        let spec = TruncationSpec::new(5, 4, 1).unwrap();
        let a = FockOperator::annihilation(&spec);
        let p = SpinBosonOperator::product(&sys.pauli(Axis::Y, 0).unwrap(), &a)
            .add(&SpinBosonOperator::spin(&sys.mean_magnetization(), &spec.space()))
            .unwrap();
        let q = SpinBosonOperator::product(&sys.pauli(Axis::X, 0).unwrap(), &a.adjoint());
        let dense = p.to_dense() * q.to_dense();
        assert!(linalg::max_abs_diff(&p.compose(&q).unwrap().to_dense(), &dense) < 1e-14);
        assert!(linalg::max_abs_diff(&p.adjoint().to_dense(), &p.to_dense().adjoint()) == 0.0);
    }
}
