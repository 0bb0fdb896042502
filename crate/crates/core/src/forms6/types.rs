//! Pointwise domain types: antisymmetric tensors and the structures a
//! positive primitive pair induces.

use super::mat6::{self, Mat6};
use super::tables::{DIM, MAX_COMP, NCOMP, TABLES};
use crate::error::{Error, Result};

pub type Vector6 = [f64; 6];

/// Antisymmetric k-tensor at a point, k = 0..=6, stored by strictly
/// increasing multi-index in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AltTensor {
    degree: u8,
    comps: [f64; MAX_COMP],
}

impl AltTensor {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "degree out of range");
        AltTensor {
            degree: degree as u8,
            comps: [0.0; MAX_COMP],
        }
    }

    /// Basis form e^{i1...ik} for 0-based, not necessarily sorted indices.
    pub fn basis(degree: usize, idx: &[usize]) -> Self {
        assert_eq!(idx.len(), degree);
        let mut a = Self::zero(degree);
        let (pos, sign) = TABLES.signed_rank(degree, idx);
        assert!(sign != 0, "degenerate multi-index");
        a.comps[pos] = sign as f64;
        a
    }

    pub fn from_components(degree: usize, comps: &[f64]) -> Self {
        assert_eq!(comps.len(), NCOMP[degree]);
        let mut a = Self::zero(degree);
        a.comps[..comps.len()].copy_from_slice(comps);
        a
    }

    pub fn scalar(value: f64) -> Self {
        let mut a = Self::zero(0);
        a.comps[0] = value;
        a
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    #[inline]
    pub fn len(&self) -> usize {
        NCOMP[self.degree as usize]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn components(&self) -> &[f64] {
        &self.comps[..self.len()]
    }

    #[inline]
    pub fn components_mut(&mut self) -> &mut [f64] {
        let n = self.len();
        &mut self.comps[..n]
    }

    /// Fully antisymmetric component for an arbitrary multi-index.
    pub fn component(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.degree());
        let (pos, sign) = TABLES.signed_rank(self.degree(), idx);
        sign as f64 * self.comps[pos]
    }

    pub fn set_component(&mut self, idx: &[usize], value: f64) {
        let (pos, sign) = TABLES.signed_rank(self.degree(), idx);
        assert!(sign != 0, "degenerate multi-index");
        self.comps[pos] = sign as f64 * value;
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Euclidean dot product of stored components (the flat-metric inner
    /// product in the 1/k! normalization).
    pub fn dot(&self, other: &AltTensor) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.components()
            .iter()
            .zip(other.components())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for c in out.components_mut() {
            *c *= s;
        }
        out
    }
}

impl std::ops::Add for AltTensor {
    type Output = AltTensor;
    fn add(self, rhs: AltTensor) -> AltTensor {
        assert_eq!(self.degree, rhs.degree);
        let mut out = self;
        for (c, r) in out.components_mut().iter_mut().zip(rhs.components()) {
            *c += r;
        }
        out
    }
}

impl std::ops::Sub for AltTensor {
    type Output = AltTensor;
    fn sub(self, rhs: AltTensor) -> AltTensor {
        assert_eq!(self.degree, rhs.degree);
        let mut out = self;
        for (c, r) in out.components_mut().iter_mut().zip(rhs.components()) {
            *c -= r;
        }
        out
    }
}

impl std::ops::Neg for AltTensor {
    type Output = AltTensor;
    fn neg(self) -> AltTensor {
        self.scaled(-1.0)
    }
}

impl std::ops::Mul<f64> for AltTensor {
    type Output = AltTensor;
    fn mul(self, s: f64) -> AltTensor {
        self.scaled(s)
    }
}

/// Symmetric 6x6 metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric6 {
    pub entries: Mat6,
}

impl Metric6 {
    pub fn identity() -> Self {
        Metric6 {
            entries: mat6::IDENTITY,
        }
    }

    pub fn from_entries(entries: Mat6) -> Self {
        Metric6 { entries }
    }

    pub fn inverse(&self) -> Result<Mat6> {
        mat6::invert(&self.entries).ok_or(Error::IndefiniteMetric { pivot: 0.0 })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        mat6::sym_eigenvalues(&self.entries)[0]
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        mat6::ldl_min_pivot(&self.entries) > tol
    }

    pub fn det(&self) -> f64 {
        mat6::det(&self.entries)
    }
}

/// Almost-complex structure J^i_j with J^2 = -I.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcStructure {
    pub matrix: Mat6,
}

impl AcStructure {
    pub fn square_defect(&self) -> f64 {
        let mut sq = mat6::matmul(&self.matrix, &self.matrix);
        for (i, row) in sq.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        sq.iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// A pointwise Type IIA pair together with everything it induces.
#[derive(Clone, Copy, Debug)]
pub struct PointStructure {
    pub phi: AltTensor,
    pub omega: AltTensor,
    pub j: AcStructure,
    pub metric: Metric6,
    pub normsq: f64,
    pub phihat: AltTensor,
}

/// Darboux form e^{12} + e^{34} + e^{56}.
pub fn omega_standard() -> AltTensor {
    let mut w = AltTensor::zero(2);
    for k in 0..3 {
        w = w + AltTensor::basis(2, &[2 * k, 2 * k + 1]);
    }
    w
}

/// Normal-form positive 3-form with |phi| = s:
/// (s/2)(e^{135} - e^{146} - e^{245} - e^{236}).
pub fn phi_standard(s: f64) -> AltTensor {
    (AltTensor::basis(3, &[0, 2, 4]) - AltTensor::basis(3, &[0, 3, 5])
        - AltTensor::basis(3, &[1, 3, 4])
        - AltTensor::basis(3, &[1, 2, 5]))
        * (s / 2.0)
}

/// Dual of the normal form: (s/2)(e^{136} + e^{145} + e^{235} - e^{246}).
pub fn phihat_standard(s: f64) -> AltTensor {
    (AltTensor::basis(3, &[0, 2, 5]) + AltTensor::basis(3, &[0, 3, 4])
        + AltTensor::basis(3, &[1, 2, 4])
        - AltTensor::basis(3, &[1, 3, 5]))
        * (s / 2.0)
}
