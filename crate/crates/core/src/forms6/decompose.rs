//! Type decomposition of forms under the induced almost-complex structure.

use super::ops::{inner, j_action, lambda_contraction, wedge};
use super::types::{AcStructure, AltTensor, PointStructure};

/// Refined split of a 3-form:
/// a = 2 f1 phi - 2 f2 phihat + alpha + omega ^ beta
/// with alpha a primitive real (2,1)+(1,2) form and beta a real 1-form.
#[derive(Clone, Copy, Debug)]
pub struct ThreeFormSplit {
    pub f1: f64,
    pub f2: f64,
    pub alpha: AltTensor,
    pub beta: AltTensor,
}

/// Refined split of a 2-form: a = gamma + pi + h omega with gamma real
/// (2,0)+(0,2), pi primitive (1,1), h a real function.
#[derive(Clone, Copy, Debug)]
pub struct TwoFormSplit {
    pub gamma: AltTensor,
    pub pi: AltTensor,
    pub h: f64,
}

/// Decomposition of a form into J-invariant pieces.
#[derive(Clone, Debug)]
pub enum TypeDecomposition {
    /// Even degree: eigencomponents of the J-action, eigenvalues +1 and -1.
    Even {
        plus: AltTensor,
        minus: AltTensor,
    },
    Two(TwoFormSplit),
    Three(ThreeFormSplit),
}

impl TypeDecomposition {
    /// Reassembles the input.
    pub fn recombine(&self, ps: &PointStructure) -> AltTensor {
        match self {
            TypeDecomposition::Even { plus, minus } => *plus + *minus,
            TypeDecomposition::Two(s) => s.gamma + s.pi + ps.omega.scaled(s.h),
            TypeDecomposition::Three(s) => {
                ps.phi.scaled(2.0 * s.f1) - ps.phihat.scaled(2.0 * s.f2)
                    + s.alpha
                    + wedge(&ps.omega, &s.beta).expect("degree 3")
            }
        }
    }
}

/// Splits an even-degree form into J-eigencomponents.
pub fn j_eigen_split(j: &AcStructure, a: &AltTensor) -> (AltTensor, AltTensor) {
    assert!(a.degree() % 2 == 0, "J-eigen split needs even degree");
    let ja = j_action(j, a);
    ((*a + ja).scaled(0.5), (*a - ja).scaled(0.5))
}

/// Decomposes a form at a point structure.  Degrees 2 and 3 return the
/// refined splits used by the linearization; other even degrees return the
/// J-eigencomponents.
pub fn type_decompose(ps: &PointStructure, a: &AltTensor) -> TypeDecomposition {
    match a.degree() {
        2 => {
            let (plus, minus) = j_eigen_split(&ps.j, a);
            let h = lambda_contraction(&ps.omega, a).components()[0] / 3.0;
            let pi = plus - ps.omega.scaled(h);
            TypeDecomposition::Two(TwoFormSplit {
                gamma: minus,
                pi,
                h,
            })
        }
        3 => {
            let f1 = inner(&ps.metric, a, &ps.phi) / (2.0 * ps.normsq);
            let f2 = -inner(&ps.metric, a, &ps.phihat) / (2.0 * ps.normsq);
            let beta = lambda_contraction(&ps.omega, a).scaled(0.5);
            let alpha = *a - ps.phi.scaled(2.0 * f1) + ps.phihat.scaled(2.0 * f2)
                - wedge(&ps.omega, &beta).expect("degree 3");
            TypeDecomposition::Three(ThreeFormSplit {
                f1,
                f2,
                alpha,
                beta,
            })
        }
        d if d % 2 == 0 => {
            let (plus, minus) = j_eigen_split(&ps.j, a);
            TypeDecomposition::Even { plus, minus }
        }
        _ => panic!("refined type decomposition is defined for degrees 2 and 3"),
    }
}
