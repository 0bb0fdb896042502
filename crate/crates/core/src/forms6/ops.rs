//! The pointwise operations: Hitchin's construction, the induced metric,
//! duals, contractions and the variational formulas.

use super::kernel::{self, LAMBDA_NEG_TOL, METRIC_EIG_TOL};
use super::mat6::{self, Mat6};
use super::tables::{NCOMP, TABLES};
use super::types::{AcStructure, AltTensor, Metric6, PointStructure, Vector6};
use crate::error::{Error, Result};

/// Exterior product.  Rejects degree overflow.
pub fn wedge(a: &AltTensor, b: &AltTensor) -> Result<AltTensor> {
    let (p, q) = (a.degree(), b.degree());
    if p + q > 6 {
        return Err(Error::DegreeOverflow { p, q });
    }
    let mut out = AltTensor::zero(p + q);
    kernel::wedge_into(out.components_mut(), a.components(), b.components(), p, q);
    Ok(out)
}

/// Interior product (iota_v a)(X_2..X_k) = a(v, X_2..X_k); requires k >= 1.
pub fn interior_product(v: &Vector6, a: &AltTensor) -> AltTensor {
    let k = a.degree();
    assert!(k >= 1, "interior product needs degree >= 1");
    let mut out = AltTensor::zero(k - 1);
    kernel::interior_into(out.components_mut(), v, a.components(), k);
    out
}

/// Hitchin's invariants of a 3-form: (lambda, K) with K(t phi) = t^2 K(phi)
/// and lambda(t phi) = t^4 lambda(phi); lambda < 0 iff phi is positive.
pub fn hitchin_invariants(phi: &AltTensor) -> (f64, Mat6) {
    assert_eq!(phi.degree(), 3);
    let k = kernel::hitchin_k(phi.components());
    (kernel::hitchin_lambda(&k), k)
}

/// The almost-complex structure J = K / sqrt(-lambda) of a positive 3-form.
pub fn almost_complex(phi: &AltTensor) -> Result<AcStructure> {
    let (lambda, k) = hitchin_invariants(phi);
    if lambda >= LAMBDA_NEG_TOL {
        return Err(Error::NotPositive { lambda });
    }
    let s = 1.0 / (-lambda).sqrt();
    let mut m = k;
    for row in &mut m {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    Ok(AcStructure { matrix: m })
}

/// The Hitchin dual phihat with phihat_{ijk} = -phi_{Ji,j,k}; applying it
/// twice negates: dual(dual(phi)) = -phi.
pub fn hitchin_dual(phi: &AltTensor) -> Result<AltTensor> {
    let j = almost_complex(phi)?;
    let mut out = AltTensor::zero(3);
    kernel::phihat_from_j(out.components_mut(), &j.matrix, phi.components());
    Ok(out)
}

/// |phi|^2 from phi ^ phihat = |phi|^2 omega^3/3!.
pub fn norm_squared(phi: &AltTensor, omega: &AltTensor) -> Result<f64> {
    assert_eq!(omega.degree(), 2);
    let vol = kernel::vol_coeff(omega.components());
    if vol <= 0.0 {
        return Err(Error::Orientation { coeff: vol });
    }
    let hat = hitchin_dual(phi)?;
    let top = wedge(phi, &hat)?;
    let nsq = top.components()[0] / vol;
    if nsq <= 0.0 {
        return Err(Error::NotPositive { lambda: nsq });
    }
    Ok(nsq)
}

/// The induced metric, by the component formula
/// g_{ij} = -|phi|^{-2} phi_{iab} phi_{jkp} w^{ak} w^{bp}.
pub fn metric(phi: &AltTensor, omega: &AltTensor) -> Result<Metric6> {
    let prim = wedge(phi, omega)?;
    let scale = phi.max_abs().max(1e-300) * omega.max_abs().max(1e-300);
    if prim.max_abs() > 1e-8 * scale {
        return Err(Error::NonPrimitive {
            residual: prim.max_abs(),
        });
    }
    let w = kernel::omega_matrix(omega.components());
    let winv = mat6::invert(&w).ok_or(Error::Degenerate)?;
    let nsq = norm_squared(phi, omega)?;
    let g = kernel::metric_reference(phi.components(), &winv, nsq);
    let pivot = mat6::ldl_min_pivot(&g);
    if pivot <= METRIC_EIG_TOL {
        return Err(Error::IndefiniteMetric { pivot });
    }
    Ok(Metric6 { entries: g })
}

/// Hodge contraction Lambda_omega, normalized so Lambda_omega omega = 3.
pub fn lambda_contraction(omega: &AltTensor, a: &AltTensor) -> AltTensor {
    assert_eq!(omega.degree(), 2);
    let k = a.degree();
    assert!(k >= 2, "Hodge contraction needs degree >= 2");
    let w = kernel::omega_matrix(omega.components());
    let winv = mat6::invert(&w).expect("degenerate 2-form");
    let mut out = AltTensor::zero(k - 2);
    kernel::lambda_into(out.components_mut(), &winv, a.components(), k);
    out
}

/// Hodge star of a k-form against a positive metric.
pub fn hodge_star(g: &Metric6, a: &AltTensor) -> Result<AltTensor> {
    if !g.is_positive(METRIC_EIG_TOL) {
        return Err(Error::IndefiniteMetric {
            pivot: mat6::ldl_min_pivot(&g.entries),
        });
    }
    let ginv = g.inverse()?;
    let k = a.degree();
    let mut out = AltTensor::zero(6 - k);
    kernel::hodge_star_into(out.components_mut(), &g.entries, &ginv, a.components(), k);
    Ok(out)
}

/// (J a)(X_1,..,X_k) = a(J X_1,..,J X_k).
pub fn j_action(j: &AcStructure, a: &AltTensor) -> AltTensor {
    matrix_action(&j.matrix, a)
}

/// Pullback of a k-form by a linear map.
pub fn matrix_action(m: &Mat6, a: &AltTensor) -> AltTensor {
    let mut out = AltTensor::zero(a.degree());
    kernel::matrix_action_into(out.components_mut(), m, a.components(), a.degree());
    out
}

/// Inner product (A,B) = (1/k!) g^{IJ} A_I B_J.
pub fn inner(g: &Metric6, a: &AltTensor, b: &AltTensor) -> f64 {
    assert_eq!(a.degree(), b.degree());
    let ginv = g.inverse().expect("indefinite metric");
    kernel::inner_with_metric(&ginv, a.components(), b.components(), a.degree())
}

/// First variation of the Hitchin dual:
/// delta phihat = -J delta phi
///   + 2 (delta phi ^ phi / phi ^ phihat) phi
///   + 2 (delta phi ^ phihat / phi ^ phihat) phihat.
pub fn variation_dual(phi: &AltTensor, deltaphi: &AltTensor) -> Result<AltTensor> {
    let j = almost_complex(phi)?;
    let hat = hitchin_dual(phi)?;
    let top = wedge(phi, &hat)?.components()[0];
    let a = wedge(deltaphi, phi)?.components()[0];
    let b = wedge(deltaphi, &hat)?.components()[0];
    Ok(-j_action(&j, deltaphi) + phi.scaled(2.0 * a / top) + hat.scaled(2.0 * b / top))
}

/// First variation of |phi|^2: 2 (delta phi, phi) - |phi|^2 Lambda delta omega.
pub fn variation_norm_squared(
    ps: &PointStructure,
    deltaphi: &AltTensor,
    deltaomega: &AltTensor,
) -> f64 {
    let ip = inner(&ps.metric, deltaphi, &ps.phi);
    let lam = lambda_contraction(&ps.omega, deltaomega);
    2.0 * ip - ps.normsq * lam.components()[0]
}

/// Max-norm residual of the bilinear identity
/// w^{ij} phi_{iab} phi_{jcd}
///   = (|phi|^2/4)(w_{ac} g_{bd} - w_{bc} g_{ad} - w_{ad} g_{bc} + w_{bd} g_{ac}).
pub fn bilinear_residual(ps: &PointStructure) -> f64 {
    let w = kernel::omega_matrix(ps.omega.components());
    let winv = mat6::invert(&w).expect("degenerate 2-form");
    let g = &ps.metric.entries;
    let phi = ps.phi.components();
    let mut worst = 0.0f64;
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..6 {
                for d in 0..6 {
                    let mut lhs = 0.0;
                    for i in 0..6 {
                        let (pa, sa) = TABLES.signed_rank(3, &[i, a, b]);
                        if sa == 0 {
                            continue;
                        }
                        for j in 0..6 {
                            let (pb, sb) = TABLES.signed_rank(3, &[j, c, d]);
                            if sb == 0 {
                                continue;
                            }
                            lhs += winv[i][j] * (sa * sb) as f64 * phi[pa] * phi[pb];
                        }
                    }
                    let rhs = 0.25
                        * ps.normsq
                        * (w[a][c] * g[b][d] - w[b][c] * g[a][d] - w[a][d] * g[b][c]
                            + w[b][d] * g[a][c]);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

/// Solves omega ^ lambda = gamma for the unique 2-form lambda (the pointwise
/// inverse of the Lefschetz operator on 4-forms).
pub fn lefschetz_invert(omega: &AltTensor, gamma: &AltTensor) -> Result<AltTensor> {
    assert_eq!(omega.degree(), 2);
    assert_eq!(gamma.degree(), 4);
    let mut m = nalgebra::SMatrix::<f64, 15, 15>::zeros();
    for e in &TABLES.wedge[2][2] {
        m[(e.out as usize, e.b as usize)] += e.sign * omega.components()[e.a as usize];
    }
    let rhs = nalgebra::SVector::<f64, 15>::from_row_slice(gamma.components());
    let lu = m.lu();
    let sol = lu.solve(&rhs).ok_or(Error::Degenerate)?;
    let mut out = AltTensor::zero(2);
    out.components_mut().copy_from_slice(sol.as_slice());
    Ok(out)
}

impl PointStructure {
    /// Builds and validates the full structure from a positive primitive pair.
    pub fn from_pair(phi: AltTensor, omega: AltTensor) -> Result<Self> {
        assert_eq!(phi.degree(), 3);
        assert_eq!(omega.degree(), 2);
        let prim = wedge(&phi, &omega)?;
        let scale = phi.max_abs().max(1e-300) * omega.max_abs().max(1e-300);
        if prim.max_abs() > 1e-8 * scale {
            return Err(Error::NonPrimitive {
                residual: prim.max_abs(),
            });
        }
        let j = almost_complex(&phi)?;
        let phihat = hitchin_dual(&phi)?;
        let normsq = norm_squared(&phi, &omega)?;
        let metric = metric(&phi, &omega)?;
        Ok(PointStructure {
            phi,
            omega,
            j,
            metric,
            normsq,
            phihat,
        })
    }

    /// The flat standard structure with |phi| = s.
    pub fn standard(s: f64) -> Self {
        Self::from_pair(super::types::phi_standard(s), super::types::omega_standard())
            .expect("normal form is a valid structure")
    }

    /// Residual of phi ^ omega (primitivity diagnostic).
    pub fn primitivity_residual(&self) -> f64 {
        wedge(&self.phi, &self.omega).map(|w| w.max_abs()).unwrap_or(f64::INFINITY)
    }
}

/// Degree-k component count.
pub fn ncomp(k: usize) -> usize {
    NCOMP[k]
}
