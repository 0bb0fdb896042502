//! Exact pointwise multilinear algebra of 2-, 3- and 4-forms in six
//! dimensions: Hitchin's construction, the induced metric, duals,
//! contractions, and the identities they satisfy.
//!
//! All operations are pure functions of their inputs and freely shareable
//! across threads.

pub mod kernel;
pub mod mat6;
pub mod tables;

mod decompose;
mod ops;
mod random;
mod types;

pub use decompose::{j_eigen_split, type_decompose, ThreeFormSplit, TwoFormSplit, TypeDecomposition};
pub use ops::{
    almost_complex, bilinear_residual, hitchin_dual, hitchin_invariants, hodge_star, inner,
    interior_product, j_action, lambda_contraction, lefschetz_invert, matrix_action, metric,
    ncomp, norm_squared, variation_dual, variation_norm_squared, wedge,
};
pub use random::{random_symplectomorphism, sp6_randomize};
pub use types::{
    omega_standard, phi_standard, phihat_standard, AcStructure, AltTensor, Metric6,
    PointStructure, Vector6,
};

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(k: usize, idx: &[usize]) -> AltTensor {
        AltTensor::basis(k, idx)
    }

    #[test]
    fn wedge_basis_and_volume() {
        let w = wedge(&e(1, &[0]), &e(1, &[1])).unwrap();
        assert_eq!(w, e(2, &[0, 1]));
        let om = omega_standard();
        let w3 = wedge(&wedge(&om, &om).unwrap(), &om).unwrap();
        assert_abs_diff_eq!(w3.components()[0], 6.0);
        // graded antisymmetry: a ^ b = (-1)^{pq} b ^ a
        let a = e(1, &[2]);
        let b = e(2, &[0, 4]);
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!(wedge(&e(4, &[0, 1, 2, 3]), &e(4, &[0, 1, 2, 3][..])).is_err());
    }

    #[test]
    fn normal_form_is_primitive() {
        let p = wedge(&phi_standard(1.0), &omega_standard()).unwrap();
        assert!(p.max_abs() < 1e-15);
    }

    #[test]
    fn interior_product_basis() {
        let v = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(interior_product(&v, &e(2, &[0, 1])), e(1, &[1]));
        assert_eq!(interior_product(&v, &omega_standard()), e(1, &[1]));
    }

    #[test]
    fn hitchin_invariant_normal_form() {
        let (lam, _) = hitchin_invariants(&phi_standard(1.0));
        assert_abs_diff_eq!(lam, -1.0 / 16.0, epsilon = 1e-15);
        // quartic homogeneity
        let (lam2, _) = hitchin_invariants(&phi_standard(2.0));
        assert_abs_diff_eq!(lam2 / lam, 16.0, epsilon = 1e-12);
        // decomposable orbit
        let (lam0, _) = hitchin_invariants(&e(3, &[0, 1, 2]));
        assert_abs_diff_eq!(lam0, 0.0, epsilon = 1e-15);
        assert!(almost_complex(&e(3, &[0, 1, 2])).is_err());
    }

    #[test]
    fn almost_complex_normal_form() {
        let j = almost_complex(&phi_standard(1.0)).unwrap();
        // J e_{2k-1} = e_{2k}, J e_{2k} = -e_{2k-1} (0-based columns)
        for k in 0..3 {
            for i in 0..6 {
                let want_col_even = if i == 2 * k + 1 { 1.0 } else { 0.0 };
                let want_col_odd = if i == 2 * k { -1.0 } else { 0.0 };
                assert_abs_diff_eq!(j.matrix[i][2 * k], want_col_even, epsilon = 1e-14);
                assert_abs_diff_eq!(j.matrix[i][2 * k + 1], want_col_odd, epsilon = 1e-14);
            }
        }
        assert!(j.square_defect() < 1e-14);
        // K is quadratic in phi, so J(-phi) = J(phi); the dual is what flips.
        let jm = almost_complex(&-phi_standard(1.0)).unwrap();
        for i in 0..6 {
            for c in 0..6 {
                assert_abs_diff_eq!(jm.matrix[i][c], j.matrix[i][c], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hitchin_dual_examples() {
        let hat = hitchin_dual(&phi_standard(1.0)).unwrap();
        assert!((hat - phihat_standard(1.0)).max_abs() < 1e-14);
        let hat3 = hitchin_dual(&phi_standard(3.0)).unwrap();
        assert!((hat3 - phihat_standard(3.0)).max_abs() < 1e-13);
        // dual of -phi is -phihat
        let hm = hitchin_dual(&-phi_standard(1.0)).unwrap();
        assert!((hm + phihat_standard(1.0)).max_abs() < 1e-14);
        // applying the dual twice negates
        let hh = hitchin_dual(&hat).unwrap();
        assert!((hh + phi_standard(1.0)).max_abs() < 1e-13);
        // dual equals the full three-argument J action
        let j = almost_complex(&phi_standard(1.0)).unwrap();
        assert!((j_action(&j, &phi_standard(1.0)) - hat).max_abs() < 1e-14);
    }

    #[test]
    fn metric_examples() {
        let g = metric(&phi_standard(1.0), &omega_standard()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g.entries[i][j], want, epsilon = 1e-14);
            }
        }
        // t-independence: |phi|^2 absorbs the scaling
        let gt = metric(&phi_standard(2.5), &omega_standard()).unwrap();
        assert!(mat6::max_abs_diff(&gt.entries, &g.entries) < 1e-13);
        // doubled omega scales the metric
        let g2 = metric(&phi_standard(1.0), &omega_standard().scaled(2.0)).unwrap();
        for i in 0..6 {
            assert_abs_diff_eq!(g2.entries[i][i], 2.0, epsilon = 1e-13);
        }
        // cross-check against omega(., J.)
        let j = almost_complex(&phi_standard(1.0)).unwrap();
        let w = kernel::omega_matrix(omega_standard().scaled(2.0).components());
        let gj = mat6::matmul(&w, &j.matrix);
        assert!(mat6::max_abs_diff(&g2.entries, &gj) < 1e-13);
        // non-primitive pair rejected
        let bad = omega_standard() + e(2, &[0, 2]).scaled(0.5);
        assert!(matches!(
            metric(&phi_standard(1.0), &bad),
            Err(crate::error::Error::NonPrimitive { .. })
        ));
    }

    #[test]
    fn norm_squared_examples() {
        assert_abs_diff_eq!(
            norm_squared(&phi_standard(1.0), &omega_standard()).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let s = 1.7;
        assert_abs_diff_eq!(
            norm_squared(&phi_standard(s), &omega_standard()).unwrap(),
            s * s,
            epsilon = 1e-13
        );
        // reversed orientation rejected
        assert!(matches!(
            norm_squared(&phi_standard(1.0), &omega_standard().scaled(-1.0)),
            Err(crate::error::Error::Orientation { .. })
        ));
    }

    #[test]
    fn lambda_contraction_examples() {
        let om = omega_standard();
        assert_abs_diff_eq!(lambda_contraction(&om, &om).components()[0], 3.0);
        assert!(lambda_contraction(&om, &phi_standard(1.0)).max_abs() < 1e-15);
        assert_abs_diff_eq!(lambda_contraction(&om, &e(2, &[0, 1])).components()[0], 1.0);
    }

    #[test]
    fn hodge_star_examples() {
        let id = Metric6::identity();
        let s = hodge_star(&id, &e(4, &[0, 1, 2, 3])).unwrap();
        assert_eq!(s, e(2, &[4, 5]));
        let om = omega_standard();
        let som = hodge_star(&id, &om).unwrap();
        let om2half = wedge(&om, &om).unwrap().scaled(0.5);
        assert!((som - om2half).max_abs() < 1e-15);
        let sphi = hodge_star(&id, &phi_standard(1.0)).unwrap();
        assert!((sphi - phihat_standard(1.0)).max_abs() < 1e-14);
        // star star = (-1)^{k(6-k)} id
        let a = e(2, &[1, 4]) + e(2, &[0, 3]).scaled(0.3);
        let ss = hodge_star(&id, &hodge_star(&id, &a).unwrap()).unwrap();
        assert!((ss - a).max_abs() < 1e-14);
    }

    #[test]
    fn j_action_examples() {
        let j = almost_complex(&phi_standard(1.0)).unwrap();
        let om = omega_standard();
        assert!((j_action(&j, &om) - om).max_abs() < 1e-14);
        // covariant convention on 1-forms: J e^1 = -e^2
        let je1 = j_action(&j, &e(1, &[0]));
        assert!((je1 + e(1, &[1])).max_abs() < 1e-14);
        // involutive up to sign
        let a = e(3, &[0, 1, 3]);
        assert!((j_action(&j, &j_action(&j, &a)) + a).max_abs() < 1e-14);
    }

    #[test]
    fn type_decompose_examples() {
        let ps = PointStructure::standard(1.0);
        match type_decompose(&ps, &ps.omega) {
            TypeDecomposition::Two(s) => {
                assert_abs_diff_eq!(s.h, 1.0, epsilon = 1e-14);
                assert!(s.gamma.max_abs() < 1e-14);
                assert!(s.pi.max_abs() < 1e-14);
            }
            _ => panic!("degree 2"),
        }
        match type_decompose(&ps, &ps.phi) {
            TypeDecomposition::Three(s) => {
                assert_abs_diff_eq!(s.f1, 0.5, epsilon = 1e-14);
                assert_abs_diff_eq!(s.f2, 0.0, epsilon = 1e-14);
                assert!(s.alpha.max_abs() < 1e-14);
                assert!(s.beta.max_abs() < 1e-14);
            }
            _ => panic!("degree 3"),
        }
        // e^{135} mixes the f1 part and a primitive alpha
        match type_decompose(&ps, &e(3, &[0, 2, 4])) {
            TypeDecomposition::Three(s) => {
                assert_abs_diff_eq!(s.f1, 0.25, epsilon = 1e-14);
                assert_abs_diff_eq!(s.f2, 0.0, epsilon = 1e-14);
                assert!(s.beta.max_abs() < 1e-14);
                let want_alpha = e(3, &[0, 2, 4]) - ps.phi.scaled(0.5);
                assert!((s.alpha - want_alpha).max_abs() < 1e-14);
                assert!(lambda_contraction(&ps.omega, &s.alpha).max_abs() < 1e-14);
            }
            _ => panic!("degree 3"),
        }
    }

    #[test]
    fn variation_dual_directions() {
        let phi = phi_standard(1.0);
        let hat = phihat_standard(1.0);
        let c = 0.37;
        let d1 = variation_dual(&phi, &phi.scaled(c)).unwrap();
        assert!((d1 - hat.scaled(c)).max_abs() < 1e-14);
        let d2 = variation_dual(&phi, &hat.scaled(c)).unwrap();
        assert!((d2 + phi.scaled(c)).max_abs() < 1e-14);
    }

    #[test]
    fn variation_norm_squared_directions() {
        let ps = PointStructure::standard(1.0);
        let c = 0.59;
        let v1 = variation_norm_squared(&ps, &ps.phi.scaled(c), &AltTensor::zero(2));
        assert_abs_diff_eq!(v1, 2.0 * c, epsilon = 1e-13);
        let h = 0.811;
        let v2 = variation_norm_squared(&ps, &AltTensor::zero(3), &ps.omega.scaled(h));
        assert_abs_diff_eq!(v2, -3.0 * h, epsilon = 1e-13);
    }

    #[test]
    fn bilinear_identity_normal_form_and_broken_pair() {
        let ps = PointStructure::standard(1.0);
        assert!(bilinear_residual(&ps) < 1e-14);
        // deliberately broken pair: force the fields in without validation
        let bad = PointStructure {
            omega: omega_standard() + e(2, &[0, 2]).scaled(0.5),
            ..ps
        };
        assert!(bilinear_residual(&bad) > 1e-3);
    }

    #[test]
    fn lefschetz_invert_examples() {
        let om = omega_standard();
        let g1 = wedge(&om, &om).unwrap();
        let l1 = lefschetz_invert(&om, &g1).unwrap();
        assert!((l1 - om).max_abs() < 1e-13);
        let g2 = wedge(&om, &e(2, &[0, 2])).unwrap();
        let l2 = lefschetz_invert(&om, &g2).unwrap();
        assert!((l2 - e(2, &[0, 2])).max_abs() < 1e-13);
    }

    #[test]
    fn sp6_randomize_examples() {
        let ps = PointStructure::standard(1.0);
        let r1 = sp6_randomize(&ps, 42);
        let r2 = sp6_randomize(&ps, 42);
        assert_eq!(r1.phi.components(), r2.phi.components());
        // symplectomorphisms fix omega_standard
        assert!((r1.omega - omega_standard()).max_abs() < 1e-12);
        assert!(r1.primitivity_residual() < 1e-13);
        assert!(r1.j.square_defect() < 1e-12);
    }
}
