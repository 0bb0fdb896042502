//! Building a compatible positive primitive 3-form for a perturbed
//! symplectic form: the cohomology-class path, its harmonic representative,
//! and the pointwise primitivity repair.

use super::correction::CorrectedPair;
use crate::error::{Error, Result};
use crate::forms6::{lefschetz_invert, wedge, AltTensor};
use crate::flow::structure_pass;
use crate::lattice::calculus::{exterior_derivative, harmonic_projection, neumann_operator,
    wedge_fields};
use crate::lattice::FormField;
use crate::par;

/// [omega_s]^2 ^ . as a map from constant 1-forms to constant 5-forms.
fn lefschetz_square(omega_s: &AltTensor) -> nalgebra::SMatrix<f64, 6, 6> {
    let w2 = wedge(omega_s, omega_s).unwrap();
    let mut m = nalgebra::SMatrix::<f64, 6, 6>::zeros();
    for c in 0..6 {
        let mut b = AltTensor::zero(1);
        b.components_mut()[c] = 1.0;
        let w = wedge(&w2, &b).unwrap();
        for r in 0..6 {
            m[(r, c)] = w.components()[r];
        }
    }
    m
}

/// Right-hand side of the class path:
/// d/ds [phi_s] = -[omega_s] ^ ([omega_s]^2)^{-1} ([omega_dot] ^ [phi_s]).
fn class_rhs(omega_s: &AltTensor, omega_dot: &AltTensor, phi_s: &AltTensor) -> Result<AltTensor> {
    let rhs5 = wedge(omega_dot, phi_s)?;
    let m = lefschetz_square(omega_s);
    let b = nalgebra::SVector::<f64, 6>::from_row_slice(rhs5.components());
    let alpha = m.lu().solve(&b).ok_or(Error::Degenerate)?;
    let mut a1 = AltTensor::zero(1);
    a1.components_mut().copy_from_slice(alpha.as_slice());
    Ok(-wedge(omega_s, &a1)?)
}

/// Integrates the class path from [phibar] at s = 0 to s = 1 with RK4.
pub fn class_ode_solution(
    phibar: &AltTensor,
    omegabar: &AltTensor,
    omega_class: &AltTensor,
    s_steps: usize,
) -> Result<AltTensor> {
    let omega_dot = *omega_class - *omegabar;
    let mut phi = *phibar;
    let ds = 1.0 / s_steps as f64;
    for step in 0..s_steps {
        let s0 = step as f64 * ds;
        let om_at = |s: f64| *omegabar + omega_dot.scaled(s);
        let k1 = class_rhs(&om_at(s0), &omega_dot, &phi)?;
        let k2 = class_rhs(&om_at(s0 + 0.5 * ds), &omega_dot, &(phi + k1.scaled(0.5 * ds)))?;
        let k3 = class_rhs(&om_at(s0 + 0.5 * ds), &omega_dot, &(phi + k2.scaled(0.5 * ds)))?;
        let k4 = class_rhs(&om_at(s0 + ds), &omega_dot, &(phi + k3.scaled(ds)))?;
        phi = phi + (k1 + k2.scaled(2.0) + k3.scaled(2.0) + k4).scaled(ds / 6.0);
    }
    Ok(phi)
}

/// Pointwise solve of omega ^ lambda = gamma over the grid.
fn lefschetz_field(omega: &FormField, gamma: &FormField) -> Result<FormField> {
    let grid = omega.grid();
    let mut lam = FormField::zeros(grid, 2);
    let om_data = omega.data();
    let gam_data = gamma.data();
    let failed = std::sync::atomic::AtomicBool::new(false);
    par::chunks_mut(lam.data_mut(), par::CHUNK_POINTS * 15, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(15).enumerate() {
            let pt = base + off;
            let om = AltTensor::from_components(2, &om_data[pt * 15..(pt + 1) * 15]);
            let g = AltTensor::from_components(4, &gam_data[pt * 15..(pt + 1) * 15]);
            match lefschetz_invert(&om, &g) {
                Ok(l) => dst.copy_from_slice(l.components()),
                Err(_) => failed.store(true, std::sync::atomic::Ordering::Relaxed),
            }
        }
    });
    if failed.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(Error::Degenerate);
    }
    Ok(lam)
}

/// One primitivity repair: phi = H - d lambda with
/// d gamma = H ^ omega, omega ^ lambda = gamma.
fn repair(h_class: &AltTensor, omega: &FormField) -> Result<FormField> {
    let grid = omega.grid();
    let h_field = FormField::constant(grid, h_class);
    let w5 = wedge_fields(&h_field, omega)?;
    let (hpart, rem) = harmonic_projection(&w5);
    if hpart.max_abs() > 1e-9 {
        return Err(Error::NonConvergence {
            detail: format!(
                "class path left a harmonic wedge residue {:.3e}; increase s_steps",
                hpart.max_abs()
            ),
        });
    }
    if rem.max_abs() < 1e-15 {
        return Ok(h_field);
    }
    let gamma = neumann_operator(&rem)?;
    let lam = lefschetz_field(omega, &gamma)?;
    let mut phi = h_field;
    phi.axpy(-1.0, &exterior_derivative(&lam));
    Ok(phi)
}

/// Constructs a closed positive 3-form pointwise primitive with respect to
/// `omega`, by integrating the class path from the background, taking the
/// harmonic representative, and repairing primitivity with the Neumann
/// potential and the pointwise Lefschetz inverse.  Positivity is re-checked
/// at path checkpoints; losing it raises `TooFar`.
pub fn build_compatible_phi(
    omega: &FormField,
    background: &CorrectedPair,
    s_steps: usize,
) -> Result<FormField> {
    let phibar = background.phi_tilde.at(0);
    let omegabar = background.omega_tilde.at(0);
    let omega_class = omega.mean();

    let checkpoints = 8usize.min(s_steps);
    for c in 1..=checkpoints {
        let s = c as f64 / checkpoints as f64;
        let steps_to_s = ((s_steps as f64 * s).round() as usize).max(1);
        let class_s = class_ode_solution(
            &phibar,
            &omegabar,
            &(omegabar + (omega_class - omegabar).scaled(s)),
            steps_to_s,
        )?;
        // omega_s field: interpolate the exact part linearly in s as well
        let mut omega_s = omega.clone();
        omega_s.scale(s);
        omega_s.axpy(1.0 - s, &background.omega_tilde);
        let phi_s = repair(&class_s, &omega_s)?;
        if let Err(e) = structure_pass(&phi_s, &omega_s) {
            return Err(Error::TooFar {
                stage: "build_compatible_phi",
                detail: format!("positivity lost along the path at s = {s}: {e}"),
            });
        }
        if c == checkpoints {
            // final answer: validated positive, closed, primitive
            let prim = wedge_fields(&phi_s, &omega_s)?.max_abs();
            if prim > 1e-10 {
                return Err(Error::NonConvergence {
                    detail: format!("primitivity repair left residue {prim:.3e}"),
                });
            }
            // cohomology sanity: the harmonic part must match the class path
            let drift = (phi_s.mean() - class_s).max_abs();
            if drift > 1e-9 {
                return Err(Error::NonConvergence {
                    detail: format!("harmonic part drifted from the class path by {drift:.3e}"),
                });
            }
            return Ok(phi_s);
        }
    }
    unreachable!("loop returns at the last checkpoint")
}
