//! Constrained variations of the flat background and the numerical check of
//! the linearization of the reparametrized flow.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::rhs_reparametrized;
use crate::forms6::kernel::hodge_star_into;
use crate::forms6::mat6::IDENTITY;
use crate::forms6::{lefschetz_invert, ncomp, omega_standard, phi_standard, AltTensor};
use crate::lattice::calculus::{
    d_norm_sq, exterior_derivative, hodge_laplacian, neumann_operator, wedge_fields,
};
use crate::lattice::{FormField, Grid};
use crate::par;

/// A closed variation pair satisfying the wedge constraint, with the
/// recorded obstruction field (zero when the constraint holds).
#[derive(Clone, Debug)]
pub struct VariationPair {
    pub dphi: FormField,
    pub domega: FormField,
    /// star(dphi ^ omegabar + phibar ^ domega); zero iff constrained.
    pub h_field: FormField,
}

impl VariationPair {
    pub fn h_norm(&self) -> f64 {
        self.h_field.max_abs()
    }
}

/// Least-norm constant 3-form x with x ^ omegabar = rhs (a constant 5-form).
fn lefschetz_lstsq_3form(omega: &AltTensor, rhs: &AltTensor) -> AltTensor {
    let mut m = nalgebra::SMatrix::<f64, 6, 20>::zeros();
    for c in 0..20 {
        let mut basis = AltTensor::zero(3);
        basis.components_mut()[c] = 1.0;
        let w = crate::forms6::wedge(&basis, omega).unwrap();
        for r in 0..6 {
            m[(r, c)] = w.components()[r];
        }
    }
    let b = nalgebra::SVector::<f64, 6>::from_row_slice(rhs.components());
    let svd = m.svd(true, true);
    let x = svd.solve(&b, 1e-12).expect("svd solve");
    let mut out = AltTensor::zero(3);
    out.components_mut().copy_from_slice(x.as_slice());
    out
}

/// The pointwise obstruction star(dphi ^ om + phibar ^ dom) as a 1-form.
fn obstruction_field(
    dphi: &FormField,
    domega: &FormField,
    phibar: &FormField,
    omegabar: &FormField,
) -> FormField {
    let mut w5 = wedge_fields(dphi, omegabar).unwrap();
    w5.axpy(1.0, &wedge_fields(phibar, domega).unwrap());
    let grid = dphi.grid();
    let mut h = FormField::zeros(grid, 1);
    let w5d = w5.data();
    par::chunks_mut(h.data_mut(), par::CHUNK_POINTS * 6, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        let ginv = IDENTITY;
        for (off, dst) in slab.chunks_mut(6).enumerate() {
            let pt = base + off;
            hodge_star_into(dst, &IDENTITY, &ginv, &w5d[pt * 6..(pt + 1) * 6], 5);
        }
    });
    h
}

/// Removes the pointwise wedge obstruction of a closed pair against the flat
/// background, following the Neumann-then-Lefschetz repair; returns the
/// corrected dphi.
pub fn remove_obstruction(
    dphi0: &FormField,
    domega: &FormField,
    phibar: &AltTensor,
    omegabar: &AltTensor,
) -> Result<FormField> {
    let grid = dphi0.grid();
    let ombar_field = FormField::constant(grid, omegabar);
    let phibar_field = FormField::constant(grid, phibar);
    let mut w5 = wedge_fields(dphi0, &ombar_field)?;
    w5.axpy(1.0, &wedge_fields(&phibar_field, domega)?);
    if w5.max_abs() < 1e-15 {
        return Ok(dphi0.clone());
    }
    let gamma = neumann_operator(&w5)?;
    // omegabar is constant: one Lefschetz solve pattern reused pointwise
    let gam_data = gamma.data();
    let mut lam = FormField::zeros(grid, 2);
    let omb = *omegabar;
    par::chunks_mut(lam.data_mut(), par::CHUNK_POINTS * 15, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(15).enumerate() {
            let pt = base + off;
            let g = AltTensor::from_components(4, &gam_data[pt * 15..(pt + 1) * 15]);
            let l = lefschetz_invert(&omb, &g).expect("constant symplectic form");
            dst.copy_from_slice(l.components());
        }
    });
    let mut out = dphi0.clone();
    out.axpy(-1.0, &exterior_derivative(&lam));
    Ok(out)
}

/// Generates a deterministic closed constrained variation from low-frequency
/// potentials and harmonic parts.  `mode_budget` caps the wavenumber content;
/// zero gives a constant primitive dphi with domega = 0.
pub fn constrained_variation(grid: Grid, seed: u64, mode_budget: usize) -> VariationPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phibar = phi_standard(1.0);
    let omegabar = omega_standard();
    let dims = grid.dims();
    let scale = 2.0 * std::f64::consts::PI / grid.length();

    // harmonic parts
    let mut h3 = AltTensor::zero(3);
    for c in h3.components_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    let mut h2 = AltTensor::zero(2);
    if mode_budget > 0 {
        for c in h2.components_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    // fix the harmonic constraint h3 ^ om + phibar ^ h2 = 0
    let mut rhs = crate::forms6::wedge(&h3, &omegabar).unwrap();
    rhs = rhs + crate::forms6::wedge(&phibar, &h2).unwrap();
    let x = lefschetz_lstsq_3form(&omegabar, &rhs);
    h3 = h3 - x;

    // low-frequency exact parts from potentials
    let mut waves_a: Vec<(usize, usize, f64, f64, f64)> = Vec::new(); // comp, axis, k, cos amp, sin amp
    let mut waves_b: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    if mode_budget > 0 {
        for _ in 0..3 {
            for a in 0..6 {
                if dims[a] < 4 {
                    continue;
                }
                let kmax = mode_budget.min(dims[a] / 3).max(1);
                waves_a.push((
                    rng.gen_range(0..ncomp(2)),
                    a,
                    rng.gen_range(1..=kmax) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ));
                waves_b.push((
                    rng.gen_range(0..ncomp(1)),
                    a,
                    rng.gen_range(1..=kmax) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ));
            }
        }
    }
    let mk_field = |degree: usize, waves: &[(usize, usize, f64, f64, f64)]| {
        let waves = waves.to_vec();
        FormField::from_fn(grid, degree, move |x| {
            let mut v = AltTensor::zero(degree);
            for &(c, a, k, ac, as_) in &waves {
                let ph = scale * k * x[a];
                v.components_mut()[c] += ac * ph.cos() + as_ * ph.sin();
            }
            v
        })
    };
    let pot_a = mk_field(2, &waves_a);
    let pot_b = mk_field(1, &waves_b);
    let mut dphi0 = exterior_derivative(&pot_a);
    dphi0.axpy(1.0, &FormField::constant(grid, &h3));
    let mut domega = exterior_derivative(&pot_b);
    domega.axpy(1.0, &FormField::constant(grid, &h2));

    let dphi = remove_obstruction(&dphi0, &domega, &phibar, &omegabar)
        .expect("obstruction removal on the flat background");

    // normalize to unit max amplitude
    let m = dphi.max_abs().max(domega.max_abs()).max(1e-300);
    let mut dphi = dphi;
    dphi.scale(1.0 / m);
    domega.scale(1.0 / m);

    let h_field = obstruction_field(
        &dphi,
        &domega,
        &FormField::constant(grid, &phibar),
        &FormField::constant(grid, &omegabar),
    );
    VariationPair {
        dphi,
        domega,
        h_field,
    }
}

/// A variation of the 3-form only (domega = 0): the repair makes
/// phibar + eps * dphi pointwise primitive at every amplitude, so these
/// generate valid flow states.
pub fn constrained_phi_variation(grid: Grid, seed: u64, mode_budget: usize) -> VariationPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e3779b97f4a7c15));
    let phibar = phi_standard(1.0);
    let omegabar = omega_standard();
    let dims = grid.dims();
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    let mut h3 = AltTensor::zero(3);
    for c in h3.components_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    let rhs = crate::forms6::wedge(&h3, &omegabar).unwrap();
    let x = lefschetz_lstsq_3form(&omegabar, &rhs);
    h3 = h3 - x;
    let mut waves: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    if mode_budget > 0 {
        for _ in 0..3 {
            for a in 0..6 {
                if dims[a] < 4 {
                    continue;
                }
                let kmax = mode_budget.min(dims[a] / 3).max(1);
                waves.push((
                    rng.gen_range(0..ncomp(2)),
                    a,
                    rng.gen_range(1..=kmax) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ));
            }
        }
    }
    let pot = FormField::from_fn(grid, 2, move |x| {
        let mut v = AltTensor::zero(2);
        for &(c, a, k, ac, as_) in &waves {
            let ph = scale * k * x[a];
            v.components_mut()[c] += ac * ph.cos() + as_ * ph.sin();
        }
        v
    });
    let mut dphi0 = exterior_derivative(&pot);
    dphi0.axpy(1.0, &FormField::constant(grid, &h3));
    let domega = FormField::zeros(grid, 2);
    let mut dphi = remove_obstruction(&dphi0, &domega, &phibar, &omegabar)
        .expect("obstruction removal on the flat background");
    let m = dphi.max_abs().max(1e-300);
    dphi.scale(1.0 / m);
    let h_field = obstruction_field(
        &dphi,
        &domega,
        &FormField::constant(grid, &phibar),
        &FormField::constant(grid, &omegabar),
    );
    VariationPair {
        dphi,
        domega,
        h_field,
    }
}

/// Result of the finite-difference linearization check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LinearizationReport {
    pub eps: f64,
    pub de_err_abs: f64,
    pub df_err_abs: f64,
    pub de_target_norm: f64,
    pub df_target_norm: f64,
    pub de_err_rel: f64,
    pub df_err_rel: f64,
    pub h_norm: f64,
}

impl LinearizationReport {
    pub fn max_rel(&self) -> f64 {
        self.de_err_rel.max(self.df_err_rel)
    }
}

/// Central-difference derivative of the reparametrized right-hand sides at
/// the flat background, compared against (-box dphi, -box domega).
pub fn linearization_check(var: &VariationPair, eps: f64) -> Result<LinearizationReport> {
    assert!((1e-6..=1e-3).contains(&eps), "eps outside [1e-6, 1e-3]");
    let grid = var.dphi.grid();
    // closedness precondition: the variation must come from the constrained
    // generator
    let ddphi = d_norm_sq(&var.dphi).sqrt();
    let ddom = d_norm_sq(&var.domega).sqrt();
    if ddphi > 1e-10 || ddom > 1e-10 {
        return Err(Error::NonConvergence {
            detail: format!("variation not closed: |d dphi| = {ddphi:.3e}, |d domega| = {ddom:.3e}"),
        });
    }
    let phibar = FormField::constant(grid, &phi_standard(1.0));
    let omegabar = FormField::constant(grid, &omega_standard());

    let eval = |sign: f64| -> Result<(FormField, FormField)> {
        let mut phi = phibar.clone();
        phi.axpy(sign * eps, &var.dphi);
        let mut om = omegabar.clone();
        om.axpy(sign * eps, &var.domega);
        let (e, f, _, _) = rhs_reparametrized(&phi, &om)?;
        Ok((e, f))
    };
    let (ep, fp) = eval(1.0)?;
    let (em, fm) = eval(-1.0)?;
    let mut de = ep;
    de.axpy(-1.0, &em);
    de.scale(0.5 / eps);
    let mut df = fp;
    df.axpy(-1.0, &fm);
    df.scale(0.5 / eps);

    let mut te = hodge_laplacian(&var.dphi);
    te.scale(-1.0);
    let mut tf = hodge_laplacian(&var.domega);
    tf.scale(-1.0);

    let mut ediff = de;
    ediff.axpy(-1.0, &te);
    let mut fdiff = df;
    fdiff.axpy(-1.0, &tf);
    let (ea, fa) = (ediff.l2_norm(), fdiff.l2_norm());
    let (tn, fn_) = (te.l2_norm(), tf.l2_norm());
    Ok(LinearizationReport {
        eps,
        de_err_abs: ea,
        df_err_abs: fa,
        de_target_norm: tn,
        df_target_norm: fn_,
        de_err_rel: ea / tn.max(1e-14),
        df_err_rel: fa / fn_.max(1e-14),
        h_norm: var.h_norm(),
    })
}
