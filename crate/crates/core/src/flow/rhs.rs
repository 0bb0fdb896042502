//! Right-hand sides of the flow and its gauge-fixed reparametrization.

use super::structure::{structure_pass, StructureField, STRIDE, WINV};
use crate::error::Result;
use crate::forms6::tables::TABLES;
use crate::lattice::calculus::{
    exterior_derivative_dealiased, gradients_raw, sym_divergence,
};
use crate::lattice::{sym_idx, FormField, VectorField, SYM_COMPS};
use crate::par;

/// d Lambda_omega d (|phi|^2 phihat), from a completed structure pass.
pub fn primary_term(s: &StructureField) -> FormField {
    let dtheta = exterior_derivative_dealiased(&s.theta);
    // Lambda pass: 4-form -> 2-form against the pointwise inverse of omega
    let mut a2 = FormField::zeros(s.grid, 2);
    let tab = &TABLES.lam_tab[4];
    let ddata = dtheta.data();
    let sdata = &s.data;
    par::chunks_mut(a2.data_mut(), par::CHUNK_POINTS * 15, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(15).enumerate() {
            let pt = base + off;
            let winv = &sdata[pt * STRIDE + WINV..pt * STRIDE + WINV + 36];
            let inp = &ddata[pt * 15..(pt + 1) * 15];
            for e in tab {
                dst[e.out as usize] +=
                    0.5 * e.sign * winv[e.a as usize * 6 + e.b as usize] * inp[e.inp as usize];
            }
        }
    });
    exterior_derivative_dealiased(&a2)
}

/// The gauge-fixing vector field
/// V^k = |phi|^2 g^{pq} (Gamma^k_{pq} - Gammabar^k_{pq}) - g^{lk} d_l |phi|^2
/// against a constant reference metric (Gammabar = 0 in flat coordinates).
/// Evaluated through the algebraically identical divergence form
/// g^{pq} Gamma^k_{pq} = -d_p g^{pk} - (1/2) g^{ks} d_s log det g.
pub fn deturck_from_structure(s: &StructureField) -> VectorField {
    let grid = s.grid;
    let ginv21 = s.ginv_packed();
    let p_div = sym_divergence(grid, &ginv21); // d_p g^{pq}, 6 per point
    let scalars = s.scalars_packed(); // (logdet, nsq)
    let dscal = gradients_raw(grid, 2, &scalars); // per point [axis][2]
    let mut v = VectorField::zeros(grid);
    par::chunks_mut(&mut v.data, par::CHUNK_POINTS * 6, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(6).enumerate() {
            let pt = base + off;
            let nsq = s.nsq(pt);
            let gv = &ginv21[pt * SYM_COMPS..(pt + 1) * SYM_COMPS];
            let dl = &dscal[pt * 12..(pt + 1) * 12]; // [axis*2 + {0: logdet, 1: nsq}]
            for (k, d) in dst.iter_mut().enumerate() {
                let mut gamma = -p_div[pt * 6 + k];
                let mut grad_n = 0.0;
                for ss in 0..6 {
                    gamma -= 0.5 * gv[sym_idx(k, ss)] * dl[ss * 2];
                    grad_n += gv[sym_idx(ss, k)] * dl[ss * 2 + 1];
                }
                *d = nsq * gamma - grad_n;
            }
        }
    });
    v
}

/// Pointwise interior product of a vector field with a form field.
pub fn interior_field(v: &VectorField, f: &FormField) -> FormField {
    let k = f.degree();
    assert!(k >= 1);
    let grid = f.grid();
    let mut out = FormField::zeros(grid, k - 1);
    let nco = out.ncomp();
    let nci = f.ncomp();
    let tab = &TABLES.int_tab[k];
    let fdata = f.data();
    let vdata = &v.data;
    par::chunks_mut(out.data_mut(), par::CHUNK_POINTS * nco, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(nco).enumerate() {
            let pt = base + off;
            let vc = &vdata[pt * 6..pt * 6 + 6];
            let fc = &fdata[pt * nci..(pt + 1) * nci];
            for e in tab {
                dst[e.out as usize] += e.sign * vc[e.a as usize] * fc[e.inp as usize];
            }
        }
    });
    out
}

/// Primary flow right-hand side: d Lambda_omega d(|phi|^2 phihat).
/// The output is d-exact by construction.
pub fn rhs_primary(phi: &FormField, omega: &FormField) -> Result<(FormField, StructureField)> {
    let s = structure_pass(phi, omega)?;
    let e = primary_term(&s);
    Ok((e, s))
}

/// Gauge-fixing vector field of a state.
pub fn deturck_vector(phi: &FormField, omega: &FormField) -> Result<VectorField> {
    let s = structure_pass(phi, omega)?;
    Ok(deturck_from_structure(&s))
}

/// Reparametrized right-hand sides
/// (d Lambda d(|phi|^2 phihat) + d iota_V phi,  d iota_V omega).
pub fn rhs_reparametrized(
    phi: &FormField,
    omega: &FormField,
) -> Result<(FormField, FormField, StructureField, VectorField)> {
    let s = structure_pass(phi, omega)?;
    let mut e = primary_term(&s);
    let v = deturck_from_structure(&s);
    let ivphi = interior_field(&v, phi);
    let ivom = interior_field(&v, omega);
    e.axpy(1.0, &exterior_derivative_dealiased(&ivphi));
    let f = exterior_derivative_dealiased(&ivom);
    Ok((e, f, s, v))
}

/// Residuals of the steady-soliton equations for a supplied vector field:
/// r1 = |d Lambda d(|phi|^2 phihat) + d iota_v phi|_{L^2},
/// r2 = |d iota_v omega|_{L^2}.
pub fn soliton_residual(
    phi: &FormField,
    omega: &FormField,
    v: &VectorField,
) -> Result<(f64, f64)> {
    let s = structure_pass(phi, omega)?;
    let mut e = primary_term(&s);
    e.axpy(1.0, &exterior_derivative_dealiased(&interior_field(v, phi)));
    let f = exterior_derivative_dealiased(&interior_field(v, omega));
    Ok((e.l2_norm(), f.l2_norm()))
}

/// Pointwise wedge residual max |(phi ^ omega)_I| over the grid.
pub fn primitivity_max(phi: &FormField, omega: &FormField) -> f64 {
    crate::lattice::calculus::wedge_fields(phi, omega)
        .map(|w| w.max_abs())
        .unwrap_or(f64::INFINITY)
}

