//! Exact fast path for the primary flow over a spatially constant symplectic
//! form: the Hodge contraction then has constant coefficients and commutes
//! with the Fourier transform, so d Lambda d(|phi|^2 phihat) collapses to a
//! single transform round trip with a fused per-mode kernel.

use crate::error::{Error, Result};
use crate::forms6::kernel::{self, LAMBDA_NEG_TOL, METRIC_EIG_TOL};
use crate::forms6::mat6::{self, Mat6};
use crate::forms6::tables::TABLES;
use crate::forms6::AltTensor;
use crate::lattice::fft::Cx;
use crate::lattice::{fft, FormField, SpectralField};
use crate::par;

/// Constant-coefficient context extracted from a spatially constant 2-form.
pub struct ConstOmega {
    pub omega: AltTensor,
    pub winv: Mat6,
    pub vol: f64,
    pub w: Mat6,
}

/// Returns the context when the field is exactly constant over the grid.
pub fn const_omega(omega: &FormField) -> Option<ConstOmega> {
    let first = omega.at(0);
    let nc = omega.ncomp();
    let data = omega.data();
    let c0 = first.components();
    for pt in 1..omega.npts() {
        if data[pt * nc..(pt + 1) * nc] != *c0 {
            return None;
        }
    }
    let w = kernel::omega_matrix(c0);
    let winv = mat6::invert(&w)?;
    let vol = kernel::vol_coeff(c0);
    if vol <= 0.0 {
        return None;
    }
    Some(ConstOmega {
        omega: first,
        winv,
        vol,
        w,
    })
}

/// Pointwise scan for the fast path: theta = |phi|^2 phihat plus the
/// positivity checks against the constant omega.
pub struct PrimaryScan {
    pub theta: FormField,
    pub max_normsq: f64,
    pub min_pivot: f64,
}

pub fn primary_scan(phi: &FormField, ctx: &ConstOmega, check_metric: bool) -> Result<PrimaryScan> {
    let grid = phi.grid();
    let npts = grid.npts();
    let mut theta = FormField::zeros(grid, 3);
    let n_chunks = npts.div_ceil(par::CHUNK_POINTS);
    let mut scan = vec![(f64::NEG_INFINITY, f64::INFINITY, usize::MAX); n_chunks];
    {
        let phi_data = phi.data();
        let theta_data = theta.data_mut();
        let pairs = ScanTargets {
            a: theta_data,
            b: &mut scan,
        };
        pairs.run(|ci, tchunk, sc| {
            let base = ci * par::CHUNK_POINTS;
            let count = tchunk.len() / 20;
            for off in 0..count {
                let pt = base + off;
                let pc = &phi_data[pt * 20..(pt + 1) * 20];
                let th = &mut tchunk[off * 20..(off + 1) * 20];
                let k = kernel::hitchin_k(pc);
                let lambda = kernel::hitchin_lambda(&k);
                if lambda >= LAMBDA_NEG_TOL {
                    if sc.2 == usize::MAX {
                        sc.2 = pt;
                    }
                    continue;
                }
                let s = 1.0 / (-lambda).sqrt();
                let mut j = [[0.0; 6]; 6];
                for r in 0..6 {
                    for c in 0..6 {
                        j[r][c] = k[r][c] * s;
                    }
                }
                let mut hat = [0.0f64; 20];
                kernel::phihat_from_j(&mut hat, &j, pc);
                let mut top = [0.0];
                kernel::wedge_into(&mut top, pc, &hat, 3, 3);
                let nsq = top[0] / ctx.vol;
                if nsq <= 0.0 {
                    if sc.2 == usize::MAX {
                        sc.2 = pt;
                    }
                    continue;
                }
                sc.0 = sc.0.max(nsq);
                for (t, h) in th.iter_mut().zip(hat.iter()) {
                    *t = nsq * h;
                }
                if check_metric {
                    let gj = mat6::matmul(&ctx.w, &j);
                    let mut g = [[0.0; 6]; 6];
                    for r in 0..6 {
                        for c in 0..6 {
                            g[r][c] = 0.5 * (gj[r][c] + gj[c][r]);
                        }
                    }
                    let pivot = mat6::ldl_min_pivot(&g);
                    sc.1 = sc.1.min(pivot);
                    if pivot <= METRIC_EIG_TOL && sc.2 == usize::MAX {
                        sc.2 = pt;
                    }
                }
            }
        });
    }
    let mut max_normsq = f64::NEG_INFINITY;
    let mut min_pivot = f64::INFINITY;
    let mut bad = usize::MAX;
    for (mx, mn, bp) in &scan {
        max_normsq = max_normsq.max(*mx);
        min_pivot = min_pivot.min(*mn);
        if bad == usize::MAX && *bp != usize::MAX {
            bad = *bp;
        }
    }
    if bad != usize::MAX {
        return Err(Error::DegenerateState {
            time: 0.0,
            point: bad,
            detail: "positivity lost".into(),
        });
    }
    Ok(PrimaryScan {
        theta,
        max_normsq,
        min_pivot,
    })
}

/// Fused spectral evaluation of d Lambda d applied to theta, with the 2/3
/// mask applied to the product spectrum.
pub fn primary_term_const(theta: &FormField, ctx: &ConstOmega) -> FormField {
    let grid = theta.grid();
    let dims = grid.dims();
    let spec = theta.spectral();
    let mut strides = [1usize; 6];
    for a in (0..5).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let kw: [Vec<f64>; 6] =
        std::array::from_fn(|a| fft::axis_deriv_wavenumbers(dims[a], grid.length()));
    let keep: [Vec<bool>; 6] = std::array::from_fn(|a| {
        let n = dims[a];
        fft::axis_modes(n)
            .into_iter()
            .map(|k| k.unsigned_abs() as usize <= n / 3 || n == 1)
            .collect()
    });
    let d3 = &TABLES.d_tab[3];
    let lam4 = &TABLES.lam_tab[4];
    let d2 = &TABLES.d_tab[2];
    let winv = ctx.winv;
    // per-mode transform in place: each output mode depends only on the
    // same input mode
    let mut out = SpectralField {
        grid,
        degree: 3,
        ncomp: 20,
        data: spec.data.clone(),
    };
    par::chunks_mut(&mut out.data, par::CHUNK_POINTS * 20, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(20).enumerate() {
            let m = base + off;
            let mut rem = m;
            let mut kappa = [0.0; 6];
            let mut inside = true;
            for a in 0..6 {
                let sl = rem / strides[a];
                rem %= strides[a];
                kappa[a] = kw[a][sl];
                inside &= keep[a][sl];
            }
            if !inside {
                dst.fill(Cx::ZERO);
                continue;
            }
            let mut t4 = [Cx::ZERO; 15];
            for e in d3 {
                let t = dst[e.inp as usize].mul_ik(kappa[e.axis as usize]);
                t4[e.out as usize].re += e.sign * t.re;
                t4[e.out as usize].im += e.sign * t.im;
            }
            let mut t2 = [Cx::ZERO; 15];
            for e in lam4 {
                let c = 0.5 * e.sign * winv[e.a as usize][e.b as usize];
                t2[e.out as usize].re += c * t4[e.inp as usize].re;
                t2[e.out as usize].im += c * t4[e.inp as usize].im;
            }
            dst.fill(Cx::ZERO);
            for e in d2 {
                let t = t2[e.inp as usize].mul_ik(kappa[e.axis as usize]);
                dst[e.out as usize].re += e.sign * t.re;
                dst[e.out as usize].im += e.sign * t.im;
            }
        }
    });
    out.into_real()
}

struct ScanTargets<'a> {
    a: &'a mut [f64],
    b: &'a mut [(f64, f64, usize)],
}

impl<'a> ScanTargets<'a> {
    fn run<F>(self, f: F)
    where
        F: Fn(usize, &mut [f64], &mut (f64, f64, usize)) + Sync,
    {
        let ca = par::CHUNK_POINTS * 20;
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.a
                .par_chunks_mut(ca)
                .zip(self.b.par_iter_mut())
                .enumerate()
                .for_each(|(ci, (da, sc))| f(ci, da, sc));
        }
        #[cfg(not(feature = "parallel"))]
        for (ci, (da, sc)) in self.a.chunks_mut(ca).zip(self.b.iter_mut()).enumerate() {
            f(ci, da, sc);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::rhs::rhs_primary;
    use crate::lattice::Grid;
    use crate::stability::constrained_phi_variation;

    #[test]
    fn fast_path_matches_reference_route() {
        let grid = Grid::anisotropic([8, 4, 4, 2, 2, 2], 2.0 * std::f64::consts::PI).unwrap();
        let var = constrained_phi_variation(grid, 4, 1);
        let mut phi = FormField::constant(grid, &crate::forms6::phi_standard(1.0));
        phi.axpy(1e-2, &var.dphi);
        let omega = FormField::constant(grid, &crate::forms6::omega_standard());
        let ctx = const_omega(&omega).expect("constant field");
        let scan = primary_scan(&phi, &ctx, true).unwrap();
        let fast = primary_term_const(&scan.theta, &ctx);
        let (slow, s) = rhs_primary(&phi, &omega).unwrap();
        let mut diff = fast.clone();
        diff.axpy(-1.0, &slow);
        assert!(
            diff.max_abs() < 1e-12 * slow.max_abs().max(1.0),
            "fast vs slow: {}",
            diff.max_abs()
        );
        assert!((scan.max_normsq - s.max_normsq).abs() < 1e-13);
    }
}
