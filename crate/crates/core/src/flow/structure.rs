//! The pointwise structure pass: from (phi, omega) fields to everything the
//! right-hand sides need, with positivity checked at every point.

use crate::error::{Error, Result};
use crate::forms6::kernel::{self, LAMBDA_NEG_TOL, METRIC_EIG_TOL};
use crate::forms6::mat6;
use crate::lattice::{sym_idx, FormField, Grid, SYM_COMPS};
use crate::par;

/// Per-point block layout inside [`StructureField::data`].
pub const WINV: usize = 0; // 36 entries
pub const GINV: usize = 36; // 21 packed symmetric
pub const GSYM: usize = 57; // 21 packed symmetric
pub const NSQ: usize = 78;
pub const LOGDET: usize = 79;
pub const STRIDE: usize = 80;

/// Derived pointwise data over the grid, plus the scan reductions.
pub struct StructureField {
    pub grid: Grid,
    pub data: Vec<f64>,
    /// theta = |phi|^2 phihat, the 3-form under the outer differential.
    pub theta: FormField,
    pub max_normsq: f64,
    pub min_normsq: f64,
    pub min_pivot: f64,
    pub max_lambda: f64,
}

impl StructureField {
    #[inline]
    pub fn winv(&self, pt: usize) -> &[f64] {
        &self.data[pt * STRIDE + WINV..pt * STRIDE + WINV + 36]
    }

    pub fn ginv_mat(&self, pt: usize) -> [[f64; 6]; 6] {
        let base = pt * STRIDE + GINV;
        let mut m = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in i..6 {
                let v = self.data[base + sym_idx(i, j)];
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    #[inline]
    pub fn nsq(&self, pt: usize) -> f64 {
        self.data[pt * STRIDE + NSQ]
    }

    /// Packed inverse-metric components as a contiguous buffer (npts x 21).
    pub fn ginv_packed(&self) -> Vec<f64> {
        let npts = self.grid.npts();
        let mut out = vec![0.0; npts * SYM_COMPS];
        let data = &self.data;
        par::chunks_mut(&mut out, par::CHUNK_POINTS * SYM_COMPS, |ci, slab| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in slab.chunks_mut(SYM_COMPS).enumerate() {
                let pt = base + off;
                dst.copy_from_slice(&data[pt * STRIDE + GINV..pt * STRIDE + GINV + SYM_COMPS]);
            }
        });
        out
    }

    /// Packed metric components (npts x 21).
    pub fn g_packed(&self) -> Vec<f64> {
        let npts = self.grid.npts();
        let mut out = vec![0.0; npts * SYM_COMPS];
        let data = &self.data;
        par::chunks_mut(&mut out, par::CHUNK_POINTS * SYM_COMPS, |ci, slab| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in slab.chunks_mut(SYM_COMPS).enumerate() {
                let pt = base + off;
                dst.copy_from_slice(&data[pt * STRIDE + GSYM..pt * STRIDE + GSYM + SYM_COMPS]);
            }
        });
        out
    }

    /// (logdet, nsq) interleaved (npts x 2), for the gradient transform.
    pub fn scalars_packed(&self) -> Vec<f64> {
        let npts = self.grid.npts();
        let mut out = vec![0.0; npts * 2];
        let data = &self.data;
        par::chunks_mut(&mut out, par::CHUNK_POINTS * 2, |ci, slab| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in slab.chunks_mut(2).enumerate() {
                let pt = base + off;
                dst[0] = data[pt * STRIDE + LOGDET];
                dst[1] = data[pt * STRIDE + NSQ];
            }
        });
        out
    }

    /// Smallest metric eigenvalue over all points (exact symmetric solve).
    pub fn min_metric_eigenvalue(&self) -> f64 {
        let npts = self.grid.npts();
        let data = &self.data;
        -par::max_chunked(npts, par::CHUNK_POINTS, |r| {
            let mut m = f64::NEG_INFINITY;
            for pt in r {
                let base = pt * STRIDE + GSYM;
                let mut g = [[0.0; 6]; 6];
                for i in 0..6 {
                    for j in i..6 {
                        let v = data[base + sym_idx(i, j)];
                        g[i][j] = v;
                        g[j][i] = v;
                    }
                }
                m = m.max(-mat6::sym_eigenvalues(&g)[0]);
            }
            m
        })
    }
}

struct ChunkScan {
    max_normsq: f64,
    min_normsq: f64,
    min_pivot: f64,
    max_lambda: f64,
    bad_point: usize,
    bad_kind: u8,
}

/// Runs the structure computation at every grid point.  Fails with the first
/// offending point if positivity is lost anywhere.
pub fn structure_pass(phi: &FormField, omega: &FormField) -> Result<StructureField> {
    assert_eq!(phi.degree(), 3);
    assert_eq!(omega.degree(), 2);
    assert_eq!(phi.grid(), omega.grid());
    let grid = phi.grid();
    let npts = grid.npts();
    let mut data = vec![0.0; npts * STRIDE];
    let mut theta = FormField::zeros(grid, 3);
    let n_chunks = npts.div_ceil(par::CHUNK_POINTS);
    let mut scans: Vec<ChunkScan> = Vec::with_capacity(n_chunks);
    for _ in 0..n_chunks {
        scans.push(ChunkScan {
            max_normsq: f64::NEG_INFINITY,
            min_normsq: f64::INFINITY,
            min_pivot: f64::INFINITY,
            max_lambda: f64::NEG_INFINITY,
            bad_point: usize::MAX,
            bad_kind: 0,
        });
    }
    {
        let phi_data = phi.data();
        let om_data = omega.data();
        let theta_data: &mut [f64] = theta.data_mut();
        // Two mutable targets: drive the parallel loop over (data, theta)
        // chunk pairs via a single index space.
        let data_ptr = ChunkTargets {
            a: &mut data,
            b: theta_data,
            c: &mut scans,
        };
        data_ptr.run(n_chunks, |ci, dchunk, tchunk, scan| {
            let base = ci * par::CHUNK_POINTS;
            let count = dchunk.len() / STRIDE;
            for off in 0..count {
                let pt = base + off;
                let pc = &phi_data[pt * 20..(pt + 1) * 20];
                let oc = &om_data[pt * 15..(pt + 1) * 15];
                let out = &mut dchunk[off * STRIDE..(off + 1) * STRIDE];
                let th = &mut tchunk[off * 20..(off + 1) * 20];
                let k = kernel::hitchin_k(pc);
                let lambda = kernel::hitchin_lambda(&k);
                scan.max_lambda = scan.max_lambda.max(lambda);
                if lambda >= LAMBDA_NEG_TOL {
                    if scan.bad_point == usize::MAX {
                        scan.bad_point = pt;
                        scan.bad_kind = 1;
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
                let w = kernel::omega_matrix(oc);
                let Some(winv) = mat6::invert(&w) else {
                    if scan.bad_point == usize::MAX {
                        scan.bad_point = pt;
                        scan.bad_kind = 2;
                    }
                    continue;
                };
                for (r, row) in winv.iter().enumerate() {
                    out[WINV + r * 6..WINV + r * 6 + 6].copy_from_slice(row);
                }
                let vol = kernel::vol_coeff(oc);
                if vol <= 0.0 {
                    if scan.bad_point == usize::MAX {
                        scan.bad_point = pt;
                        scan.bad_kind = 3;
                    }
                    continue;
                }
                let mut hat = [0.0f64; 20];
                kernel::phihat_from_j(&mut hat, &j, pc);
                let mut top = [0.0];
                kernel::wedge_into(&mut top, pc, &hat, 3, 3);
                let nsq = top[0] / vol;
                if nsq <= 0.0 {
                    if scan.bad_point == usize::MAX {
                        scan.bad_point = pt;
                        scan.bad_kind = 1;
                    }
                    continue;
                }
                out[NSQ] = nsq;
                scan.max_normsq = scan.max_normsq.max(nsq);
                scan.min_normsq = scan.min_normsq.min(nsq);
                for (t, h) in th.iter_mut().zip(hat.iter()) {
                    *t = nsq * h;
                }
                // g = sym(omega . J); equals the component formula on
                // primitive pairs.
                let gj = mat6::matmul(&w, &j);
                let mut g = [[0.0; 6]; 6];
                for r in 0..6 {
                    for c in 0..6 {
                        g[r][c] = 0.5 * (gj[r][c] + gj[c][r]);
                    }
                }
                let pivot = mat6::ldl_min_pivot(&g);
                scan.min_pivot = scan.min_pivot.min(pivot);
                if pivot <= METRIC_EIG_TOL {
                    if scan.bad_point == usize::MAX {
                        scan.bad_point = pt;
                        scan.bad_kind = 4;
                    }
                    continue;
                }
                let Some(ginv) = mat6::invert(&g) else {
                    if scan.bad_point == usize::MAX {
                        scan.bad_point = pt;
                        scan.bad_kind = 4;
                    }
                    continue;
                };
                for i in 0..6 {
                    for jj in i..6 {
                        out[GINV + sym_idx(i, jj)] = ginv[i][jj];
                        out[GSYM + sym_idx(i, jj)] = g[i][jj];
                    }
                }
                out[LOGDET] = mat6::det(&g).ln();
            }
        });
    }
    // fold scans in chunk order
    let mut max_normsq = f64::NEG_INFINITY;
    let mut min_normsq = f64::INFINITY;
    let mut min_pivot = f64::INFINITY;
    let mut max_lambda = f64::NEG_INFINITY;
    let mut bad: Option<(usize, u8)> = None;
    for s in &scans {
        max_normsq = max_normsq.max(s.max_normsq);
        min_normsq = min_normsq.min(s.min_normsq);
        min_pivot = min_pivot.min(s.min_pivot);
        max_lambda = max_lambda.max(s.max_lambda);
        if bad.is_none() && s.bad_point != usize::MAX {
            bad = Some((s.bad_point, s.bad_kind));
        }
    }
    if let Some((pt, kind)) = bad {
        let detail = match kind {
            1 => "3-form lost positivity",
            2 => "2-form degenerate",
            3 => "orientation reversed",
            _ => "metric lost positive definiteness",
        };
        return Err(Error::DegenerateState {
            time: 0.0,
            point: pt,
            detail: detail.into(),
        });
    }
    Ok(StructureField {
        grid,
        data,
        theta,
        max_normsq,
        min_normsq,
        min_pivot,
        max_lambda,
    })
}

/// Helper carrying three mutable chunked targets through the parallel loop.
struct ChunkTargets<'a> {
    a: &'a mut [f64],
    b: &'a mut [f64],
    c: &'a mut [ChunkScan],
}

impl<'a> ChunkTargets<'a> {
    fn run<F>(self, n_chunks: usize, f: F)
    where
        F: Fn(usize, &mut [f64], &mut [f64], &mut ChunkScan) + Sync,
    {
        let ca = par::CHUNK_POINTS * STRIDE;
        let cb = par::CHUNK_POINTS * 20;
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.a
                .par_chunks_mut(ca)
                .zip(self.b.par_chunks_mut(cb))
                .zip(self.c.par_iter_mut())
                .enumerate()
                .for_each(|(ci, ((da, db), sc))| f(ci, da, db, sc));
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = n_chunks;
            for (ci, ((da, db), sc)) in self
                .a
                .chunks_mut(ca)
                .zip(self.b.chunks_mut(cb))
                .zip(self.c.iter_mut())
                .enumerate()
            {
                f(ci, da, db, sc);
            }
        }
        #[cfg(feature = "parallel")]
        let _ = n_chunks;
    }
}
