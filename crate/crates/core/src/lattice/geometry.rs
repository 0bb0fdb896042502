//! Pointwise differential geometry of metric and almost-complex fields:
//! Christoffel symbols and the Nijenhuis integrability tensor, with spectral
//! first derivatives.

use super::calculus::gradients_raw;
use super::{sym_idx, AcField, Grid, MetricField, SYM_COMPS};
use crate::error::{Error, Result};
use crate::forms6::mat6;
use crate::par;

/// Christoffel symbols Gamma^k_{pq}, symmetric in (p, q):
/// data layout per point is k * 21 + sym(p, q).
#[derive(Clone, Debug)]
pub struct ChristoffelField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ChristoffelField {
    pub fn at(&self, pt: usize, k: usize, p: usize, q: usize) -> f64 {
        self.data[pt * 6 * SYM_COMPS + k * SYM_COMPS + sym_idx(p, q)]
    }

    pub fn max_abs(&self) -> f64 {
        par::max_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
    }
}

/// Gamma^k_{pq} = (1/2) g^{ks} (d_p g_{qs} + d_q g_{ps} - d_s g_{pq}).
pub fn christoffel(g: &MetricField) -> Result<ChristoffelField> {
    let grid = g.grid;
    let npts = grid.npts();
    let dg = gradients_raw(grid, SYM_COMPS, &g.data); // per point: [l][sym(i,j)]
    let mut out = ChristoffelField {
        grid,
        data: vec![0.0; npts * 6 * SYM_COMPS],
    };
    let bad = std::sync::atomic::AtomicUsize::new(usize::MAX);
    par::chunks_mut(&mut out.data, par::CHUNK_POINTS * 6 * SYM_COMPS, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(6 * SYM_COMPS).enumerate() {
            let pt = base + off;
            let gm = g.at(pt);
            let Some(ginv) = mat6::invert(&gm) else {
                bad.store(pt, std::sync::atomic::Ordering::Relaxed);
                continue;
            };
            if mat6::ldl_min_pivot(&gm) <= 0.0 {
                bad.store(pt, std::sync::atomic::Ordering::Relaxed);
                continue;
            }
            let dgm = &dg[pt * 6 * SYM_COMPS..(pt + 1) * 6 * SYM_COMPS];
            let grad = |l: usize, i: usize, j: usize| dgm[l * SYM_COMPS + sym_idx(i, j)];
            for p in 0..6 {
                for q in p..6 {
                    let mut t = [0.0; 6]; // T_s = d_p g_qs + d_q g_ps - d_s g_pq
                    for (s, ts) in t.iter_mut().enumerate() {
                        *ts = grad(p, q, s) + grad(q, p, s) - grad(s, p, q);
                    }
                    for k in 0..6 {
                        let mut acc = 0.0;
                        for (s, ts) in t.iter().enumerate() {
                            acc += ginv[k][s] * ts;
                        }
                        dst[k * SYM_COMPS + sym_idx(p, q)] = 0.5 * acc;
                    }
                }
            }
        }
    });
    let pt = bad.load(std::sync::atomic::Ordering::Relaxed);
    if pt != usize::MAX {
        return Err(Error::DegenerateState {
            time: 0.0,
            point: pt,
            detail: "metric not positive definite in christoffel".into(),
        });
    }
    Ok(out)
}

/// The Nijenhuis tensor N^k_{ij} of an almost-complex field, antisymmetric
/// in (i, j): per point layout k * 15 + pair(i < j).
#[derive(Clone, Debug)]
pub struct NijenhuisField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl NijenhuisField {
    pub fn max_abs(&self) -> f64 {
        par::max_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.volume() / self.grid.npts() as f64;
        let s = par::sum_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().map(|x| x * x).sum()
        });
        (w * s).sqrt()
    }
}

/// N^k_{ij} = J^m_i d_m J^k_j - J^m_j d_m J^k_i
///          + J^k_m d_j J^m_i - J^k_m d_i J^m_j.
pub fn nijenhuis(j: &AcField) -> NijenhuisField {
    let grid = j.grid;
    let npts = grid.npts();
    let dj = gradients_raw(grid, 36, &j.data); // [l][k*6+m]? layout: axis * 36 + entry
    let pair = |i: usize, jj: usize| -> usize {
        // rank of (i, jj) with i < jj among 15 pairs
        let mut r = 0;
        for a in 0..6 {
            for b in a + 1..6 {
                if a == i && b == jj {
                    return r;
                }
                r += 1;
            }
        }
        unreachable!()
    };
    let mut pairs = [[0usize; 6]; 6];
    for i in 0..6 {
        for jj in i + 1..6 {
            pairs[i][jj] = pair(i, jj);
        }
    }
    let mut out = NijenhuisField {
        grid,
        data: vec![0.0; npts * 6 * 15],
    };
    par::chunks_mut(&mut out.data, par::CHUNK_POINTS * 90, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(90).enumerate() {
            let pt = base + off;
            let jm = j.at(pt);
            let djm = &dj[pt * 6 * 36..(pt + 1) * 6 * 36];
            let d = |l: usize, k: usize, m: usize| djm[l * 36 + k * 6 + m];
            for i in 0..6 {
                for jj in i + 1..6 {
                    for k in 0..6 {
                        let mut acc = 0.0;
                        for m in 0..6 {
                            acc += jm[m][i] * d(m, k, jj) - jm[m][jj] * d(m, k, i);
                            acc += jm[k][m] * (d(jj, m, i) - d(i, m, jj));
                        }
                        dst[k * 15 + pairs[i][jj]] = acc;
                    }
                }
            }
        }
    });
    out
}
