//! Slice-based kernels shared by the pointwise API and the grid passes.
//!
//! These operate on raw component slices so the flow's hot loops can run them
//! per grid point without constructing wrapper types.

use super::mat6::{self, Mat6};
use super::tables::{NCOMP, TABLES};
use crate::error::{Error, Result};

/// Positivity thresholds: reject as degenerate rather than guess.
pub const LAMBDA_NEG_TOL: f64 = -1e-14;
pub const METRIC_EIG_TOL: f64 = 1e-10;

#[inline]
pub fn wedge_into(out: &mut [f64], a: &[f64], b: &[f64], p: usize, q: usize) {
    out.fill(0.0);
    for e in &TABLES.wedge[p][q] {
        out[e.out as usize] += e.sign * a[e.a as usize] * b[e.b as usize];
    }
}

#[inline]
pub fn interior_into(out: &mut [f64], v: &[f64; 6], a: &[f64], k: usize) {
    out.fill(0.0);
    for e in &TABLES.int_tab[k] {
        out[e.out as usize] += e.sign * v[e.a as usize] * a[e.inp as usize];
    }
}

/// Hodge contraction against the inverse symplectic matrix.
#[inline]
pub fn lambda_into(out: &mut [f64], winv: &Mat6, a: &[f64], k: usize) {
    out.fill(0.0);
    for e in &TABLES.lam_tab[k] {
        out[e.out as usize] += 0.5 * e.sign * winv[e.a as usize][e.b as usize] * a[e.inp as usize];
    }
}

/// The 2-form as an antisymmetric matrix.
#[inline]
pub fn omega_matrix(om: &[f64]) -> Mat6 {
    let mut w = [[0.0; 6]; 6];
    for (p, c) in TABLES.combs[2].iter().enumerate() {
        w[c[0]][c[1]] = om[p];
        w[c[1]][c[0]] = -om[p];
    }
    w
}

/// Coefficient of omega^3/3! on e^{123456}.
pub fn vol_coeff(om: &[f64]) -> f64 {
    let mut w2 = [0.0; 15];
    wedge_into(&mut w2, om, om, 2, 2);
    let mut top = [0.0];
    wedge_into(&mut top, &w2, om, 4, 2);
    top[0] / 6.0
}

/// Hitchin's quadratic map K(phi).  Entries are grouped by target cell so
/// each accumulation stays in a register.
#[inline]
pub fn hitchin_k(phi: &[f64]) -> Mat6 {
    let mut k = [[0.0; 6]; 6];
    let tab = &TABLES.hitchin;
    let mut idx = 0;
    while idx < tab.len() {
        let (i, j) = (tab[idx].i, tab[idx].j);
        let mut acc = 0.0;
        while idx < tab.len() && tab[idx].i == i && tab[idx].j == j {
            let e = &tab[idx];
            acc += e.coef * phi[e.pa as usize] * phi[e.pb as usize];
            idx += 1;
        }
        k[i as usize][j as usize] = acc;
    }
    k
}

/// lambda = tr(K^2)/6; negative iff phi is positive.
#[inline]
pub fn hitchin_lambda(k: &Mat6) -> f64 {
    let mut tr = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            tr += k[i][j] * k[j][i];
        }
    }
    tr / 6.0
}

/// phihat_{m j k} = -J^a_m phi_{a j k}.  Entries are grouped by output
/// component.
#[inline]
pub fn phihat_from_j(out: &mut [f64], j: &Mat6, phi: &[f64]) {
    let tab = &TABLES.phihat;
    let mut idx = 0;
    for (o, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        while idx < tab.len() && tab[idx].out as usize == o {
            let e = &tab[idx];
            acc += e.sign * j[e.a as usize][e.b as usize] * phi[e.inp as usize];
            idx += 1;
        }
        *slot = acc;
    }
}

/// Reference metric route: the component formula
/// g_{ij} = -|phi|^{-2} phi_{iab} phi_{jkp} w^{ak} w^{bp}.
pub fn metric_reference(phi: &[f64], winv: &Mat6, normsq: f64) -> Mat6 {
    let mut g = [[0.0; 6]; 6];
    for e in &TABLES.metric {
        let (i, j) = ((e.ij / 6) as usize, (e.ij % 6) as usize);
        let t = e.coef
            * phi[e.pa as usize]
            * phi[e.pb as usize]
            * (winv[e.a as usize][e.k as usize] * winv[e.b as usize][e.p as usize]
                - winv[e.a as usize][e.p as usize] * winv[e.b as usize][e.k as usize]);
        g[i][j] += t;
        if i != j {
            g[j][i] += t;
        }
    }
    for row in &mut g {
        for x in row.iter_mut() {
            *x *= -1.0 / normsq;
        }
    }
    g
}

/// Everything the flow needs at one point.
pub struct PointData {
    pub j: Mat6,
    pub g: Mat6,
    pub ginv: Mat6,
    pub winv: Mat6,
    pub normsq: f64,
    pub logdet: f64,
    pub lambda: f64,
    pub min_pivot: f64,
    pub phihat: [f64; 20],
}

/// Computes the induced structure at a point.  On primitive pairs the metric
/// route omega(., J.) agrees with the component formula exactly; it is used
/// here (symmetrized) because it is an order of magnitude cheaper.
pub fn structure_at(phi: &[f64], om: &[f64]) -> Result<PointData> {
    let k = hitchin_k(phi);
    let lambda = hitchin_lambda(&k);
    if lambda >= LAMBDA_NEG_TOL {
        return Err(Error::NotPositive { lambda });
    }
    let s = 1.0 / (-lambda).sqrt();
    let mut j = [[0.0; 6]; 6];
    for i in 0..6 {
        for c in 0..6 {
            j[i][c] = k[i][c] * s;
        }
    }
    let w = omega_matrix(om);
    let winv = mat6::invert(&w).ok_or(Error::Degenerate)?;
    let mut phihat = [0.0; 20];
    phihat_from_j(&mut phihat, &j, phi);
    let vol = vol_coeff(om);
    if vol <= 0.0 {
        return Err(Error::Orientation { coeff: vol });
    }
    let mut top = [0.0];
    wedge_into(&mut top, phi, &phihat, 3, 3);
    let normsq = top[0] / vol;
    if normsq <= 0.0 {
        return Err(Error::NotPositive { lambda: normsq });
    }
    // g_{ij} = omega_{im} J^m_j, symmetrized.
    let gj = mat6::matmul(&w, &j);
    let mut g = [[0.0; 6]; 6];
    for i in 0..6 {
        for c in 0..6 {
            g[i][c] = 0.5 * (gj[i][c] + gj[c][i]);
        }
    }
    let min_pivot = mat6::ldl_min_pivot(&g);
    if min_pivot <= METRIC_EIG_TOL {
        return Err(Error::IndefiniteMetric { pivot: min_pivot });
    }
    let ginv = mat6::invert(&g).ok_or(Error::IndefiniteMetric { pivot: min_pivot })?;
    let logdet = mat6::det(&g).ln();
    Ok(PointData {
        j,
        g,
        ginv,
        winv,
        normsq,
        logdet,
        lambda,
        min_pivot,
        phihat,
    })
}

/// General linear action on a k-form: (M a)(X_1..X_k) = a(M X_1, .., M X_k).
pub fn matrix_action_into(out: &mut [f64], m: &Mat6, a: &[f64], k: usize) {
    out.fill(0.0);
    if k == 0 {
        out[0] = a[0];
        return;
    }
    // Expand a over increasing indices, push each term through the matrix.
    for (pos_in, ci) in TABLES.combs[k].iter().enumerate() {
        let coeff = a[pos_in];
        if coeff == 0.0 {
            continue;
        }
        // out_P += coeff * sum over permutations via det of the k x k minor
        // M[ci, P] -- the minor determinant collects all antisymmetrized terms.
        for (pos_out, cp) in TABLES.combs[k].iter().enumerate() {
            let mut minor = [[0.0; 6]; 6];
            for (r, &i) in ci.iter().enumerate() {
                for (c, &p) in cp.iter().enumerate() {
                    minor[r][c] = m[i][p];
                }
            }
            out[pos_out] += coeff * det_k(&minor, k);
        }
    }
}

fn det_k(m: &Mat6, k: usize) -> f64 {
    match k {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => det_gauss(m, k),
    }
}

fn det_gauss(m: &Mat6, k: usize) -> f64 {
    let mut a = *m;
    let mut d = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(col, piv);
            d = -d;
        }
        d *= a[col][col];
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for j in col..k {
                a[r][j] -= f * a[col][j];
            }
        }
    }
    d
}

/// Raised-index inner product (A,B) = (1/k!) g^{IJ} A_I B_J, evaluated over
/// increasing multi-indices with minor determinants of the inverse metric.
pub fn inner_with_metric(ginv: &Mat6, a: &[f64], b: &[f64], k: usize) -> f64 {
    if k == 0 {
        return a[0] * b[0];
    }
    let mut acc = 0.0;
    for (ia, ci) in TABLES.combs[k].iter().enumerate() {
        if a[ia] == 0.0 {
            continue;
        }
        for (ib, cj) in TABLES.combs[k].iter().enumerate() {
            if b[ib] == 0.0 {
                continue;
            }
            let mut minor = [[0.0; 6]; 6];
            for (r, &i) in ci.iter().enumerate() {
                for (c, &j) in cj.iter().enumerate() {
                    minor[r][c] = ginv[i][j];
                }
            }
            acc += a[ia] * b[ib] * det_k(&minor, k);
        }
    }
    acc
}

/// Hodge star against a positive metric:
/// (star a)_J = sqrt(det g)/k! a^I eps_{I J}.
pub fn hodge_star_into(out: &mut [f64], g: &Mat6, ginv: &Mat6, a: &[f64], k: usize) {
    let sq = mat6::det(g).sqrt();
    let n_out = NCOMP[6 - k];
    out[..n_out].fill(0.0);
    if k == 0 {
        // star of a function is f * vol
        out[0] = sq * a[0];
        return;
    }
    // raise indices: up_I = sum_M det(ginv[I, M]) a_M
    let nc = NCOMP[k];
    let mut up = [0.0; 20];
    for (ii, ci) in TABLES.combs[k].iter().enumerate() {
        let mut acc = 0.0;
        for (im, cm) in TABLES.combs[k].iter().enumerate() {
            if a[im] == 0.0 {
                continue;
            }
            let mut minor = [[0.0; 6]; 6];
            for (r, &i) in ci.iter().enumerate() {
                for (c, &m) in cm.iter().enumerate() {
                    minor[r][c] = ginv[i][m];
                }
            }
            acc += det_k(&minor, k) * a[im];
        }
        up[ii] = acc;
    }
    let _ = nc;
    for (ii, ci) in TABLES.combs[k].iter().enumerate() {
        if up[ii] == 0.0 {
            continue;
        }
        for (jj, cj) in TABLES.combs[6 - k].iter().enumerate() {
            let mut idx = [0usize; 6];
            idx[..k].copy_from_slice(ci);
            idx[k..].copy_from_slice(cj);
            let (_, sg) = super::tables::sort_sign(&idx);
            if sg != 0 {
                out[jj] += sq * sg as f64 * up[ii];
            }
        }
    }
}
