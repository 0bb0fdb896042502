//! Small fixed-size matrix helpers for the pointwise kernels.

pub type Mat6 = [[f64; 6]; 6];

pub const IDENTITY: Mat6 = {
    let mut m = [[0.0; 6]; 6];
    let mut i = 0;
    while i < 6 {
        m[i][i] = 1.0;
        i += 1;
    }
    m
};

pub fn matmul(a: &Mat6, b: &Mat6) -> Mat6 {
    let mut c = [[0.0; 6]; 6];
    for i in 0..6 {
        for k in 0..6 {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..6 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn transpose(a: &Mat6) -> Mat6 {
    let mut c = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            c[i][j] = a[j][i];
        }
    }
    c
}

pub fn trace(a: &Mat6) -> f64 {
    (0..6).map(|i| a[i][i]).sum()
}

pub fn max_abs_diff(a: &Mat6, b: &Mat6) -> f64 {
    let mut m = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Gauss-Jordan inverse with partial pivoting.  Returns None when the pivot
/// collapses below `tol` times the largest row entry.
pub fn invert(a: &Mat6) -> Option<Mat6> {
    let mut m = *a;
    let mut inv = IDENTITY;
    for col in 0..6 {
        let mut piv = col;
        for r in col + 1..6 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for j in 0..6 {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..6 {
            if r == col {
                continue;
            }
            let f = m[r][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..6 {
                m[r][j] -= f * m[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

pub fn det(a: &Mat6) -> f64 {
    let mut m = *a;
    let mut d = 1.0;
    for col in 0..6 {
        let mut piv = col;
        for r in col + 1..6 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..6 {
            let f = m[r][col] / m[col][col];
            for j in col..6 {
                m[r][j] -= f * m[col][j];
            }
        }
    }
    d
}

/// Smallest pivot of the unpivoted LDL^T factorization of a symmetric matrix.
/// Positive definiteness implies all pivots are positive; a small or negative
/// pivot flags (near-)indefiniteness.
pub fn ldl_min_pivot(a: &Mat6) -> f64 {
    let mut m = *a;
    let mut min_d = f64::INFINITY;
    for k in 0..6 {
        let d = m[k][k];
        min_d = min_d.min(d);
        if d.abs() < 1e-300 {
            return min_d.min(0.0);
        }
        for i in k + 1..6 {
            let f = m[i][k] / d;
            for j in k..6 {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    min_d
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Mat6) -> [f64; 6] {
    let m = nalgebra::Matrix6::from_fn(|i, j| a[i][j]);
    let ev = m.symmetric_eigenvalues();
    let mut out = [0.0; 6];
    for i in 0..6 {
        out[i] = ev[i];
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out
}

/// Matrix exponential by scaling and squaring with a Taylor series; adequate
/// for the moderate-norm generators used by the randomizers.
pub fn expm(a: &Mat6) -> Mat6 {
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = norm.log2().ceil().max(0.0) as u32 + 1;
    let scale = 1.0 / f64::powi(2.0, s as i32);
    let mut b = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            b[i][j] = a[i][j] * scale;
        }
    }
    let mut result = IDENTITY;
    let mut term = IDENTITY;
    for n in 1..=18 {
        term = matmul(&term, &b);
        for i in 0..6 {
            for j in 0..6 {
                term[i][j] /= n as f64;
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}
