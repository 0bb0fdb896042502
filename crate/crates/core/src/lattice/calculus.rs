//! Spectral exterior calculus: d, its adjoint, the Hodge Laplacian, harmonic
//! projection, the Green and Neumann operators, and Sobolev norms.
//!
//! All operators are Fourier multipliers composed with the constant-
//! coefficient structure tables; d and its adjoint zero the Nyquist slot
//! (the odd symbol has no real representative there), so d∘d = 0 holds to
//! roundoff and both are exact on resolved trigonometric polynomials.

use super::fft::Cx;
use super::{fft, FormField, Grid, SpectralField};
use crate::error::{Error, Result};
use crate::forms6::tables::{NCOMP, TABLES};
use crate::forms6::AltTensor;
use crate::lattice::CohomologyVector;
use crate::par;

/// Fraction of field energy carried by the top-third (dealiased) modes.
pub fn aliasing_fraction(f: &FormField) -> f64 {
    let spec = f.spectral();
    let keep = keep_masks(&f.grid());
    let dims = f.grid().dims();
    let strides = mode_strides(&dims);
    let nc = spec.ncomp;
    let mut kept = 0.0;
    let mut total = 0.0;
    for m in 0..f.npts() {
        let mut inside = true;
        let mut rem = m;
        for a in 0..6 {
            let s = rem / strides[a];
            rem %= strides[a];
            inside &= keep[a][s];
        }
        let e: f64 = (0..nc).map(|c| spec.data[m * nc + c].norm_sq()).sum();
        total += e;
        if inside {
            kept += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (total - kept) / total
    }
}

fn mode_strides(dims: &[usize; 6]) -> [usize; 6] {
    let mut s = [1usize; 6];
    for a in (0..5).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

/// Per-axis 2/3-rule keep masks in slot order.
fn keep_masks(grid: &Grid) -> [Vec<bool>; 6] {
    let dims = grid.dims();
    std::array::from_fn(|a| {
        let n = dims[a];
        fft::axis_modes(n)
            .into_iter()
            .map(|k| k.unsigned_abs() as usize <= n / 3 || n == 1)
            .collect()
    })
}

/// Applies a per-mode map `f(kappa, input_comps, output_comps)` and returns
/// the physical-space result.
fn mode_map(
    spec: &SpectralField,
    out_degree: usize,
    use_deriv_wavenumbers: bool,
    f: impl Fn(&[f64; 6], &[Cx], &mut [Cx]) + Sync,
) -> SpectralField {
    let grid = spec.grid;
    let dims = grid.dims();
    let strides = mode_strides(&dims);
    let kw: [Vec<f64>; 6] = if use_deriv_wavenumbers {
        spec.deriv_wavenumbers()
    } else {
        spec.wavenumbers()
    };
    let mut out = SpectralField::zeros(grid, out_degree);
    let nc_in = spec.ncomp;
    let nc_out = out.ncomp;
    let chunk = par::CHUNK_POINTS;
    par::chunks_mut(&mut out.data, chunk * nc_out, |ci, slab| {
        let base = ci * chunk;
        for (off, dst) in slab.chunks_mut(nc_out).enumerate() {
            let m = base + off;
            let mut rem = m;
            let mut kappa = [0.0; 6];
            for a in 0..6 {
                let s = rem / strides[a];
                rem %= strides[a];
                kappa[a] = kw[a][s];
            }
            f(&kappa, &spec.data[m * nc_in..(m + 1) * nc_in], dst);
        }
    });
    out
}

fn d_spectral(spec: &SpectralField) -> SpectralField {
    let k = spec.degree as usize;
    let tab = &TABLES.d_tab[k];
    mode_map(spec, k + 1, true, |kappa, inp, out| {
        for e in tab {
            let t = inp[e.inp as usize].mul_ik(kappa[e.axis as usize]);
            let o = &mut out[e.out as usize];
            o.re += e.sign * t.re;
            o.im += e.sign * t.im;
        }
    })
}

fn dstar_spectral(spec: &SpectralField) -> SpectralField {
    let k = spec.degree as usize;
    let tab = &TABLES.dstar_tab[k];
    mode_map(spec, k - 1, true, |kappa, inp, out| {
        for e in tab {
            let t = inp[e.inp as usize].mul_ik(kappa[e.axis as usize]);
            let o = &mut out[e.out as usize];
            o.re += e.sign * t.re;
            o.im += e.sign * t.im;
        }
    })
}

/// Exterior derivative.  Warns when the dealiased band carries more than
/// 1e-8 of the field energy.
pub fn exterior_derivative(f: &FormField) -> FormField {
    assert!(f.degree() <= 5);
    let frac = aliasing_fraction(f);
    if frac > 1e-8 {
        log::warn!(
            "exterior_derivative: top-third spectrum carries {frac:.3e} of field energy"
        );
    }
    d_spectral(&f.spectral()).into_real()
}

/// Exterior derivative with the 2/3-rule mask applied first; used on
/// pointwise products before differentiation.
pub fn exterior_derivative_dealiased(f: &FormField) -> FormField {
    d_spectral(&masked(&f.spectral())).into_real()
}

/// 2/3-rule low-pass of a spectral field.
pub fn masked(spec: &SpectralField) -> SpectralField {
    let keep = keep_masks(&spec.grid);
    let dims = spec.grid.dims();
    let strides = mode_strides(&dims);
    let nc = spec.ncomp;
    let mut out = spec.clone();
    par::chunks_mut(&mut out.data, par::CHUNK_POINTS * nc, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(nc).enumerate() {
            let m = base + off;
            let mut rem = m;
            let mut inside = true;
            for a in 0..6 {
                let s = rem / strides[a];
                rem %= strides[a];
                inside &= keep[a][s];
            }
            if !inside {
                dst.fill(Cx::ZERO);
            }
        }
    });
    out
}

/// 2/3-rule low-pass of a physical field.
pub fn low_pass_two_thirds(f: &FormField) -> FormField {
    masked(&f.spectral()).into_real()
}

/// Codifferential (adjoint of d in the flat L^2 pairing).
pub fn codifferential(f: &FormField) -> FormField {
    assert!(f.degree() >= 1);
    dstar_spectral(&f.spectral()).into_real()
}

/// Hodge Laplacian; diagonal in Fourier space with symbol |kappa|^2.
pub fn hodge_laplacian(f: &FormField) -> FormField {
    let spec = f.spectral();
    mode_map(&spec, f.degree(), false, |kappa, inp, out| {
        let k2: f64 = kappa.iter().map(|k| k * k).sum();
        for (o, i) in out.iter_mut().zip(inp) {
            *o = i.scale(k2);
        }
    })
    .into_real()
}

/// Splits a field into its constant harmonic part and a zero-mean remainder.
pub fn harmonic_projection(f: &FormField) -> (CohomologyVector, FormField) {
    let mean = f.mean();
    let mut rem = f.clone();
    let nc = rem.ncomp();
    let mc: Vec<f64> = mean.components().to_vec();
    par::chunks_mut(rem.data_mut(), 1 << 14, |ci, chunk| {
        let base = ci * (1 << 14);
        for (i, x) in chunk.iter_mut().enumerate() {
            *x -= mc[(base + i) % nc];
        }
    });
    (CohomologyVector::new(mean), rem)
}

/// Inverse Laplacian on the zero-mean part (the harmonic part is projected
/// away first).
pub fn green_inverse(f: &FormField) -> FormField {
    let (_, rem) = harmonic_projection(f);
    let spec = rem.spectral();
    mode_map(&spec, f.degree(), false, |kappa, inp, out| {
        let k2: f64 = kappa.iter().map(|k| k * k).sum();
        if k2 == 0.0 {
            out.fill(Cx::ZERO);
        } else {
            for (o, i) in out.iter_mut().zip(inp) {
                *o = i.scale(1.0 / k2);
            }
        }
    })
    .into_real()
}

/// The Neumann operator: a potential gamma with d gamma = f for exact f.
/// Rejects input whose harmonic part exceeds 1e-10.
pub fn neumann_operator(f: &FormField) -> Result<FormField> {
    let (h, rem) = harmonic_projection(f);
    if h.max_abs() > 1e-10 {
        return Err(Error::NotExact {
            harmonic: h.max_abs(),
        });
    }
    let spec = rem.spectral();
    let k = f.degree();
    let tab = &TABLES.dstar_tab[k];
    // d* of the Green inverse, fused per mode
    Ok(mode_map(&spec, k - 1, true, |kappa, inp, out| {
        let k2: f64 = kappa.iter().map(|k| k * k).sum();
        if k2 == 0.0 {
            return;
        }
        let inv = 1.0 / k2;
        for e in tab {
            let t = inp[e.inp as usize].mul_ik(kappa[e.axis as usize] * inv);
            let o = &mut out[e.out as usize];
            o.re += e.sign * t.re;
            o.im += e.sign * t.im;
        }
    })
    .into_real())
}

/// Sobolev norm with Fourier weight (1 + |kappa|^2)^s; s = 0 recovers L^2.
pub fn sobolev_norm(f: &FormField, s: usize) -> f64 {
    let spec = f.spectral();
    let dims = f.grid().dims();
    let strides = mode_strides(&dims);
    let kw = spec.wavenumbers();
    let nc = spec.ncomp;
    let npts = f.npts() as f64;
    let weight = f.grid().volume() / (npts * npts);
    let total = par::sum_chunked(f.npts(), par::CHUNK_POINTS, |r| {
        let mut acc = 0.0;
        for m in r {
            let mut rem = m;
            let mut k2 = 0.0;
            for a in 0..6 {
                let sl = rem / strides[a];
                rem %= strides[a];
                k2 += kw[a][sl] * kw[a][sl];
            }
            let e: f64 = (0..nc).map(|c| spec.data[m * nc + c].norm_sq()).sum();
            acc += (1.0 + k2).powi(s as i32) * e;
        }
        acc
    });
    (weight * total).sqrt()
}

/// Squared L^2 norm of d f computed in mode space (no inverse transform).
pub fn d_norm_sq(f: &FormField) -> f64 {
    let spec = f.spectral();
    let k = f.degree();
    let tab = &TABLES.d_tab[k];
    let dims = f.grid().dims();
    let strides = mode_strides(&dims);
    let kw = spec.deriv_wavenumbers();
    let nc = spec.ncomp;
    let nco = NCOMP[k + 1];
    let npts = f.npts() as f64;
    let weight = f.grid().volume() / (npts * npts);
    let total = par::sum_chunked(f.npts(), par::CHUNK_POINTS, |r| {
        let mut acc = 0.0;
        let mut out = [Cx::ZERO; 20];
        for m in r {
            let mut rem = m;
            let mut kappa = [0.0; 6];
            for a in 0..6 {
                let sl = rem / strides[a];
                rem %= strides[a];
                kappa[a] = kw[a][sl];
            }
            out[..nco].fill(Cx::ZERO);
            let inp = &spec.data[m * nc..(m + 1) * nc];
            for e in tab {
                let t = inp[e.inp as usize].mul_ik(kappa[e.axis as usize]);
                out[e.out as usize].re += e.sign * t.re;
                out[e.out as usize].im += e.sign * t.im;
            }
            acc += out[..nco].iter().map(|x| x.norm_sq()).sum::<f64>();
        }
        acc
    });
    weight * total
}

/// L^2 inner product of two fields of equal degree.
pub fn l2_inner(a: &FormField, b: &FormField) -> f64 {
    assert_eq!(a.degree(), b.degree());
    assert_eq!(a.grid(), b.grid());
    let w = a.grid().volume() / a.npts() as f64;
    let (da, db) = (a.data(), b.data());
    w * par::sum_chunked(da.len(), 1 << 14, |r| {
        r.map(|i| da[i] * db[i]).sum()
    })
}

/// Pointwise wedge of two fields.
pub fn wedge_fields(a: &FormField, b: &FormField) -> Result<FormField> {
    let (p, q) = (a.degree(), b.degree());
    if p + q > 6 {
        return Err(Error::DegreeOverflow { p, q });
    }
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let tab = &TABLES.wedge[p][q];
    let mut out = FormField::zeros(a.grid(), p + q);
    let (nca, ncb, nco) = (NCOMP[p], NCOMP[q], NCOMP[p + q]);
    let (da, db) = (a.data(), b.data());
    par::chunks_mut(out.data_mut(), par::CHUNK_POINTS * nco, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(nco).enumerate() {
            let pt = base + off;
            let ca = &da[pt * nca..(pt + 1) * nca];
            let cb = &db[pt * ncb..(pt + 1) * ncb];
            for e in tab {
                dst[e.out as usize] += e.sign * ca[e.a as usize] * cb[e.b as usize];
            }
        }
    });
    Ok(out)
}

/// Linear combination out = sum c_i f_i (all same degree and grid).
pub fn lin_comb(terms: &[(f64, &FormField)]) -> FormField {
    assert!(!terms.is_empty());
    let mut out = FormField::zeros(terms[0].1.grid(), terms[0].1.degree());
    for (c, f) in terms {
        out.axpy(*c, f);
    }
    out
}

/// Gradients of a raw multi-component field: returns per-point blocks
/// [axis][comp] (6 * ncomp per point).
pub fn gradients_raw(grid: Grid, ncomp: usize, data: &[f64]) -> Vec<f64> {
    let npts = grid.npts();
    let mut spec = vec![Cx::ZERO; npts * ncomp];
    par::chunks_mut(&mut spec, 1 << 14, |ci, chunk| {
        let base = ci * (1 << 14);
        for (i, x) in chunk.iter_mut().enumerate() {
            x.re = data[base + i];
        }
    });
    let dims = grid.dims();
    fft::forward(&mut spec, &dims, ncomp);
    let strides = mode_strides(&dims);
    let kw: [Vec<f64>; 6] =
        std::array::from_fn(|a| fft::axis_deriv_wavenumbers(dims[a], grid.length()));
    let mut out = vec![0.0; npts * 6 * ncomp];
    let mut work = vec![Cx::ZERO; npts * ncomp];
    for axis in 0..6 {
        if dims[axis] == 1 {
            continue;
        }
        par::chunks_mut(&mut work, par::CHUNK_POINTS * ncomp, |ci, slab| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in slab.chunks_mut(ncomp).enumerate() {
                let m = base + off;
                let sl = (m / strides[axis]) % dims[axis];
                let kap = kw[axis][sl];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d = spec[m * ncomp + c].mul_ik(kap);
                }
            }
        });
        fft::inverse(&mut work, &dims, ncomp);
        let wk = &work;
        par::chunks_mut(&mut out, par::CHUNK_POINTS * 6 * ncomp, |ci, slab| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in slab.chunks_mut(6 * ncomp).enumerate() {
                let pt = base + off;
                for c in 0..ncomp {
                    dst[axis * ncomp + c] = wk[pt * ncomp + c].re;
                }
            }
        });
    }
    out
}

/// Forward transform of a raw multi-component buffer.
pub fn raw_forward(grid: Grid, ncomp: usize, data: &[f64]) -> Vec<Cx> {
    let mut spec = vec![Cx::ZERO; data.len()];
    par::chunks_mut(&mut spec, 1 << 14, |ci, chunk| {
        let base = ci * (1 << 14);
        for (i, x) in chunk.iter_mut().enumerate() {
            x.re = data[base + i];
        }
    });
    fft::forward(&mut spec, &grid.dims(), ncomp);
    spec
}

/// Inverse transform of a raw spectral buffer, dropping the imaginary part.
pub fn raw_inverse(grid: Grid, ncomp: usize, mut spec: Vec<Cx>) -> Vec<f64> {
    fft::inverse(&mut spec, &grid.dims(), ncomp);
    let mut out = vec![0.0; spec.len()];
    par::chunks_mut(&mut out, 1 << 14, |ci, chunk| {
        let base = ci * (1 << 14);
        for (i, x) in chunk.iter_mut().enumerate() {
            *x = spec[base + i].re;
        }
    });
    out
}

/// Divergence of a symmetric-2-tensor field: out_q = sum_p d_p m_{pq}.
/// Input is 21 packed components per point; output 6 per point.
pub fn sym_divergence(grid: Grid, data21: &[f64]) -> Vec<f64> {
    use super::sym_idx;
    let spec = raw_forward(grid, super::SYM_COMPS, data21);
    let dims = grid.dims();
    let strides = mode_strides(&dims);
    let kw: [Vec<f64>; 6] =
        std::array::from_fn(|a| fft::axis_deriv_wavenumbers(dims[a], grid.length()));
    let mut out = vec![Cx::ZERO; grid.npts() * 6];
    par::chunks_mut(&mut out, par::CHUNK_POINTS * 6, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(6).enumerate() {
            let m = base + off;
            let mut rem = m;
            let mut kappa = [0.0; 6];
            for a in 0..6 {
                let sl = rem / strides[a];
                rem %= strides[a];
                kappa[a] = kw[a][sl];
            }
            let inp = &spec[m * super::SYM_COMPS..(m + 1) * super::SYM_COMPS];
            for (q, d) in dst.iter_mut().enumerate() {
                let mut acc = Cx::ZERO;
                for p in 0..6 {
                    acc = acc.add(inp[sym_idx(p, q)].mul_ik(kappa[p]));
                }
                *d = acc;
            }
        }
    });
    raw_inverse(grid, 6, out)
}

/// Max pointwise entry of the componentwise Laplacian of a packed symmetric
/// field; the curvature proxy for the monitors.
pub fn sym_laplacian_max(grid: Grid, data21: &[f64]) -> f64 {
    let spec = raw_forward(grid, super::SYM_COMPS, data21);
    let dims = grid.dims();
    let strides = mode_strides(&dims);
    let kw: [Vec<f64>; 6] =
        std::array::from_fn(|a| fft::axis_wavenumbers(dims[a], grid.length()));
    let mut out = vec![Cx::ZERO; spec.len()];
    let nc = super::SYM_COMPS;
    par::chunks_mut(&mut out, par::CHUNK_POINTS * nc, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(nc).enumerate() {
            let m = base + off;
            let mut rem = m;
            let mut k2 = 0.0;
            for a in 0..6 {
                let sl = rem / strides[a];
                rem %= strides[a];
                k2 += kw[a][sl] * kw[a][sl];
            }
            for (d, s) in dst.iter_mut().zip(&spec[m * nc..(m + 1) * nc]) {
                *d = s.scale(k2);
            }
        }
    });
    let phys = raw_inverse(grid, nc, out);
    par::max_chunked(phys.len(), 1 << 14, |r| {
        phys[r].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    })
}

/// Spectral zero-padding interpolation onto a finer grid with per-axis
/// refinement factors (powers of two).
pub fn upsample(f: &FormField, factors: [usize; 6]) -> Result<FormField> {
    assert!(factors.iter().all(|f| f.is_power_of_two()));
    if factors.iter().all(|&f| f == 1) {
        return Ok(f.clone());
    }
    let dims = f.grid().dims();
    let new_dims: [usize; 6] = std::array::from_fn(|a| {
        if dims[a] == 1 {
            1
        } else {
            dims[a] * factors[a]
        }
    });
    let new_grid = Grid::with_cap(new_dims, f.grid().length(), usize::MAX)?;
    let spec = f.spectral();
    let nc = spec.ncomp;
    // Slot maps: old slot -> weighted new slots with the same mode.  An old
    // Nyquist coefficient splits evenly between +n/2 and -n/2 on the finer
    // grid to keep the interpolant real.
    let slot_map: [Vec<Vec<(usize, f64)>>; 6] = std::array::from_fn(|a| {
        let n = dims[a];
        let old_modes = fft::axis_modes(n);
        let new_modes = fft::axis_modes(new_dims[a]);
        let lookup: std::collections::HashMap<i64, usize> = new_modes
            .iter()
            .enumerate()
            .map(|(s, &m)| (m, s))
            .collect();
        old_modes
            .iter()
            .map(|&m| {
                if n > 1 && new_dims[a] > n && m == (n / 2) as i64 {
                    vec![(lookup[&m], 0.5), (lookup[&(-m)], 0.5)]
                } else {
                    vec![(lookup[&m], 1.0)]
                }
            })
            .collect()
    });
    let old_strides = mode_strides(&dims);
    let new_strides = mode_strides(&new_dims);
    let ratio = new_grid.npts() as f64 / f.npts() as f64;
    let mut new_spec = SpectralField::zeros(new_grid, f.degree());
    for m in 0..f.npts() {
        let mut rem = m;
        let mut targets: Vec<(usize, f64)> = vec![(0, ratio)];
        for a in 0..6 {
            let sl = rem / old_strides[a];
            rem %= old_strides[a];
            let mut next = Vec::with_capacity(targets.len() * slot_map[a][sl].len());
            for &(nm, w) in &targets {
                for &(ns, nw) in &slot_map[a][sl] {
                    next.push((nm + ns * new_strides[a], w * nw));
                }
            }
            targets = next;
        }
        for (nm, w) in targets {
            for c in 0..nc {
                new_spec.data[nm * nc + c] = spec.data[m * nc + c].scale(w);
            }
        }
    }
    Ok(new_spec.into_real())
}

/// Test helper: a band-limited pseudo-random field with modes up to
/// `max_mode` along every non-trivial axis.
pub fn random_band_limited(grid: Grid, degree: usize, max_mode: usize, seed: u64) -> FormField {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dims = grid.dims();
    let nc = NCOMP[degree];
    // (comp, axis, mode, amp_cos, amp_sin) over a handful of draws
    let mut waves: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for c in 0..nc {
        for a in 0..6 {
            if dims[a] < 4 {
                continue;
            }
            let kmax = max_mode.min(dims[a] / 3).max(1);
            let k = rng.gen_range(1..=kmax) as f64;
            waves.push((c, a, k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let scale = 2.0 * std::f64::consts::PI / grid.length();
    FormField::from_fn(grid, degree, move |x| {
        let mut v = AltTensor::zero(degree);
        for &(c, a, k, ac, as_) in &waves {
            let ph = scale * k * x[a];
            v.components_mut()[c] += ac * ph.cos() + as_ * ph.sin();
        }
        v
    })
}
