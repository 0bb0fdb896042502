//! Discrete exterior calculus and Hodge theory for smooth periodic form
//! fields on the flat torus, via spectral differentiation against the
//! constant reference metric.

pub mod calculus;
pub mod fft;
pub mod geometry;
pub mod io;

use once_cell::sync::OnceCell;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms6::tables::NCOMP;
use crate::forms6::AltTensor;
use crate::par;
use fft::Cx;

/// Default cap on total grid points (fields at the cap are ~0.7 GB each).
pub const DEFAULT_MAX_POINTS: usize = 1 << 22;

/// A periodic grid on `T^6` with a power-of-two point count per axis and a
/// common period per axis.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    dims: [usize; 6],
    length: f64,
}

impl Grid {
    /// Isotropic grid, `n >= 4` points per axis.
    pub fn isotropic(n: usize, length: f64) -> Result<Grid> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::BadGridAxis { n });
        }
        Self::anisotropic([n; 6], length)
    }

    /// Per-axis point counts; every axis a power of two, the largest at
    /// least 4.  Axes with a single point carry constant data.
    pub fn anisotropic(dims: [usize; 6], length: f64) -> Result<Grid> {
        Self::with_cap(dims, length, DEFAULT_MAX_POINTS)
    }

    pub fn with_cap(dims: [usize; 6], length: f64, cap: usize) -> Result<Grid> {
        for &n in &dims {
            if n == 0 || !n.is_power_of_two() {
                return Err(Error::BadGridAxis { n });
            }
        }
        if dims.iter().copied().max().unwrap() < 4 {
            return Err(Error::BadGridAxis {
                n: dims.iter().copied().max().unwrap(),
            });
        }
        let points: usize = dims.iter().product();
        if points > cap {
            return Err(Error::GridTooLarge { points, cap });
        }
        assert!(length > 0.0);
        Ok(Grid { dims, length })
    }

    pub fn dims(&self) -> [usize; 6] {
        self.dims
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn npts(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(6)
    }

    /// Point strides, axis 5 fastest.
    pub fn strides(&self) -> [usize; 6] {
        let mut s = [1usize; 6];
        for a in (0..5).rev() {
            s[a] = s[a + 1] * self.dims[a + 1];
        }
        s
    }

    /// Coordinates of a grid point by linear index.
    pub fn coords(&self, mut pt: usize) -> [f64; 6] {
        let strides = self.strides();
        let mut x = [0.0; 6];
        for a in 0..6 {
            let i = pt / strides[a];
            pt %= strides[a];
            x[a] = self.length * i as f64 / self.dims[a] as f64;
        }
        x
    }

    /// Grid spacing along each axis.
    pub fn spacing(&self) -> [f64; 6] {
        std::array::from_fn(|a| self.length / self.dims[a] as f64)
    }

    /// Largest |kappa|^2 retained by the 2/3 dealiasing rule.
    pub fn lambda_max_kept(&self) -> f64 {
        let s = 2.0 * std::f64::consts::PI / self.length;
        self.dims
            .iter()
            .map(|&n| {
                let kmax = (n / 3) as f64;
                (s * kmax).powi(2)
            })
            .sum()
    }

    /// Smallest positive Hodge-Laplacian eigenvalue on this grid.
    pub fn lambda_min(&self) -> f64 {
        let s = 2.0 * std::f64::consts::PI / self.length;
        self.dims
            .iter()
            .filter(|&&n| n > 1)
            .map(|_| s * s)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A k-form sampled on the grid, point-major with interleaved components.
#[derive(Clone, Debug)]
pub struct FormField {
    grid: Grid,
    degree: u8,
    data: Vec<f64>,
    spectral: OnceCell<Arc<SpectralField>>,
}

/// Fourier coefficients of a field, in the bit-reversed slot order of
/// [`fft::forward`] (unnormalized: divide by the point count for amplitudes).
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub grid: Grid,
    pub degree: u8,
    pub ncomp: usize,
    pub data: Vec<Cx>,
}

impl FormField {
    pub fn zeros(grid: Grid, degree: usize) -> FormField {
        FormField {
            grid,
            degree: degree as u8,
            data: vec![0.0; grid.npts() * NCOMP[degree]],
            spectral: OnceCell::new(),
        }
    }

    pub fn constant(grid: Grid, value: &AltTensor) -> FormField {
        let mut f = Self::zeros(grid, value.degree());
        let nc = value.len();
        for pt in 0..grid.npts() {
            f.data[pt * nc..(pt + 1) * nc].copy_from_slice(value.components());
        }
        f
    }

    pub fn from_fn(grid: Grid, degree: usize, f: impl Fn(&[f64; 6]) -> AltTensor + Sync) -> FormField {
        let mut out = Self::zeros(grid, degree);
        let nc = NCOMP[degree];
        par::chunks_mut(&mut out.data, par::CHUNK_POINTS * nc, |ci, chunk| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in chunk.chunks_mut(nc).enumerate() {
                let x = grid.coords(base + off);
                let v = f(&x);
                debug_assert_eq!(v.degree(), degree);
                dst.copy_from_slice(v.components());
            }
        });
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn ncomp(&self) -> usize {
        NCOMP[self.degree as usize]
    }

    pub fn npts(&self) -> usize {
        self.grid.npts()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access; invalidates the spectral cache.
    pub fn data_mut(&mut self) -> &mut [f64] {
        self.spectral = OnceCell::new();
        &mut self.data
    }

    pub fn point_comps(&self, pt: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[pt * nc..(pt + 1) * nc]
    }

    pub fn at(&self, pt: usize) -> AltTensor {
        AltTensor::from_components(self.degree(), self.point_comps(pt))
    }

    /// out = self + a * other, in one pass.
    pub fn fused_add(&self, a: f64, other: &FormField) -> FormField {
        assert_eq!(self.degree, other.degree);
        assert_eq!(self.grid, other.grid);
        let mut out = FormField {
            grid: self.grid,
            degree: self.degree,
            data: vec![0.0; self.data.len()],
            spectral: OnceCell::new(),
        };
        let (da, db) = (&self.data, &other.data);
        par::chunks_mut(&mut out.data, 1 << 14, |ci, chunk| {
            let base = ci * (1 << 14);
            for (i, x) in chunk.iter_mut().enumerate() {
                *x = da[base + i] + a * db[base + i];
            }
        });
        out
    }

    /// self += a * other
    pub fn axpy(&mut self, a: f64, other: &FormField) {
        assert_eq!(self.degree, other.degree);
        assert_eq!(self.grid, other.grid);
        let rhs = &other.data;
        self.spectral = OnceCell::new();
        par::chunks_mut(&mut self.data, 1 << 14, |ci, chunk| {
            let base = ci * (1 << 14);
            for (i, x) in chunk.iter_mut().enumerate() {
                *x += a * rhs[base + i];
            }
        });
    }

    pub fn scale(&mut self, s: f64) {
        self.spectral = OnceCell::new();
        par::chunks_mut(&mut self.data, 1 << 14, |_, chunk| {
            for x in chunk {
                *x *= s;
            }
        });
    }

    pub fn max_abs(&self) -> f64 {
        par::max_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
    }

    /// L^2 norm: sqrt(int sum_I f_I^2) with the 1/k! component normalization.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.volume() / self.npts() as f64;
        let s = par::sum_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().map(|x| x * x).sum()
        });
        (w * s).sqrt()
    }

    /// Mean over the grid: the constant-coefficient harmonic part.
    pub fn mean(&self) -> AltTensor {
        let nc = self.ncomp();
        let mut out = AltTensor::zero(self.degree());
        for c in 0..nc {
            let s = par::sum_chunked(self.npts(), 1 << 14, |r| {
                r.map(|pt| self.data[pt * nc + c]).sum()
            });
            out.components_mut()[c] = s / self.npts() as f64;
        }
        out
    }

    /// Cached forward transform.
    pub fn spectral(&self) -> Arc<SpectralField> {
        self.spectral
            .get_or_init(|| {
                let nc = self.ncomp();
                let mut data = vec![Cx::ZERO; self.data.len()];
                par::chunks_mut(&mut data, 1 << 14, |ci, chunk| {
                    let base = ci * (1 << 14);
                    for (i, x) in chunk.iter_mut().enumerate() {
                        x.re = self.data[base + i];
                    }
                });
                fft::forward(&mut data, &self.grid.dims(), nc);
                Arc::new(SpectralField {
                    grid: self.grid,
                    degree: self.degree,
                    ncomp: nc,
                    data,
                })
            })
            .clone()
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid, degree: usize) -> SpectralField {
        SpectralField {
            grid,
            degree: degree as u8,
            ncomp: NCOMP[degree],
            data: vec![Cx::ZERO; grid.npts() * NCOMP[degree]],
        }
    }

    /// Inverse transform.  The imaginary residue of a real-derived spectrum
    /// is roundoff; it is measured, warned about past the drift threshold,
    /// and dropped.
    pub fn into_real(mut self) -> FormField {
        fft::inverse(&mut self.data, &self.grid.dims(), self.ncomp);
        let mut out = FormField::zeros(self.grid, self.degree as usize);
        let data = &self.data;
        let mut max_im = 0.0f64;
        let imag = par::max_chunked(data.len(), 1 << 14, |r| {
            data[r].iter().fold(0.0f64, |m, x| m.max(x.im.abs()))
        });
        max_im = max_im.max(imag);
        par::chunks_mut(&mut out.data, 1 << 14, |ci, chunk| {
            let base = ci * (1 << 14);
            for (i, x) in chunk.iter_mut().enumerate() {
                *x = data[base + i].re;
            }
        });
        let scale = out.max_abs().max(1.0);
        if max_im > 1e-13 * scale {
            log::warn!(
                "imaginary drift {max_im:.3e} above threshold after inverse transform"
            );
        }
        out
    }

    /// Per-axis wavenumber tables for this grid (slot order).
    pub fn wavenumbers(&self) -> [Vec<f64>; 6] {
        std::array::from_fn(|a| fft::axis_wavenumbers(self.grid.dims()[a], self.grid.length()))
    }

    pub fn deriv_wavenumbers(&self) -> [Vec<f64>; 6] {
        std::array::from_fn(|a| {
            fft::axis_deriv_wavenumbers(self.grid.dims()[a], self.grid.length())
        })
    }
}

/// Constant-coefficient harmonic part of a field.
#[derive(Clone, Copy, Debug)]
pub struct CohomologyVector {
    pub degree: u8,
    pub constants: AltTensor,
}

impl CohomologyVector {
    pub fn new(constants: AltTensor) -> Self {
        CohomologyVector {
            degree: constants.degree() as u8,
            constants,
        }
    }

    pub fn as_field(&self, grid: Grid) -> FormField {
        FormField::constant(grid, &self.constants)
    }

    pub fn max_abs(&self) -> f64 {
        self.constants.max_abs()
    }
}

/// Symmetric (i <= j) index packing for metric-like fields.
#[inline]
pub fn sym_idx(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * 6 + j - i * (i + 1) / 2
}

pub const SYM_COMPS: usize = 21;

/// A symmetric 2-tensor field (21 components per point).
#[derive(Clone, Debug)]
pub struct MetricField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl MetricField {
    pub fn zeros(grid: Grid) -> Self {
        MetricField {
            grid,
            data: vec![0.0; grid.npts() * SYM_COMPS],
        }
    }

    pub fn constant(grid: Grid, m: &crate::forms6::Metric6) -> Self {
        let mut f = Self::zeros(grid);
        for pt in 0..grid.npts() {
            for i in 0..6 {
                for j in i..6 {
                    f.data[pt * SYM_COMPS + sym_idx(i, j)] = m.entries[i][j];
                }
            }
        }
        f
    }

    pub fn at(&self, pt: usize) -> [[f64; 6]; 6] {
        let base = pt * SYM_COMPS;
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
}

/// An almost-complex-structure field (full 36 entries per point).
#[derive(Clone, Debug)]
pub struct AcField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl AcField {
    pub fn zeros(grid: Grid) -> Self {
        AcField {
            grid,
            data: vec![0.0; grid.npts() * 36],
        }
    }

    pub fn at(&self, pt: usize) -> [[f64; 6]; 6] {
        let base = pt * 36;
        let mut m = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] = self.data[base + i * 6 + j];
            }
        }
        m
    }

    pub fn set(&mut self, pt: usize, m: &[[f64; 6]; 6]) {
        let base = pt * 36;
        for i in 0..6 {
            for j in 0..6 {
                self.data[base + i * 6 + j] = m[i][j];
            }
        }
    }
}

/// A vector field (6 components per point).
#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            data: vec![0.0; grid.npts() * 6],
        }
    }

    pub fn at(&self, pt: usize) -> [f64; 6] {
        let mut v = [0.0; 6];
        v.copy_from_slice(&self.data[pt * 6..pt * 6 + 6]);
        v
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.volume() / self.grid.npts() as f64;
        let s = par::sum_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().map(|x| x * x).sum()
        });
        (w * s).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        par::max_chunked(self.data.len(), 1 << 14, |r| {
            self.data[r].iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
    }
}
