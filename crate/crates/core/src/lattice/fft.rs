//! Batched multi-axis FFT for periodic fields.
//!
//! Fields are stored point-major with components interleaved; a transform
//! along one axis is a radix-2 Cooley-Tukey pass whose butterflies act on
//! whole contiguous rows (all inner points and components at once), so every
//! memory access is a unit-stride stream.  The forward pass is
//! decimation-in-frequency and leaves each axis in bit-reversed slot order;
//! the inverse pass is decimation-in-time and consumes exactly that order, so
//! no reversal permutations are ever needed.  Spectral operators look
//! wavenumbers up through the slot maps in [`axis_wavenumbers`].

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::par;

/// Minimal complex scalar for the transform kernels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

#[allow(clippy::should_implement_trait)] // plain methods keep the kernels monomorphic
impl Cx {
    pub const ZERO: Cx = Cx { re: 0.0, im: 0.0 };

    #[inline]
    pub fn new(re: f64, im: f64) -> Cx {
        Cx { re, im }
    }

    #[inline]
    pub fn conj(self) -> Cx {
        Cx::new(self.re, -self.im)
    }

    #[inline]
    pub fn mul(self, o: Cx) -> Cx {
        Cx::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    #[inline]
    pub fn scale(self, s: f64) -> Cx {
        Cx::new(self.re * s, self.im * s)
    }

    #[inline]
    pub fn add(self, o: Cx) -> Cx {
        Cx::new(self.re + o.re, self.im + o.im)
    }

    #[inline]
    pub fn sub(self, o: Cx) -> Cx {
        Cx::new(self.re - o.re, self.im - o.im)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    /// i * kappa * self, the spectral derivative multiplier.
    #[inline]
    pub fn mul_ik(self, kappa: f64) -> Cx {
        Cx::new(-kappa * self.im, kappa * self.re)
    }
}

/// Twiddle factors exp(-2 pi i m / n), m = 0..n/2, cached per axis length.
static TWIDDLES: Lazy<Mutex<HashMap<usize, Arc<Vec<Cx>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn twiddles(n: usize) -> Arc<Vec<Cx>> {
    let mut map = TWIDDLES.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let half = (n / 2).max(1);
            Arc::new(
                (0..half)
                    .map(|m| {
                        let ang = -2.0 * std::f64::consts::PI * m as f64 / n as f64;
                        Cx::new(ang.cos(), ang.sin())
                    })
                    .collect(),
            )
        })
        .clone()
}

#[inline]
fn butterfly_trivial(a: &mut [Cx], b: &mut [Cx]) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let ur = x.re;
        let ui = x.im;
        let vr = y.re;
        let vi = y.im;
        x.re = ur + vr;
        x.im = ui + vi;
        y.re = ur - vr;
        y.im = ui - vi;
    }
}

#[inline]
fn butterfly_dif(a: &mut [Cx], b: &mut [Cx], w: Cx) {
    let (wr, wi) = (w.re, w.im);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let ur = x.re;
        let ui = x.im;
        let vr = y.re;
        let vi = y.im;
        x.re = ur + vr;
        x.im = ui + vi;
        let tr = ur - vr;
        let ti = ui - vi;
        y.re = tr * wr - ti * wi;
        y.im = tr * wi + ti * wr;
    }
}

#[inline]
fn butterfly_dit(a: &mut [Cx], b: &mut [Cx], w: Cx) {
    let (wr, wi) = (w.re, w.im);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let tr = y.re * wr - y.im * wi;
        let ti = y.re * wi + y.im * wr;
        let ur = x.re;
        let ui = x.im;
        x.re = ur + tr;
        x.im = ui + ti;
        y.re = ur - tr;
        y.im = ui - ti;
    }
}

/// All radix-2 stages of one transform group, restricted to the column
/// stripe [c0, c1) of each row.  Keeping the stripe cache-resident makes the
/// whole axis cost one memory sweep instead of log2(n).
fn stages_on_stripe(
    block: &mut [Cx],
    n: usize,
    rowlen: usize,
    c0: usize,
    c1: usize,
    tw: &[Cx],
    inverse: bool,
) {
    if !inverse {
        let mut len = n;
        while len > 1 {
            let half = len / 2;
            let tstride = n / len;
            let mut b = 0;
            while b < n {
                for j in 0..half {
                    let (lo, hi) = block.split_at_mut((b + j + half) * rowlen);
                    let a = &mut lo[(b + j) * rowlen + c0..(b + j) * rowlen + c1];
                    let bb = &mut hi[c0..c1];
                    if j == 0 {
                        butterfly_trivial(a, bb);
                    } else {
                        butterfly_dif(a, bb, tw[j * tstride]);
                    }
                }
                b += len;
            }
            len /= 2;
        }
    } else {
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let tstride = n / len;
            let mut b = 0;
            while b < n {
                for j in 0..half {
                    let (lo, hi) = block.split_at_mut((b + j + half) * rowlen);
                    let a = &mut lo[(b + j) * rowlen + c0..(b + j) * rowlen + c1];
                    let bb = &mut hi[c0..c1];
                    if j == 0 {
                        butterfly_trivial(a, bb);
                    } else {
                        butterfly_dit(a, bb, tw[j * tstride].conj());
                    }
                }
                b += len;
            }
            len *= 2;
        }
    }
}

/// Column-stripe width in scalars; n rows of a stripe stay L2-resident.
const STRIPE: usize = 4096;

/// Transforms every line along `axis` of a point-major field with `ncomp`
/// interleaved components.  Forward leaves bit-reversed slot order along the
/// axis; inverse consumes it and does not rescale (callers divide by the
/// total point count once after all axes).
pub fn transform_axis(
    data: &mut [Cx],
    dims: &[usize; 6],
    ncomp: usize,
    axis: usize,
    inverse: bool,
) {
    let n = dims[axis];
    if n == 1 {
        return;
    }
    debug_assert!(n.is_power_of_two());
    let inner: usize = dims[axis + 1..].iter().product();
    let rowlen = inner * ncomp;
    let tw = twiddles(n);
    par::chunks_mut(data, n * rowlen, |_, block| {
        let mut c0 = 0;
        while c0 < rowlen {
            let c1 = (c0 + STRIPE).min(rowlen);
            stages_on_stripe(block, n, rowlen, c0, c1, &tw, inverse);
            c0 = c1;
        }
    });
}

/// Full forward transform over all axes (unnormalized).
pub fn forward(data: &mut [Cx], dims: &[usize; 6], ncomp: usize) {
    for axis in 0..6 {
        transform_axis(data, dims, ncomp, axis, false);
    }
}

/// Full inverse transform over all axes, scaled by 1/npts.
pub fn inverse(data: &mut [Cx], dims: &[usize; 6], ncomp: usize) {
    for axis in 0..6 {
        transform_axis(data, dims, ncomp, axis, true);
    }
    let scale = 1.0 / dims.iter().product::<usize>() as f64;
    par::chunks_mut(data, 1 << 14, |_, chunk| {
        for x in chunk {
            *x = x.scale(scale);
        }
    });
}

fn bit_reverse(v: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        v.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Signed integer wavenumber held by each slot along an axis, in the
/// bit-reversed order produced by [`forward`].  The Nyquist slot reports
/// +n/2.
pub fn axis_modes(n: usize) -> Vec<i64> {
    let bits = n.trailing_zeros();
    (0..n)
        .map(|s| {
            let k = bit_reverse(s, bits);
            if k <= n / 2 {
                k as i64
            } else {
                k as i64 - n as i64
            }
        })
        .collect()
}

/// Physical wavenumbers 2 pi k / L per slot.
pub fn axis_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let scale = 2.0 * std::f64::consts::PI / length;
    axis_modes(n).into_iter().map(|k| k as f64 * scale).collect()
}

/// Derivative multipliers: like [`axis_wavenumbers`] but with the Nyquist
/// slot zeroed, since the odd symbol has no real representative there.
pub fn axis_deriv_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let scale = 2.0 * std::f64::consts::PI / length;
    axis_modes(n)
        .into_iter()
        .map(|k| {
            if n > 1 && k == (n / 2) as i64 {
                0.0
            } else {
                k as f64 * scale
            }
        })
        .collect()
}
