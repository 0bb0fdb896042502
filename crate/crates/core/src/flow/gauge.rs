//! Reconstruction of the ungauged flow from a reparametrized trajectory:
//! integrates the particle equation df/dt = -V(f) per grid point and pulls
//! the evolving forms back through the resulting diffeomorphisms.

use super::{Trajectory, TrajectorySample};
use crate::error::{Error, Result};
use crate::forms6::kernel::matrix_action_into;
use crate::lattice::calculus::{gradients_raw, upsample};
use crate::lattice::{FormField, Grid, VectorField};
use crate::par;

#[derive(Clone, Copy, Debug)]
pub struct GaugeOptions {
    /// Particle substeps per trajectory sample interval.
    pub substeps: usize,
    /// Spectral refinement factor for interpolation on well-resolved axes.
    pub upsample: usize,
    /// Point cap for the refined interpolation grids.
    pub max_interp_points: usize,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions {
            substeps: 4,
            upsample: 8,
            max_interp_points: 1 << 22,
        }
    }
}

/// Pulled-back fields at each trajectory sample.
#[derive(Debug)]
pub struct GaugeResult {
    pub times: Vec<f64>,
    pub pulled_phi: Vec<FormField>,
    pub pulled_omega: Vec<FormField>,
    /// Final map displacement u = f - id as a vector field.
    pub displacement: VectorField,
}

fn refine_factors(grid: Grid, opts: &GaugeOptions) -> [usize; 6] {
    let dims = grid.dims();
    let mut factors = [1usize; 6];
    let mut pts: usize = grid.npts();
    // refine the best-resolved axes first; they carry the dynamics
    loop {
        let mut changed = false;
        for a in 0..6 {
            if dims[a] >= 8
                && factors[a] < opts.upsample
                && pts * 2 <= opts.max_interp_points
            {
                factors[a] *= 2;
                pts *= 2;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    factors
}

/// Multilinear interpolation of all components of a field at one position.
pub(crate) fn interp(field: &FormField, pos: &[f64; 6], out: &mut [f64]) {
    let grid = field.grid();
    let dims = grid.dims();
    let strides = grid.strides();
    let length = grid.length();
    let nc = field.ncomp();
    let data = field.data();
    // per-axis corner indices and weights
    let mut i0 = [0usize; 6];
    let mut i1 = [0usize; 6];
    let mut w1 = [0.0f64; 6];
    for a in 0..6 {
        let n = dims[a];
        if n == 1 {
            continue;
        }
        let x = pos[a].rem_euclid(length) / (length / n as f64);
        let f = x.floor();
        i0[a] = (f as usize) % n;
        i1[a] = (i0[a] + 1) % n;
        w1[a] = x - f;
    }
    out.fill(0.0);
    let active: Vec<usize> = (0..6).filter(|&a| dims[a] > 1).collect();
    let corners = 1usize << active.len();
    for corner in 0..corners {
        let mut w = 1.0;
        let mut base = 0usize;
        for (bit, &a) in active.iter().enumerate() {
            if corner >> bit & 1 == 1 {
                w *= w1[a];
                base += i1[a] * strides[a];
            } else {
                w *= 1.0 - w1[a];
                base += i0[a] * strides[a];
            }
        }
        if w == 0.0 {
            continue;
        }
        let src = &data[base * nc..(base + 1) * nc];
        for (o, s) in out.iter_mut().zip(src) {
            *o += w * s;
        }
    }
}

pub(crate) fn upsample_vector(v: &VectorField, factors: [usize; 6]) -> Result<FormField> {
    // reuse the 1-form refinement path: a vector field has 6 components too
    let mut f = FormField::zeros(v.grid, 1);
    f.data_mut().copy_from_slice(&v.data);
    upsample(&f, factors)
}

/// The particle map at one instant: positions per grid point.
#[derive(Clone, Debug)]
pub struct GaugeMap {
    pub grid: Grid,
    pub pos: Vec<f64>,
}

impl GaugeMap {
    pub fn identity(grid: Grid) -> GaugeMap {
        let mut pos = vec![0.0f64; grid.npts() * 6];
        par::chunks_mut(&mut pos, par::CHUNK_POINTS * 6, |ci, slab| {
            let base = ci * par::CHUNK_POINTS;
            for (off, dst) in slab.chunks_mut(6).enumerate() {
                dst.copy_from_slice(&grid.coords(base + off));
            }
        });
        GaugeMap { grid, pos }
    }

    pub fn displacement(&self) -> VectorField {
        let mut v = VectorField::zeros(self.grid);
        v.data.copy_from_slice(&displacement(&self.pos, self.grid));
        v
    }
}

/// Online integrator for the particle map, fed the gauge vector field at
/// every accepted flow step.
pub(crate) struct OnlineGauge {
    map: GaugeMap,
    t_prev: f64,
    v_prev: FormField,
    factors: [usize; 6],
    min_h: f64,
    substeps: usize,
}

impl OnlineGauge {
    pub fn new(grid: Grid, t0: f64, v0: &VectorField, opts: &GaugeOptions) -> Result<OnlineGauge> {
        let factors = refine_factors(grid, opts);
        let min_h = grid
            .spacing()
            .iter()
            .zip(grid.dims())
            .filter(|(_, n)| *n > 1)
            .map(|(h, _)| *h)
            .fold(f64::INFINITY, f64::min);
        Ok(OnlineGauge {
            map: GaugeMap::identity(grid),
            t_prev: t0,
            v_prev: upsample_vector(v0, factors)?,
            factors,
            min_h,
            substeps: opts.substeps.max(1),
        })
    }

    /// Advances the particles from the previous instant to `t`, with V
    /// interpolated linearly in time between the stored and supplied fields.
    pub fn advance_to(&mut self, t: f64, v: &VectorField) -> Result<()> {
        let v_hi = upsample_vector(v, self.factors)?;
        let dt_total = t - self.t_prev;
        if dt_total > 0.0 {
            let dt = dt_total / self.substeps as f64;
            let vmax = v.max_abs().max(1.0e-300);
            if vmax * dt > 0.5 * self.min_h {
                return Err(Error::StepUnderflow { dt });
            }
            for sub in 0..self.substeps {
                let t0 = sub as f64 / self.substeps as f64;
                let v_lo = &self.v_prev;
                let v_hi_ref = &v_hi;
                let vel = |tau: f64, p: &[f64; 6], out: &mut [f64; 6]| {
                    let b = (t0 + tau / dt_total).clamp(0.0, 1.0);
                    let mut lo = [0.0; 6];
                    let mut hi = [0.0; 6];
                    interp(v_lo, p, &mut lo);
                    interp(v_hi_ref, p, &mut hi);
                    for k in 0..6 {
                        out[k] = -((1.0 - b) * lo[k] + b * hi[k]);
                    }
                };
                par::chunks_mut(&mut self.map.pos, par::CHUNK_POINTS * 6, |_, slab| {
                    for dst in slab.chunks_mut(6) {
                        let mut y = [0.0; 6];
                        y.copy_from_slice(dst);
                        let mut k1 = [0.0; 6];
                        vel(0.0, &y, &mut k1);
                        let y2 = step(&y, &k1, 0.5 * dt);
                        let mut k2 = [0.0; 6];
                        vel(0.5 * dt, &y2, &mut k2);
                        let y3 = step(&y, &k2, 0.5 * dt);
                        let mut k3 = [0.0; 6];
                        vel(0.5 * dt, &y3, &mut k3);
                        let y4 = step(&y, &k3, dt);
                        let mut k4 = [0.0; 6];
                        vel(dt, &y4, &mut k4);
                        for k in 0..6 {
                            dst[k] =
                                y[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
                        }
                    }
                });
            }
        }
        self.t_prev = t;
        self.v_prev = v_hi;
        Ok(())
    }

    pub fn into_map(self) -> GaugeMap {
        self.map
    }
}

/// Pulls a field back through the map: (f^* a)(x) = a(f(x)) contracted with
/// the Jacobian of f, interpolating on a spectrally refined grid.
pub fn pullback_by_map(map: &GaugeMap, field: &FormField, opts: &GaugeOptions) -> Result<FormField> {
    let grid = map.grid;
    let factors = refine_factors(grid, opts);
    let up = upsample(field, factors)?;
    let du = gradients_raw(grid, 6, &displacement(&map.pos, grid));
    let k = field.degree();
    let nc = field.ncomp();
    let mut out = FormField::zeros(grid, k);
    let pdata = &map.pos;
    par::chunks_mut(out.data_mut(), par::CHUNK_POINTS * nc, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        let mut buf = [0.0f64; 20];
        for (off, dst) in slab.chunks_mut(nc).enumerate() {
            let pt = base + off;
            let mut y = [0.0; 6];
            y.copy_from_slice(&pdata[pt * 6..pt * 6 + 6]);
            interp(&up, &y, &mut buf[..nc]);
            let a = jacobian(&du, pt);
            matrix_action_into(dst, &a, &buf[..nc], k);
        }
    });
    Ok(out)
}

/// Integrates the particle map along the trajectory and pulls back phi and
/// omega at every sample.
pub fn gauge_reconstruct(traj: &Trajectory, opts: &GaugeOptions) -> Result<GaugeResult> {
    let samples: &[TrajectorySample] = &traj.samples;
    assert!(samples.len() >= 2, "gauge reconstruction needs a stored trajectory");
    let grid = samples[0].phi.grid();
    let npts = grid.npts();
    let factors = refine_factors(grid, opts);
    let min_h = grid
        .spacing()
        .iter()
        .zip(grid.dims())
        .filter(|(_, n)| *n > 1)
        .map(|(h, _)| *h)
        .fold(f64::INFINITY, f64::min);

    // particle positions, initialized to the grid coordinates
    let mut pos = vec![0.0f64; npts * 6];
    par::chunks_mut(&mut pos, par::CHUNK_POINTS * 6, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(6).enumerate() {
            dst.copy_from_slice(&grid.coords(base + off));
        }
    });

    let mut times = Vec::with_capacity(samples.len());
    let mut pulled_phi = Vec::with_capacity(samples.len());
    let mut pulled_omega = Vec::with_capacity(samples.len());

    let mut v_lo = upsample_vector(&samples[0].v, factors)?;

    for (i, s) in samples.iter().enumerate() {
        // pull back at this sample time
        let phi_up = upsample(&s.phi, factors)?;
        let om_up = upsample(&s.omega, factors)?;
        let du = gradients_raw(grid, 6, &displacement(&pos, grid));
        let mut pphi = FormField::zeros(grid, 3);
        let mut pom = FormField::zeros(grid, 2);
        {
            let pdata = &pos;
            let dud = &du;
            let pphi_data = pphi.data_mut();
            par::chunks_mut(pphi_data, par::CHUNK_POINTS * 20, |ci, slab| {
                let base = ci * par::CHUNK_POINTS;
                let mut buf = [0.0f64; 20];
                for (off, dst) in slab.chunks_mut(20).enumerate() {
                    let pt = base + off;
                    let y: &[f64] = &pdata[pt * 6..pt * 6 + 6];
                    let mut ya = [0.0; 6];
                    ya.copy_from_slice(y);
                    interp(&phi_up, &ya, &mut buf);
                    let a = jacobian(dud, pt);
                    matrix_action_into(dst, &a, &buf, 3);
                }
            });
            let pom_data = pom.data_mut();
            par::chunks_mut(pom_data, par::CHUNK_POINTS * 15, |ci, slab| {
                let base = ci * par::CHUNK_POINTS;
                let mut buf = [0.0f64; 20];
                for (off, dst) in slab.chunks_mut(15).enumerate() {
                    let pt = base + off;
                    let y: &[f64] = &pdata[pt * 6..pt * 6 + 6];
                    let mut ya = [0.0; 6];
                    ya.copy_from_slice(y);
                    interp(&om_up, &ya, &mut buf[..15]);
                    let a = jacobian(dud, pt);
                    matrix_action_into(dst, &a, &buf[..15], 2);
                }
            });
        }
        times.push(s.t);
        pulled_phi.push(pphi);
        pulled_omega.push(pom);

        if i + 1 == samples.len() {
            break;
        }
        // advance particles to the next sample time
        let next = &samples[i + 1];
        let v_hi = upsample_vector(&next.v, factors)?;
        let dt_total = next.t - s.t;
        let dt = dt_total / opts.substeps as f64;
        let vmax = samples[i].v.max_abs().max(next.v.max_abs());
        if vmax * dt > 0.5 * min_h {
            return Err(Error::StepUnderflow { dt });
        }
        for sub in 0..opts.substeps {
            let t0 = sub as f64 / opts.substeps as f64;
            let vel = |tau: f64, p: &[f64; 6], out: &mut [f64; 6]| {
                // linear interpolation of V in time
                let frac = t0 + tau / dt_total.max(1e-300);
                let b = frac.clamp(0.0, 1.0);
                let mut lo = [0.0; 6];
                let mut hi = [0.0; 6];
                interp(&v_lo, p, &mut lo);
                interp(&v_hi, p, &mut hi);
                for k in 0..6 {
                    out[k] = -((1.0 - b) * lo[k] + b * hi[k]);
                }
            };
            par::chunks_mut(&mut pos, par::CHUNK_POINTS * 6, |_, slab| {
                for dst in slab.chunks_mut(6) {
                    let mut y = [0.0; 6];
                    y.copy_from_slice(dst);
                    let mut k1 = [0.0; 6];
                    vel(0.0, &y, &mut k1);
                    let y2 = step(&y, &k1, 0.5 * dt);
                    let mut k2 = [0.0; 6];
                    vel(0.5 * dt, &y2, &mut k2);
                    let y3 = step(&y, &k2, 0.5 * dt);
                    let mut k3 = [0.0; 6];
                    vel(0.5 * dt, &y3, &mut k3);
                    let y4 = step(&y, &k3, dt);
                    let mut k4 = [0.0; 6];
                    vel(dt, &y4, &mut k4);
                    for k in 0..6 {
                        dst[k] = y[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
                    }
                }
            });
        }
        v_lo = v_hi;
    }

    let mut displacement_v = VectorField::zeros(grid);
    let disp = displacement(&pos, grid);
    displacement_v.data.copy_from_slice(&disp);
    Ok(GaugeResult {
        times,
        pulled_phi,
        pulled_omega,
        displacement: displacement_v,
    })
}

fn step(y: &[f64; 6], k: &[f64; 6], dt: f64) -> [f64; 6] {
    std::array::from_fn(|i| y[i] + dt * k[i])
}

fn displacement(pos: &[f64], grid: Grid) -> Vec<f64> {
    let mut u = vec![0.0; pos.len()];
    par::chunks_mut(&mut u, par::CHUNK_POINTS * 6, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(6).enumerate() {
            let pt = base + off;
            let x = grid.coords(pt);
            for a in 0..6 {
                dst[a] = pos[pt * 6 + a] - x[a];
            }
        }
    });
    u
}

/// Jacobian A^a_i = d f^a / d x^i = delta + d_i u^a at a point, from the
/// spectral gradients of the displacement.
fn jacobian(du: &[f64], pt: usize) -> [[f64; 6]; 6] {
    let base = pt * 36;
    let mut a = [[0.0; 6]; 6];
    for i in 0..6 {
        for c in 0..6 {
            a[c][i] = du[base + i * 6 + c] + if c == i { 1.0 } else { 0.0 };
        }
    }
    a
}

/// Max relative L^2 discrepancy between pulled-back fields and a directly
/// integrated trajectory at matching sample times.
pub fn gauge_discrepancy(result: &GaugeResult, direct: &Trajectory) -> f64 {
    let mut worst = 0.0f64;
    for (i, t) in result.times.iter().enumerate() {
        let Some(d) = direct
            .samples
            .iter()
            .find(|s| (s.t - t).abs() < 1e-9 * (1.0 + t.abs()))
        else {
            continue;
        };
        let mut diff = result.pulled_phi[i].clone();
        diff.axpy(-1.0, &d.phi);
        let denom = d.phi.l2_norm().max(1e-300);
        worst = worst.max(diff.l2_norm() / denom);
    }
    worst
}
