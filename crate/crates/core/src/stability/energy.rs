//! Corrected-difference energies along a trajectory and the exponential
//! decay fit.

use super::correction::CorrectedPair;
use crate::flow::Trajectory;
use crate::lattice::FormField;
use crate::par;

/// Energy time series I_k(t) = int |grad^k alpha|^2 + |grad^k beta|^2 with
/// alpha = omega(t) - omega_tilde, beta = phi(t) - phi_tilde, and the
/// log-linear decay fit of I_0.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// i_k[k][sample]
    pub i_k: Vec<Vec<f64>>,
    pub fitted_delta: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
    /// Largest harmonic-part component of any corrected difference, over the
    /// whole trajectory (conservation diagnostic).
    pub max_harmonic: f64,
}

fn spectral_moments(f: &FormField, k_max: usize, out: &mut [f64]) {
    let spec = f.spectral();
    let grid = f.grid();
    let dims = grid.dims();
    let mut strides = [1usize; 6];
    for a in (0..5).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let kw = spec.wavenumbers();
    let nc = spec.ncomp;
    let npts = grid.npts() as f64;
    let weight = grid.volume() / (npts * npts);
    for (k, o) in out.iter_mut().enumerate().take(k_max + 1) {
        let acc = par::sum_chunked(grid.npts(), par::CHUNK_POINTS, |r| {
            let mut s = 0.0;
            for m in r {
                let mut rem = m;
                let mut k2 = 0.0;
                for a in 0..6 {
                    let sl = rem / strides[a];
                    rem %= strides[a];
                    k2 += kw[a][sl] * kw[a][sl];
                }
                let e: f64 = (0..nc).map(|c| spec.data[m * nc + c].norm_sq()).sum();
                s += k2.powi(k as i32) * e;
            }
            s
        });
        *o += weight * acc;
    }
}

/// Computes the energies of a (reparametrized) trajectory against the
/// corrected pair, and fits the I_0 decay rate on the window that discards
/// the first 20% of samples and uses the next 60%.
pub fn energies(traj: &Trajectory, corrected: &CorrectedPair, k_max: usize) -> EnergyReport {
    assert!(k_max <= 10);
    let mut times = Vec::with_capacity(traj.samples.len());
    let mut i_k = vec![Vec::with_capacity(traj.samples.len()); k_max + 1];
    let mut max_harmonic = 0.0f64;
    for s in &traj.samples {
        let mut alpha = s.omega.clone();
        alpha.axpy(-1.0, &corrected.omega_tilde);
        let mut beta = s.phi.clone();
        beta.axpy(-1.0, &corrected.phi_tilde);
        max_harmonic = max_harmonic
            .max(alpha.mean().max_abs())
            .max(beta.mean().max_abs());
        let mut moments = vec![0.0; k_max + 1];
        spectral_moments(&alpha, k_max, &mut moments);
        spectral_moments(&beta, k_max, &mut moments);
        times.push(s.t);
        for (k, m) in moments.into_iter().enumerate() {
            i_k[k].push(m);
        }
    }
    let (fitted_delta, fit_window, r_squared) = fit_decay(&times, &i_k[0]);
    EnergyReport {
        times,
        i_k,
        fitted_delta,
        fit_window,
        r_squared,
        max_harmonic,
    }
}

/// Log-linear least squares of I(t) on the standard window; returns
/// (rate, window, r^2) with I ~ exp(-rate * t).
pub fn fit_decay(times: &[f64], series: &[f64]) -> (f64, (f64, f64), f64) {
    let n = times.len();
    if n < 4 {
        return (f64::NAN, (f64::NAN, f64::NAN), 0.0);
    }
    let lo = n / 5;
    let hi = (lo + (n * 3) / 5).min(n);
    let pts: Vec<(f64, f64)> = (lo..hi)
        .filter(|&i| series[i] > 0.0)
        .map(|i| (times[i], series[i].ln()))
        .collect();
    if pts.len() < 3 {
        return (f64::NAN, (times[lo], times[hi - 1]), 0.0);
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    let slope = (m * sxy - sx * sy) / denom;
    let icpt = (sy - slope * sx) / m;
    let mean = sy / m;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + icpt)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (-slope, (pts[0].0, pts[pts.len() - 1].0), r2)
}
