//! The full experiment: perturbed symplectic form to converged structure.

use super::construct::build_compatible_phi;
use super::correction::harmonic_correction;
use super::energy::energies;
use crate::error::{Error, Result};
use crate::flow::gauge::{pullback_by_map, GaugeOptions};
use crate::flow::{advance, FlowConfig, Outcome, TypeIIAState};
use crate::forms6::kernel;
use crate::forms6::Metric6;
use crate::lattice::calculus::sobolev_norm;
use crate::lattice::geometry::nijenhuis;
use crate::lattice::{AcField, FormField};
use crate::par;

#[derive(Clone, Debug, serde::Serialize)]
pub struct StageStatus {
    pub stage: String,
    pub ok: bool,
    pub detail: String,
}

/// Verdict of an end-to-end stability run.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Verdict {
    pub stages: Vec<StageStatus>,
    pub converged: bool,
    pub final_rhs: f64,
    pub final_nijenhuis_sup: f64,
    pub final_nijenhuis_l2: f64,
    pub fitted_delta: f64,
    pub decay_r_squared: f64,
    pub gauge_discrepancy: f64,
    /// |phi - phibar|_{W^{2,2}} / |omega - omegabar|_{W^{2,2}} of the
    /// constructed form.
    pub measured_c: f64,
    pub perturbation_w22: f64,
    pub final_time: f64,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct EndToEndConfig {
    pub flow: FlowConfig,
    pub s_steps: usize,
    pub k_max: usize,
    pub gauge: GaugeOptions,
    /// Skip the direct-flow cross validation (for quick runs).
    pub cross_validate: bool,
}

impl Default for EndToEndConfig {
    fn default() -> Self {
        EndToEndConfig {
            flow: FlowConfig {
                t_max: 40.0,
                stop_tol: 5e-9,
                reparametrized: true,
                ..FlowConfig::default()
            },
            s_steps: 64,
            k_max: 2,
            gauge: GaugeOptions::default(),
            cross_validate: true,
        }
    }
}

/// The sup and L^2 norms of the Nijenhuis tensor of J_phi over the grid.
pub fn nijenhuis_of_state(phi: &FormField) -> Result<(f64, f64)> {
    let grid = phi.grid();
    let mut j = AcField::zeros(grid);
    let pdata = phi.data();
    let failed = std::sync::atomic::AtomicBool::new(false);
    par::chunks_mut(&mut j.data, par::CHUNK_POINTS * 36, |ci, slab| {
        let base = ci * par::CHUNK_POINTS;
        for (off, dst) in slab.chunks_mut(36).enumerate() {
            let pt = base + off;
            let k = kernel::hitchin_k(&pdata[pt * 20..(pt + 1) * 20]);
            let lambda = kernel::hitchin_lambda(&k);
            if lambda >= kernel::LAMBDA_NEG_TOL {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                continue;
            }
            let s = 1.0 / (-lambda).sqrt();
            for r in 0..6 {
                for c in 0..6 {
                    dst[r * 6 + c] = k[r][c] * s;
                }
            }
        }
    });
    if failed.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(Error::NotPositive { lambda: 0.0 });
    }
    let n = nijenhuis(&j);
    Ok((n.max_abs(), n.l2_norm()))
}

/// Runs construction, correction, the reparametrized flow to stationarity,
/// and gauge reconstruction; failures are reported per stage in the verdict
/// rather than panicking.
pub fn end_to_end_stability(omega: &FormField, config: &EndToEndConfig) -> Result<Verdict> {
    let grid = omega.grid();
    let mut verdict = Verdict {
        stages: Vec::new(),
        converged: false,
        final_rhs: f64::NAN,
        final_nijenhuis_sup: f64::NAN,
        final_nijenhuis_l2: f64::NAN,
        fitted_delta: f64::NAN,
        decay_r_squared: f64::NAN,
        gauge_discrepancy: f64::NAN,
        measured_c: f64::NAN,
        perturbation_w22: f64::NAN,
        final_time: f64::NAN,
        steps: 0,
    };
    let stage = |v: &mut Verdict, name: &str, ok: bool, detail: String| {
        v.stages.push(StageStatus {
            stage: name.into(),
            ok,
            detail,
        });
    };

    // background
    let flat = TypeIIAState::flat_standard(grid);
    let background = harmonic_correction(&flat.phi, &flat.omega).expect("flat background");

    // stage 1: construction
    let mut dom = omega.clone();
    dom.axpy(-1.0, &background.omega_tilde);
    verdict.perturbation_w22 = sobolev_norm(&dom, 2);
    let phi = match build_compatible_phi(omega, &background, config.s_steps) {
        Ok(phi) => {
            stage(&mut verdict, "build_compatible_phi", true, String::new());
            phi
        }
        Err(e) => {
            stage(&mut verdict, "build_compatible_phi", false, e.to_string());
            return Ok(verdict);
        }
    };
    let mut dphi = phi.clone();
    dphi.axpy(-1.0, &background.phi_tilde);
    verdict.measured_c = sobolev_norm(&dphi, 2) / verdict.perturbation_w22.max(1e-300);

    // stage 2: harmonic correction of the constructed pair
    let corrected = match harmonic_correction(&phi, omega) {
        Ok(c) => {
            stage(&mut verdict, "harmonic_correction", true, String::new());
            c
        }
        Err(e) => {
            stage(&mut verdict, "harmonic_correction", false, e.to_string());
            return Ok(verdict);
        }
    };

    // stage 3: reparametrized flow to stationarity
    let state = match TypeIIAState::new(phi, omega.clone(), Metric6::identity()) {
        Ok(s) => s,
        Err(e) => {
            stage(&mut verdict, "state_validation", false, e.to_string());
            return Ok(verdict);
        }
    };
    let flow_cfg = FlowConfig {
        track_gauge: config.cross_validate,
        ..config.flow
    };
    let run = match advance(state, &flow_cfg) {
        Ok(r) => r,
        Err(e) => {
            stage(&mut verdict, "flow", false, e.to_string());
            return Ok(verdict);
        }
    };
    verdict.final_time = run.state.time;
    verdict.steps = run.steps;
    verdict.final_rhs = run.monitor.rows.last().map(|r| r.rhs_l2).unwrap_or(f64::NAN);
    match &run.outcome {
        Outcome::Stationary => stage(&mut verdict, "flow", true, "stationary".into()),
        other => {
            stage(&mut verdict, "flow", false, format!("{other:?}"));
            return Ok(verdict);
        }
    }
    verdict.converged = true;

    // recompute the true final RHS norm
    if let Ok((e, f, _, _)) = crate::flow::rhs_reparametrized(&run.state.phi, &run.state.omega) {
        verdict.final_rhs = (e.l2_norm().powi(2) + f.l2_norm().powi(2)).sqrt();
    }

    // stage 4: decay fit
    let report = energies(&run.trajectory, &corrected, config.k_max);
    verdict.fitted_delta = report.fitted_delta;
    verdict.decay_r_squared = report.r_squared;
    stage(
        &mut verdict,
        "energies",
        report.r_squared.is_finite(),
        format!("delta = {:.4e}", report.fitted_delta),
    );

    // stage 5: integrability of the limit
    match nijenhuis_of_state(&run.state.phi) {
        Ok((sup, l2)) => {
            verdict.final_nijenhuis_sup = sup;
            verdict.final_nijenhuis_l2 = l2;
            stage(&mut verdict, "nijenhuis", true, format!("sup = {sup:.3e}"));
        }
        Err(e) => stage(&mut verdict, "nijenhuis", false, e.to_string()),
    }

    // stage 6: gauge reconstruction against a direct primary-flow run
    if config.cross_validate {
        let direct_cfg = FlowConfig {
            reparametrized: false,
            stop_tol: 0.0,
            t_max: run.state.time,
            store_fields: false,
            track_gauge: false,
            ..config.flow
        };
        let direct_state = TypeIIAState::new(
            run.trajectory.samples[0].phi.clone(),
            run.trajectory.samples[0].omega.clone(),
            Metric6::identity(),
        );
        match direct_state.and_then(|s| advance(s, &direct_cfg)) {
            Ok(direct) => {
                let map = run.gauge_map.as_ref().expect("gauge tracking was on");
                match pullback_by_map(map, &run.state.phi, &config.gauge) {
                    Ok(pulled) => {
                        let mut diff = pulled;
                        diff.axpy(-1.0, &direct.state.phi);
                        let disc = diff.l2_norm() / direct.state.phi.l2_norm().max(1e-300);
                        verdict.gauge_discrepancy = disc;
                        stage(
                            &mut verdict,
                            "gauge_reconstruct",
                            true,
                            format!("discrepancy = {disc:.3e}"),
                        );
                    }
                    Err(e) => stage(&mut verdict, "gauge_reconstruct", false, e.to_string()),
                }
            }
            Err(e) => stage(&mut verdict, "direct_flow", false, e.to_string()),
        }
    }
    Ok(verdict)
}
