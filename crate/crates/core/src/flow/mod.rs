//! Time integration of the flow and its reparametrization, with monitors.

pub mod fastpath;
pub mod gauge;
pub mod rhs;
pub mod structure;

use crate::error::{Error, Result};
use crate::forms6::Metric6;
use crate::lattice::calculus::{d_norm_sq, sym_laplacian_max};
use crate::lattice::{FormField, Grid, VectorField};

pub use rhs::{deturck_vector, interior_field, primitivity_max, rhs_primary, rhs_reparametrized,
    soliton_residual};
pub use structure::{structure_pass, StructureField};

/// RK4 real-axis stability bound.
const RK4_REAL_STABILITY: f64 = 2.785;

/// Closedness tolerance on state construction.
pub const CLOSED_TOL: f64 = 1e-10;
/// Pointwise primitivity tolerance on state construction.
pub const PRIMITIVE_TOL: f64 = 1e-9;

/// The flow's evolving unknown: a closed positive primitive pair on the
/// grid, with the constant reference metric of the gauge fixing.
#[derive(Clone, Debug)]
pub struct TypeIIAState {
    pub phi: FormField,
    pub omega: FormField,
    pub time: f64,
    pub reference: Metric6,
}

impl TypeIIAState {
    /// Validates closedness, pointwise primitivity and pointwise positivity.
    pub fn new(phi: FormField, omega: FormField, reference: Metric6) -> Result<Self> {
        let dphi = d_norm_sq(&phi).sqrt();
        let dom = d_norm_sq(&omega).sqrt();
        if dphi > CLOSED_TOL || dom > CLOSED_TOL {
            return Err(Error::NonConvergence {
                detail: format!("state not closed: |dphi| = {dphi:.3e}, |domega| = {dom:.3e}"),
            });
        }
        let prim = rhs::primitivity_max(&phi, &omega);
        if prim > PRIMITIVE_TOL {
            return Err(Error::NonPrimitive { residual: prim });
        }
        structure::structure_pass(&phi, &omega)?;
        Ok(TypeIIAState {
            phi,
            omega,
            time: 0.0,
            reference,
        })
    }

    /// The flat standard structure as constant fields.
    pub fn flat_standard(grid: Grid) -> Self {
        let ps = crate::forms6::PointStructure::standard(1.0);
        TypeIIAState {
            phi: FormField::constant(grid, &ps.phi),
            omega: FormField::constant(grid, &ps.omega),
            time: 0.0,
            reference: ps.metric,
        }
    }

    pub fn grid(&self) -> Grid {
        self.phi.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
}

/// Flow configuration.  The step obeys the parabolic bound
/// dt = dt_safety * C_RK4 / (max_pt |phi|^2 * lambda_max_kept).
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub scheme: Scheme,
    pub dt_safety: f64,
    pub t_max: f64,
    pub monitor_stride: usize,
    pub reparametrized: bool,
    /// Stop when the combined RHS L^2 norm falls below this (0 disables).
    pub stop_tol: f64,
    /// Hard cap on steps (the run also ends at t_max).
    pub max_steps: usize,
    /// Keep field snapshots at monitor samples (needed by the energy report
    /// and gauge reconstruction; disable for long drift runs).
    pub store_fields: bool,
    /// Integrate the gauge particle map alongside the flow (reparametrized
    /// runs only); more accurate in time than reconstruction from sampled V.
    pub track_gauge: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            scheme: Scheme::Rk4,
            dt_safety: 0.8,
            t_max: 1.0,
            monitor_stride: 8,
            reparametrized: true,
            stop_tol: 0.0,
            max_steps: usize::MAX,
            store_fields: true,
            track_gauge: false,
        }
    }
}

/// One monitor sample; columns in the trajectory CSV order.
#[derive(Clone, Copy, Debug)]
pub struct MonitorRow {
    pub t: f64,
    pub rhs_l2: f64,
    pub dphi_l2: f64,
    pub primitivity_max: f64,
    pub sup_phi: f64,
    pub curv_proxy: f64,
    pub min_g_eig: f64,
    pub h_drift: f64,
}

/// Append-only time series of monitor samples.
#[derive(Clone, Debug, Default)]
pub struct Monitor {
    pub rows: Vec<MonitorRow>,
}

impl Monitor {
    pub const COLUMNS: [&'static str; 8] = [
        "t",
        "rhs_l2",
        "dphi_l2",
        "primitivity_max",
        "sup_phi",
        "curv_proxy",
        "min_g_eig",
        "h_drift",
    ];

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::COLUMNS.join(","))?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t,
                r.rhs_l2,
                r.dphi_l2,
                r.primitivity_max,
                r.sup_phi,
                r.curv_proxy,
                r.min_g_eig,
                r.h_drift
            )?;
        }
        Ok(())
    }

    /// Largest |column(t) - column(0)| over all rows and columns.
    pub fn max_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let cols = |r: &MonitorRow| {
            [
                r.rhs_l2,
                r.dphi_l2,
                r.primitivity_max,
                r.sup_phi,
                r.curv_proxy,
                r.min_g_eig,
                r.h_drift,
            ]
        };
        let base = cols(first);
        self.rows
            .iter()
            .flat_map(|r| {
                cols(r)
                    .into_iter()
                    .zip(base)
                    .map(|(v, b)| (v - b).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// A stored snapshot along a trajectory.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub t: f64,
    pub phi: FormField,
    pub omega: FormField,
    pub v: VectorField,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

/// How a flow run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// Reached t_max or the step cap.
    Completed,
    /// RHS norm fell below the configured tolerance.
    Stationary,
    /// Positivity lost; integration aborted with diagnostics.
    Degenerate {
        time: f64,
        point: usize,
        detail: String,
    },
    /// The parabolic bound drove dt below 1e-12.
    StepUnderflow { dt: f64 },
}

/// A completed flow run: trajectory samples, monitor series, final state.
#[derive(Debug)]
pub struct FlowRun {
    pub trajectory: Trajectory,
    pub monitor: Monitor,
    pub outcome: Outcome,
    pub state: TypeIIAState,
    pub steps: usize,
    /// Final particle map when gauge tracking was requested.
    pub gauge_map: Option<gauge::GaugeMap>,
}

struct StageRhs {
    e: FormField,
    f: Option<FormField>,
}

struct StageInfo {
    max_normsq: f64,
    structure: Option<StructureField>,
    v: Option<VectorField>,
}

fn eval_rhs(
    phi: &FormField,
    omega: &FormField,
    reparam: bool,
    ctx: Option<&fastpath::ConstOmega>,
    accepted: bool,
) -> Result<(StageRhs, StageInfo)> {
    if reparam {
        let (e, f, s, v) = rhs::rhs_reparametrized(phi, omega)?;
        return Ok((
            StageRhs { e, f: Some(f) },
            StageInfo {
                max_normsq: s.max_normsq,
                structure: Some(s),
                v: Some(v),
            },
        ));
    }
    if let Some(ctx) = ctx {
        let scan = fastpath::primary_scan(phi, ctx, accepted)?;
        let e = fastpath::primary_term_const(&scan.theta, ctx);
        return Ok((
            StageRhs { e, f: None },
            StageInfo {
                max_normsq: scan.max_normsq,
                structure: None,
                v: None,
            },
        ));
    }
    let (e, s) = rhs::rhs_primary(phi, omega)?;
    Ok((
        StageRhs { e, f: None },
        StageInfo {
            max_normsq: s.max_normsq,
            structure: Some(s),
            v: None,
        },
    ))
}

fn add_scaled(phi: &FormField, omega: &FormField, k: &StageRhs, c: f64) -> (FormField, FormField) {
    let p = phi.fused_add(c, &k.e);
    let o = match &k.f {
        Some(f) => omega.fused_add(c, f),
        None => omega.clone(),
    };
    (p, o)
}

/// Integrates the flow from `state` under `config`.  Degeneracies and step
/// underflow are reported in the outcome, never panicked on; the monitor
/// holds every sampled row including the last one before an abort.
pub fn advance(state: TypeIIAState, config: &FlowConfig) -> Result<FlowRun> {
    let grid = state.grid();
    let lambda_max = grid.lambda_max_kept();
    let mut phi = state.phi.clone();
    let mut omega = state.omega.clone();
    let mut t = state.time;
    let h_phi0 = phi.mean();
    let h_om0 = omega.mean();
    let mut monitor = Monitor::default();
    let mut trajectory = Trajectory::default();
    let mut outcome = Outcome::Completed;
    let mut steps = 0usize;
    let mut tracker: Option<gauge::OnlineGauge> = None;
    let tracker_opts = gauge::GaugeOptions {
        substeps: 1,
        ..gauge::GaugeOptions::default()
    };
    // The primary flow never touches omega; over a spatially constant
    // symplectic form the contraction has constant coefficients and the
    // right-hand side collapses to one fused transform round trip.
    let const_ctx = if config.reparametrized {
        None
    } else {
        fastpath::const_omega(&omega)
    };

    loop {
        // k1 evaluation doubles as the accepted-state scan
        let (k1, info) = match eval_rhs(&phi, &omega, config.reparametrized, const_ctx.as_ref(), true)
        {
            Ok(r) => r,
            Err(Error::DegenerateState { point, detail, .. }) => {
                outcome = Outcome::Degenerate {
                    time: t,
                    point,
                    detail,
                };
                break;
            }
            Err(e) => return Err(e),
        };
        let rhs_l2 = {
            let fe = k1.e.l2_norm();
            match &k1.f {
                Some(f) => (fe * fe + f.l2_norm().powi(2)).sqrt(),
                None => fe,
            }
        };

        if config.track_gauge && config.reparametrized {
            let v = info.v.as_ref().expect("reparametrized rhs provides V");
            let advanced = match &mut tracker {
                None => gauge::OnlineGauge::new(grid, t, v, &tracker_opts).map(|g| {
                    tracker = Some(g);
                }),
                Some(g) => g.advance_to(t, v),
            };
            match advanced {
                Err(Error::StepUnderflow { dt }) => {
                    outcome = Outcome::StepUnderflow { dt };
                    break;
                }
                other => other?,
            }
        }

        let stationary = config.stop_tol > 0.0 && rhs_l2 <= config.stop_tol;
        let finished = t >= config.t_max || steps >= config.max_steps;
        let sampling = steps % config.monitor_stride == 0 || stationary || finished;
        if sampling {
            // the fast path skips the full structure scan; rebuild it here
            let s1_owned;
            let s1 = match &info.structure {
                Some(s) => s,
                None => {
                    s1_owned = structure::structure_pass(&phi, &omega)?;
                    &s1_owned
                }
            };
            let v = match &info.v {
                Some(v) => v.clone(),
                None => rhs::deturck_from_structure(s1),
            };
            let g21 = s1.g_packed();
            monitor.rows.push(MonitorRow {
                t,
                rhs_l2,
                dphi_l2: d_norm_sq(&phi).sqrt(),
                primitivity_max: rhs::primitivity_max(&phi, &omega),
                sup_phi: s1.max_normsq.sqrt(),
                curv_proxy: sym_laplacian_max(grid, &g21),
                min_g_eig: s1.min_metric_eigenvalue(),
                h_drift: (phi.mean() - h_phi0).max_abs().max((omega.mean() - h_om0).max_abs()),
            });
            if config.store_fields {
                trajectory.samples.push(TrajectorySample {
                    t,
                    phi: phi.clone(),
                    omega: omega.clone(),
                    v,
                });
            }
        }

        if stationary {
            outcome = Outcome::Stationary;
            break;
        }
        if finished {
            break;
        }

        let mut dt = config.dt_safety * RK4_REAL_STABILITY / (info.max_normsq * lambda_max);
        if t + dt > config.t_max {
            dt = config.t_max - t;
        }
        if dt < 1e-12 {
            outcome = Outcome::StepUnderflow { dt };
            break;
        }

        let stage = |c: f64, k: &StageRhs| add_scaled(&phi, &omega, k, c * dt);
        let run_stages = || -> Result<(StageRhs, StageRhs, StageRhs)> {
            let ctx = const_ctx.as_ref();
            let (p2, o2) = stage(0.5, &k1);
            let (k2, _) = eval_rhs(&p2, &o2, config.reparametrized, ctx, false)?;
            let (p3, o3) = stage(0.5, &k2);
            let (k3, _) = eval_rhs(&p3, &o3, config.reparametrized, ctx, false)?;
            let (p4, o4) = stage(1.0, &k3);
            let (k4, _) = eval_rhs(&p4, &o4, config.reparametrized, ctx, false)?;
            Ok((k2, k3, k4))
        };
        let (k2, k3, k4) = match run_stages() {
            Ok(ks) => ks,
            Err(Error::DegenerateState { point, detail, .. }) => {
                outcome = Outcome::Degenerate {
                    time: t,
                    point,
                    detail,
                };
                break;
            }
            Err(e) => return Err(e),
        };
        let w = dt / 6.0;
        phi.axpy(w, &k1.e);
        phi.axpy(2.0 * w, &k2.e);
        phi.axpy(2.0 * w, &k3.e);
        phi.axpy(w, &k4.e);
        if config.reparametrized {
            omega.axpy(w, k1.f.as_ref().unwrap());
            omega.axpy(2.0 * w, k2.f.as_ref().unwrap());
            omega.axpy(2.0 * w, k3.f.as_ref().unwrap());
            omega.axpy(w, k4.f.as_ref().unwrap());
        }
        t += dt;
        steps += 1;
    }

    Ok(FlowRun {
        trajectory,
        monitor,
        outcome,
        state: TypeIIAState {
            phi,
            omega,
            time: t,
            reference: state.reference,
        },
        steps,
        gauge_map: tracker.map(|g| g.into_map()),
    })
}
