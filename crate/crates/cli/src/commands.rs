//! Command implementations and report emission.

use anyhow::{bail, Context, Result};
use std::io::Write;
use std::path::{Path, PathBuf};

use iia_core::flow::{advance, FlowRun, Outcome, Trajectory, TrajectorySample, TypeIIAState};
use iia_core::forms6::Metric6;
use iia_core::lattice::io::{read_snapshot, write_snapshot};
use iia_core::lattice::{FormField, VectorField};
use iia_core::stability::{
    constrained_variation, end_to_end_stability, energies, fit_decay, harmonic_correction,
    linearization_check, perturbed_omega, perturbed_phi_state, EndToEndConfig,
};

use crate::manifest::Manifest;

/// Exit codes per the interface contract.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SUITE_FAILED: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;
pub const EXIT_NO_CONVERGENCE: i32 = 5;

pub struct RunPaths {
    pub out: PathBuf,
}

impl RunPaths {
    pub fn prepare(out: &Path) -> Result<RunPaths> {
        std::fs::create_dir_all(out)
            .with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(RunPaths { out: out.to_path_buf() })
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Deterministic run metadata (config echo + seed); timestamps go to the
/// separate run_info.txt.
pub fn write_meta(paths: &RunPaths, manifest: &Manifest, seed: u64, command: &str) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Meta<'a> {
        command: &'a str,
        seed: u64,
        manifest: &'a Manifest,
    }
    let meta = Meta {
        command,
        seed,
        manifest,
    };
    let mut f = std::fs::File::create(paths.file("meta.json"))?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    let mut info = std::fs::File::create(paths.file("run_info.txt"))?;
    writeln!(
        info,
        "started: {:?}\nhost_threads: {}",
        std::time::SystemTime::now(),
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    )?;
    Ok(())
}

fn vector_as_form(v: &VectorField) -> FormField {
    let mut f = FormField::zeros(v.grid, 1);
    f.data_mut().copy_from_slice(&v.data);
    f
}

fn form_as_vector(f: &FormField) -> VectorField {
    let mut v = VectorField::zeros(f.grid());
    v.data.copy_from_slice(f.data());
    v
}

pub fn write_trajectory(paths: &RunPaths, run: &FlowRun) -> Result<()> {
    let mut mon = std::fs::File::create(paths.file("monitor.csv"))?;
    run.monitor.write_csv(&mut mon)?;
    for (i, s) in run.trajectory.samples.iter().enumerate() {
        write_snapshot(&paths.file(&format!("sample_{i:06}_phi.fld")), &s.phi)?;
        write_snapshot(&paths.file(&format!("sample_{i:06}_omega.fld")), &s.omega)?;
        write_snapshot(
            &paths.file(&format!("sample_{i:06}_v.fld")),
            &vector_as_form(&s.v),
        )?;
    }
    write_snapshot(&paths.file("final_phi.fld"), &run.state.phi)?;
    write_snapshot(&paths.file("final_omega.fld"), &run.state.omega)?;
    // sample times, one line each, for reloading
    let mut times = std::fs::File::create(paths.file("samples.csv"))?;
    writeln!(times, "index,t")?;
    for (i, s) in run.trajectory.samples.iter().enumerate() {
        writeln!(times, "{i},{}", s.t)?;
    }
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(dir.join("samples.csv"))
        .with_context(|| format!("reading {}/samples.csv", dir.display()))?;
    let mut samples = Vec::new();
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let idx: usize = parts.next().context("index column")?.parse()?;
        let t: f64 = parts.next().context("t column")?.parse()?;
        let phi = read_snapshot(&dir.join(format!("sample_{idx:06}_phi.fld")))?;
        let omega = read_snapshot(&dir.join(format!("sample_{idx:06}_omega.fld")))?;
        let v = read_snapshot(&dir.join(format!("sample_{idx:06}_v.fld")))?;
        samples.push(TrajectorySample {
            t,
            phi,
            omega,
            v: form_as_vector(&v),
        });
    }
    if samples.is_empty() {
        bail!("trajectory directory {} holds no samples", dir.display());
    }
    Ok(Trajectory { samples })
}

fn outcome_exit(outcome: &Outcome, stop_tol: f64) -> i32 {
    match outcome {
        Outcome::Completed => EXIT_OK,
        Outcome::Stationary => EXIT_OK,
        Outcome::Degenerate { .. } => EXIT_DEGENERATE,
        Outcome::StepUnderflow { .. } => {
            if stop_tol > 0.0 {
                EXIT_NO_CONVERGENCE
            } else {
                EXIT_DEGENERATE
            }
        }
    }
}

pub fn cmd_flow_run(manifest: &Manifest, paths: &RunPaths, seed: u64) -> Result<i32> {
    let grid = manifest.background.grid()?;
    let config = manifest.flow.config()?;
    let (phi, omega) = perturbed_phi_state(grid, &manifest.perturbations)?;
    let state = TypeIIAState::new(phi, omega, Metric6::identity())?;
    let run = advance(state, &config)?;
    write_trajectory(paths, &run)?;
    write_meta(paths, manifest, seed, "flow-run")?;
    let exit = outcome_exit(&run.outcome, config.stop_tol);
    #[derive(serde::Serialize)]
    struct Summary {
        outcome: String,
        steps: usize,
        final_time: f64,
        final_rhs_l2: f64,
        max_monitor_drift: f64,
    }
    let summary = Summary {
        outcome: format!("{:?}", run.outcome),
        steps: run.steps,
        final_time: run.state.time,
        final_rhs_l2: run.monitor.rows.last().map(|r| r.rhs_l2).unwrap_or(f64::NAN),
        max_monitor_drift: run.monitor.max_drift(),
    };
    let mut f = std::fs::File::create(paths.file("report.json"))?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    f.write_all(b"\n")?;
    println!(
        "flow-run: {:?} after {} steps, t = {:.6}, rhs = {:.3e}",
        run.outcome,
        run.steps,
        run.state.time,
        summary.final_rhs_l2
    );
    Ok(exit)
}

pub fn cmd_linearize(manifest: &Manifest, paths: &RunPaths, seed: u64) -> Result<i32> {
    let grid = manifest.background.grid()?;
    let spec = &manifest.linearize;
    let count = if spec.seed_count == 0 { 20 } else { spec.seed_count };
    let start = spec.seed_start + seed;
    let budget = if spec.mode_budget == 0 { 2 } else { spec.mode_budget };
    let eps_list = if spec.eps.is_empty() {
        vec![5e-4]
    } else {
        spec.eps.clone()
    };
    let mut csv = std::fs::File::create(paths.file("linearize.csv"))?;
    writeln!(csv, "seed,eps,de_err_rel,df_err_rel,de_err_abs,df_err_abs,h_norm")?;
    let mut worst = 0.0f64;
    for s in start..start + count {
        let var = constrained_variation(grid, s, budget);
        for &eps in &eps_list {
            let r = linearization_check(&var, eps)?;
            writeln!(
                csv,
                "{s},{eps},{},{},{},{},{}",
                r.de_err_rel, r.df_err_rel, r.de_err_abs, r.df_err_abs, r.h_norm
            )?;
            worst = worst.max(r.max_rel());
        }
    }
    #[derive(serde::Serialize)]
    struct Summary {
        seeds: std::ops::Range<u64>,
        mode_budget: usize,
        worst_rel_error: f64,
    }
    let mut f = std::fs::File::create(paths.file("report.json"))?;
    serde_json::to_writer_pretty(
        &mut f,
        &Summary {
            seeds: start..start + count,
            mode_budget: budget,
            worst_rel_error: worst,
        },
    )?;
    f.write_all(b"\n")?;
    write_meta(paths, manifest, seed, "linearize")?;
    println!("linearize: worst relative error {worst:.3e} over {count} seeds");
    Ok(EXIT_OK)
}

pub fn cmd_perturb_and_flow(manifest: &Manifest, paths: &RunPaths, seed: u64) -> Result<i32> {
    let grid = manifest.background.grid()?;
    let omega = perturbed_omega(grid, &manifest.perturbations)?;
    let config = EndToEndConfig {
        flow: manifest.flow.config()?,
        s_steps: manifest.stability.s_steps,
        k_max: manifest.stability.k_max,
        cross_validate: manifest.stability.cross_validate,
        ..EndToEndConfig::default()
    };
    let verdict = end_to_end_stability(&omega, &config)?;
    let mut f = std::fs::File::create(paths.file("verdict.json"))?;
    serde_json::to_writer_pretty(&mut f, &verdict)?;
    f.write_all(b"\n")?;
    write_meta(paths, manifest, seed, "perturb-and-flow")?;
    for s in &verdict.stages {
        println!(
            "[{}] {}{}",
            if s.ok { "ok" } else { "fail" },
            s.stage,
            if s.detail.is_empty() {
                String::new()
            } else {
                format!(": {}", s.detail)
            }
        );
    }
    if verdict.converged {
        println!(
            "perturb-and-flow: converged, final rhs {:.3e}, Nijenhuis {:.3e}",
            verdict.final_rhs, verdict.final_nijenhuis_sup
        );
        Ok(EXIT_OK)
    } else {
        println!("perturb-and-flow: did not converge");
        Ok(EXIT_NO_CONVERGENCE)
    }
}

pub fn cmd_decay_report(manifest: &Manifest, paths: &RunPaths, seed: u64) -> Result<i32> {
    let input = manifest
        .input
        .as_ref()
        .context("decay-report needs `input` = trajectory directory in the manifest")?;
    let traj = read_trajectory(Path::new(input))?;
    let first = &traj.samples[0];
    let corrected = harmonic_correction(&first.phi, &first.omega)?;
    let k_max = manifest.stability.k_max;
    let report = energies(&traj, &corrected, k_max);
    let mut csv = std::fs::File::create(paths.file("energies.csv"))?;
    let headers: Vec<String> = (0..=k_max).map(|k| format!("i_{k}")).collect();
    writeln!(csv, "t,{}", headers.join(","))?;
    for (i, t) in report.times.iter().enumerate() {
        let row: Vec<String> = (0..=k_max).map(|k| format!("{}", report.i_k[k][i])).collect();
        writeln!(csv, "{t},{}", row.join(","))?;
    }
    let i1_rate = if k_max >= 1 {
        fit_decay(&report.times, &report.i_k[1]).0
    } else {
        f64::NAN
    };
    #[derive(serde::Serialize)]
    struct Summary {
        fitted_delta: f64,
        r_squared: f64,
        fit_window: (f64, f64),
        i1_rate: f64,
        max_harmonic: f64,
        samples: usize,
    }
    let mut f = std::fs::File::create(paths.file("report.json"))?;
    serde_json::to_writer_pretty(
        &mut f,
        &Summary {
            fitted_delta: report.fitted_delta,
            r_squared: report.r_squared,
            fit_window: report.fit_window,
            i1_rate,
            max_harmonic: report.max_harmonic,
            samples: report.times.len(),
        },
    )?;
    f.write_all(b"\n")?;
    write_meta(paths, manifest, seed, "decay-report")?;
    println!(
        "decay-report: fitted delta {:.6} (r^2 = {:.6}) over {} samples",
        report.fitted_delta,
        report.r_squared,
        report.times.len()
    );
    Ok(EXIT_OK)
}

pub fn cmd_check(manifest: &Manifest, paths: Option<&RunPaths>, seed: u64) -> Result<i32> {
    let structures = if manifest.check.structures == 0 {
        1000
    } else {
        manifest.check.structures
    };
    let var_seeds = if manifest.check.variation_seeds == 0 {
        50
    } else {
        manifest.check.variation_seeds
    };
    let grid = manifest.background.grid()?;
    let t0 = std::time::Instant::now();
    let mut all = iia_core::checks::pointwise_suite(structures);
    all.extend(iia_core::checks::variational_suite(var_seeds));
    all.extend(iia_core::checks::lattice_suite(grid));
    let elapsed = t0.elapsed().as_secs_f64();
    let mut ok = true;
    println!("{:<44} {:>12} {:>10}  status", "check", "worst", "tol");
    for r in &all {
        ok &= r.pass();
        println!(
            "{:<44} {:>12.3e} {:>10.0e}  {}",
            r.name,
            r.worst,
            r.tol,
            if r.pass() { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "check: {} suites on {structures} structures in {elapsed:.2}s",
        all.len()
    );
    if let Some(paths) = paths {
        #[derive(serde::Serialize)]
        struct Row {
            name: String,
            worst: f64,
            tol: f64,
            pass: bool,
        }
        let rows: Vec<Row> = all
            .iter()
            .map(|r| Row {
                name: r.name.into(),
                worst: r.worst,
                tol: r.tol,
                pass: r.pass(),
            })
            .collect();
        let mut f = std::fs::File::create(paths.file("report.json"))?;
        serde_json::to_writer_pretty(&mut f, &rows)?;
        f.write_all(b"\n")?;
        write_meta(paths, manifest, seed, "check")?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_SUITE_FAILED })
}
