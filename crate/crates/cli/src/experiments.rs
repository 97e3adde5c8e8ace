//! One runner per experiment. Each writes its artifacts into `out` and
//! returns the file names plus the resolved parameters for the manifest.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ttrap_core::fom::{evaluate, write_fom_csv, Platform, PlatformRecord};
use ttrap_core::gates::{
    cz_sweep, gaussian_baseline, log_log_fit, rabi_trace, run_upi, write_cz_csv, write_gaussian_csv,
    GaussianOptions, TrapOptions,
};
use ttrap_core::normalization::{gap_ratio, gap_ratio_inverse, NormalizedParams};
use ttrap_core::propagator::write_checkpoint;
use ttrap_core::state::write_flux_csv;
use ttrap_core::trap_modes::{
    analytic_bound_modes, coupling_tensor, effective_g_general, leakage_gap_violations, solve_eigenmodes,
    Harmonic, TrapPotential,
};
use ttrap_core::Observables;

use crate::config::{
    ConfigError, CzSweepParams, EigenmodesParams, FomParams, GaussianSweepParams, TrapRunParams,
};

pub struct Outcome {
    pub params: Value,
    pub outputs: Vec<String>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &'a Path) -> Self {
        Self { dir, names: Vec::new() }
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> ttrap_core::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.names.push(name.to_owned());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn finish(self, params: impl Serialize) -> Result<Outcome> {
        Ok(Outcome {
            params: serde_json::to_value(params)?,
            outputs: self.names,
        })
    }
}

fn trap_options(p: &TrapRunParams) -> TrapOptions {
    TrapOptions {
        n_grid: p.n_grid,
        box_len: p.box_len,
        box_per_xi0: p.box_per_xi0,
        alpha: p.alpha,
        rho: p.rho,
        delta: p.delta,
        r_norm: p.r_norm,
        sample_every: p.sample_every,
    }
}

fn strided(records: &[Observables], stride: usize) -> Vec<Observables> {
    let last = records.len().saturating_sub(1);
    records
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, o)| o.clone())
        .collect()
}

pub fn eigenmodes(p: EigenmodesParams, out: &Path) -> Result<Outcome> {
    let xi0 = match (p.xi0, p.dg_ratio) {
        (Some(x), _) => x,
        (None, Some(r)) => gap_ratio_inverse(r)?,
        (None, None) => 1.0,
    };
    let analytic = analytic_bound_modes(p.alpha, p.rho, xi0)?;
    let delta = p.delta.unwrap_or(analytic.matching_offset);
    let box_len = p.box_len.unwrap_or(p.box_per_xi0 * xi0);
    let params = NormalizedParams::dimensionless(xi0, p.rho, delta, p.n_grid, box_len)?;
    let potential = TrapPotential::sech_family(params.grid(), p.alpha, xi0)?;
    let fh = solve_eigenmodes(&potential, Harmonic::Fh, p.rho, delta, p.n_modes)?;
    let sh = solve_eigenmodes(&potential, Harmonic::Sh, p.rho, delta, p.n_modes)?;
    let tensors = coupling_tensor(&fh, &sh, p.r_norm)?;
    let violations = leakage_gap_violations(&fh, &sh, analytic.gap_a, analytic.gap_b, 0.0);

    let mut art = Artifacts::new(out);
    art.write("fh_modes.csv", |w| fh.write_csv(w))?;
    art.write("sh_modes.csv", |w| sh.write_csv(w))?;
    art.write("fh_spectrum.csv", |w| fh.write_spectrum_csv(w))?;
    art.write("sh_spectrum.csv", |w| sh.write_spectrum_csv(w))?;
    art.json(
        "summary.json",
        &json!({
            "xi0": xi0,
            "dg_ratio": gap_ratio(xi0)?,
            "delta": delta,
            "box": box_len,
            "lambda_a0": fh.ground_energy(),
            "lambda_b0": sh.ground_energy(),
            "lambda_a0_analytic": analytic.lambda_a0(),
            "lambda_b0_analytic": analytic.lambda_b0(delta),
            "n_bound_fh": fh.n_bound,
            "n_bound_sh": sh.n_bound,
            "g000": tensors.g(0, 0, 0).norm(),
            "g_analytic": effective_g_general(p.alpha, p.rho, xi0, p.r_norm)?,
            "delta000": tensors.delta(0, 0, 0),
            "gap_violations": violations.len(),
        }),
    )?;
    art.finish(p)
}

fn write_trace(art: &mut Artifacts, traj: &ttrap_core::Trajectory, flux_stride: usize) -> Result<()> {
    art.write("trace.csv", |w| traj.write_time_series_csv(w))?;
    if flux_stride > 0 {
        let snaps = strided(&traj.records, flux_stride);
        art.write("flux.csv", |w| write_flux_csv(w, &traj.final_state.grid, &snaps))?;
    }
    Ok(())
}

pub fn rabi(p: TrapRunParams, out: &Path) -> Result<Outcome> {
    if p.checkpoint {
        return Err(ConfigError("params: `checkpoint` applies to upi only".into()).into());
    }
    let trace = rabi_trace(p.dg_ratio, p.dt, &trap_options(&p))?;
    let mut art = Artifacts::new(out);
    write_trace(&mut art, &trace.trajectory, p.flux_stride)?;
    let s = &trace.setup;
    art.json(
        "summary.json",
        &json!({
            "dg_ratio": p.dg_ratio,
            "xi0": s.params.xi0,
            "g": s.g,
            "g_numeric": s.g_numeric,
            "t_pi_reference": s.t_pi,
            "period": trace.period,
            "period_rel_error": trace.period / s.t_pi - 1.0,
            "max_n_sh": trace.max_n_sh,
        }),
    )?;
    art.finish(p)
}

pub fn upi(p: TrapRunParams, out: &Path) -> Result<Outcome> {
    let gate = run_upi(p.dg_ratio, p.dt, &trap_options(&p))?;
    let mut art = Artifacts::new(out);
    write_trace(&mut art, &gate.traj, p.flux_stride)?;
    if p.checkpoint {
        art.write("state_tpi.bin", |w| write_checkpoint(&gate.traj.final_state, w))?;
    }
    art.json(
        "summary.json",
        &json!({
            "dg_ratio": p.dg_ratio,
            "t_pi": gate.t_pi,
            "s1": [gate.s1.re, gate.s1.im],
            "s2": [gate.s2.re, gate.s2.im],
            "dist": gate.dist,
            "leak2": gate.leak2,
            "norm_drift": gate.norm_drift,
            "manley_rowe_drift": gate.manley_rowe_drift,
        }),
    )?;
    art.finish(p)
}

pub fn cz(p: CzSweepParams, out: &Path) -> Result<Outcome> {
    if p.dg_ratios.is_empty() {
        return Err(ConfigError("params: `dg_ratios` must be non-empty".into()).into());
    }
    let opts = TrapOptions {
        n_grid: p.n_grid,
        box_len: None,
        box_per_xi0: p.box_per_xi0,
        alpha: p.alpha,
        rho: p.rho,
        delta: p.delta,
        r_norm: p.r_norm,
        ..TrapOptions::default()
    };
    let results = cz_sweep(&p.dg_ratios, p.dt, &opts)?;
    let mut art = Artifacts::new(out);
    art.write("epsilon.csv", |w| write_cz_csv(w, &results))?;
    let fit = if results.len() >= 2 {
        let x: Vec<f64> = results.iter().map(|r| r.dg_ratio).collect();
        let y: Vec<f64> = results.iter().map(|r| r.epsilon).collect();
        log_log_fit(&x, &y).ok()
    } else {
        None
    };
    art.json(
        "summary.json",
        &json!({
            "dg_ratios": p.dg_ratios,
            "epsilon": results.iter().map(|r| r.epsilon).collect::<Vec<_>>(),
            "fit": fit,
        }),
    )?;
    art.finish(p)
}

pub fn gaussian(p: GaussianSweepParams, out: &Path) -> Result<Outcome> {
    let opts = GaussianOptions {
        n_grid: p.n_grid,
        box_len: p.box_len,
        rho: p.rho,
        r_norm: p.r_norm,
    };
    let surface = gaussian_baseline(&p.t_pi, &p.tau_g, p.dt, &opts)?;
    let mut art = Artifacts::new(out);
    art.write("dist.csv", |w| write_gaussian_csv(w, &surface))?;
    art.json("summary.json", &json!({ "optima": surface.optima }))?;
    art.finish(p)
}

/// `base` resolves a relative `platforms_file`.
pub fn fom(p: FomParams, base: &Path, out: &Path) -> Result<Outcome> {
    let records: Vec<PlatformRecord> = match (&p.platforms, &p.platforms_file) {
        (Some(_), Some(_)) => {
            return Err(ConfigError("params: give either `platforms` or `platforms_file`, not both".into()).into())
        }
        (None, None) => {
            return Err(ConfigError("params: `fom` needs `platforms` or `platforms_file`".into()).into())
        }
        (Some(r), None) => r.clone(),
        (None, Some(f)) => {
            let path: PathBuf = if f.is_absolute() { f.clone() } else { base.join(f) };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
        }
    };
    let platforms = records
        .iter()
        .cloned()
        .map(Platform::try_from)
        .collect::<ttrap_core::Result<Vec<_>>>()?;
    let rows: Vec<_> = platforms.iter().enumerate().map(|(i, pl)| evaluate(pl, i)).collect();
    let mut art = Artifacts::new(out);
    art.write("table.csv", |w| write_fom_csv(w, &rows))?;
    let resolved = FomParams {
        platforms: Some(records),
        platforms_file: p.platforms_file.clone(),
    };
    art.finish(resolved)
}
