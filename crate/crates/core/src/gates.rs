//! Gate experiments: Rabi traces, the two-photon phase gate, the dual-rail CZ
//! built from it, and the untrapped Gaussian-pulse baseline.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::grid::Grid;
use crate::linear_optics::cz_epsilon;
use crate::normalization::{gap_ratio_inverse, NormalizedParams, DEFAULT_BOX_PER_XI0, DEFAULT_N_GRID};
use crate::propagator::{propagate, PulseSystem, StepPlan, Stepper, Trajectory};
use crate::state::{c01, c20, init_superposition, init_two_photon_bound, observables, TwoPhotonState};
use crate::trap_modes::{
    analytic_bound_modes, coupling_tensor, effective_g_general, solve_eigenmodes, EigenmodeSet, Harmonic,
    TrapPotential,
};

/// Half-width of the search window around the analytic gate time.
pub const T_PI_WINDOW: f64 = 0.1;

/// Trap and grid choices shared by the trapped experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrapOptions {
    pub n_grid: usize,
    /// Absolute box length; overrides `box_per_xi0` when set.
    pub box_len: Option<f64>,
    /// Box length in trap widths.
    pub box_per_xi0: f64,
    pub alpha: f64,
    pub rho: f64,
    /// Phase mismatch; `None` selects the value that puts `δ_000` on resonance.
    pub delta: Option<f64>,
    pub r_norm: f64,
    /// Observable sampling stride in steps.
    pub sample_every: usize,
}

impl Default for TrapOptions {
    fn default() -> Self {
        Self {
            n_grid: DEFAULT_N_GRID,
            box_len: None,
            box_per_xi0: DEFAULT_BOX_PER_XI0,
            alpha: 1.0,
            rho: 2.0,
            delta: None,
            r_norm: 1.0,
            sample_every: 10,
        }
    }
}

/// A trapped system with its bound modes and reference coupling.
#[derive(Clone, Debug)]
pub struct TrappedSystem {
    pub dg_ratio: f64,
    pub params: NormalizedParams,
    pub system: PulseSystem,
    pub fh: EigenmodeSet,
    pub sh: EigenmodeSet,
    /// Closed-form bound-mode coupling.
    pub g: f64,
    /// Numerical `g_000` from the grid modes.
    pub g_numeric: f64,
    /// Reference gate time `√2 π / g`.
    pub t_pi: f64,
}

pub fn trapped_system(dg_ratio: f64, opts: &TrapOptions) -> Result<TrappedSystem> {
    let xi0 = gap_ratio_inverse(dg_ratio)?;
    let analytic = analytic_bound_modes(opts.alpha, opts.rho, xi0)?;
    let delta = opts.delta.unwrap_or(analytic.matching_offset);
    let box_len = opts.box_len.unwrap_or(opts.box_per_xi0 * xi0);
    let params = NormalizedParams::dimensionless(xi0, opts.rho, delta, opts.n_grid, box_len)?;
    let grid = params.grid();
    let potential = TrapPotential::sech_family(grid, opts.alpha, xi0)?;
    let fh = solve_eigenmodes(&potential, Harmonic::Fh, opts.rho, delta, 2)?;
    let sh = solve_eigenmodes(&potential, Harmonic::Sh, opts.rho, delta, 2)?;
    let g_numeric = coupling_tensor(&fh, &sh, opts.r_norm)?.g(0, 0, 0).norm();
    let g = effective_g_general(opts.alpha, opts.rho, xi0, opts.r_norm)?;
    if g <= 0.0 {
        return Err(Error::invalid("r_norm", "trapped experiments need a nonzero coupling"));
    }
    Ok(TrappedSystem {
        dg_ratio,
        params,
        system: PulseSystem::new(potential, opts.rho, delta, opts.r_norm)?,
        fh,
        sh,
        g,
        g_numeric,
        t_pi: SQRT_2 * PI / g,
    })
}

/// Minimum of sampled `y(t)`, refined by a parabola through the neighbours.
fn refined_minimum(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (k, _) = y.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    if k == 0 || k + 1 == y.len() {
        return Some((t[k], y[k]));
    }
    Some(parabola_vertex([t[k - 1], t[k], t[k + 1]], [y[k - 1], y[k], y[k + 1]]))
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if a <= 0.0 {
        return (x[1], y[1]);
    }
    let b = d1 - a * (x[0] + x[1]);
    let c = y[0] - a * x[0] * x[0] - b * x[0];
    let xv = -b / (2.0 * a);
    (xv, c - b * b / (4.0 * a))
}

#[derive(Clone, Debug)]
pub struct RabiTrace {
    pub setup: TrappedSystem,
    pub trajectory: Trajectory,
    /// Time of the first return of `n_sh` to its minimum near `t_pi`.
    pub period: f64,
    pub max_n_sh: f64,
}

/// Two FH photons in the bound mode, propagated for two reference gate times.
pub fn rabi_trace(dg_ratio: f64, dt: f64, opts: &TrapOptions) -> Result<RabiTrace> {
    let setup = trapped_system(dg_ratio, opts)?;
    let init = init_two_photon_bound(setup.fh.ground(), setup.params.grid())?;
    let trajectory = propagate(
        &setup.system,
        init,
        &setup.fh,
        &setup.sh,
        2.0 * setup.t_pi,
        dt,
        opts.sample_every,
    )?;
    let (lo, hi) = ((1.0 - T_PI_WINDOW) * setup.t_pi, (1.0 + T_PI_WINDOW) * setup.t_pi);
    let (t, y): (Vec<f64>, Vec<f64>) = trajectory
        .records
        .iter()
        .filter(|o| o.t >= lo && o.t <= hi)
        .map(|o| (o.t, o.n_sh))
        .unzip();
    let (period, _) = refined_minimum(&t, &y)
        .ok_or_else(|| Error::invalid("sample_every", "no samples inside the gate-time window"))?;
    let max_n_sh = trajectory.max_n_sh();
    Ok(RabiTrace {
        setup,
        trajectory,
        period,
        max_n_sh,
    })
}

#[derive(Clone, Debug)]
pub struct GateRun {
    pub dg_ratio: f64,
    /// Located gate time.
    pub t_pi: f64,
    pub s1: Complex64,
    pub s2: Complex64,
    /// Probability outside span(|2 0>, |0 1>) at the gate time.
    pub leak2: f64,
    pub dist: f64,
    /// Two-photon run up to the located gate time.
    pub traj: Trajectory,
    pub norm_drift: f64,
    pub manley_rowe_drift: f64,
}

/// `𝒟 = ‖ψ + |2_out>‖` for a normalized output with overlap `s2` on `|2_out>`.
pub fn dist_from_s2(s2: Complex64) -> f64 {
    (2.0 * (1.0 + s2.re)).max(0.0).sqrt()
}

/// Phase gate on the bound mode: `s1` from a one-photon run, `s2` from a
/// two-photon run stopped at the `n_sh` minimum nearest the reference time.
pub fn run_upi(dg_ratio: f64, dt: f64, opts: &TrapOptions) -> Result<GateRun> {
    let setup = trapped_system(dg_ratio, opts)?;
    upi_on(&setup, dt, opts.sample_every)
}

pub fn upi_on(setup: &TrappedSystem, dt: f64, sample_every: usize) -> Result<GateRun> {
    let sys = &setup.system;
    sys.check_dt(dt)?;
    if sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be at least 1"));
    }
    let grid = setup.params.grid();
    let (fh, sh) = (&setup.fh, &setup.sh);
    let plan = StepPlan::new(sys, dt)?;

    let k_lo = ((1.0 - T_PI_WINDOW) * setup.t_pi / dt).floor() as usize;
    let k_hi = ((1.0 + T_PI_WINDOW) * setup.t_pi / dt).ceil() as usize;

    let mut st = init_two_photon_bound(fh.ground(), grid)?;
    let (norm0, mr0) = (st.norm_sqr(), st.manley_rowe());
    let mut stepper = Stepper::new(&plan, &st)?;
    let mut sample_times = vec![0.0];
    let mut records = vec![observables(&st, fh, sh, 0.0)?];
    let mut best: Option<(usize, f64, TwoPhotonState)> = None;
    let (mut norm_drift, mut mr_drift) = (0.0f64, 0.0f64);
    for k in 1..=k_hi {
        let t = k as f64 * dt;
        stepper.advance(&mut st, t)?;
        norm_drift = norm_drift.max((st.norm_sqr() - norm0).abs());
        mr_drift = mr_drift.max((st.manley_rowe() - mr0).abs());
        if k % sample_every == 0 {
            sample_times.push(t);
            records.push(observables(&st, fh, sh, t)?);
        }
        if k >= k_lo {
            let n_sh = st.n_sh();
            if best.as_ref().is_none_or(|b| n_sh < b.1) {
                best = Some((k, n_sh, st.clone()));
            }
        }
    }
    let (k_best, _, final_state) = best.ok_or_else(|| Error::Internal("empty gate-time window".into()))?;
    let t_pi = k_best as f64 * dt;
    let keep = sample_times.iter().take_while(|&&t| t < t_pi).count();
    sample_times.truncate(keep);
    records.truncate(keep);
    sample_times.push(t_pi);
    records.push(observables(&final_state, fh, sh, t_pi)?);

    let a = c20(&final_state, fh, t_pi);
    let b = c01(&final_state, sh, t_pi);
    let leak2 = (1.0 - a.norm_sqr() - b.norm_sqr()).max(0.0);

    let mut one = init_superposition(0.0.into(), 1.0.into(), 0.0.into(), fh.ground(), grid)?;
    let mut stepper = Stepper::new(&plan, &one)?;
    for k in 1..=k_best {
        stepper.advance(&mut one, k as f64 * dt)?;
    }
    let s1 = one.one_photon_amplitude(fh.ground()) * Complex64::from_polar(1.0, fh.ground_energy() * t_pi);

    Ok(GateRun {
        dg_ratio: setup.dg_ratio,
        t_pi,
        s1,
        s2: a,
        leak2,
        dist: dist_from_s2(a),
        traj: Trajectory {
            sample_times,
            records,
            final_state,
        },
        norm_drift,
        manley_rowe_drift: mr_drift,
    })
}

#[derive(Clone, Debug)]
pub struct CzResult {
    pub dg_ratio: f64,
    pub epsilon: f64,
    /// `(s0, s1, s2)` channel amplitudes.
    pub amplitudes: [Complex64; 3],
    pub gate: GateRun,
}

pub fn cz_from_gate(gate: GateRun) -> CzResult {
    let amplitudes = [Complex64::new(1.0, 0.0), gate.s1, gate.s2];
    CzResult {
        dg_ratio: gate.dg_ratio,
        epsilon: cz_epsilon(&amplitudes).clamp(0.0, 1.0),
        amplitudes,
        gate,
    }
}

pub fn cz_error(dg_ratio: f64, dt: f64, opts: &TrapOptions) -> Result<CzResult> {
    run_upi(dg_ratio, dt, opts).map(cz_from_gate)
}

/// Runs every ratio on the current rayon pool; results keep the input order.
pub fn cz_sweep(dg_ratios: &[f64], dt: f64, opts: &TrapOptions) -> Result<Vec<CzResult>> {
    dg_ratios
        .par_iter()
        .map(|&r| cz_error(r, dt, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual in `ln y`.
    pub residual: f64,
}

pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("sweep", "need at least two matching points to fit"));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("sweep", "log-log fit needs strictly positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(LogLogFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

pub const SWEEP_CSV_HEADER: &str = "dg_ratio,epsilon,s1_re,s1_im,s2_re,s2_im,t_pi_located";

pub fn write_cz_csv<W: Write>(mut w: W, results: &[CzResult]) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in results {
        let [_, s1, s2] = r.amplitudes;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.dg_ratio),
            fmt_f64(r.epsilon),
            fmt_f64(s1.re),
            fmt_f64(s1.im),
            fmt_f64(s2.re),
            fmt_f64(s2.im),
            fmt_f64(r.gate.t_pi)
        )?;
    }
    Ok(())
}

/// Free chirped Gaussian `Ψ_g(ξ, s)` of width `sigma` at `s = 0`.
pub fn gaussian_mode(xi: f64, s: f64, sigma: f64) -> Complex64 {
    let w = Complex64::new(sigma * sigma, s);
    (Complex64::new(sigma, 0.0) / w).sqrt() * PI.powf(-0.25) * (-(xi * xi) / (2.0 * w)).exp()
}

/// Grid and coupling for the untrapped baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianOptions {
    pub n_grid: usize,
    pub box_len: f64,
    pub rho: f64,
    pub r_norm: f64,
}

impl Default for GaussianOptions {
    fn default() -> Self {
        Self {
            n_grid: 512,
            box_len: 120.0,
            rho: 2.0,
            r_norm: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPoint {
    pub t_pi: f64,
    pub tau_g: f64,
    pub dist: f64,
    pub s1: Complex64,
    pub s2: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianOptimum {
    pub t_pi: f64,
    pub tau_g: f64,
    pub dist: f64,
}

#[derive(Clone, Debug)]
pub struct GaussianSurface {
    /// Row-major over `(t_pi, tau_g)`.
    pub points: Vec<GaussianPoint>,
    pub optima: Vec<GaussianOptimum>,
}

fn sampled(grid: &Grid, s: f64, sigma: f64) -> Vec<Complex64> {
    grid.points().into_iter().map(|x| gaussian_mode(x, s, sigma)).collect()
}

/// Renormalizes a sampled mode on the grid (the closed form is normalized on the line).
fn grid_normalized(mut psi: Vec<Complex64>, grid: &Grid) -> Vec<Complex64> {
    let norm = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dxi()).sqrt();
    for c in &mut psi {
        *c /= norm;
    }
    psi
}

fn advance_to(st: &mut TwoPhotonState, sys: &PulseSystem, t_end: f64, dt: f64) -> Result<()> {
    let plan = StepPlan::new(sys, dt)?;
    let n_full = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut stepper = Stepper::new(&plan, st)?;
    for k in 1..=n_full {
        stepper.advance(st, k as f64 * dt)?;
    }
    let rest = t_end - n_full as f64 * dt;
    if rest > 1e-12 * t_end {
        let tail = StepPlan::new(sys, rest)?;
        Stepper::new(&tail, st)?.advance(st, t_end)?;
    }
    Ok(())
}

pub fn gaussian_point(t_pi: f64, tau_g: f64, dt: f64, opts: &GaussianOptions) -> Result<GaussianPoint> {
    crate::error::ensure_positive("t_pi", t_pi)?;
    crate::error::ensure_positive("tau_g", tau_g)?;
    let grid = Grid::new(opts.n_grid, opts.box_len)?;
    let sys = PulseSystem::new(TrapPotential::flat(grid), opts.rho, 0.0, opts.r_norm)?;
    sys.check_dt(dt)?;
    let t_g = 0.5 * t_pi;
    let psi_in = grid_normalized(sampled(&grid, -t_g, tau_g), &grid);
    let psi_out = grid_normalized(sampled(&grid, t_g, tau_g), &grid);

    let mut two = init_two_photon_bound(&psi_in, grid)?;
    advance_to(&mut two, &sys, t_pi, dt)?;
    let s2 = two.two_photon_amplitude(&psi_out);

    let mut one = init_superposition(0.0.into(), 1.0.into(), 0.0.into(), &psi_in, grid)?;
    advance_to(&mut one, &sys, t_pi, dt)?;
    let s1 = one.one_photon_amplitude(&psi_out);
    Ok(GaussianPoint {
        t_pi,
        tau_g,
        dist: dist_from_s2(s2),
        s1,
        s2,
    })
}

/// Error surface over `t_pi_grid x tau_g_grid` and the best width for each gate time.
pub fn gaussian_baseline(
    t_pi_grid: &[f64],
    tau_g_grid: &[f64],
    dt: f64,
    opts: &GaussianOptions,
) -> Result<GaussianSurface> {
    if t_pi_grid.is_empty() || tau_g_grid.is_empty() {
        return Err(Error::invalid("grid", "sweep axes must be non-empty"));
    }
    let jobs: Vec<(f64, f64)> = t_pi_grid
        .iter()
        .flat_map(|&t| tau_g_grid.iter().map(move |&s| (t, s)))
        .collect();
    let points: Vec<GaussianPoint> = jobs
        .par_iter()
        .map(|&(t, s)| gaussian_point(t, s, dt, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let mut sorted_tau: Vec<usize> = (0..tau_g_grid.len()).collect();
    sorted_tau.sort_by(|&a, &b| tau_g_grid[a].total_cmp(&tau_g_grid[b]));
    let optima = t_pi_grid
        .iter()
        .enumerate()
        .map(|(i, &t_pi)| {
            let row = &points[i * tau_g_grid.len()..(i + 1) * tau_g_grid.len()];
            let x: Vec<f64> = sorted_tau.iter().map(|&j| row[j].tau_g).collect();
            let y: Vec<f64> = sorted_tau.iter().map(|&j| row[j].dist).collect();
            let (tau_g, dist) = refined_minimum(&x, &y).expect("non-empty row");
            GaussianOptimum { t_pi, tau_g, dist }
        })
        .collect();
    Ok(GaussianSurface { points, optima })
}

pub const GAUSSIAN_CSV_HEADER: &str = "t_pi,tau_g,dist,s1_re,s1_im,s2_re,s2_im,t_pi_located";

pub fn write_gaussian_csv<W: Write>(mut w: W, surface: &GaussianSurface) -> Result<()> {
    writeln!(w, "{GAUSSIAN_CSV_HEADER}")?;
    for p in &surface.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(p.t_pi),
            fmt_f64(p.tau_g),
            fmt_f64(p.dist),
            fmt_f64(p.s1.re),
            fmt_f64(p.s1.im),
            fmt_f64(p.s2.re),
            fmt_f64(p.s2.im),
            fmt_f64(p.t_pi)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrapOptions {
        TrapOptions {
            n_grid: 64,
            sample_every: 1,
            ..Default::default()
        }
    }

    #[test]
    fn parabola_recovers_vertex() {
        let f = |x: f64| 3.0 * (x - 1.3).powi(2) + 0.5;
        let (x, y) = parabola_vertex([1.0, 1.2, 1.5], [f(1.0), f(1.2), f(1.5)]);
        assert!((x - 1.3).abs() < 1e-12 && (y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_power_law() {
        let x = [2.0, 3.0, 4.0, 6.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 0.3 * v.powf(-2.0)).collect();
        let fit = log_log_fit(&x, &y).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 0.3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(log_log_fit(&[1.0], &[1.0]).is_err());
        assert!(log_log_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn sech_setup_has_reference_gate_time() {
        let s = trapped_system(3.0, &small()).unwrap();
        assert!((s.t_pi - 8.0 * s.params.xi0.sqrt()).abs() < 1e-12);
        assert_eq!(s.system.delta, 0.0);
        assert!((s.g_numeric / s.g - 1.0).abs() < 1e-3, "{} vs {}", s.g_numeric, s.g);
    }

    #[test]
    fn gate_invariants_on_coarse_grid() {
        let run = run_upi(3.0, 1e-3, &small()).unwrap();
        assert!(run.s1.norm() <= 1.0 + 1e-9 && run.s2.norm() <= 1.0 + 1e-9);
        assert!((run.s1.norm() - 1.0).abs() < 1e-6, "{}", run.s1);
        assert!((run.dist.powi(2) - 2.0 * (1.0 + run.s2.re)).abs() < 1e-9);
        assert!((run.t_pi / (8.0 * gap_ratio_inverse(3.0).unwrap().sqrt()) - 1.0).abs() <= T_PI_WINDOW);
        assert_eq!(*run.traj.sample_times.last().unwrap(), run.t_pi);
        let cz = cz_from_gate(run);
        assert!((0.0..=1.0).contains(&cz.epsilon));
    }

    #[test]
    fn gaussian_without_coupling_is_identity() {
        let opts = GaussianOptions {
            n_grid: 128,
            box_len: 80.0,
            r_norm: 0.0,
            ..Default::default()
        };
        let p = gaussian_point(4.0, 1.5, 1e-2, &opts).unwrap();
        assert!((p.s2 - 1.0).norm() < 1e-8, "{}", p.s2);
        assert!((p.dist - 2.0).abs() < 1e-8);
        assert!((p.s1 - 1.0).norm() < 1e-8);
    }

    #[test]
    fn sweep_csv_layout() {
        let run = run_upi(4.0, 1e-3, &TrapOptions { n_grid: 32, ..small() }).unwrap();
        let mut buf = Vec::new();
        write_cz_csv(&mut buf, &[cz_from_gate(run)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dg_ratio,epsilon,s1_re,s1_im,s2_re,s2_im,t_pi_located\n"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 7);
    }
}
