//! Split-step spectral integrator for the two-photon equations of motion.
//!
//! One step is `L(dt/2) N(dt) L(dt/2)` where the linear part is itself the
//! symmetric sandwich `V(dt/4) K(dt/2) V(dt/4)`. Kinetic factors are Fourier
//! multipliers (1D on `Q` and `S`, 2D on `R`), potential factors are per-site
//! phases, and the nonlinear part couples `R_ii` with `S_i` only. With the
//! contact term discretized as `δ_ij / Δξ`, the pair `(√2 Δξ R_ii, √Δξ S_i)`
//! rotates under `[[0, c], [c, 0]]` with `c = r / √(2Δξ)`, so every sub-step
//! is exactly unitary.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{observables, write_flux_csv, write_time_series_csv, Observables, TwoPhotonState};
use crate::trap_modes::{EigenmodeSet, Harmonic, TrapPotential};

/// Largest accepted `dt * rate` for the fastest local (potential or contact) rate.
pub const DT_GUARD: f64 = 0.1;

/// Everything the normalized Hamiltonian depends on.
#[derive(Clone, Debug)]
pub struct PulseSystem {
    pub potential: TrapPotential,
    pub rho: f64,
    pub delta: f64,
    /// Nonlinear coupling in units of the normalized `r` (1 for the physical system).
    pub r_norm: f64,
}

impl PulseSystem {
    pub fn new(potential: TrapPotential, rho: f64, delta: f64, r_norm: f64) -> Result<Self> {
        crate::error::ensure_positive("rho", rho)?;
        if !delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        if !(r_norm.is_finite() && r_norm >= 0.0) {
            return Err(Error::invalid("r_norm", "must be finite and >= 0"));
        }
        Ok(Self {
            potential,
            rho,
            delta,
            r_norm,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.potential.grid()
    }

    /// Per-site coupling of the contact interaction, `r / √(2Δξ)`.
    pub fn contact_coupling(&self) -> f64 {
        self.r_norm / (2.0 * self.grid().dxi()).sqrt()
    }

    /// Largest kinetic eigenvalue on the grid (SH or FH, whichever is larger).
    pub fn max_kinetic_rate(&self) -> f64 {
        let kmax = self
            .grid()
            .wavenumbers()
            .iter()
            .fold(0.0f64, |m, k| m.max(k.abs()));
        0.5 * self.rho.max(1.0) * kmax * kmax
    }

    /// Fastest rate of the locally acting (non-kinetic) parts of the step.
    pub fn max_local_rate(&self) -> f64 {
        let fh = self.potential.harmonic_samples(Harmonic::Fh, self.delta);
        let sh = self.potential.harmonic_samples(Harmonic::Sh, self.delta);
        let pot = fh
            .iter()
            .chain(&sh)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        pot.max(self.contact_coupling())
    }

    pub fn dt_max(&self) -> f64 {
        let rate = self.max_local_rate();
        if rate > 0.0 {
            DT_GUARD / rate
        } else {
            f64::INFINITY
        }
    }

    pub fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        let dt_max = self.dt_max();
        if dt > dt_max {
            return Err(Error::invalid(
                "dt",
                format!("{dt} exceeds the accuracy guard dt_max = {dt_max:.3e}"),
            ));
        }
        Ok(())
    }
}

/// Precomputed transforms and phase multipliers for one step size.
pub struct StepPlan {
    grid: Grid,
    dt: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// `exp(-i k²/2 · dt/2)`; the 2D factor for `R` is the outer product.
    kin_fh: Vec<Complex64>,
    /// `exp(-i ρ k²/2 · dt/2)`.
    kin_sh: Vec<Complex64>,
    /// `exp(-i U · dt/4)`.
    pot_fh: Vec<Complex64>,
    /// `exp(-i (δ + 2U) · dt/4)`.
    pot_sh: Vec<Complex64>,
    nl_cos: f64,
    nl_sin: f64,
    /// `√(2Δξ)`, converting between `R_ii` and `S_i` in the rotation.
    nl_ratio: f64,
}

fn phases(rates: impl Iterator<Item = f64>, h: f64) -> Vec<Complex64> {
    rates.map(|w| Complex64::from_polar(1.0, -w * h)).collect()
}

impl StepPlan {
    /// Plan for step `dt`. Negative `dt` integrates backwards in time.
    pub fn new(system: &PulseSystem, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::invalid("dt", format!("must be finite and nonzero, got {dt}")));
        }
        let grid = *system.grid();
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let k = grid.wavenumbers();
        let fh = system.potential.harmonic_samples(Harmonic::Fh, system.delta);
        let sh = system.potential.harmonic_samples(Harmonic::Sh, system.delta);
        let theta = system.contact_coupling() * dt;
        Ok(Self {
            grid,
            dt,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            kin_fh: phases(k.iter().map(|k| 0.5 * k * k), 0.5 * dt),
            kin_sh: phases(k.iter().map(|k| 0.5 * system.rho * k * k), 0.5 * dt),
            pot_fh: phases(fh.into_iter(), 0.25 * dt),
            pot_sh: phases(sh.into_iter(), 0.25 * dt),
            nl_cos: theta.cos(),
            nl_sin: theta.sin(),
            nl_ratio: (2.0 * grid.dxi()).sqrt(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest `||phase| - 1|` over every multiplier.
    pub fn unit_modulus_error(&self) -> f64 {
        self.kin_fh
            .iter()
            .chain(&self.kin_sh)
            .chain(&self.pot_fh)
            .chain(&self.pot_sh)
            .map(|p| (p.norm() - 1.0).abs())
            .fold((self.nl_cos.hypot(self.nl_sin) - 1.0).abs(), f64::max)
    }

    fn potential(&self, st: &mut TwoPhotonState, sectors: Sectors) {
        let n = self.grid.n();
        if sectors.one {
            for (q, p) in st.q.iter_mut().zip(&self.pot_fh) {
                *q *= p;
            }
        }
        if sectors.two {
            for (i, row) in st.r.chunks_exact_mut(n).enumerate() {
                let pi = self.pot_fh[i];
                for (r, pj) in row.iter_mut().zip(&self.pot_fh) {
                    *r *= pi * pj;
                }
            }
            for (s, p) in st.s.iter_mut().zip(&self.pot_sh) {
                *s *= p;
            }
        }
    }

    fn kinetic_1d(&self, field: &mut [Complex64], phase: &[Complex64], scratch: &mut [Complex64]) {
        let scale = 1.0 / self.grid.n() as f64;
        self.fft.process_with_scratch(field, scratch);
        for (f, p) in field.iter_mut().zip(phase) {
            *f *= p * scale;
        }
        self.ifft.process_with_scratch(field, scratch);
    }

    fn kinetic_2d(&self, r: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.grid.n();
        let scale = 1.0 / (n * n) as f64;
        // rows, transpose, rows: the layout ends up as [k_j][k_i], and the
        // multiplier is symmetric, so only one transpose is needed each way.
        self.fft.process_with_scratch(r, scratch);
        transpose_in_place(r, n);
        self.fft.process_with_scratch(r, scratch);
        for (a, row) in r.chunks_exact_mut(n).enumerate() {
            let pa = self.kin_fh[a] * scale;
            for (x, pb) in row.iter_mut().zip(&self.kin_fh) {
                *x *= pa * pb;
            }
        }
        self.ifft.process_with_scratch(r, scratch);
        transpose_in_place(r, n);
        self.ifft.process_with_scratch(r, scratch);
    }

    fn linear_half(&self, st: &mut TwoPhotonState, sectors: Sectors, scratch: &mut [Complex64]) {
        self.potential(st, sectors);
        if sectors.one {
            self.kinetic_1d(&mut st.q, &self.kin_fh, scratch);
        }
        if sectors.two {
            self.kinetic_2d(&mut st.r, scratch);
            self.kinetic_1d(&mut st.s, &self.kin_sh, scratch);
        }
        self.potential(st, sectors);
    }

    fn nonlinear(&self, st: &mut TwoPhotonState) {
        let n = self.grid.n();
        let (c, s, ratio) = (self.nl_cos, self.nl_sin, self.nl_ratio);
        let minus_i_sin = Complex64::new(0.0, -s);
        for i in 0..n {
            let r = st.r[i * n + i];
            let sh = st.s[i];
            st.r[i * n + i] = r * c + minus_i_sin * sh / ratio;
            st.s[i] = minus_i_sin * r * ratio + sh * c;
        }
    }

    fn scratch_len(&self) -> usize {
        self.fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len())
    }
}

fn transpose_in_place(m: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            m.swap(i * n + j, j * n + i);
        }
    }
}

/// Which invariant subspaces carry amplitude. The vacuum, one-photon and
/// (two-FH / one-SH) sectors never mix, so empty sectors can be skipped exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sectors {
    pub one: bool,
    pub two: bool,
}

impl Sectors {
    pub fn of(st: &TwoPhotonState) -> Self {
        let nz = |v: &[Complex64]| v.iter().any(|c| c.re != 0.0 || c.im != 0.0);
        Self {
            one: nz(&st.q),
            two: nz(&st.r) || nz(&st.s),
        }
    }
}

fn finite_or(st: &TwoPhotonState, substep: &'static str) -> Result<()> {
    if st.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            substep,
            t: f64::NAN,
        })
    }
}

fn step_sectors(
    st: &mut TwoPhotonState,
    plan: &StepPlan,
    sectors: Sectors,
    scratch: &mut Vec<Complex64>,
) -> Result<()> {
    scratch.resize(plan.scratch_len(), Complex64::new(0.0, 0.0));
    plan.linear_half(st, sectors, scratch);
    finite_or(st, "first linear")?;
    if sectors.two {
        plan.nonlinear(st);
        finite_or(st, "nonlinear")?;
    }
    plan.linear_half(st, sectors, scratch);
    finite_or(st, "second linear")?;
    if sectors.two {
        // the splitting preserves symmetry only up to roundoff
        st.symmetrize();
    }
    Ok(())
}

/// Advances `state` by one Strang step of `plan.dt()`.
pub fn step(state: &mut TwoPhotonState, plan: &StepPlan) -> Result<()> {
    state.grid.check_same(plan.grid())?;
    let mut scratch = Vec::new();
    step_sectors(state, plan, Sectors::of(state), &mut scratch)
}

/// Repeated stepping with a fixed plan; keeps scratch space and sector flags.
pub struct Stepper<'a> {
    plan: &'a StepPlan,
    sectors: Sectors,
    scratch: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(plan: &'a StepPlan, state: &TwoPhotonState) -> Result<Self> {
        state.grid.check_same(plan.grid())?;
        Ok(Self {
            plan,
            sectors: Sectors::of(state),
            scratch: Vec::new(),
        })
    }

    pub fn advance(&mut self, state: &mut TwoPhotonState, t: f64) -> Result<()> {
        step_sectors(state, self.plan, self.sectors, &mut self.scratch).map_err(|e| match e {
            Error::NonFinite { substep, .. } => Error::NonFinite { substep, t },
            other => other,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub records: Vec<Observables>,
    pub final_state: TwoPhotonState,
}

impl Trajectory {
    pub fn write_time_series_csv<W: Write>(&self, w: W) -> Result<()> {
        write_time_series_csv(w, &self.records)
    }

    pub fn write_flux_csv<W: Write>(&self, w: W) -> Result<()> {
        write_flux_csv(w, &self.final_state.grid, &self.records)
    }

    pub fn max_n_sh(&self) -> f64 {
        self.records.iter().fold(0.0, |m, o| m.max(o.n_sh))
    }
}

/// Integrates `initial` to `t_end`, sampling observables every `sample_every`
/// steps (plus `t = 0` and `t = t_end`). A shorter final step lands exactly on `t_end`.
pub fn propagate(
    system: &PulseSystem,
    initial: TwoPhotonState,
    fh: &EigenmodeSet,
    sh: &EigenmodeSet,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", format!("must be finite and > 0, got {t_end}")));
    }
    system.check_dt(dt)?;
    if sample_every == 0 {
        return Err(Error::invalid("sample_every", "must be at least 1"));
    }
    initial.grid.check_same(system.grid())?;

    let mut n_full = (t_end / dt).floor() as usize;
    let mut residual = t_end - n_full as f64 * dt;
    if residual > dt * (1.0 - 1e-9) {
        n_full += 1;
        residual = t_end - n_full as f64 * dt;
    }
    if residual < 1e-12 * t_end {
        residual = 0.0;
    }

    let plan = StepPlan::new(system, dt)?;
    let mut state = initial;
    let mut stepper = Stepper::new(&plan, &state)?;
    let mut sample_times = vec![0.0];
    let mut records = vec![observables(&state, fh, sh, 0.0)?];
    for k in 1..=n_full {
        let t = k as f64 * dt;
        stepper.advance(&mut state, t)?;
        if k % sample_every == 0 || (k == n_full && residual == 0.0) {
            sample_times.push(t);
            records.push(observables(&state, fh, sh, t)?);
        }
    }
    if residual > 0.0 {
        let tail = StepPlan::new(system, residual)?;
        Stepper::new(&tail, &state)?.advance(&mut state, t_end)?;
        sample_times.push(t_end);
        records.push(observables(&state, fh, sh, t_end)?);
    }
    // report the endpoint exactly, not as an accumulated product
    if let (Some(last), Some(rec)) = (sample_times.last_mut(), records.last_mut()) {
        *last = t_end;
        rec.t = t_end;
    }
    Ok(Trajectory {
        sample_times,
        records,
        final_state: state,
    })
}

const MAGIC: &[u8; 8] = b"TTRAP1\0\0";

/// Flat dump: 16-byte header (`TTRAP1\0\0`, u32 n_grid, u32 reserved) then
/// `P, Q, R (row-major), S` as little-endian `(re, im)` f64 pairs.
pub fn write_checkpoint<W: Write>(state: &TwoPhotonState, mut w: W) -> Result<()> {
    let n = u32::try_from(state.n()).map_err(|_| Error::Format("grid too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    let mut put = |c: &Complex64| -> std::io::Result<()> {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())
    };
    put(&state.p)?;
    for c in state.q.iter().chain(&state.r).chain(&state.s) {
        put(c)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R, box_len: f64) -> Result<TwoPhotonState> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let grid = Grid::new(n, box_len)?;
    let mut get = || -> Result<Complex64> {
        let mut b = [0u8; 16];
        r.read_exact(&mut b)?;
        Ok(Complex64::new(
            f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
            f64::from_le_bytes(b[8..].try_into().expect("8 bytes")),
        ))
    };
    let mut st = TwoPhotonState::zeros(grid);
    st.p = get()?;
    for i in 0..n {
        st.q[i] = get()?;
    }
    for i in 0..n * n {
        st.r[i] = get()?;
    }
    for i in 0..n {
        st.s[i] = get()?;
    }
    Ok(st)
}
