//! Conversion between physical waveguide parameters and the dimensionless
//! description used by every simulation, plus the gap-ratio relation that
//! ties the trap width to `Delta / g`.
//!
//! With `t_c = (|beta2_a| / (r^4 beta1))^(1/3)` and
//! `tau_c = (|beta2_a| / (r beta1))^(2/3)`, the FH group-velocity dispersion
//! and the parametric coupling both acquire the coefficient 1/2, and the
//! remaining physics is carried by the trap shape, the GVD ratio `rho` and the
//! phase mismatch `delta`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure_positive, Error, Result};
use crate::grid::Grid;

pub const DEFAULT_N_GRID: usize = 256;
/// Default periodic extent in units of the trap width.
pub const DEFAULT_BOX_PER_XI0: f64 = 40.0;
/// Smallest box (in trap widths) accepted before boundary wrap-around matters.
pub const MIN_BOX_PER_XI0: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalWaveguide {
    /// Parametric interaction strength (s^-1/2).
    pub r: f64,
    /// Inverse group velocity (s/m).
    pub beta1: f64,
    /// FH group-velocity dispersion (s^2/m); negative when anomalous.
    pub beta2_a: f64,
    /// SH group-velocity dispersion (s^2/m).
    pub beta2_b: f64,
    /// FH carrier angular frequency (rad/s).
    pub omega_a0: f64,
    /// SH carrier angular frequency (rad/s).
    pub omega_b0: f64,
    /// Trap width (s).
    pub tau0: f64,
}

impl PhysicalWaveguide {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("r", self.r)?;
        ensure_positive("beta1", self.beta1)?;
        ensure_positive("tau0", self.tau0)?;
        if !self.beta2_b.is_finite() || !self.omega_a0.is_finite() || !self.omega_b0.is_finite() {
            return Err(Error::invalid("waveguide", "all fields must be finite"));
        }
        if !(self.beta2_a.is_finite() && self.beta2_a < 0.0) {
            return Err(Error::invalid(
                "beta2_a",
                format!(
                    "FH dispersion must be anomalous (beta2_a < 0) to support a bound mode, got {}",
                    self.beta2_a
                ),
            ));
        }
        Ok(())
    }
}

/// Dimensionless system description together with the scales that map it
/// back to physical units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// Slow-time scale (s).
    pub t_c: f64,
    /// Fast-time scale (s).
    pub tau_c: f64,
    pub xi0: f64,
    pub rho: f64,
    pub delta: f64,
    /// Fast-time extent `T / tau_c`.
    pub box_len: f64,
    pub n_grid: usize,
}

impl NormalizedParams {
    /// Builds a parameter set directly in normalized units (`t_c = tau_c = 1`).
    pub fn dimensionless(
        xi0: f64,
        rho: f64,
        delta: f64,
        n_grid: usize,
        box_len: f64,
    ) -> Result<Self> {
        let p = Self {
            t_c: 1.0,
            tau_c: 1.0,
            xi0,
            rho,
            delta,
            box_len,
            n_grid,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("t_c", self.t_c)?;
        ensure_positive("tau_c", self.tau_c)?;
        ensure_positive("xi0", self.xi0)?;
        ensure_positive("rho", self.rho)?;
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        check_box_and_grid(self.xi0, self.n_grid, self.box_len)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.n_grid, self.box_len).expect("validated on construction")
    }
}

fn check_box_and_grid(xi0: f64, n_grid: usize, box_len: f64) -> Result<()> {
    if !n_grid.is_power_of_two() {
        return Err(Error::invalid(
            "n_grid",
            format!("must be a power of two, got {n_grid}"),
        ));
    }
    if !(box_len.is_finite() && box_len >= MIN_BOX_PER_XI0 * xi0 * (1.0 - 1e-12)) {
        return Err(Error::invalid(
            "box",
            format!(
                "must be at least {MIN_BOX_PER_XI0} trap widths ({}), got {box_len}",
                MIN_BOX_PER_XI0 * xi0
            ),
        ));
    }
    Ok(())
}

pub fn normalize(w: &PhysicalWaveguide, n_grid: usize, box_len: f64) -> Result<NormalizedParams> {
    w.validate()?;
    let gvd = w.beta2_a.abs() / w.beta1;
    let t_c = (gvd / w.r.powi(4)).cbrt();
    let tau_c = (gvd / w.r).cbrt().powi(2);
    let xi0 = w.tau0 / tau_c;
    check_box_and_grid(xi0, n_grid, box_len)?;
    Ok(NormalizedParams {
        t_c,
        tau_c,
        xi0,
        rho: w.beta2_b / w.beta2_a,
        delta: (w.omega_b0 - 2.0 * w.omega_a0) * t_c,
        box_len,
        n_grid,
    })
}

/// Inverse of [`normalize`]. `beta1` and `omega_a0` are not recoverable from
/// the dimensionless problem and have to be supplied.
pub fn denormalize(p: &NormalizedParams, beta1: f64, omega_a0: f64) -> Result<PhysicalWaveguide> {
    p.validate()?;
    ensure_positive("beta1", beta1)?;
    // tau_c^(3/2) / t_c^3 = r^3
    let r = p.tau_c.sqrt() / p.t_c;
    let beta2_a = -p.tau_c.powf(1.5) * r * beta1;
    Ok(PhysicalWaveguide {
        r,
        beta1,
        beta2_a,
        beta2_b: p.rho * beta2_a,
        omega_a0,
        omega_b0: 2.0 * omega_a0 + p.delta / p.t_c,
        tau0: p.xi0 * p.tau_c,
    })
}

const GAP_PREFACTOR: f64 = 2.0 * SQRT_2 / PI;

/// `Delta / g` of the sech trap (alpha = 1, rho = 2) of normalized width `xi0`.
pub fn gap_ratio(xi0: f64) -> Result<f64> {
    ensure_positive("xi0", xi0)?;
    Ok(GAP_PREFACTOR * xi0.powf(-1.5))
}

/// Trap width producing the requested `Delta / g`.
pub fn gap_ratio_inverse(dg_ratio: f64) -> Result<f64> {
    ensure_positive("dg_ratio", dg_ratio)?;
    Ok((GAP_PREFACTOR / dg_ratio).powf(2.0 / 3.0))
}

/// Analytic gate time `sqrt(2) pi / g` in units of `t_c` for the sech trap.
pub fn analytic_t_pi(xi0: f64) -> f64 {
    8.0 * xi0.sqrt()
}
