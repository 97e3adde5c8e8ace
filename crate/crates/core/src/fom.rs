//! Closed-form figures of merit for resonators and trapped pulses (SI units).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::constants::{C, EPSILON_0, HBAR};
use crate::error::{Error, Result};
use crate::fmt_f64;

/// SHG efficiency conversion: 1 W⁻¹cm⁻² = 10⁴ W⁻¹m⁻².
pub const ETA0_CM2_TO_M2: f64 = 1e4;

/// Device description. Every field is optional; each formula names what it needs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Platform {
    pub name: Option<String>,
    /// FH wavelength (m).
    pub lambda_fh: Option<f64>,
    pub n: Option<f64>,
    pub n_g: Option<f64>,
    /// Quadratic susceptibility (m/V).
    pub d_eff: Option<f64>,
    /// Kerr susceptibility (m²/V²).
    pub chi_eff: Option<f64>,
    pub q_a: Option<f64>,
    pub q_b: Option<f64>,
    pub v_tilde: Option<f64>,
    pub a_tilde: Option<f64>,
    /// Normalized SHG efficiency (W⁻¹m⁻²).
    pub eta0: Option<f64>,
    /// Propagation loss (m⁻¹).
    pub alpha_loss: Option<f64>,
    /// Trap width (s).
    pub tau0: Option<f64>,
    /// Round-trip time (s).
    pub t_rt: Option<f64>,
    pub kappa_a: Option<f64>,
    pub kappa_b: Option<f64>,
    pub kappa_a_oc: Option<f64>,
    pub kappa_b_oc: Option<f64>,
}

/// JSON form of [`Platform`]; `eta0` is in W⁻¹cm⁻² as commonly quoted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_fh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_eff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_eff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0_w_cm2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_rt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_a_oc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_b_oc: Option<f64>,
}

impl TryFrom<PlatformRecord> for Platform {
    type Error = Error;

    fn try_from(r: PlatformRecord) -> Result<Self> {
        let p = Platform {
            name: r.name,
            lambda_fh: r.lambda_fh,
            n: r.n,
            n_g: r.n_g,
            d_eff: r.d_eff,
            chi_eff: r.chi_eff,
            q_a: r.q_a,
            q_b: r.q_b,
            v_tilde: r.v_tilde,
            a_tilde: r.a_tilde,
            eta0: r.eta0_w_cm2.map(|e| e * ETA0_CM2_TO_M2),
            alpha_loss: r.alpha_loss,
            tau0: r.tau0,
            t_rt: r.t_rt,
            kappa_a: r.kappa_a,
            kappa_b: r.kappa_b,
            kappa_a_oc: r.kappa_a_oc,
            kappa_b_oc: r.kappa_b_oc,
        };
        p.validate()?;
        Ok(p)
    }
}

fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingField(name))
}

impl Platform {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_fh", self.lambda_fh),
            ("n", self.n),
            ("n_g", self.n_g),
            ("d_eff", self.d_eff),
            ("chi_eff", self.chi_eff),
            ("q_a", self.q_a),
            ("q_b", self.q_b),
            ("v_tilde", self.v_tilde),
            ("a_tilde", self.a_tilde),
            ("eta0", self.eta0),
            ("alpha_loss", self.alpha_loss),
            ("tau0", self.tau0),
            ("t_rt", self.t_rt),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("kappa_a_oc", self.kappa_a_oc),
            ("kappa_b_oc", self.kappa_b_oc),
        ];
        for (name, v) in fields {
            if let Some(x) = v {
                crate::error::ensure_positive(name, x)?;
            }
        }
        for (oc, total, name) in [
            (self.kappa_a_oc, self.kappa_a, "kappa_a_oc"),
            (self.kappa_b_oc, self.kappa_b, "kappa_b_oc"),
        ] {
            if let (Some(oc), Some(total)) = (oc, total) {
                if oc > total {
                    return Err(Error::invalid(name, "outcoupling exceeds total decay rate"));
                }
            }
        }
        Ok(())
    }

    fn omega_a(&self) -> Result<f64> {
        Ok(2.0 * PI * C / need(self.lambda_fh, "lambda_fh")?)
    }

    pub fn group_velocity(&self) -> Result<f64> {
        Ok(C / need(self.n_g, "n_g")?)
    }
}

/// Single-mode χ(2) coupling from the normalized SH mode volume.
pub fn g_chi2(p: &Platform) -> Result<f64> {
    let lambda = need(p.lambda_fh, "lambda_fh")?;
    let n = need(p.n, "n")?;
    let d = need(p.d_eff, "d_eff")?;
    let v = need(p.v_tilde, "v_tilde")?;
    Ok(4.0 * d / lambda.powi(3) * (2.0 * PI.powi(3) * HBAR * C.powi(3) / (n.powi(3) * EPSILON_0 * v)).sqrt())
}

/// Geometric-mean resonator loss `(2πc/λ) √(2 / Q_a Q_b)`.
pub fn kappa_resonator(p: &Platform) -> Result<f64> {
    let q_a = need(p.q_a, "q_a")?;
    let q_b = need(p.q_b, "q_b")?;
    Ok(p.omega_a()? * (2.0 / (q_a * q_b)).sqrt())
}

pub fn g_over_kappa_chi2(p: &Platform) -> Result<f64> {
    let g = g_chi2(p)?;
    Ok(g / kappa_resonator(p)?)
}

/// Single-mode Kerr coupling `χ`.
pub fn chi_kerr(p: &Platform) -> Result<f64> {
    let lambda = need(p.lambda_fh, "lambda_fh")?;
    let n = need(p.n, "n")?;
    let chi = need(p.chi_eff, "chi_eff")?;
    let v = need(p.v_tilde, "v_tilde")?;
    Ok(3.0 * PI * PI * HBAR * C * C * chi / (n * EPSILON_0 * lambda.powi(5) * v))
}

/// Kerr cooperativity with `κ = 2πc / (λ Q_a)`.
pub fn chi_over_kappa_kerr(p: &Platform) -> Result<f64> {
    let q_a = need(p.q_a, "q_a")?;
    Ok(chi_kerr(p)? * q_a / p.omega_a()?)
}

/// Waveguide interaction strength `r = v_g √(ħ ω_b η₀)` with `ω_b = 2 ω_a`.
pub fn r_from_eta0(p: &Platform) -> Result<f64> {
    let eta0 = need(p.eta0, "eta0")?;
    let omega_b = 2.0 * p.omega_a()?;
    Ok(p.group_velocity()? * (HBAR * omega_b * eta0).sqrt())
}

pub fn g_cw(p: &Platform) -> Result<f64> {
    Ok(r_from_eta0(p)? / need(p.t_rt, "t_rt")?.sqrt())
}

pub fn g_trap(p: &Platform) -> Result<f64> {
    let tau0 = need(p.tau0, "tau0")?;
    Ok(PI * r_from_eta0(p)? / (4.0 * (2.0 * tau0).sqrt()))
}

pub fn kappa_from_loss(p: &Platform) -> Result<f64> {
    Ok(need(p.alpha_loss, "alpha_loss")? * p.group_velocity()?)
}

/// `g_trap / g_cw = (π / 4√2) √(T / τ0)`.
pub fn trap_enhancement(t_rt: f64, tau0: f64) -> f64 {
    PI / (4.0 * 2f64.sqrt()) * (t_rt / tau0).sqrt()
}

/// Total and outcoupling decay rates of both harmonics (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kappas {
    pub a: f64,
    pub b: f64,
    pub a_oc: f64,
    pub b_oc: f64,
}

impl Kappas {
    pub fn new(a: f64, b: f64, a_oc: f64, b_oc: f64) -> Result<Self> {
        for (name, v) in [("kappa_a", a), ("kappa_b", b), ("kappa_a_oc", a_oc), ("kappa_b_oc", b_oc)] {
            crate::error::ensure_positive(name, v)?;
        }
        if a_oc > a {
            return Err(Error::invalid("kappa_a_oc", "outcoupling exceeds total decay rate"));
        }
        if b_oc > b {
            return Err(Error::invalid("kappa_b_oc", "outcoupling exceeds total decay rate"));
        }
        Ok(Self { a, b, a_oc, b_oc })
    }

    /// Critically coupled pair with `κ_a = κ_b / 2` and geometric mean `kappa`.
    pub fn assumed(kappa: f64) -> Result<Self> {
        let b = 2f64.sqrt() * kappa;
        let a = b / 2.0;
        Self::new(a, b, a / 2.0, b / 2.0)
    }

    pub fn geometric_mean(&self) -> f64 {
        (self.a * self.b).sqrt()
    }
}

/// Rates from the platform, filling gaps with the critical-coupling assumption.
pub fn platform_kappas(p: &Platform) -> Result<Kappas> {
    match (p.kappa_a, p.kappa_b) {
        (Some(a), Some(b)) => Kappas::new(a, b, p.kappa_a_oc.unwrap_or(a / 2.0), p.kappa_b_oc.unwrap_or(b / 2.0)),
        (Some(a), None) => Kappas::new(a, 2.0 * a, p.kappa_a_oc.unwrap_or(a / 2.0), p.kappa_b_oc.unwrap_or(a)),
        (None, Some(b)) => Kappas::new(b / 2.0, b, p.kappa_a_oc.unwrap_or(b / 4.0), p.kappa_b_oc.unwrap_or(b / 2.0)),
        (None, None) => {
            let kappa = if p.alpha_loss.is_some() {
                kappa_from_loss(p)?
            } else {
                kappa_resonator(p)?
            };
            Kappas::assumed(kappa)
        }
    }
}

/// Normalized SHG conversion efficiency `P_out / P_in²` (W⁻¹).
pub fn eta_norm_from_g(g: f64, omega_a0: f64, k: &Kappas) -> Result<f64> {
    crate::error::ensure_positive("g", g)?;
    crate::error::ensure_positive("omega_a0", omega_a0)?;
    Ok(4.0 * g * g / (HBAR * omega_a0) * (k.b_oc / (k.b * k.b)) * (k.a_oc / (k.a * k.a)).powi(2))
}

/// Inverse of [`eta_norm_from_g`].
pub fn g_from_shg(eta_norm: f64, omega_a0: f64, k: &Kappas) -> Result<f64> {
    crate::error::ensure_positive("eta_norm", eta_norm)?;
    crate::error::ensure_positive("omega_a0", omega_a0)?;
    let unit = eta_norm_from_g(1.0, omega_a0, k)?;
    Ok((eta_norm / unit).sqrt())
}

/// OPO threshold `ħ ω_b κ_a² κ_b² / (g² κ_b,oc)`.
pub fn opo_threshold(g: f64, omega_b0: f64, k: &Kappas) -> Result<f64> {
    crate::error::ensure_positive("g", g)?;
    crate::error::ensure_positive("omega_b0", omega_b0)?;
    Ok(HBAR * omega_b0 * k.a * k.a * k.b * k.b / (g * g * k.b_oc))
}

/// Inverse of [`opo_threshold`].
pub fn g_from_opo_threshold(p_th: f64, omega_b0: f64, k: &Kappas) -> Result<f64> {
    crate::error::ensure_positive("p_th", p_th)?;
    Ok((HBAR * omega_b0 * k.a * k.a * k.b * k.b / (p_th * k.b_oc)).sqrt())
}

pub fn p_sat(p_th: f64) -> f64 {
    4.0 * p_th
}

/// One CSV row per platform; columns that cannot be computed are left empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FomRow {
    pub name: String,
    pub g_over_kappa_chi2: Option<f64>,
    pub chi_over_kappa_kerr: Option<f64>,
    pub r: Option<f64>,
    pub g_cw: Option<f64>,
    pub g_trap: Option<f64>,
    pub kappa_loss: Option<f64>,
    pub g_trap_over_g_cw: Option<f64>,
    pub g_trap_over_kappa: Option<f64>,
}

pub const FOM_CSV_HEADER: &str =
    "name,g_over_kappa_chi2,chi_over_kappa_kerr,r,g_cw,g_trap,kappa_loss,g_trap_over_g_cw,g_trap_over_kappa";

pub fn evaluate(p: &Platform, index: usize) -> FomRow {
    let g_trap = g_trap(p).ok();
    let g_cw = g_cw(p).ok();
    let kappa = kappa_from_loss(p).ok();
    FomRow {
        name: p.name.clone().unwrap_or_else(|| format!("platform_{index}")),
        g_over_kappa_chi2: g_over_kappa_chi2(p).ok(),
        chi_over_kappa_kerr: chi_over_kappa_kerr(p).ok(),
        r: r_from_eta0(p).ok(),
        g_cw,
        g_trap,
        kappa_loss: kappa,
        g_trap_over_g_cw: g_trap.zip(g_cw).map(|(a, b)| a / b),
        g_trap_over_kappa: g_trap.zip(kappa).map(|(a, b)| a / b),
    }
}

/// Parses a JSON array of platform records.
pub fn parse_platforms(json: &str) -> Result<Vec<Platform>> {
    let records: Vec<PlatformRecord> =
        serde_json::from_str(json).map_err(|e| Error::Format(format!("platform records: {e}")))?;
    records.into_iter().map(Platform::try_from).collect()
}

pub fn write_fom_csv<W: Write>(mut w: W, rows: &[FomRow]) -> Result<()> {
    let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    writeln!(w, "{FOM_CSV_HEADER}")?;
    for r in rows {
        if r.name.contains([',', '"', '\n']) {
            return Err(Error::invalid("name", "platform names may not contain commas, quotes or newlines"));
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.name,
            cell(r.g_over_kappa_chi2),
            cell(r.chi_over_kappa_kerr),
            cell(r.r),
            cell(r.g_cw),
            cell(r.g_trap),
            cell(r.kappa_loss),
            cell(r.g_trap_over_g_cw),
            cell(r.g_trap_over_kappa)
        )?;
    }
    Ok(())
}
