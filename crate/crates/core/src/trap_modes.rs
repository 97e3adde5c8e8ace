//! Trap potentials and the linear eigenmode problem for each harmonic.
//!
//! The single-harmonic operator is `-(c_kin/2) d^2/dxi^2 + V(xi)` on the
//! periodic grid, with the kinetic term applied exactly in Fourier space.
//! For the FH `c_kin = 1, V = U`; for the SH `c_kin = rho, V = delta + 2U`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{ensure_positive, Error, Result};
use crate::grid::Grid;

/// Eigenvalues below `-EDGE_TOLERANCE` count as bound.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Harmonic {
    Fh,
    Sh,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrapShape {
    /// `U(xi) = -alpha xi0^-2 sech^2(xi / xi0)`.
    SechFamily { alpha: f64, xi0: f64 },
    Tabulated,
}

/// FH trap potential sampled on a grid. The SH sees exactly twice these samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TrapPotential {
    grid: Grid,
    shape: TrapShape,
    samples: Vec<f64>,
}

impl TrapPotential {
    pub fn sech_family(grid: Grid, alpha: f64, xi0: f64) -> Result<Self> {
        ensure_positive("alpha", alpha)?;
        ensure_positive("xi0", xi0)?;
        let depth = alpha / (xi0 * xi0);
        let samples = grid
            .points()
            .into_iter()
            .map(|x| {
                let s = 1.0 / (x / xi0).cosh();
                -depth * s * s
            })
            .collect();
        Ok(Self {
            grid,
            shape: TrapShape::SechFamily { alpha, xi0 },
            samples,
        })
    }

    pub fn tabulated(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} potential samples for a {}-point grid",
                samples.len(),
                grid.n()
            )));
        }
        if samples.iter().any(|u| !u.is_finite() || *u > 0.0) {
            return Err(Error::invalid(
                "potential",
                "samples must be finite and non-positive (attractive trap)",
            ));
        }
        Ok(Self {
            grid,
            shape: TrapShape::Tabulated,
            samples,
        })
    }

    /// No trap at all.
    pub fn flat(grid: Grid) -> Self {
        Self {
            grid,
            shape: TrapShape::Tabulated,
            samples: vec![0.0; grid.n()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> TrapShape {
        self.shape
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Potential seen by `harmonic`, including the SH phase-mismatch offset.
    pub fn harmonic_samples(&self, harmonic: Harmonic, delta: f64) -> Vec<f64> {
        match harmonic {
            Harmonic::Fh => self.samples.clone(),
            Harmonic::Sh => self.samples.iter().map(|u| delta + 2.0 * u).collect(),
        }
    }
}

pub(crate) fn kinetic_prefactor(harmonic: Harmonic, rho: f64) -> f64 {
    match harmonic {
        Harmonic::Fh => 1.0,
        Harmonic::Sh => rho,
    }
}

/// Dense matrix of `-(c_kin/2) d^2/dxi^2` with the Fourier (spectral) derivative.
pub fn kinetic_matrix(grid: &Grid, c_kin: f64) -> DMatrix<f64> {
    let n = grid.n();
    let dxi = grid.dxi();
    let k = grid.wavenumbers();
    // Circulant kernel: K_ij depends only on (i - j) mod n.
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            k.iter()
                .map(|&km| 0.5 * c_kin * km * km * (km * d as f64 * dxi).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| kernel[(i + n - j) % n])
}

/// Dense single-harmonic operator `-(c_kin/2) d^2 + V`.
pub fn linear_operator(grid: &Grid, c_kin: f64, v: &[f64]) -> DMatrix<f64> {
    let mut h = kinetic_matrix(grid, c_kin);
    for (i, vi) in v.iter().enumerate() {
        h[(i, i)] += vi;
    }
    h
}

#[derive(Clone, Debug)]
pub struct EigenmodeSet {
    pub harmonic: Harmonic,
    pub grid: Grid,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `modes[m][i]` is mode `m` at sample `i`, normalized so `sum |psi|^2 dxi = 1`.
    pub modes: Vec<Vec<Complex64>>,
    pub n_bound: usize,
}

impl EigenmodeSet {
    pub fn ground(&self) -> &[Complex64] {
        &self.modes[0]
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn overlap(&self, m: usize, n: usize) -> Complex64 {
        let dxi = self.grid.dxi();
        self.modes[m]
            .iter()
            .zip(&self.modes[n])
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * dxi
    }

    /// CSV with columns `xi, re_psi_m, im_psi_m` for each mode.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "xi")?;
        for m in 0..self.modes.len() {
            write!(w, ",re_psi_{m},im_psi_{m}")?;
        }
        writeln!(w)?;
        for i in 0..self.grid.n() {
            write!(w, "{}", crate::fmt_f64(self.grid.xi(i)))?;
            for mode in &self.modes {
                write!(
                    w,
                    ",{},{}",
                    crate::fmt_f64(mode[i].re),
                    crate::fmt_f64(mode[i].im)
                )?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// CSV with columns `m, lambda, bound`.
    pub fn write_spectrum_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,lambda,bound")?;
        for (m, l) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{m},{},{}", crate::fmt_f64(*l), u8::from(m < self.n_bound))?;
        }
        Ok(())
    }
}

/// Lowest `n_modes` eigenpairs of the harmonic's linear operator.
pub fn solve_eigenmodes(
    potential: &TrapPotential,
    harmonic: Harmonic,
    rho: f64,
    delta: f64,
    n_modes: usize,
) -> Result<EigenmodeSet> {
    let grid = *potential.grid();
    let n = grid.n();
    if n_modes == 0 || n_modes > n {
        return Err(Error::invalid(
            "n_modes",
            format!("must be in 1..={n}, got {n_modes}"),
        ));
    }
    ensure_positive("rho", rho)?;
    let v = potential.harmonic_samples(harmonic, delta);
    let h = linear_operator(&grid, kinetic_prefactor(harmonic, rho), &v);

    let scale = h.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Internal(format!(
                    "discrete operator is not Hermitian at ({i}, {j})"
                )));
            }
        }
    }

    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    // Continuum edge sits at 0 for the FH and at delta for the SH.
    let edge = match harmonic {
        Harmonic::Fh => 0.0,
        Harmonic::Sh => delta,
    };
    let n_bound = order
        .iter()
        .filter(|&&m| eig.eigenvalues[m] - edge < -EDGE_TOLERANCE)
        .count();

    let inv_sqrt_dxi = 1.0 / grid.dxi().sqrt();
    let centre = grid.center_index();
    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut modes = Vec::with_capacity(n_modes);
    for (rank, &m) in order.iter().take(n_modes).enumerate() {
        let col = eig.eigenvectors.column(m);
        // Ground mode: positive at xi = 0. Others: positive at their largest sample.
        let anchor = if rank == 0 {
            centre
        } else {
            col.iamax()
        };
        let sign = if col[anchor] < 0.0 { -1.0 } else { 1.0 };
        modes.push(
            col.iter()
                .map(|&x| Complex64::new(sign * x * inv_sqrt_dxi, 0.0))
                .collect(),
        );
        eigenvalues.push(eig.eigenvalues[m]);
    }

    Ok(EigenmodeSet {
        harmonic,
        grid,
        eigenvalues,
        modes,
        n_bound,
    })
}

/// Positive root of `q (q + 1) / 2 = a`.
pub fn sech_exponent(a: f64) -> f64 {
    0.5 * (-1.0 + (1.0 + 8.0 * a).sqrt())
}

/// Normalization constant of `sech^q(xi / xi0)`.
fn sech_power_norm(q: f64, xi0: f64) -> f64 {
    (gamma(q + 0.5) / (PI.sqrt() * gamma(q) * xi0)).sqrt()
}

/// Closed-form ground modes of the sech-squared trap for both harmonics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticBoundModes {
    pub xi0: f64,
    pub q_a: f64,
    pub q_b: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    /// Binding energy of the FH ground mode.
    pub gap_a: f64,
    /// Binding energy of the SH ground mode.
    pub gap_b: f64,
    /// Phase mismatch `delta` for which `delta_000 = 0`.
    pub matching_offset: f64,
}

impl AnalyticBoundModes {
    pub fn psi_a(&self, xi: f64) -> f64 {
        self.norm_a * (1.0 / (xi / self.xi0).cosh()).powf(self.q_a)
    }

    pub fn psi_b(&self, xi: f64) -> f64 {
        self.norm_b * (1.0 / (xi / self.xi0).cosh()).powf(self.q_b)
    }

    pub fn sample_a(&self, grid: &Grid) -> Vec<Complex64> {
        grid.points().into_iter().map(|x| self.psi_a(x).into()).collect()
    }

    pub fn sample_b(&self, grid: &Grid) -> Vec<Complex64> {
        grid.points().into_iter().map(|x| self.psi_b(x).into()).collect()
    }

    /// FH ground eigenvalue.
    pub fn lambda_a0(&self) -> f64 {
        -self.gap_a
    }

    /// SH ground eigenvalue for the given phase mismatch.
    pub fn lambda_b0(&self, delta: f64) -> f64 {
        delta - self.gap_b
    }
}

pub fn analytic_bound_modes(alpha: f64, rho: f64, xi0: f64) -> Result<AnalyticBoundModes> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("rho", rho)?;
    ensure_positive("xi0", xi0)?;
    let q_a = sech_exponent(alpha);
    let q_b = sech_exponent(2.0 * alpha / rho);
    let w2 = 2.0 * xi0 * xi0;
    Ok(AnalyticBoundModes {
        xi0,
        q_a,
        q_b,
        norm_a: sech_power_norm(q_a, xi0),
        norm_b: sech_power_norm(q_b, xi0),
        gap_a: q_a * q_a / w2,
        gap_b: rho * q_b * q_b / w2,
        matching_offset: (rho * q_b * q_b - 2.0 * q_a * q_a) / w2,
    })
}

/// Closed-form `g_000` of the generalized sech trap.
///
/// `g = r c_b c_a^2 xi0 sqrt(pi) Gamma(q_a + q_b/2) / Gamma(q_a + q_b/2 + 1/2)` with
/// `c_q^2 = Gamma(q + 1/2) / (sqrt(pi) Gamma(q) xi0)`.
pub fn effective_g_general(alpha: f64, rho: f64, xi0: f64, r_norm: f64) -> Result<f64> {
    let m = analytic_bound_modes(alpha, rho, xi0)?;
    let (qa, qb) = (m.q_a, m.q_b);
    let ratio = gamma(qa + 0.5) * gamma(qa + 0.5 * qb) * gamma(qb + 0.5).sqrt()
        / (gamma(qa) * gamma(qa + 0.5 * qb + 0.5) * gamma(qb).sqrt());
    Ok(r_norm * ratio / (PI.powf(0.25) * xi0.sqrt()))
}

/// Nonlinear coupling and phase-mismatch tensors over the supplied mode sets.
///
/// Index order is `(l, m, n)` with `l` the SH mode and `m, n` FH modes.
#[derive(Clone, Debug)]
pub struct CouplingTensors {
    pub n_sh: usize,
    pub n_fh: usize,
    g: Vec<Complex64>,
    delta: Vec<f64>,
}

impl CouplingTensors {
    fn idx(&self, l: usize, m: usize, n: usize) -> usize {
        (l * self.n_fh + m) * self.n_fh + n
    }

    pub fn g(&self, l: usize, m: usize, n: usize) -> Complex64 {
        self.g[self.idx(l, m, n)]
    }

    pub fn delta(&self, l: usize, m: usize, n: usize) -> f64 {
        self.delta[self.idx(l, m, n)]
    }
}

/// `g_lmn = r sum_i conj(Psi_b,l) Psi_a,m Psi_a,n dxi` and
/// `delta_lmn = lambda_b,l - lambda_a,m - lambda_a,n`.
pub fn coupling_tensor(
    fh: &EigenmodeSet,
    sh: &EigenmodeSet,
    r_norm: f64,
) -> Result<CouplingTensors> {
    fh.grid.check_same(&sh.grid)?;
    if fh.harmonic != Harmonic::Fh || sh.harmonic != Harmonic::Sh {
        return Err(Error::invalid("modes", "expected an FH set and an SH set"));
    }
    let dxi = fh.grid.dxi();
    let n_fh = fh.modes.len();
    let n_sh = sh.modes.len();
    let mut g = Vec::with_capacity(n_sh * n_fh * n_fh);
    let mut delta = Vec::with_capacity(n_sh * n_fh * n_fh);
    let mut product = vec![Complex64::new(0.0, 0.0); fh.grid.n()];
    for (l, psi_b) in sh.modes.iter().enumerate() {
        for m in 0..n_fh {
            for (p, (a, b)) in product.iter_mut().zip(psi_b.iter().zip(&fh.modes[m])) {
                *p = a.conj() * b;
            }
            for n in 0..n_fh {
                let overlap: Complex64 = product
                    .iter()
                    .zip(&fh.modes[n])
                    .map(|(p, c)| p * c)
                    .sum();
                g.push(overlap * (r_norm * dxi));
                delta.push(sh.eigenvalues[l] - fh.eigenvalues[m] - fh.eigenvalues[n]);
            }
        }
    }
    Ok(CouplingTensors {
        n_sh,
        n_fh,
        g,
        delta,
    })
}

/// Leakage index triple whose phase mismatch falls below the protecting gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapViolation {
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub mismatch: f64,
    pub bound: f64,
}

/// Checks `|delta_l00| >= gap_b` for `l > 0` and `|delta_0mn| >= gap_a` for
/// `(m, n) != (0, 0)`, each to a relative slack `rel_tol`.
pub fn leakage_gap_violations(
    fh: &EigenmodeSet,
    sh: &EigenmodeSet,
    gap_a: f64,
    gap_b: f64,
    rel_tol: f64,
) -> Vec<GapViolation> {
    let la = &fh.eigenvalues;
    let lb = &sh.eigenvalues;
    let mut out = Vec::new();
    for (l, lbl) in lb.iter().enumerate().skip(1) {
        let d = lbl - 2.0 * la[0];
        if d.abs() < gap_b * (1.0 - rel_tol) {
            out.push(GapViolation {
                l,
                m: 0,
                n: 0,
                mismatch: d,
                bound: gap_b,
            });
        }
    }
    for m in 0..la.len() {
        for n in m..la.len() {
            if m == 0 && n == 0 {
                continue;
            }
            let d = lb[0] - la[m] - la[n];
            if d.abs() < gap_a * (1.0 - rel_tol) {
                out.push(GapViolation {
                    l: 0,
                    m,
                    n,
                    mismatch: d,
                    bound: gap_a,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2_error(a: &[Complex64], b: &[Complex64], dxi: f64) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * dxi).sqrt()
    }

    #[test]
    fn sech_ground_mode_matches_closed_form() {
        let grid = Grid::new(512, 40.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        let fh = solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 4).unwrap();
        let exact: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|&x| Complex64::new(1.0 / (2.0f64.sqrt() * x.cosh()), 0.0))
            .collect();
        assert!(l2_error(fh.ground(), &exact, grid.dxi()) < 1e-6);
        assert!((fh.ground_energy() + 0.5).abs() < 1e-6);
        assert_eq!(fh.n_bound, 1);
    }

    #[test]
    fn free_particle_spectrum() {
        let grid = Grid::new(32, 10.0).unwrap();
        let u = TrapPotential::flat(grid);
        for (harmonic, c) in [(Harmonic::Fh, 1.0), (Harmonic::Sh, 2.0)] {
            let set = solve_eigenmodes(&u, harmonic, 2.0, 0.0, 32).unwrap();
            let mut expected: Vec<f64> = grid
                .wavenumbers()
                .iter()
                .map(|k| 0.5 * c * k * k)
                .collect();
            expected.sort_by(f64::total_cmp);
            for (a, b) in set.eigenvalues.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            assert_eq!(set.n_bound, 0);
            // the uniform mode
            let flat = 1.0 / grid.box_len().sqrt();
            assert!(set.ground().iter().all(|p| (p.re - flat).abs() < 1e-10));
        }
    }

    #[test]
    fn modes_are_orthonormal() {
        let grid = Grid::new(128, 30.0).unwrap();
        let u = TrapPotential::sech_family(grid, 3.0, 1.0).unwrap();
        let set = solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 20).unwrap();
        for m in 0..20 {
            for n in 0..20 {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((set.overlap(m, n) - expected).norm() < 1e-10);
            }
        }
        assert!(set.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        // alpha = 3: q = 2, two bound states at -q^2/2 and -(q-1)^2/2
        assert_eq!(set.n_bound, 2);
        assert!((set.eigenvalues[0] + 2.0).abs() < 1e-6);
        assert!((set.eigenvalues[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn operator_is_hermitian_on_random_vectors() {
        let grid = Grid::new(64, 20.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        let h = linear_operator(&grid, 2.0, &u.harmonic_samples(Harmonic::Sh, 0.3));
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let u_vec = nalgebra::DVector::from_fn(64, |_, _| rnd());
        let v_vec = nalgebra::DVector::from_fn(64, |_, _| rnd());
        let lhs = u_vec.dot(&(&h * &v_vec));
        let rhs = (&h * &u_vec).dot(&v_vec);
        assert!((lhs - rhs).abs() <= 1e-12 * u_vec.norm() * v_vec.norm() * h.amax());
    }

    #[test]
    fn too_many_modes_rejected() {
        let grid = Grid::new(8, 8.0).unwrap();
        let u = TrapPotential::flat(grid);
        assert!(solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 9).is_err());
        assert!(solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 0).is_err());
    }

    #[test]
    fn analytic_reference_cases() {
        let m = analytic_bound_modes(1.0, 2.0, 1.0).unwrap();
        assert!((m.q_a - 1.0).abs() < 1e-15 && (m.q_b - 1.0).abs() < 1e-15);
        assert!((m.gap_a - 0.5).abs() < 1e-15);
        assert!((m.gap_b - 2.0 * m.gap_a).abs() < 1e-15);
        assert_eq!(m.matching_offset, 0.0);
        assert!((m.norm_a - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);

        let m3 = analytic_bound_modes(3.0, 2.0, 1.0).unwrap();
        assert!((m3.q_a - 2.0).abs() < 1e-15 && (m3.q_b - 2.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_coupling_reduces_to_sech_case() {
        let g = effective_g_general(1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((g - PI / (4.0 * 2.0f64.sqrt())).abs() < 1e-12);
        assert!((g - 0.555_360_367_270_7).abs() < 1e-12);
        let g4 = effective_g_general(1.0, 2.0, 4.0, 1.0).unwrap();
        assert!((g4 - PI / (4.0 * 8.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn generalized_coupling_matches_quadrature() {
        // Independent trapezoid quadrature of c_b c_a^2 sech^(2 q_a + q_b).
        for alpha in [1.0, 2.0, 3.0] {
            for rho in [1.0, 2.0] {
                let m = analytic_bound_modes(alpha, rho, 1.0).unwrap();
                let n = 4096;
                let l = 60.0;
                let h = l / n as f64;
                let mut norm_a = 0.0;
                let mut norm_b = 0.0;
                let mut overlap = 0.0;
                for i in 0..n {
                    let x = -0.5 * l + i as f64 * h;
                    let s = 1.0 / x.cosh();
                    norm_a += s.powf(2.0 * m.q_a) * h;
                    norm_b += s.powf(2.0 * m.q_b) * h;
                    overlap += s.powf(2.0 * m.q_a + m.q_b) * h;
                }
                let quad = overlap / (norm_a * norm_b.sqrt());
                let closed = effective_g_general(alpha, rho, 1.0, 1.0).unwrap();
                assert!(
                    ((closed - quad) / quad).abs() < 1e-9,
                    "alpha {alpha} rho {rho}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn coupling_tensor_of_sech_trap() {
        let grid = Grid::new(256, 40.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        let fh = solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 6).unwrap();
        let sh = solve_eigenmodes(&u, Harmonic::Sh, 2.0, 0.0, 6).unwrap();
        let t = coupling_tensor(&fh, &sh, 1.0).unwrap();
        assert!((t.g(0, 0, 0).re - PI / (4.0 * 2.0f64.sqrt())).abs() < 1e-9);
        assert!(t.delta(0, 0, 0).abs() < 1e-9);
        for l in 0..6 {
            for m in 0..6 {
                for n in 0..6 {
                    assert!((t.g(l, m, n) - t.g(l, n, m)).norm() < 1e-14);
                    assert!((t.delta(l, m, n) - t.delta(l, n, m)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn leakage_mismatch_is_bounded_by_gap() {
        let grid = Grid::new(256, 40.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        let fh = solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 256).unwrap();
        let sh = solve_eigenmodes(&u, Harmonic::Sh, 2.0, 0.0, 256).unwrap();
        let m = analytic_bound_modes(1.0, 2.0, 1.0).unwrap();
        let v = leakage_gap_violations(&fh, &sh, m.gap_a, m.gap_b, 1e-6);
        assert!(v.is_empty(), "{:?}", &v[..v.len().min(5)]);

        // A trap with a second bound FH mode breaks the bound.
        let deep = TrapPotential::sech_family(grid, 3.0, 1.0).unwrap();
        let m3 = analytic_bound_modes(3.0, 2.0, 1.0).unwrap();
        let fh = solve_eigenmodes(&deep, Harmonic::Fh, 2.0, m3.matching_offset, 64).unwrap();
        let sh = solve_eigenmodes(&deep, Harmonic::Sh, 2.0, m3.matching_offset, 64).unwrap();
        let v = leakage_gap_violations(&fh, &sh, m3.gap_a, m3.gap_b, 1e-6);
        assert!(v.iter().any(|x| x.l == 0 && x.m == 0 && x.n == 1));
    }

    #[test]
    fn tabulated_potential_validation() {
        let grid = Grid::new(4, 4.0).unwrap();
        assert!(TrapPotential::tabulated(grid, vec![0.0, -1.0, -1.0, 0.0]).is_ok());
        assert!(TrapPotential::tabulated(grid, vec![0.0, 1.0, -1.0, 0.0]).is_err());
        assert!(TrapPotential::tabulated(grid, vec![0.0; 3]).is_err());
    }

    #[test]
    fn sh_potential_is_twice_fh() {
        let grid = Grid::new(16, 10.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.5, 0.7).unwrap();
        let a = u.harmonic_samples(Harmonic::Fh, 0.0);
        let b = u.harmonic_samples(Harmonic::Sh, 0.0);
        assert!(a.iter().zip(&b).all(|(x, y)| *y == 2.0 * x));
        assert!(a.iter().all(|x| *x <= 0.0));
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let grid = Grid::new(8, 8.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        let set = solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 2).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "xi,re_psi_0,im_psi_0,re_psi_1,im_psi_1");
        assert_eq!(lines.count(), 8);
        assert!(!text.contains('\r'));
    }
}
