//! Quantum state restricted to at most two FH photons or one SH photon.
//!
//! The ket is `(P + ∫Q a† + ∫∫R a†a† + ∫S b†)|0>` with `R` symmetric. On the
//! grid the field operators carry `[a_i, a_j†] = δ_ij / Δξ`, so the squared
//! norm is `|P|² + Σ|Q|²Δξ + 2ΣΣ|R|²Δξ² + Σ|S|²Δξ`. The factor 2 on the
//! two-photon part comes from the two Wick pairings of `<0|a a a† a†|0>`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::SQRT_2;
use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::trap_modes::EigenmodeSet;
use crate::fmt_f64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonState {
    pub grid: Grid,
    pub p: Complex64,
    pub q: Vec<Complex64>,
    /// Row-major `n x n`, `r[i * n + j] = R(ξ_i, ξ_j)`.
    pub r: Vec<Complex64>,
    pub s: Vec<Complex64>,
}

fn check_mode(psi: &[Complex64], grid: &Grid) -> Result<()> {
    if psi.len() != grid.n() {
        return Err(Error::GridMismatch(format!(
            "mode has {} samples, grid has {}",
            psi.len(),
            grid.n()
        )));
    }
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.dxi();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(
            "psi0",
            format!("mode must be normalized on the grid, got norm {norm}"),
        ));
    }
    Ok(())
}

impl TwoPhotonState {
    pub fn vacuum(grid: Grid) -> Self {
        let n = grid.n();
        Self {
            grid,
            p: Complex64::new(1.0, 0.0),
            q: vec![ZERO; n],
            r: vec![ZERO; n * n],
            s: vec![ZERO; n],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            p: ZERO,
            ..Self::vacuum(grid)
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn r_at(&self, i: usize, j: usize) -> Complex64 {
        self.r[i * self.n() + j]
    }

    /// Replaces `R` by `(R + Rᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.r[i * n + j] + self.r[j * n + i]);
                self.r[i * n + j] = avg;
                self.r[j * n + i] = avg;
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.r[i * n + j] - self.r[j * n + i]).norm());
            }
        }
        worst
    }

    /// `<self|other>` with the bosonic weights of the norm.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let dxi = self.grid.dxi();
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
        };
        Ok(self.p.conj() * other.p
            + dot(&self.q, &other.q) * dxi
            + dot(&self.r, &other.r) * (2.0 * dxi * dxi)
            + dot(&self.s, &other.s) * dxi)
    }

    pub fn norm_sqr(&self) -> f64 {
        let dxi = self.grid.dxi();
        let sum = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        self.p.norm_sqr()
            + sum(&self.q) * dxi
            + 2.0 * sum(&self.r) * dxi * dxi
            + sum(&self.s) * dxi
    }

    /// `|<self|other>|²` for normalized states.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let dxi = self.grid.dxi();
        let diff = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
        };
        let d = (self.p - other.p).norm_sqr()
            + diff(&self.q, &other.q) * dxi
            + diff(&self.r, &other.r) * (2.0 * dxi * dxi)
            + diff(&self.s, &other.s) * dxi;
        Ok(d.sqrt())
    }

    pub fn n_fh(&self) -> f64 {
        let dxi = self.grid.dxi();
        self.q.iter().map(|c| c.norm_sqr()).sum::<f64>() * dxi
            + 4.0 * self.r.iter().map(|c| c.norm_sqr()).sum::<f64>() * dxi * dxi
    }

    pub fn n_sh(&self) -> f64 {
        self.s.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dxi()
    }

    /// `<N_a> + 2 <N_b>`, conserved by the χ(2) dynamics.
    pub fn manley_rowe(&self) -> f64 {
        self.n_fh() + 2.0 * self.n_sh()
    }

    /// Projection onto `|2 0>` of mode `psi` (no phase correction).
    pub fn two_photon_amplitude(&self, psi: &[Complex64]) -> Complex64 {
        let n = self.n();
        let dxi = self.grid.dxi();
        let mut acc = ZERO;
        for i in 0..n {
            let row = &self.r[i * n..(i + 1) * n];
            let inner: Complex64 = row.iter().zip(psi).map(|(r, p)| p.conj() * r).sum();
            acc += psi[i].conj() * inner;
        }
        acc * (SQRT_2 * dxi * dxi)
    }

    /// `<psi|Q>`, the single-FH-photon amplitude in mode `psi`.
    pub fn one_photon_amplitude(&self, psi: &[Complex64]) -> Complex64 {
        self.q
            .iter()
            .zip(psi)
            .map(|(q, p)| p.conj() * q)
            .sum::<Complex64>()
            * self.grid.dxi()
    }

    /// `<psi|S>`, the single-SH-photon amplitude in mode `psi`.
    pub fn sh_amplitude(&self, psi: &[Complex64]) -> Complex64 {
        self.s
            .iter()
            .zip(psi)
            .map(|(s, p)| p.conj() * s)
            .sum::<Complex64>()
            * self.grid.dxi()
    }

    pub fn fh_flux(&self) -> Vec<f64> {
        let n = self.n();
        let dxi = self.grid.dxi();
        (0..n)
            .map(|i| {
                let row: f64 = self.r[i * n..(i + 1) * n].iter().map(|c| c.norm_sqr()).sum();
                self.q[i].norm_sqr() + 4.0 * row * dxi
            })
            .collect()
    }

    pub fn sh_flux(&self) -> Vec<f64> {
        self.s.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite()
            && self.q.iter().all(|c| c.is_finite())
            && self.r.iter().all(|c| c.is_finite())
            && self.s.iter().all(|c| c.is_finite())
    }
}

/// Two FH photons in `psi0`: `R_ij = psi0_i psi0_j / sqrt(2)`.
pub fn init_two_photon_bound(psi0: &[Complex64], grid: Grid) -> Result<TwoPhotonState> {
    init_superposition(ZERO, ZERO, Complex64::new(1.0, 0.0), psi0, grid)
}

/// `c0|0> + c1|1> + c2|2>` in mode `psi0`, SH in vacuum.
pub fn init_superposition(
    c0: Complex64,
    c1: Complex64,
    c2: Complex64,
    psi0: &[Complex64],
    grid: Grid,
) -> Result<TwoPhotonState> {
    check_mode(psi0, &grid)?;
    let total = c0.norm_sqr() + c1.norm_sqr() + c2.norm_sqr();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(
            "coefficients",
            format!("|c0|² + |c1|² + |c2|² must be 1, got {total}"),
        ));
    }
    let n = grid.n();
    let mut st = TwoPhotonState::zeros(grid);
    st.p = c0;
    for (q, p) in st.q.iter_mut().zip(psi0) {
        *q = c1 * p;
    }
    let amp = c2 / SQRT_2;
    for i in 0..n {
        for j in 0..n {
            st.r[i * n + j] = amp * psi0[i] * psi0[j];
        }
    }
    st.symmetrize();
    Ok(st)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub fh_flux: Vec<f64>,
    pub sh_flux: Vec<f64>,
    pub n_sh: f64,
    /// Interaction-picture projection onto `|2 0>` of the FH ground mode.
    pub c20: Complex64,
    /// Interaction-picture projection onto `|0 1>` of the SH ground mode.
    pub c01: Complex64,
    /// Pseudo-Bloch vector `(X, Y, Z)` on span(|2 0>, |0 1>).
    pub bloch: [f64; 3],
    pub norm: f64,
    pub manley_rowe: f64,
}

/// Pseudo-Pauli expectations: `X = 2 Re(c20* c01)`, `Y = 2 Im(c20* c01)`,
/// `Z = |c20|² - |c01|²`.
pub fn bloch_vector(c20: Complex64, c01: Complex64) -> [f64; 3] {
    let cross = c20.conj() * c01;
    [2.0 * cross.re, 2.0 * cross.im, c20.norm_sqr() - c01.norm_sqr()]
}

/// Interaction-picture `c20` using the numerically computed ground energy.
pub fn c20(state: &TwoPhotonState, fh: &EigenmodeSet, t: f64) -> Complex64 {
    state.two_photon_amplitude(fh.ground()) * Complex64::from_polar(1.0, 2.0 * fh.ground_energy() * t)
}

/// Interaction-picture `c01` using the numerically computed ground energy.
pub fn c01(state: &TwoPhotonState, sh: &EigenmodeSet, t: f64) -> Complex64 {
    state.sh_amplitude(sh.ground()) * Complex64::from_polar(1.0, sh.ground_energy() * t)
}

pub fn observables(
    state: &TwoPhotonState,
    fh: &EigenmodeSet,
    sh: &EigenmodeSet,
    t: f64,
) -> Result<Observables> {
    state.grid.check_same(&fh.grid)?;
    state.grid.check_same(&sh.grid)?;
    let c20 = c20(state, fh, t);
    let c01 = c01(state, sh, t);
    Ok(Observables {
        t,
        fh_flux: state.fh_flux(),
        sh_flux: state.sh_flux(),
        n_sh: state.n_sh(),
        c20,
        c01,
        bloch: bloch_vector(c20, c01),
        norm: state.norm_sqr(),
        manley_rowe: state.manley_rowe(),
    })
}

/// Time-series CSV: `t,n_sh,X,Y,Z,norm,mr`.
pub fn write_time_series_csv<W: Write>(mut w: W, records: &[Observables]) -> Result<()> {
    writeln!(w, "t,n_sh,X,Y,Z,norm,mr")?;
    for o in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(o.t),
            fmt_f64(o.n_sh),
            fmt_f64(o.bloch[0]),
            fmt_f64(o.bloch[1]),
            fmt_f64(o.bloch[2]),
            fmt_f64(o.norm),
            fmt_f64(o.manley_rowe)
        )?;
    }
    Ok(())
}

/// Flux snapshot CSV in long form: `t,xi,fh_flux,sh_flux`.
pub fn write_flux_csv<W: Write>(mut w: W, grid: &Grid, records: &[Observables]) -> Result<()> {
    writeln!(w, "t,xi,fh_flux,sh_flux")?;
    for o in records {
        for i in 0..grid.n() {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(o.t),
                fmt_f64(grid.xi(i)),
                fmt_f64(o.fh_flux[i]),
                fmt_f64(o.sh_flux[i])
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap_modes::{solve_eigenmodes, Harmonic, TrapPotential};
    use proptest::prelude::*;

    fn sech_setup(n: usize) -> (Grid, EigenmodeSet, EigenmodeSet) {
        let grid = Grid::new(n, 40.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        let fh = solve_eigenmodes(&u, Harmonic::Fh, 2.0, 0.0, 2).unwrap();
        let sh = solve_eigenmodes(&u, Harmonic::Sh, 2.0, 0.0, 2).unwrap();
        (grid, fh, sh)
    }

    #[test]
    fn fresh_two_photon_state() {
        let (grid, fh, sh) = sech_setup(128);
        let st = init_two_photon_bound(fh.ground(), grid).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
        let obs = observables(&st, &fh, &sh, 0.0).unwrap();
        assert!((obs.fh_flux.iter().sum::<f64>() * grid.dxi() - 2.0).abs() < 1e-12);
        assert!((obs.c20 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(obs.n_sh, 0.0);
        assert!((obs.bloch[0]).abs() < 1e-12 && obs.bloch[1].abs() < 1e-12);
        assert!((obs.bloch[2] - 1.0).abs() < 1e-12);
        assert!((obs.manley_rowe - 2.0).abs() < 1e-12);
        assert_eq!(st.max_asymmetry(), 0.0);
    }

    #[test]
    fn superposition_norms() {
        let (grid, fh, _) = sech_setup(64);
        let vac = init_superposition(1.0.into(), ZERO, ZERO, fh.ground(), grid).unwrap();
        assert_eq!(vac.norm_sqr(), 1.0);
        let one = init_superposition(ZERO, 1.0.into(), ZERO, fh.ground(), grid).unwrap();
        assert!((one.norm_sqr() - 1.0).abs() < 1e-12);
        let mix = init_superposition(
            0.5.into(),
            (1.0 / SQRT_2).into(),
            0.5.into(),
            fh.ground(),
            grid,
        )
        .unwrap();
        assert!((mix.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(init_superposition(1.0.into(), 1.0.into(), ZERO, fh.ground(), grid).is_err());
    }

    #[test]
    fn unnormalized_mode_rejected() {
        let (grid, fh, _) = sech_setup(64);
        let scaled: Vec<Complex64> = fh.ground().iter().map(|c| c * 1.001).collect();
        assert!(init_two_photon_bound(&scaled, grid).is_err());
    }

    #[test]
    fn bloch_of_quarter_rotation() {
        // Two-level evolution: c20 = cos(theta), c01 = -i sin(theta); theta = pi/4.
        let th = std::f64::consts::FRAC_PI_4;
        let b = bloch_vector(Complex64::new(th.cos(), 0.0), Complex64::new(0.0, -th.sin()));
        assert!(b[0].abs() < 1e-15);
        assert!((b[1] + 1.0).abs() < 1e-15);
        assert!(b[2].abs() < 1e-15);
    }

    #[test]
    fn observables_reject_other_grid() {
        let (grid, fh, sh) = sech_setup(64);
        let st = TwoPhotonState::vacuum(Grid::new(32, 40.0).unwrap());
        assert!(observables(&st, &fh, &sh, 0.0).is_err());
        let _ = grid;
    }

    /// Explicit Fock-space vector of a state on a tiny grid, built from
    /// creation operators `A_i† = sqrt(dxi) a_i†` acting on the vacuum.
    fn fock_vector(st: &TwoPhotonState) -> Vec<Complex64> {
        let n = st.n();
        let dxi = st.grid.dxi();
        let mut v = vec![st.p];
        v.extend(st.q.iter().map(|q| q * dxi.sqrt()));
        for i in 0..n {
            for j in i..n {
                // sum_ij R_ij dxi A_i† A_j† |0>: pair (i<j) gets R_ij + R_ji,
                // and A_i†² |0> = sqrt(2) |2_i>.
                if i == j {
                    v.push(st.r_at(i, i) * dxi * SQRT_2);
                } else {
                    v.push((st.r_at(i, j) + st.r_at(j, i)) * dxi);
                }
            }
        }
        v.extend(st.s.iter().map(|s| s * dxi.sqrt()));
        v
    }

    fn random_state(grid: Grid, seed: u64) -> TwoPhotonState {
        let mut x = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut rnd = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut st = TwoPhotonState::zeros(grid);
        st.p = Complex64::new(rnd(), rnd());
        for c in st.q.iter_mut().chain(st.r.iter_mut()).chain(st.s.iter_mut()) {
            *c = Complex64::new(rnd(), rnd());
        }
        st.symmetrize();
        st
    }

    proptest! {
        #[test]
        fn norm_and_inner_product_match_fock_space(
            n in 1usize..=6, box_len in 0.5f64..10.0, sa in any::<u64>(), sb in any::<u64>()
        ) {
            let grid = Grid::new(n, box_len).unwrap();
            let a = random_state(grid, sa);
            let b = random_state(grid, sb);
            let fa = fock_vector(&a);
            let fb = fock_vector(&b);
            prop_assert_eq!(fa.len(), 1 + n + n * (n + 1) / 2 + n);
            let fock_norm: f64 = fa.iter().map(|c| c.norm_sqr()).sum();
            prop_assert!((a.norm_sqr() - fock_norm).abs() <= 1e-12 * fock_norm.max(1.0));
            let fock_inner: Complex64 = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).sum();
            let inner = a.inner(&b).unwrap();
            prop_assert!((inner - fock_inner).norm() <= 1e-12 * (1.0 + fock_inner.norm()));
        }
    }
}
