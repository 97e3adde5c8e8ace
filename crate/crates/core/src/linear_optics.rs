//! Few-photon Fock algebra for the dual-rail CZ construction.
//!
//! States are sparse maps from occupation vectors to amplitudes. Linear optics
//! acts by substituting creation operators, and a nonlinear arm applies a
//! photon-number dependent amplitude `s_n`, sending the missing weight into a
//! per-arm loss mode so the result stays normalized.

use num_complex::Complex64;
use std::collections::BTreeMap;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    n_modes: usize,
    amps: BTreeMap<Vec<u8>, Complex64>,
}

fn factorial(k: u8) -> f64 {
    (1..=k as u32).map(f64::from).product()
}

impl FockState {
    pub fn vacuum(n_modes: usize) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(vec![0; n_modes], ONE);
        Self { n_modes, amps }
    }

    pub fn basis(occupation: &[u8]) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(occupation.to_vec(), ONE);
        Self {
            n_modes: occupation.len(),
            amps,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitude(&self, occupation: &[u8]) -> Complex64 {
        self.amps.get(occupation).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .map(|(o, a)| a.conj() * other.amplitude(o))
            .sum()
    }

    pub fn add_scaled(&mut self, other: &Self, c: Complex64) {
        for (o, a) in &other.amps {
            *self.amps.entry(o.clone()).or_default() += c * a;
        }
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        for a in self.amps.values_mut() {
            *a *= c;
        }
        self
    }

    /// Applies the mode transformation `a_k† -> Σ_l u[l][k] a_l†` restricted to `modes`.
    pub fn linear_map(&self, modes: &[usize], u: &[Vec<Complex64>]) -> Self {
        let mut out = BTreeMap::new();
        for (occ, amp) in &self.amps {
            // expand Π_k (a_k†)^{n_k} / √(n_k!) as a polynomial over creation multisets
            let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            let mut base = occ.clone();
            let mut norm = 1.0;
            for &m in modes {
                norm /= factorial(occ[m]).sqrt();
                base[m] = 0;
            }
            poly.insert(base, *amp * norm);
            for (col, &m) in modes.iter().enumerate() {
                for _ in 0..occ[m] {
                    let mut next = BTreeMap::new();
                    for (p, c) in &poly {
                        for (row, &l) in modes.iter().enumerate() {
                            let w = u[row][col];
                            if w == Complex64::default() {
                                continue;
                            }
                            let mut q = p.clone();
                            q[l] += 1;
                            *next.entry(q).or_default() += c * w;
                        }
                    }
                    poly = next;
                }
            }
            for (p, c) in poly {
                // (a†)^k |0> = √k! |k>
                let f: f64 = modes.iter().map(|&m| factorial(p[m]).sqrt()).product();
                *out.entry(p).or_default() += c * f;
            }
        }
        out.retain(|_, a: &mut Complex64| a.norm_sqr() > 1e-30);
        Self {
            n_modes: self.n_modes,
            amps: out,
        }
    }

    /// Balanced beam splitter `a† -> (a† + b†)/√2`, `b† -> (a† - b†)/√2`. Self-inverse.
    pub fn beam_splitter(&self, a: usize, b: usize) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.linear_map(&[a, b], &[vec![h, h], vec![h, -h]])
    }

    /// Number-dependent channel on `mode`: `|k> -> s[k] |k>` plus the leaked
    /// remainder `√(1 - |s[k]|²)` tagged in loss mode `loss`.
    pub fn nonlinear_arm(&self, mode: usize, loss: usize, s: &[Complex64]) -> Self {
        let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let k = occ[mode] as usize;
            let sk = s.get(k).copied().unwrap_or(ONE);
            *out.entry(occ.clone()).or_default() += amp * sk;
            let leak = (1.0 - sk.norm_sqr()).max(0.0).sqrt();
            if leak > 0.0 {
                let mut o = occ.clone();
                o[mode] = 0;
                o[loss] += k as u8;
                *out.entry(o).or_default() += amp * leak;
            }
        }
        Self {
            n_modes: self.n_modes,
            amps: out,
        }
    }
}

/// Rails 0..4 hold qubit 1 (modes 0, 1) and qubit 2 (modes 2, 3); 4 and 5 are loss modes.
const RAILS: usize = 6;

fn logical(b1: u8, b2: u8) -> FockState {
    let mut o = vec![0u8; RAILS];
    o[b1 as usize] = 1;
    o[2 + b2 as usize] = 1;
    FockState::basis(&o)
}

/// CZ circuit: mix the two `|1>` rails, pass each arm through the channel
/// `s = [s0, s1, s2]`, and unmix.
pub fn cz_circuit(input: &FockState, s: &[Complex64; 3]) -> FockState {
    input
        .beam_splitter(1, 3)
        .nonlinear_arm(1, 4, s)
        .nonlinear_arm(3, 5, s)
        .beam_splitter(1, 3)
}

/// Gate error against the ideal CZ for input `|+>|+>`.
pub fn cz_epsilon(s: &[Complex64; 3]) -> f64 {
    let mut input = FockState {
        n_modes: RAILS,
        amps: BTreeMap::new(),
    };
    let mut ideal = input.clone();
    for (b1, b2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        input.add_scaled(&logical(b1, b2), Complex64::new(0.5, 0.0));
        let sign = if b1 == 1 && b2 == 1 { -0.5 } else { 0.5 };
        ideal.add_scaled(&logical(b1, b2), Complex64::new(sign, 0.0));
    }
    let out = cz_circuit(&input, s);
    1.0 - ideal.inner(&out).norm_sqr()
}

/// Closed form of [`cz_epsilon`]: `1 - |1 + 2 s1 - s2|² / 16` (with `s0 = 1`).
pub fn cz_epsilon_closed_form(s1: Complex64, s2: Complex64) -> f64 {
    1.0 - (ONE + 2.0 * s1 - s2).norm_sqr() / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let out = FockState::basis(&[1, 1]).beam_splitter(0, 1);
        assert!(out.amplitude(&[1, 1]).norm() < 1e-15);
        assert!((out.amplitude(&[2, 0]).norm_sqr() - 0.5).abs() < 1e-15);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beam_splitter_is_self_inverse() {
        let st = FockState::basis(&[2, 1, 0]);
        let back = st.beam_splitter(0, 1).beam_splitter(0, 1);
        assert!((back.inner(&st).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_is_identity() {
        let s = [c(1.0, 0.0); 3];
        for (b1, b2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let st = logical(b1, b2);
            let out = cz_circuit(&st, &s);
            assert!((out.inner(&st) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn perfect_nonlinearity_gives_cz() {
        assert!(cz_epsilon(&[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]).abs() < 1e-12);
        assert!((cz_epsilon(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]) - 0.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_closed_form(a1 in 0.0..1.0f64, p1 in -3.2..3.2f64, a2 in 0.0..1.0f64, p2 in -3.2..3.2f64) {
            let s1 = Complex64::from_polar(a1, p1);
            let s2 = Complex64::from_polar(a2, p2);
            let e = cz_epsilon(&[c(1.0, 0.0), s1, s2]);
            prop_assert!((e - cz_epsilon_closed_form(s1, s2)).abs() < 1e-12);
        }
    }
}
