//! Exact reference dynamics by dense diagonalization in Fock space.
//!
//! The grid problem is a lattice of `n` FH and `n` SH sites. Restricted to
//! `N_a + 2 N_b <= 2` the basis is vacuum, `n` one-FH states, `n(n+1)/2`
//! two-FH states and `n` one-SH states. The hopping matrices come from the same
//! spectral kinetic operator as the eigensolver, so the oracle is independent of
//! the split-step machinery but shares its discretization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::propagator::PulseSystem;
use crate::state::TwoPhotonState;
use crate::trap_modes::{linear_operator, Harmonic};

/// Largest grid the dense oracle accepts.
pub const MAX_ORACLE_SITES: usize = 8;

/// Occupation numbers over `2n` modes: FH sites `0..n`, then SH sites.
type Occupation = Vec<u8>;

pub struct FockBasis {
    n: usize,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockBasis {
    pub fn new(n: usize) -> Self {
        let mut states = vec![vec![0u8; 2 * n]];
        for i in 0..n {
            let mut o = vec![0u8; 2 * n];
            o[i] = 1;
            states.push(o);
        }
        for i in 0..n {
            for j in i..n {
                let mut o = vec![0u8; 2 * n];
                o[i] += 1;
                o[j] += 1;
                states.push(o);
            }
        }
        for i in 0..n {
            let mut o = vec![0u8; 2 * n];
            o[n + i] = 1;
            states.push(o);
        }
        let index = states.iter().cloned().enumerate().map(|(k, o)| (o, k)).collect();
        Self { n, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    fn hop(&self, from: usize, to_mode: usize, from_mode: usize) -> Option<(usize, f64)> {
        let mut o = self.states[from].clone();
        if o[from_mode] == 0 {
            return None;
        }
        let mut amp = (o[from_mode] as f64).sqrt();
        o[from_mode] -= 1;
        amp *= (o[to_mode] as f64 + 1.0).sqrt();
        o[to_mode] += 1;
        self.index.get(&o).map(|&k| (k, amp))
    }

    /// Fock amplitudes of a grid state. Pairs `i < j` get `(R_ij + R_ji) Δξ`,
    /// doubly occupied sites `√2 R_ii Δξ`, single photons `√Δξ` times the field.
    pub fn from_state(&self, st: &TwoPhotonState) -> DVector<Complex64> {
        let n = self.n;
        let dx = st.grid.dxi();
        let sq = dx.sqrt();
        let mut v = DVector::zeros(self.dim());
        for (k, o) in self.states.iter().enumerate() {
            v[k] = match classify(o, n) {
                Kind::Vacuum => st.p,
                Kind::Fh(i) => st.q[i] * sq,
                Kind::Pair(i, j) if i == j => st.r[i * n + i] * std::f64::consts::SQRT_2 * dx,
                Kind::Pair(i, j) => (st.r[i * n + j] + st.r[j * n + i]) * dx,
                Kind::Sh(i) => st.s[i] * sq,
            };
        }
        v
    }

    /// Inverse of [`FockBasis::from_state`], producing a symmetric `R`.
    pub fn to_state(&self, v: &DVector<Complex64>, template: &TwoPhotonState) -> TwoPhotonState {
        let n = self.n;
        let dx = template.grid.dxi();
        let sq = dx.sqrt();
        let mut st = TwoPhotonState::zeros(template.grid);
        for (k, o) in self.states.iter().enumerate() {
            match classify(o, n) {
                Kind::Vacuum => st.p = v[k],
                Kind::Fh(i) => st.q[i] = v[k] / sq,
                Kind::Pair(i, j) if i == j => {
                    st.r[i * n + i] = v[k] / (std::f64::consts::SQRT_2 * dx)
                }
                Kind::Pair(i, j) => {
                    let half = v[k] / (2.0 * dx);
                    st.r[i * n + j] = half;
                    st.r[j * n + i] = half;
                }
                Kind::Sh(i) => st.s[i] = v[k] / sq,
            }
        }
        st
    }
}

enum Kind {
    Vacuum,
    Fh(usize),
    Pair(usize, usize),
    Sh(usize),
}

fn classify(o: &[u8], n: usize) -> Kind {
    let fh: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, o[i] as usize)).collect();
    if let Some(i) = (0..n).find(|&i| o[n + i] == 1) {
        return Kind::Sh(i);
    }
    match fh.as_slice() {
        [] => Kind::Vacuum,
        [i] => Kind::Fh(*i),
        [i, j] => Kind::Pair(*i, *j),
        _ => unreachable!("basis is truncated at two FH photons"),
    }
}

/// Dense Hamiltonian on the truncated Fock basis.
pub fn hamiltonian(system: &PulseSystem, basis: &FockBasis) -> DMatrix<Complex64> {
    let grid = system.grid();
    let n = grid.n();
    let ha = linear_operator(grid, 1.0, &system.potential.harmonic_samples(Harmonic::Fh, system.delta));
    let hb = linear_operator(
        grid,
        system.rho,
        &system.potential.harmonic_samples(Harmonic::Sh, system.delta),
    );
    let kappa = 0.5 * system.r_norm / grid.dxi().sqrt();
    let dim = basis.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        for i in 0..n {
            for j in 0..n {
                if let Some((to, amp)) = basis.hop(k, i, j) {
                    h[(to, k)] += ha[(i, j)] * amp;
                }
                if let Some((to, amp)) = basis.hop(k, n + i, n + j) {
                    h[(to, k)] += hb[(i, j)] * amp;
                }
            }
        }
        // b_i† a_i a_i and its adjoint
        let o = &basis.states[k];
        for i in 0..n {
            if o[i] == 2 {
                let mut t = o.clone();
                t[i] = 0;
                t[n + i] = 1;
                let to = basis.index[&t];
                let amp = kappa * 2f64.sqrt();
                h[(to, k)] += amp;
                h[(k, to)] += amp;
            }
        }
    }
    h
}

/// Evolves `initial` to `t_end` with `exp(-iHt)` from a Hermitian eigendecomposition.
pub fn exact_oracle(system: &PulseSystem, initial: &TwoPhotonState, t_end: f64) -> Result<TwoPhotonState> {
    let n = system.grid().n();
    if n > MAX_ORACLE_SITES {
        return Err(Error::invalid(
            "n_grid",
            format!("oracle supports at most {MAX_ORACLE_SITES} sites, got {n}"),
        ));
    }
    initial.grid.check_same(system.grid())?;
    let basis = FockBasis::new(n);
    let h = hamiltonian(system, &basis);
    let eig = SymmetricEigen::new(h);
    let v0 = basis.from_state(initial);
    let mut coeffs = eig.eigenvectors.adjoint() * v0;
    for (c, &lam) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= Complex64::from_polar(1.0, -lam * t_end);
    }
    let v = &eig.eigenvectors * coeffs;
    Ok(basis.to_state(&v, initial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::propagator::{step, StepPlan};
    use crate::trap_modes::TrapPotential;

    fn small_system(n: usize) -> PulseSystem {
        let grid = Grid::new(n, 6.0).unwrap();
        let u = TrapPotential::sech_family(grid, 1.0, 1.0).unwrap();
        PulseSystem::new(u, 2.0, 0.3, 1.0).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> TwoPhotonState {
        let grid = Grid::new(n, 6.0).unwrap();
        let mut x = seed;
        let mut rnd = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut st = TwoPhotonState::zeros(grid);
        st.p = Complex64::new(rnd(), rnd());
        for c in st.q.iter_mut().chain(st.r.iter_mut()).chain(st.s.iter_mut()) {
            *c = Complex64::new(rnd(), rnd());
        }
        st.symmetrize();
        let norm = st.norm_sqr().sqrt();
        st.p /= norm;
        for c in st.q.iter_mut().chain(st.r.iter_mut()).chain(st.s.iter_mut()) {
            *c /= norm;
        }
        st
    }

    #[test]
    fn basis_dimension() {
        assert_eq!(FockBasis::new(4).dim(), 1 + 4 + 10 + 4);
    }

    #[test]
    fn mapping_round_trip_and_norm() {
        let st = random_state(5, 7);
        let basis = FockBasis::new(5);
        let v = basis.from_state(&st);
        assert!((v.norm_squared() - st.norm_sqr()).abs() < 1e-12);
        let back = basis.to_state(&v, &st);
        assert!(back.distance(&st).unwrap() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let sys = small_system(6);
        let h = hamiltonian(&sys, &FockBasis::new(6));
        assert!((&h - h.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn split_step_converges_to_oracle() {
        let sys = small_system(8);
        let init = random_state(8, 3);
        let exact = exact_oracle(&sys, &init, 0.2).unwrap();
        let mut errs = Vec::new();
        for steps in [20usize, 40] {
            let plan = StepPlan::new(&sys, 0.2 / steps as f64).unwrap();
            let mut st = init.clone();
            for _ in 0..steps {
                step(&mut st, &plan).unwrap();
            }
            errs.push(st.distance(&exact).unwrap());
        }
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "errors {errs:?}");
    }

    #[test]
    fn rejects_large_grids() {
        let grid = Grid::new(16, 6.0).unwrap();
        let sys = PulseSystem::new(TrapPotential::flat(grid), 2.0, 0.0, 1.0).unwrap();
        assert!(exact_oracle(&sys, &TwoPhotonState::vacuum(grid), 1.0).is_err());
    }
}
