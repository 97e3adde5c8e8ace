//! Shared fixtures for the benchmarks.

use ttrap_core::gates::{trapped_system, TrapOptions, TrappedSystem};
use ttrap_core::state::init_two_photon_bound;
use ttrap_core::{Grid, PulseSystem, Result, TrapPotential, TwoPhotonState};

/// Trapped system at gap ratio 3 on an `n`-point grid.
pub fn trapped(n: usize) -> Result<TrappedSystem> {
    trapped_system(
        3.0,
        &TrapOptions {
            n_grid: n,
            ..TrapOptions::default()
        },
    )
}

/// Two photons in the bound FH mode of `setup`.
pub fn bound_pair(setup: &TrappedSystem) -> Result<TwoPhotonState> {
    init_two_photon_bound(setup.fh.ground(), setup.params.grid())
}

/// Small sech-trap system and a bound pair, sized for the dense oracle.
pub fn oracle_fixture(n: usize) -> Result<(PulseSystem, TwoPhotonState)> {
    let grid = Grid::new(n, n as f64)?;
    let potential = TrapPotential::sech_family(grid, 1.0, 1.0)?;
    let sys = PulseSystem::new(potential, 2.0, 0.0, 1.0)?;
    let raw: Vec<f64> = grid.points().into_iter().map(|x| 1.0 / x.cosh()).collect();
    let norm = (raw.iter().map(|v| v * v).sum::<f64>() * grid.dxi()).sqrt();
    let psi: Vec<_> = raw.into_iter().map(|v| (v / norm).into()).collect();
    Ok((sys, init_two_photon_bound(&psi, grid)?))
}
