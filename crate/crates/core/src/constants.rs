//! Physical constants shared by every module (CODATA 2018 exact/recommended values).

/// Identifier recorded in run manifests so outputs can be traced to a constants table.
pub const CONSTANTS_VERSION: &str = "CODATA-2018";

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Impedance of free space (ohm).
pub const Z_0: f64 = 376.730_313_668;
