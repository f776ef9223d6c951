//! Simulation and design toolkit for resonant magneto-mechanical ULF
//! transmitters (MMTs).
//!
//! An MMT produces an ultra-low-frequency magnetic carrier by driving a
//! permanent-magnet torsional resonator with a small coil. This crate models
//! the full chain:
//!
//! - [`magnetics`] — point-dipole kernels, coil fields, and a dipole-grid
//!   discretization of finite magnets for near-field torque curves.
//! - [`resonator`] — moments, inertia, stiffness fitting, natural frequency,
//!   the nonlinear backbone, and the carrier field produced by rotor motion.
//! - [`circuit`] — gyrator-coupled lumped-element model: impedance,
//!   displacement transfer, coupled resonance, and average power.
//! - [`dynamics`] — time-domain integration of the coupled nonlinear
//!   electro-mechanical equations, steady-state extraction, and stepped-sine
//!   frequency sweeps with hysteresis capture.
//! - [`array`] — multi-rotor stiffness matrices, eigenmodes, in-phase-mode
//!   uniformity optimization, and dc-field patterns of modular stacks.
//! - [`modulation`] — OOK encoding, lock-in envelope extraction, and bit
//!   decoding of the simulated received field.
//!
//! All quantities are SI: meters, kilograms, seconds, teslas, amperes, volts.
//! Angles are radians; angular frequencies are rad/s unless a name says `hz`.

pub mod array;
pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod magnetics;
pub mod modulation;
pub mod resonator;

/// Permeability of free space, N/A².
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// 3-vector used throughout (positions in m, moments in A·m², fields in T).
pub type Vec3 = nalgebra::Vector3<f64>;

pub use error::MmtError;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, MmtError>;
