//! Gyrator-coupled lumped-element model of the drive coil and the
//! mechanical resonator, viewed from the voltage source.
//!
//! The coil is a series R-L branch; the resonator maps through the gyrator
//! coefficient Γ₀ into an impedance Z_mech = Γ₀²/(κ₁/jω + b + jωI) added in
//! series. Everything here is the small-angle (cos θ ≈ 1) linear model; the
//! full nonlinear coupling lives in [`crate::dynamics`].

use crate::magnetics::Coil;
use crate::resonator::ResonatorModel;
use crate::{MmtError, Result, MU_0};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Electrical-side parameters of a single-rotor transmitter.
#[derive(Debug, Clone)]
pub struct CircuitParams {
    pub coil: Coil,
    /// Coil-to-rotor center distance, m.
    pub d_cr: f64,
    /// Gyrator coefficient Γ₀: torque per ampere and emf per rad/s, N·m/A.
    pub gamma0: f64,
    /// Drive voltage, V rms.
    pub drive_v_rms: f64,
    /// Drive frequency, rad/s.
    pub drive_freq: f64,
}

impl CircuitParams {
    pub fn new(
        coil: Coil,
        d_cr: f64,
        gamma0: f64,
        drive_v_rms: f64,
        drive_freq: f64,
    ) -> Result<Self> {
        if d_cr <= 0.0 {
            return Err(MmtError::InvalidInput(
                "coil-to-rotor distance must be positive".into(),
            ));
        }
        if gamma0 < 0.0 {
            return Err(MmtError::InvalidInput(
                "gyrator coefficient must be non-negative".into(),
            ));
        }
        if drive_v_rms < 0.0 || drive_freq < 0.0 {
            return Err(MmtError::InvalidInput(
                "drive voltage and frequency must be non-negative".into(),
            ));
        }
        Ok(CircuitParams {
            coil,
            d_cr,
            gamma0,
            drive_v_rms,
            drive_freq,
        })
    }

    /// Build with Γ₀ derived from the coil geometry and rotor moment.
    pub fn with_derived_gamma(
        coil: Coil,
        d_cr: f64,
        m_r: f64,
        drive_v_rms: f64,
        drive_freq: f64,
    ) -> Result<Self> {
        let gamma0 = gyrator_coefficient(m_r, &coil, d_cr)?;
        CircuitParams::new(coil, d_cr, gamma0, drive_v_rms, drive_freq)
    }
}

/// Gyrator coefficient Γ₀ = μ₀·M_r·N_c·A_c/(2π·d_cr³).
///
/// The same coefficient converts drive current to torque and angular
/// velocity to back emf (small-angle regime).
pub fn gyrator_coefficient(m_r: f64, coil: &Coil, d_cr: f64) -> Result<f64> {
    if d_cr <= 0.0 {
        return Err(MmtError::Singularity(
            "gyrator coefficient requires a positive coil-rotor distance".into(),
        ));
    }
    Ok(MU_0 * m_r * coil.turns as f64 * coil.area / (2.0 * PI * d_cr.powi(3)))
}

/// Impedance seen by the drive source at one frequency.
#[derive(Debug, Clone, Copy)]
pub struct ImpedanceResult {
    /// Total impedance R_c + jωL_c + Z_mech, ohm.
    pub z_total: Complex64,
    /// Gyrator-transformed mechanical branch, ohm.
    pub z_mech: Complex64,
    /// Evaluation frequency, rad/s.
    pub freq: f64,
}

/// Total impedance across the voltage source:
///
/// Z = [R_c + Γ₀²ω²b/D] + j[ωL_c + Γ₀²ω(κ₁−ω²I)/D],
/// D = (κ₁−ω²I)² + (ωb)².
pub fn total_impedance(
    omega: f64,
    circuit: &CircuitParams,
    model: &ResonatorModel,
) -> ImpedanceResult {
    let g2 = circuit.gamma0 * circuit.gamma0;
    let detune = model.kappa1 - omega * omega * model.inertia;
    let d = detune * detune + (omega * model.damping).powi(2);
    let z_mech = Complex64::new(
        g2 * omega * omega * model.damping / d,
        g2 * omega * detune / d,
    );
    let z_total = Complex64::new(
        circuit.coil.resistance + z_mech.re,
        omega * circuit.coil.inductance + z_mech.im,
    );
    ImpedanceResult {
        z_total,
        z_mech,
        freq: omega,
    }
}

/// Voltage-to-angular-displacement transfer function
/// Θ/V_d = (1/jωΓ₀)·Z_mech/Z_tot, rad/V.
pub fn displacement_transfer(
    omega: f64,
    circuit: &CircuitParams,
    model: &ResonatorModel,
) -> Result<Complex64> {
    if circuit.gamma0 == 0.0 {
        return Err(MmtError::CouplingAbsent);
    }
    if omega <= 0.0 {
        return Err(MmtError::InvalidInput(
            "transfer function requires a positive frequency".into(),
        ));
    }
    let imp = total_impedance(omega, circuit, model);
    Ok(imp.z_mech / imp.z_total / Complex64::new(0.0, omega * circuit.gamma0))
}

/// Coupled electro-mechanical resonance in the low-loss limit:
/// ω_mech = √((κ₁ + Γ₀²/L_c)/I).
pub fn coupled_resonance(circuit: &CircuitParams, model: &ResonatorModel) -> f64 {
    ((model.kappa1 + circuit.gamma0 * circuit.gamma0 / circuit.coil.inductance) / model.inertia)
        .sqrt()
}

/// Average power drawn from the source at frequency ω:
/// P = Re{v²_rms/Z_tot} = v²_rms·Re(Z)/|Z|².
pub fn average_power(omega: f64, circuit: &CircuitParams, model: &ResonatorModel) -> f64 {
    let z = total_impedance(omega, circuit, model).z_total;
    circuit.drive_v_rms * circuit.drive_v_rms * z.re / z.norm_sqr()
}

/// Average power at the mechanical resonance ω₀ = √(κ₁/I):
///
/// P(ω₀) = v²_rms·(R_c + Γ₀²/b) / [(R_c + Γ₀²/b)² + (ω₀L_c)²],
///
/// equivalently i²_rms·(R_c + Γ₀²/b) with i_rms = v_rms/|Z(ω₀)|.
pub fn average_power_at_resonance(circuit: &CircuitParams, model: &ResonatorModel) -> f64 {
    let w0 = model.natural_frequency();
    let r_eff = circuit.coil.resistance + circuit.gamma0 * circuit.gamma0 / model.damping;
    let reactance = w0 * circuit.coil.inductance;
    circuit.drive_v_rms * circuit.drive_v_rms * r_eff / (r_eff * r_eff + reactance * reactance)
}
