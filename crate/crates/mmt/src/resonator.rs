//! Mechanical-resonator modeling: magnetic moments, rotational inertia,
//! stiffness fitting, natural frequency, the nonlinear backbone, and the
//! carrier field radiated by rotor motion.

use crate::magnetics::{Magnet, MagnetShape};
use crate::{MmtError, Result, MU_0};
use std::f64::consts::PI;

/// Default NdFeB density, kg/m³. Yields I ≈ 1.65e-6 kg·m² for a
/// 12.7 × 12.7 × 50.8 mm rotor.
pub const NDFEB_DENSITY: f64 = 7500.0;

/// Lumped single-rotor resonator: restoring torque κ₁θ + κ₃θ³, inertia I,
/// viscous damping b, and the rotor dipole moment that radiates the carrier.
#[derive(Debug, Clone)]
pub struct ResonatorModel {
    /// Linear torsional stiffness κ₁, N·m/rad.
    pub kappa1: f64,
    /// Cubic stiffness κ₃, N·m/rad³ (negative softens, positive stiffens).
    pub kappa3: f64,
    /// Moment of inertia about the rotation axis, kg·m².
    pub inertia: f64,
    /// Viscous damping coefficient b, N·m·s/rad.
    pub damping: f64,
    /// Rotor dipole moment magnitude M_r, A·m².
    pub rotor_moment: f64,
}

impl ResonatorModel {
    pub fn new(
        kappa1: f64,
        kappa3: f64,
        inertia: f64,
        damping: f64,
        rotor_moment: f64,
    ) -> Result<Self> {
        if kappa1 <= 0.0 {
            return Err(MmtError::InvalidInput("kappa1 must be positive".into()));
        }
        if inertia <= 0.0 {
            return Err(MmtError::InvalidInput("inertia must be positive".into()));
        }
        if damping < 0.0 {
            return Err(MmtError::InvalidInput("damping must be non-negative".into()));
        }
        if rotor_moment <= 0.0 {
            return Err(MmtError::InvalidInput("rotor moment must be positive".into()));
        }
        Ok(ResonatorModel {
            kappa1,
            kappa3,
            inertia,
            damping,
            rotor_moment,
        })
    }

    /// Small-amplitude natural frequency ω₀ = √(κ₁/I), rad/s.
    pub fn natural_frequency(&self) -> f64 {
        (self.kappa1 / self.inertia).sqrt()
    }

    /// Amplitude-dependent resonance from the backbone curve:
    /// ω = ω₀ + (3/8)·κ₃/√(κ₁I)·θ_max².
    ///
    /// First-order perturbation result; a warning is logged when the
    /// correction exceeds 20% of ω₀, outside its trusted range.
    pub fn backbone_frequency(&self, theta_max: f64) -> f64 {
        let w0 = self.natural_frequency();
        let shift =
            0.375 * self.kappa3 / (self.kappa1 * self.inertia).sqrt() * theta_max * theta_max;
        if shift.abs() > 0.2 * w0 {
            log::warn!(
                "backbone correction {:.3} rad/s exceeds 20% of ω₀ = {:.3} rad/s; \
                 perturbation result is unreliable at θ_max = {:.3} rad",
                shift,
                w0,
                theta_max
            );
        }
        w0 + shift
    }

    /// Restoring torque κ₁θ + κ₃θ³ at angle θ.
    pub fn restoring_torque(&self, theta: f64) -> f64 {
        self.kappa1 * theta + self.kappa3 * theta.powi(3)
    }
}

/// Instantaneous kinematic state of a rotor.
#[derive(Debug, Clone, Copy, Default)]
pub struct MotionState {
    pub theta: f64,
    pub theta_dot: f64,
    pub time: f64,
}

/// Dipole moment magnitude of a magnet, M = B_r·V/μ₀.
pub fn magnetic_moment(magnet: &Magnet) -> f64 {
    magnet.residual_flux_density * magnet.volume() / MU_0
}

/// Moment of inertia about the magnet's long axis through its centroid.
///
/// Cuboid: m(l_x² + l_y²)/12. Cylinder: m·φ²/8.
pub fn moment_of_inertia(magnet: &Magnet, density: f64) -> f64 {
    let mass = density * magnet.volume();
    match magnet.shape {
        MagnetShape::Cuboid { l_x, l_y, .. } => mass * (l_x * l_x + l_y * l_y) / 12.0,
        MagnetShape::Cylinder { diameter, .. } => mass * diameter * diameter / 8.0,
    }
}

/// Result of fitting τ = κ₁θ + κ₃θ³ to sampled torque data.
#[derive(Debug, Clone, Copy)]
pub struct StiffnessFit {
    pub kappa1: f64,
    pub kappa3: f64,
    /// Euclidean norm of the fit residual, N·m.
    pub residual_norm: f64,
}

/// Least-squares fit of the odd cubic τ = κ₁θ + κ₃θ³ (no constant or even
/// terms) to `(θ, τ)` samples.
pub fn fit_stiffness(samples: &[(f64, f64)]) -> Result<StiffnessFit> {
    if samples.len() < 4 {
        return Err(MmtError::InsufficientData(format!(
            "stiffness fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let (mut s2, mut s4, mut s6, mut b1, mut b3) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(theta, tau) in samples {
        let t2 = theta * theta;
        s2 += t2;
        s4 += t2 * t2;
        s6 += t2 * t2 * t2;
        b1 += tau * theta;
        b3 += tau * theta * t2;
    }
    let det = s2 * s6 - s4 * s4;
    if det.abs() <= 1e-12 * s2 * s6 || s2 == 0.0 {
        return Err(MmtError::FitError(
            "sample set is rank deficient for the [θ, θ³] basis".into(),
        ));
    }
    let kappa1 = (s6 * b1 - s4 * b3) / det;
    let kappa3 = (s2 * b3 - s4 * b1) / det;
    let residual_norm = samples
        .iter()
        .map(|&(theta, tau)| {
            let r = tau - kappa1 * theta - kappa3 * theta.powi(3);
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Ok(StiffnessFit {
        kappa1,
        kappa3,
        residual_norm,
    })
}

/// Default stiffness-fit angles: −45°..+45° in 1° steps.
pub fn default_fit_angles() -> Vec<f64> {
    (-45..=45).map(|d| (d as f64).to_radians()).collect()
}

/// Natural frequency ω₀ = √(κ₁/I), rad/s.
pub fn natural_frequency(kappa1: f64, inertia: f64) -> Result<f64> {
    if kappa1 <= 0.0 || inertia <= 0.0 {
        return Err(MmtError::InvalidInput(
            "natural frequency requires positive stiffness and inertia".into(),
        ));
    }
    Ok((kappa1 / inertia).sqrt())
}

/// RMS carrier field of a rotor oscillating at amplitude θ_max, measured on
/// the transverse axis at distance r_x:
/// B_rms = μ₀·M_r·sin(θ_max)/(2√2·π·r_x³).
pub fn carrier_field_rms(m_r: f64, theta_max: f64, r_x: f64) -> Result<f64> {
    if r_x <= 0.0 {
        return Err(MmtError::Singularity(
            "receiver distance must be positive".into(),
        ));
    }
    Ok(MU_0 * m_r * theta_max.sin() / (2.0 * 2f64.sqrt() * PI * r_x.powi(3)))
}

/// Instantaneous carrier field at rotor angle θ:
/// B(r_x, θ) = −μ₀·M_r·sin θ/(2π·r_x³).
pub fn carrier_field_instant(m_r: f64, theta: f64, r_x: f64) -> Result<f64> {
    if r_x <= 0.0 {
        return Err(MmtError::Singularity(
            "receiver distance must be positive".into(),
        ));
    }
    Ok(-MU_0 * m_r * theta.sin() / (2.0 * PI * r_x.powi(3)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::{MagnetRole, MagnetShape};
    use crate::Vec3;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn paper_rotor() -> Magnet {
        Magnet::new(
            MagnetShape::Cuboid {
                l_x: 0.0127,
                l_y: 0.0127,
                l_z: 0.0508,
            },
            1.48,
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::zeros(),
            MagnetRole::Rotor,
        )
        .unwrap()
    }

    #[test]
    fn moment_of_paper_rotor() {
        assert_abs_diff_eq!(magnetic_moment(&paper_rotor()), 9.65, epsilon = 1e-3);
    }

    #[test]
    fn equal_area_cylinder_has_equal_moment() {
        // φ = 2·l_s/√π gives the same cross-section area and volume
        let phi = 2.0 * 0.0127 / PI.sqrt();
        let cyl = Magnet::new(
            MagnetShape::Cylinder { diameter: phi, length: 0.0508 },
            1.48,
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::zeros(),
            MagnetRole::Rotor,
        )
        .unwrap();
        assert_relative_eq!(
            magnetic_moment(&cyl),
            magnetic_moment(&paper_rotor()),
            max_relative = 1e-3
        );
    }

    #[test]
    fn inertia_of_paper_rotor() {
        let inertia = moment_of_inertia(&paper_rotor(), NDFEB_DENSITY);
        assert_abs_diff_eq!(inertia, 1.65e-6, epsilon = 5e-9);
    }

    #[test]
    fn equal_area_cylinder_inertia_ratio() {
        let phi = 2.0 * 0.0127 / PI.sqrt();
        let cyl = Magnet::new(
            MagnetShape::Cylinder { diameter: phi, length: 0.0508 },
            1.48,
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::zeros(),
            MagnetRole::Rotor,
        )
        .unwrap();
        let ratio = moment_of_inertia(&cyl, NDFEB_DENSITY)
            / moment_of_inertia(&paper_rotor(), NDFEB_DENSITY);
        assert_relative_eq!(ratio, 6.0 / (2.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn inertia_linear_in_length() {
        let double = Magnet::new(
            MagnetShape::Cuboid { l_x: 0.0127, l_y: 0.0127, l_z: 2.0 * 0.0508 },
            1.48,
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::zeros(),
            MagnetRole::Rotor,
        )
        .unwrap();
        assert_relative_eq!(
            moment_of_inertia(&double, NDFEB_DENSITY),
            2.0 * moment_of_inertia(&paper_rotor(), NDFEB_DENSITY),
            max_relative = 1e-12
        );
    }

    #[test]
    fn fit_recovers_exact_cubic() {
        let samples: Vec<(f64, f64)> = default_fit_angles()
            .iter()
            .map(|&t| (t, 8.292 * t - 1.382 * t.powi(3)))
            .collect();
        let fit = fit_stiffness(&samples).unwrap();
        assert_relative_eq!(fit.kappa1, 8.292, max_relative = 1e-10);
        assert_relative_eq!(fit.kappa3, -1.382, max_relative = 1e-10);
        assert!(fit.residual_norm < 1e-10);
    }

    #[test]
    fn fit_of_exact_dipole_torque() {
        // κ₁·sin θ fitted over ±45° lands close to the Taylor pair
        // (κ₁, −κ₁/6); frozen reference values from an independent
        // least-squares evaluation of the sine curve.
        let m = magnetic_moment(&paper_rotor());
        let samples: Vec<(f64, f64)> = default_fit_angles()
            .iter()
            .map(|&t| (t, crate::magnetics::two_stator_dipole_torque(m, m, 0.0165, t)))
            .collect();
        let fit = fit_stiffness(&samples).unwrap();
        assert_abs_diff_eq!(fit.kappa1, 8.2855, epsilon = 2e-3);
        assert_abs_diff_eq!(fit.kappa3, -1.3343, epsilon = 2e-3);
    }

    #[test]
    fn fit_taylor_coefficients_from_small_angles() {
        // Over a small range the fit converges to the analytic Taylor pair.
        let kappa1 = crate::magnetics::two_stator_dipole_kappa1(9.65, 9.65, 0.0165);
        let samples: Vec<(f64, f64)> = (-10..=10)
            .map(|k| {
                let t = k as f64 * 0.5f64.to_radians();
                (t, kappa1 * t.sin())
            })
            .collect();
        let fit = fit_stiffness(&samples).unwrap();
        assert_relative_eq!(fit.kappa1, kappa1, max_relative = 1e-5);
        assert_relative_eq!(fit.kappa3, -kappa1 / 6.0, max_relative = 1e-3);
    }

    #[test]
    fn fit_pure_linear_gives_zero_cubic() {
        let samples: Vec<(f64, f64)> = default_fit_angles()
            .iter()
            .map(|&t| (t, 3.5 * t))
            .collect();
        let fit = fit_stiffness(&samples).unwrap();
        assert_relative_eq!(fit.kappa1, 3.5, max_relative = 1e-12);
        assert_abs_diff_eq!(fit.kappa3, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_round_trip_random_cubics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let k1 = rng.gen_range(0.01..20.0);
            let k3 = rng.gen_range(-5.0..5.0);
            let samples: Vec<(f64, f64)> = default_fit_angles()
                .iter()
                .map(|&t| (t, k1 * t + k3 * t.powi(3)))
                .collect();
            let fit = fit_stiffness(&samples).unwrap();
            assert_relative_eq!(fit.kappa1, k1, max_relative = 1e-9);
            if k3.abs() > 1e-6 {
                assert_relative_eq!(fit.kappa3, k3, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn fit_rank_deficient_errors() {
        // only ±a samples: θ and θ³ are collinear on this support
        let samples = [(0.5, 1.0), (-0.5, -1.0), (0.5, 1.0), (-0.5, -1.0)];
        assert!(matches!(fit_stiffness(&samples), Err(MmtError::FitError(_))));
        assert!(matches!(
            fit_stiffness(&[(0.1, 0.2), (0.2, 0.4)]),
            Err(MmtError::InsufficientData(_))
        ));
    }

    #[test]
    fn natural_frequency_reference() {
        let w0 = natural_frequency(8.292, 1.652e-6).unwrap();
        assert_abs_diff_eq!(w0, 2240.4, epsilon = 0.5);
        assert_abs_diff_eq!(w0 / (2.0 * PI), 356.6, epsilon = 0.1);
        // quadrupling stiffness doubles the frequency
        assert_relative_eq!(
            natural_frequency(4.0 * 8.292, 1.652e-6).unwrap(),
            2.0 * w0,
            max_relative = 1e-12
        );
        assert!(natural_frequency(-1.0, 1.0).is_err());
        assert!(natural_frequency(1.0, 0.0).is_err());
    }

    #[test]
    fn backbone_reference_and_sign_law() {
        let model = ResonatorModel::new(8.2919, -1.38198, 1.65192e-6, 1e-5, 9.65).unwrap();
        let w0 = model.natural_frequency();
        assert_relative_eq!(model.backbone_frequency(0.0), w0, max_relative = 1e-15);
        let w45 = model.backbone_frequency(std::f64::consts::FRAC_PI_4);
        assert_abs_diff_eq!(w45, 2154.0, epsilon = 1.0);
        assert_abs_diff_eq!(w45 / (2.0 * PI), 342.8, epsilon = 0.2);
        // softening: frequency strictly decreases with amplitude
        assert!(w45 < model.backbone_frequency(0.3));
        // stiffening mirror
        let stiff = ResonatorModel::new(8.2919, 1.38198, 1.65192e-6, 1e-5, 9.65).unwrap();
        let mut prev = stiff.natural_frequency();
        for k in 1..=8 {
            let w = stiff.backbone_frequency(k as f64 * 0.1);
            assert!(w > prev, "stiffening backbone must increase with amplitude");
            prev = w;
        }
    }

    #[test]
    fn carrier_field_reference() {
        let b = carrier_field_rms(9.6499, std::f64::consts::FRAC_PI_4, 1000.0).unwrap();
        assert_abs_diff_eq!(b, 0.965e-15, epsilon = 1e-18);
        assert_abs_diff_eq!(
            carrier_field_rms(9.6499, 0.0, 1000.0).unwrap(),
            0.0,
            epsilon = 1e-30
        );
        // halving the distance multiplies the field by 8
        let near = carrier_field_rms(9.6499, 0.5, 500.0).unwrap();
        let far = carrier_field_rms(9.6499, 0.5, 1000.0).unwrap();
        assert_relative_eq!(near / far, 8.0, max_relative = 1e-12);
        assert!(carrier_field_rms(9.65, 0.5, 0.0).is_err());
    }

    #[test]
    fn instantaneous_field_consistent_with_rms() {
        let m_r = 9.6499;
        let theta_max = 0.6;
        let peak = carrier_field_instant(m_r, theta_max, 1000.0).unwrap().abs();
        let rms = carrier_field_rms(m_r, theta_max, 1000.0).unwrap();
        assert_relative_eq!(peak / 2f64.sqrt(), rms, max_relative = 1e-12);
    }

    #[test]
    fn design_identity_field_at_1km() {
        // ±45° oscillation of the 9.65 A·m² rotor puts ~1 fT at 1 km
        let m_r = magnetic_moment(&paper_rotor());
        let b = carrier_field_rms(m_r, std::f64::consts::FRAC_PI_4, 1000.0).unwrap();
        assert!(b > 0.9e-15 && b < 1.1e-15, "got {b:.3e} T");
    }

    #[test]
    fn frequency_scales_inversely_with_side_length() {
        // dipole κ₁ and cuboid inertia both scale with rotor volume, so
        // ω₀ ∝ 1/l_s at fixed stators
        let m_s = 9.65;
        let d_rs = 0.0165;
        let f_of = |l_s: f64| {
            let rotor = Magnet::new(
                MagnetShape::Cuboid { l_x: l_s, l_y: l_s, l_z: 0.0508 },
                1.48,
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::zeros(),
                MagnetRole::Rotor,
            )
            .unwrap();
            let k1 = crate::magnetics::two_stator_dipole_kappa1(
                magnetic_moment(&rotor),
                m_s,
                d_rs,
            );
            natural_frequency(k1, moment_of_inertia(&rotor, NDFEB_DENSITY)).unwrap()
        };
        assert_relative_eq!(f_of(0.00635) / f_of(0.0127), 2.0, max_relative = 1e-10);
        assert_relative_eq!(f_of(0.0031) / f_of(0.0062), 2.0, max_relative = 1e-10);
    }
}
