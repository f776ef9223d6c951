//! Multi-rotor analysis: stiffness-matrix assembly from pairwise dipole
//! couplings, eigenmodes, in-phase-mode uniformity, stator-distance
//! optimization, modular stacking, and dc-field patterns.
//!
//! Arrays are linear chains along the y axis (the rest-moment direction):
//! rotors spaced d_rr apart with one fixed stator beyond each end at d_rs.
//! The linearized rotor-rotor restoring torque on rotor i due to rotor j is
//! c_ij(2θ_i + θ_j) with c_ij = μ₀M²/(4π d_ij³), so the stiffness matrix has
//! positive off-diagonals and the synchronized (in-phase) mode carries the
//! highest frequency.

use crate::dynamics::ArrayDynamicsModel;
use crate::magnetics::{Coil, Magnet, MagnetRole};
use crate::resonator::{magnetic_moment, moment_of_inertia};
use crate::{MmtError, Result, Vec3, MU_0};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Rotor grouping driven by one coil, with the module's rest-dipole sign.
#[derive(Debug, Clone)]
pub struct ModuleSpec {
    pub rotor_indices: Vec<usize>,
    /// +1 or −1: orientation of the module's net dipole at rest.
    pub dipole_sign: i8,
    pub coil: Coil,
}

/// A linear multi-rotor transmitter.
#[derive(Debug, Clone)]
pub struct ArrayConfig {
    pub rotors: Vec<Magnet>,
    pub stators: Vec<Magnet>,
    /// Rotor-rotor center spacing, m.
    pub d_rr: f64,
    /// End-rotor to stator center distance, m.
    pub d_rs: f64,
    pub modules: Vec<ModuleSpec>,
}

impl ArrayConfig {
    /// N identical rotors in a chain along y, with a stator beyond each end.
    pub fn uniform_chain(
        rotor_template: &Magnet,
        n: usize,
        d_rr: f64,
        stator_template: Option<&Magnet>,
        d_rs: f64,
        coil: Coil,
    ) -> Result<Self> {
        if n < 1 {
            return Err(MmtError::InvalidInput("need at least one rotor".into()));
        }
        if d_rr <= 0.0 || d_rs <= 0.0 {
            return Err(MmtError::InvalidInput("spacings must be positive".into()));
        }
        let mut rotors = Vec::with_capacity(n);
        let y0 = -(n as f64 - 1.0) / 2.0 * d_rr;
        for i in 0..n {
            let mut rotor = rotor_template.clone();
            rotor.position = Vec3::new(0.0, y0 + i as f64 * d_rr, 0.0);
            rotor.role = MagnetRole::Rotor;
            rotors.push(rotor);
        }
        let mut stators = Vec::new();
        if let Some(template) = stator_template {
            for y in [y0 - d_rs, -y0 + d_rs] {
                let mut stator = template.clone();
                stator.position = Vec3::new(0.0, y, 0.0);
                stator.role = MagnetRole::Stator;
                stators.push(stator);
            }
        }
        Ok(ArrayConfig {
            rotors,
            stators,
            d_rr,
            d_rs,
            modules: vec![ModuleSpec {
                rotor_indices: (0..n).collect(),
                dipole_sign: 1,
                coil,
            }],
        })
    }

    /// Two identical modules stacked along z with opposing dipole
    /// orientations, center-to-center distance `stack_gap`.
    ///
    /// The opposed rest dipoles cancel the static far field while the
    /// frequency-matched motion still adds on the receiver axis.
    pub fn two_opposed_modules(single: &ArrayConfig, stack_gap: f64) -> Result<ArrayConfig> {
        if single.modules.len() != 1 {
            return Err(MmtError::InvalidInput(
                "stacking expects a single-module configuration".into(),
            ));
        }
        if stack_gap <= 0.0 {
            return Err(MmtError::InvalidInput("stack gap must be positive".into()));
        }
        let n = single.rotors.len();
        let mut rotors = Vec::with_capacity(2 * n);
        let mut stators = Vec::with_capacity(2 * single.stators.len());
        for (sign, z) in [(1.0, -stack_gap / 2.0), (-1.0, stack_gap / 2.0)] {
            for rotor in &single.rotors {
                let mut r = rotor.clone();
                r.position.z += z;
                r.magnetization_axis *= sign;
                rotors.push(r);
            }
            for stator in &single.stators {
                let mut s = stator.clone();
                s.position.z += z;
                s.magnetization_axis *= sign;
                stators.push(s);
            }
        }
        let coil = single.modules[0].coil.clone();
        Ok(ArrayConfig {
            rotors,
            stators,
            d_rr: single.d_rr,
            d_rs: single.d_rs,
            modules: vec![
                ModuleSpec {
                    rotor_indices: (0..n).collect(),
                    dipole_sign: 1,
                    coil: coil.clone(),
                },
                ModuleSpec {
                    rotor_indices: (n..2 * n).collect(),
                    dipole_sign: -1,
                    coil,
                },
            ],
        })
    }

    fn require_single_module(&self, what: &str) -> Result<()> {
        if self.modules.len() != 1 {
            return Err(MmtError::InvalidInput(format!(
                "{what} operates on a single-module chain"
            )));
        }
        Ok(())
    }
}

/// How far along the chain magnetic coupling is retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborDepth {
    First,
    Second,
    /// Full pairwise coupling.
    All,
}

impl NeighborDepth {
    fn hops(&self) -> usize {
        match self {
            NeighborDepth::First => 1,
            NeighborDepth::Second => 2,
            NeighborDepth::All => usize::MAX,
        }
    }
}

fn pair_coupling(m_a: f64, m_b: f64, distance: f64) -> f64 {
    MU_0 * m_a * m_b / (4.0 * PI * distance.powi(3))
}

/// Assemble the linearized stiffness matrix K with τ_i = Σ_j K_ij θ_j.
///
/// Rotor-rotor pairs within `depth` chain hops contribute 2c_ij to both
/// diagonals and c_ij off-diagonal; stators count as chain members, adding
/// 2c_is to the diagonal of rotors within `depth` hops of an end.
pub fn build_stiffness_matrix(config: &ArrayConfig, depth: NeighborDepth) -> Result<DMatrix<f64>> {
    config.require_single_module("stiffness assembly")?;
    let n = config.rotors.len();
    let hops = depth.hops();
    let mut k = DMatrix::<f64>::zeros(n, n);
    let moments: Vec<f64> = config.rotors.iter().map(magnetic_moment).collect();
    for i in 0..n {
        for j in i + 1..n {
            if j - i > hops {
                continue;
            }
            let d = (config.rotors[i].position - config.rotors[j].position).norm();
            let c = pair_coupling(moments[i], moments[j], d);
            k[(i, i)] += 2.0 * c;
            k[(j, j)] += 2.0 * c;
            k[(i, j)] += c;
            k[(j, i)] += c;
        }
    }
    for stator in &config.stators {
        let m_s = magnetic_moment(stator);
        for (i, rotor) in config.rotors.iter().enumerate() {
            // chain distance in hops: stators sit one hop beyond the end rotors
            let end_hops = if stator.position.y < config.rotors[0].position.y {
                i + 1
            } else {
                n - i
            };
            if end_hops > hops {
                continue;
            }
            let d = (rotor.position - stator.position).norm();
            k[(i, i)] += 2.0 * pair_coupling(moments[i], m_s, d);
        }
    }
    Ok(k)
}

/// Eigenfrequencies and mode shapes of an N-rotor chain.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Ascending eigenfrequencies, rad/s.
    pub frequencies: Vec<f64>,
    /// Unit-norm mode shapes, one column per mode, largest entry positive.
    pub shapes: DMatrix<f64>,
}

impl ModeSet {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn shape(&self, mode: usize) -> Vec<f64> {
        self.shapes.column(mode).iter().copied().collect()
    }

    /// Shapes rescaled so that vᵀ·diag(I)·v = 1.
    pub fn mass_normalized_shapes(&self, inertias: &[f64]) -> DMatrix<f64> {
        let mut shapes = self.shapes.clone();
        for mut col in shapes.column_iter_mut() {
            let m_norm: f64 = col
                .iter()
                .zip(inertias)
                .map(|(v, &i)| v * v * i)
                .sum::<f64>()
                .sqrt();
            col /= m_norm;
        }
        shapes
    }
}

/// Solve K·v = ω²·diag(I)·v for a symmetric K.
pub fn eigenmodes(k: &DMatrix<f64>, inertias: &[f64]) -> Result<ModeSet> {
    let n = k.nrows();
    if k.ncols() != n || inertias.len() != n || n == 0 {
        return Err(MmtError::InvalidInput(
            "stiffness matrix and inertia list sizes disagree".into(),
        ));
    }
    if inertias.iter().any(|&i| i <= 0.0) {
        return Err(MmtError::InvalidInput("inertias must be positive".into()));
    }
    let scale = k.amax();
    for i in 0..n {
        for j in 0..i {
            if (k[(i, j)] - k[(j, i)]).abs() > 1e-9 * scale.max(1e-300) {
                return Err(MmtError::InvalidInput(
                    "stiffness matrix must be symmetric".into(),
                ));
            }
        }
    }
    // reduce the generalized problem with M^{-1/2} K M^{-1/2}
    let inv_sqrt: Vec<f64> = inertias.iter().map(|&i| 1.0 / i.sqrt()).collect();
    let mut reduced = k.clone();
    for i in 0..n {
        for j in 0..n {
            reduced[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frequencies = Vec::with_capacity(n);
    let mut shapes = DMatrix::<f64>::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        frequencies.push(eig.eigenvalues[idx].max(0.0).sqrt());
        let mut v: Vec<f64> = (0..n)
            .map(|row| eig.eigenvectors[(row, idx)] * inv_sqrt[row])
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dominant = v
            .iter()
            .cloned()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if dominant < 0.0 { -1.0 } else { 1.0 };
        for x in &mut v {
            *x *= sign / norm;
        }
        shapes.set_column(col, &nalgebra::DVector::from_vec(v));
    }
    Ok(ModeSet { frequencies, shapes })
}

/// Uniformity of a mode shape: 1 − std(|v|)/mean(|v|), clamped at zero.
/// Equal-amplitude motion scores 1.
pub fn mode_uniformity(shape: &[f64]) -> Result<f64> {
    if shape.is_empty() || shape.iter().all(|&x| x == 0.0) {
        return Err(MmtError::InvalidInput(
            "mode uniformity needs a nonzero shape vector".into(),
        ));
    }
    let n = shape.len() as f64;
    let mean = shape.iter().map(|x| x.abs()).sum::<f64>() / n;
    let var = shape
        .iter()
        .map(|x| {
            let d = x.abs() - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok((1.0 - var.sqrt() / mean).max(0.0))
}

/// Index of the synchronized (in-phase) mode: the mode maximizing
/// |Σᵢvᵢ|/Σᵢ|vᵢ|, robust when stator terms perturb the frequency ordering.
pub fn in_phase_mode_index(modes: &ModeSet) -> usize {
    (0..modes.n_modes())
        .max_by(|&a, &b| {
            let score = |m: usize| {
                let col = modes.shapes.column(m);
                col.iter().sum::<f64>().abs() / col.iter().map(|x| x.abs()).sum::<f64>()
            };
            score(a).total_cmp(&score(b))
        })
        .expect("mode set is nonempty")
}

/// Outcome of the stator-distance search.
#[derive(Debug, Clone, Copy)]
pub struct StatorOptimum {
    pub d_rs: f64,
    pub uniformity: f64,
    /// True when the best value sits at a range endpoint.
    pub boundary: bool,
    /// True when the objective is flat over the range (no stators).
    pub flat: bool,
}

/// Golden-section tolerance on d_rs, m.
const DRS_TOL: f64 = 1e-5;

fn in_phase_uniformity(config: &ArrayConfig, d_rs: f64, density: f64) -> Result<f64> {
    let mut trial = config.clone();
    trial.d_rs = d_rs;
    let n = trial.rotors.len();
    let y_lo = trial.rotors[0].position.y;
    let y_hi = trial.rotors[n - 1].position.y;
    for stator in &mut trial.stators {
        if stator.position.y < y_lo {
            stator.position.y = y_lo - d_rs;
        } else {
            stator.position.y = y_hi + d_rs;
        }
    }
    let k = build_stiffness_matrix(&trial, NeighborDepth::Second)?;
    let inertias: Vec<f64> = trial
        .rotors
        .iter()
        .map(|r| moment_of_inertia(r, density))
        .collect();
    let modes = eigenmodes(&k, &inertias)?;
    mode_uniformity(&modes.shape(in_phase_mode_index(&modes)))
}

/// Maximize the in-phase-mode uniformity over the stator distance by
/// golden-section search on `[lo, hi]`.
///
/// A flat objective (stator-free chain) is reported as such; if no interior
/// optimum beats the endpoints the better endpoint is returned with the
/// `boundary` flag set.
pub fn optimize_stator_distance(
    config: &ArrayConfig,
    lo: f64,
    hi: f64,
    density: f64,
) -> Result<StatorOptimum> {
    if lo <= 0.0 || hi <= lo {
        return Err(MmtError::InvalidInput(
            "search range must be positive with lo < hi".into(),
        ));
    }
    config.require_single_module("stator-distance optimization")?;
    let objective = |d: f64| in_phase_uniformity(config, d, density);
    // coarse bracket first: golden section assumes unimodality
    let n_coarse = 25;
    let coarse: Vec<(f64, f64)> = (0..n_coarse)
        .map(|k| {
            let d = lo + (hi - lo) * k as f64 / (n_coarse - 1) as f64;
            objective(d).map(|u| (d, u))
        })
        .collect::<Result<_>>()?;
    let (min_u, max_u) = coarse.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
        (acc.0.min(p.1), acc.1.max(p.1))
    });
    if max_u - min_u < 1e-12 {
        log::warn!("uniformity is flat over [{lo}, {hi}] m; no stator interaction to tune");
        return Ok(StatorOptimum {
            d_rs: 0.5 * (lo + hi),
            uniformity: max_u,
            boundary: false,
            flat: true,
        });
    }
    let best_idx = coarse
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap()
        .0;
    if best_idx == 0 || best_idx == n_coarse - 1 {
        log::warn!("uniformity optimum lies at the range boundary");
        return Ok(StatorOptimum {
            d_rs: coarse[best_idx].0,
            uniformity: coarse[best_idx].1,
            boundary: true,
            flat: false,
        });
    }
    // golden-section refine inside the bracketing neighbours
    let (mut a, mut b) = (coarse[best_idx - 1].0, coarse[best_idx + 1].0);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while (b - a).abs() > DRS_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let d_rs = 0.5 * (a + b);
    let uniformity = objective(d_rs)?;
    Ok(StatorOptimum {
        d_rs,
        uniformity,
        boundary: false,
        flat: false,
    })
}

/// Radial dc field around the array: all magnets at rest, summed as point
/// dipoles, projected on the outward radial direction at each angle.
///
/// Receivers sit at `radius·(cos γ, sin γ, 0)`; the radius must clear the
/// array's bounding sphere.
pub fn dc_field_pattern(
    config: &ArrayConfig,
    radius: f64,
    gamma_samples: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let extent = config
        .rotors
        .iter()
        .chain(&config.stators)
        .map(|m| {
            let he = match m.shape {
                crate::magnetics::MagnetShape::Cuboid { l_x, l_y, l_z } => {
                    (l_x * l_x + l_y * l_y + l_z * l_z).sqrt() / 2.0
                }
                crate::magnetics::MagnetShape::Cylinder { diameter, length } => {
                    (diameter * diameter / 4.0 + length * length / 4.0).sqrt()
                }
            };
            m.position.norm() + he
        })
        .fold(0.0f64, f64::max);
    if radius <= extent {
        return Err(MmtError::Geometry(format!(
            "receiver radius {radius} m is inside the array extent {extent:.4} m"
        )));
    }
    gamma_samples
        .iter()
        .map(|&gamma| {
            let r_hat = Vec3::new(gamma.cos(), gamma.sin(), 0.0);
            let probe = r_hat * radius;
            let mut b = Vec3::zeros();
            for magnet in config.rotors.iter().chain(&config.stators) {
                b += crate::magnetics::dipole_field(
                    &magnet.dipole_moment(),
                    &(probe - magnet.position),
                )?;
            }
            Ok((gamma, b.dot(&r_hat)))
        })
        .collect()
}

/// Small-angle proxies for the energy/field trade-off: kinetic energy
/// Σ Iᵢθᵢ² against radiated field Σ θᵢ.
pub fn kinetic_energy_for_field(amplitudes: &[f64], inertias: &[f64]) -> (f64, f64) {
    let ke = amplitudes
        .iter()
        .zip(inertias)
        .map(|(&t, &i)| i * t * t)
        .sum();
    let field = amplitudes.iter().sum();
    (ke, field)
}

/// Lower the config into the time-domain model used by
/// [`crate::dynamics::simulate_array`], with couplings truncated at `depth`.
pub fn to_dynamics_model(
    config: &ArrayConfig,
    depth: NeighborDepth,
    gamma_per_rotor: f64,
    damping_per_rotor: f64,
    density: f64,
) -> Result<ArrayDynamicsModel> {
    config.require_single_module("dynamics lowering")?;
    let n = config.rotors.len();
    let hops = depth.hops();
    let moments: Vec<f64> = config.rotors.iter().map(magnetic_moment).collect();
    let mut rotor_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j - i > hops {
                continue;
            }
            let d = (config.rotors[i].position - config.rotors[j].position).norm();
            rotor_pairs.push((i, j, pair_coupling(moments[i], moments[j], d)));
        }
    }
    let mut stator_terms = Vec::new();
    for stator in &config.stators {
        let m_s = magnetic_moment(stator);
        for (i, rotor) in config.rotors.iter().enumerate() {
            let end_hops = if stator.position.y < config.rotors[0].position.y {
                i + 1
            } else {
                n - i
            };
            if end_hops > hops {
                continue;
            }
            let d = (rotor.position - stator.position).norm();
            stator_terms.push((i, pair_coupling(moments[i], m_s, d)));
        }
    }
    Ok(ArrayDynamicsModel {
        inertias: config
            .rotors
            .iter()
            .map(|r| moment_of_inertia(r, density))
            .collect(),
        dampings: vec![damping_per_rotor; n],
        rotor_pairs,
        stator_terms,
        gammas: vec![gamma_per_rotor; n],
        rotor_moment: moments[0],
    })
}
