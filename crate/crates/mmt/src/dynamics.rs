//! Time-domain integration of the coupled nonlinear electro-mechanical
//! equations, steady-state extraction, and stepped-sine frequency sweeps.
//!
//! Equations of motion for the single-rotor transmitter:
//!
//! ```text
//! I·θ̈    = −b·θ̇ − τ_rs(θ) − Γ₀·cos θ·i_d
//! L_c·di = (v_d(t) − R_c·i_d + Γ₀·cos θ·θ̇)·dt
//! ```
//!
//! The gyrator terms are lossless as a pair: power Γ₀cosθ·i·θ̇ leaves the
//! electrical side exactly as it enters the mechanical side, which is what
//! makes the linearized model reduce to the lumped-element impedance of
//! [`crate::circuit`]. Integration is fixed-step classic Runge-Kutta.

use crate::circuit::CircuitParams;
use crate::magnetics::Coil;
use crate::resonator::{MotionState, ResonatorModel};
use crate::{MmtError, Result, MU_0};
use std::f64::consts::PI;

/// Voltage waveform applied to the drive coil.
#[derive(Debug, Clone)]
pub enum DriveWaveform {
    /// v(t) = √2·v_rms·sin(ω t).
    Sine { v_rms: f64, freq: f64 },
    /// On-off keying: √2·v_on·sin(ω t) during `1` bits, zero during `0` bits.
    Ook {
        bits: Vec<bool>,
        bitrate: f64,
        v_on: f64,
        carrier: f64,
    },
}

#[derive(Debug, Clone)]
pub struct DriveSignal {
    pub waveform: DriveWaveform,
    /// Total signal duration, s.
    pub duration: f64,
}

impl DriveSignal {
    pub fn sine(v_rms: f64, freq: f64, duration: f64) -> Result<Self> {
        if v_rms < 0.0 || freq <= 0.0 || duration <= 0.0 {
            return Err(MmtError::InvalidInput(
                "sine drive needs non-negative voltage and positive frequency/duration".into(),
            ));
        }
        Ok(DriveSignal {
            waveform: DriveWaveform::Sine { v_rms, freq },
            duration,
        })
    }

    /// Instantaneous drive voltage.
    pub fn voltage(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        match &self.waveform {
            DriveWaveform::Sine { v_rms, freq } => 2f64.sqrt() * v_rms * (freq * t).sin(),
            DriveWaveform::Ook {
                bits,
                bitrate,
                v_on,
                carrier,
            } => {
                let idx = (t * bitrate) as usize;
                if idx < bits.len() && bits[idx] {
                    2f64.sqrt() * v_on * (carrier * t).sin()
                } else {
                    0.0
                }
            }
        }
    }

    /// Dominant angular frequency of the waveform, rad/s.
    pub fn carrier_freq(&self) -> f64 {
        match &self.waveform {
            DriveWaveform::Sine { freq, .. } => *freq,
            DriveWaveform::Ook { carrier, .. } => *carrier,
        }
    }
}

/// Restoring-torque law used by the integrator.
#[derive(Debug, Clone)]
pub enum TorqueLaw {
    /// κ₁θ + κ₃θ³ from the resonator model.
    CubicFit,
    /// Exact two-stator point-dipole law κ₁·sin θ.
    ExactDipole,
    /// Interpolated table, e.g. from the grid quadrature.
    GridTable(TorqueTable),
}

impl TorqueLaw {
    fn torque(&self, model: &ResonatorModel, theta: f64) -> f64 {
        match self {
            TorqueLaw::CubicFit => model.restoring_torque(theta),
            TorqueLaw::ExactDipole => model.kappa1 * theta.sin(),
            TorqueLaw::GridTable(table) => table.eval(theta),
        }
    }
}

/// Natural cubic spline over torque samples, odd-extended about θ = 0.
///
/// Samples covering only θ ≥ 0 are mirrored with τ(−θ) = −τ(θ) before the
/// spline is built. Outside the sampled range the end slope is continued
/// linearly.
#[derive(Debug, Clone)]
pub struct TorqueTable {
    knots: Vec<f64>,
    values: Vec<f64>,
    second_derivs: Vec<f64>,
}

impl TorqueTable {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(MmtError::InsufficientData(
                "torque table needs at least two samples".into(),
            ));
        }
        for pair in samples.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(MmtError::InvalidInput(
                    "torque table samples must be strictly increasing in θ".into(),
                ));
            }
        }
        let mut pts: Vec<(f64, f64)> = Vec::new();
        if samples[0].0 >= 0.0 {
            // odd extension about the origin
            for &(theta, tau) in samples.iter().rev() {
                if theta > 0.0 {
                    pts.push((-theta, -tau));
                }
            }
        }
        pts.extend_from_slice(samples);
        let knots: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let values: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let second_derivs = natural_spline_second_derivs(&knots, &values);
        Ok(TorqueTable {
            knots,
            values,
            second_derivs,
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.knots.len();
        if theta <= self.knots[0] {
            return self.values[0] + self.end_slope(0) * (theta - self.knots[0]);
        }
        if theta >= self.knots[n - 1] {
            return self.values[n - 1] + self.end_slope(n - 1) * (theta - self.knots[n - 1]);
        }
        let i = match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&theta).unwrap())
        {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - theta) / h;
        let b = (theta - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a.powi(3) - a) * self.second_derivs[i]
                + (b.powi(3) - b) * self.second_derivs[i + 1])
                * h
                * h
                / 6.0
    }

    fn end_slope(&self, i: usize) -> f64 {
        let n = self.knots.len();
        let (lo, hi) = if i == 0 { (0, 1) } else { (n - 2, n - 1) };
        let h = self.knots[hi] - self.knots[lo];
        (self.values[hi] - self.values[lo]) / h
            - h / 6.0
                * (if i == 0 {
                    2.0 * self.second_derivs[lo] + self.second_derivs[hi]
                } else {
                    -(self.second_derivs[lo] + 2.0 * self.second_derivs[hi])
                })
    }
}

fn natural_spline_second_derivs(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the tridiagonal system; natural ends m₀ = mₙ = 0.
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    let mut c_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let denom = diag[i] - h0 * c_prime[i - 1];
        c_prime[i] = (x[i + 1] - x[i]) / denom;
        rhs[i] = (rhs[i] - h0 * rhs[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = rhs[i] - c_prime[i] * m[i + 1];
    }
    m
}

/// Integration and receiver options.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Fixed RK4 steps per drive period (≥ 200 recommended).
    pub steps_per_period: usize,
    /// Freeze cos θ = 1 in the torque and back-emf coupling terms.
    pub small_angle: bool,
    /// Receiver distance r_x for the recorded field, m.
    pub receiver_distance: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            steps_per_period: 200,
            small_angle: false,
            receiver_distance: 1000.0,
        }
    }
}

/// Uniformly sampled trajectory of the coupled system.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub dt: f64,
    pub time: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
    pub i_d: Vec<f64>,
    pub v_d: Vec<f64>,
    pub b_rx: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Total received field on the receiver axis:
/// B = −μ₀·M_r·sin θ/(2π·r_x³) + μ₀·N_c·A_c·i_d/(2π·(d_cr + r_x)³).
pub fn received_total_field(
    theta: f64,
    i_d: f64,
    m_r: f64,
    coil: &Coil,
    r_x: f64,
    d_cr: f64,
) -> Result<f64> {
    if r_x <= 0.0 || d_cr + r_x <= 0.0 {
        return Err(MmtError::Singularity(
            "receiver and coil distances must be positive".into(),
        ));
    }
    let mech = -MU_0 * m_r * theta.sin() / (2.0 * PI * r_x.powi(3));
    let coil_term =
        MU_0 * coil.turns as f64 * coil.area * i_d / (2.0 * PI * (d_cr + r_x).powi(3));
    Ok(mech + coil_term)
}

#[derive(Clone, Copy)]
struct State {
    theta: f64,
    theta_dot: f64,
    i_d: f64,
}

fn rk4_step<F>(s: State, t: f64, dt: f64, deriv: &F) -> State
where
    F: Fn(f64, State) -> (f64, f64, f64),
{
    let add = |s: State, k: (f64, f64, f64), h: f64| State {
        theta: s.theta + h * k.0,
        theta_dot: s.theta_dot + h * k.1,
        i_d: s.i_d + h * k.2,
    };
    let k1 = deriv(t, s);
    let k2 = deriv(t + dt / 2.0, add(s, k1, dt / 2.0));
    let k3 = deriv(t + dt / 2.0, add(s, k2, dt / 2.0));
    let k4 = deriv(t + dt, add(s, k3, dt));
    State {
        theta: s.theta + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        theta_dot: s.theta_dot + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        i_d: s.i_d + dt / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    }
}

/// Integrate the coupled rotor-coil equations under the given drive.
///
/// `initial` supplies θ(0), θ̇(0) and the initial coil current.
pub fn simulate(
    model: &ResonatorModel,
    circuit: &CircuitParams,
    drive: &DriveSignal,
    torque_law: &TorqueLaw,
    initial: (MotionState, f64),
    opts: &SimOptions,
) -> Result<TimeSeries> {
    let base_freq = if drive.carrier_freq() > 0.0 {
        drive.carrier_freq()
    } else {
        model.natural_frequency()
    };
    let dt = 2.0 * PI / base_freq / opts.steps_per_period.max(1) as f64;
    let n_steps = (drive.duration / dt).ceil() as usize;
    let mut series = TimeSeries {
        dt,
        time: Vec::with_capacity(n_steps + 1),
        theta: Vec::with_capacity(n_steps + 1),
        theta_dot: Vec::with_capacity(n_steps + 1),
        i_d: Vec::with_capacity(n_steps + 1),
        v_d: Vec::with_capacity(n_steps + 1),
        b_rx: Vec::with_capacity(n_steps + 1),
    };
    let deriv = make_deriv(model, circuit, drive, torque_law, opts);
    let mut state = State {
        theta: initial.0.theta,
        theta_dot: initial.0.theta_dot,
        i_d: initial.1,
    };
    let mut t = 0.0;
    for step in 0..=n_steps {
        series.time.push(t);
        series.theta.push(state.theta);
        series.theta_dot.push(state.theta_dot);
        series.i_d.push(state.i_d);
        series.v_d.push(drive.voltage(t));
        series.b_rx.push(received_total_field(
            state.theta,
            state.i_d,
            model.rotor_moment,
            &circuit.coil,
            opts.receiver_distance,
            circuit.d_cr,
        )?);
        if step == n_steps {
            break;
        }
        state = rk4_step(state, t, dt, &deriv);
        t += dt;
        if !(state.theta.is_finite() && state.theta_dot.is_finite() && state.i_d.is_finite()) {
            return Err(MmtError::IntegrationDiverged { step: step + 1, time: t });
        }
    }
    Ok(series)
}

fn make_deriv<'a>(
    model: &'a ResonatorModel,
    circuit: &'a CircuitParams,
    drive: &'a DriveSignal,
    torque_law: &'a TorqueLaw,
    opts: &SimOptions,
) -> impl Fn(f64, State) -> (f64, f64, f64) + 'a {
    let small_angle = opts.small_angle;
    move |t: f64, s: State| {
        let cos_eff = if small_angle { 1.0 } else { s.theta.cos() };
        let coupling = circuit.gamma0 * cos_eff;
        let torque = torque_law.torque(model, s.theta);
        let theta_dd =
            (-model.damping * s.theta_dot - torque - coupling * s.i_d) / model.inertia;
        let di = (drive.voltage(t) - circuit.coil.resistance * s.i_d
            + coupling * s.theta_dot)
            / circuit.coil.inductance;
        (s.theta_dot, theta_dd, di)
    }
}

/// Steady-state summary of a driven series.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    /// RMS of θ over the final ten drive cycles, rad.
    pub theta_rms: f64,
    /// RMS of the drive-frequency component of the received field, T.
    pub b_rx_rms: f64,
    /// Mean source power over the final ten cycles, W.
    pub p_avg: f64,
    /// Largest |θ| over the final ten cycles, rad.
    pub theta_max: f64,
    /// True when consecutive cycle-rms values settled to < 1e-4 relative.
    pub converged: bool,
}

const CYCLE_SETTLE_TOL: f64 = 1e-4;
const SETTLE_WINDOW_CYCLES: usize = 10;

/// Extract cycle-windowed steady-state quantities from a series.
///
/// The series must span at least 20 drive periods. Convergence requires the
/// cycle-by-cycle rms of θ to change by less than 1e-4 (relative) across the
/// final ten cycles.
pub fn steady_state(series: &TimeSeries, drive_freq: f64) -> Result<SteadyState> {
    if drive_freq <= 0.0 {
        return Err(MmtError::InvalidInput("drive frequency must be positive".into()));
    }
    let period = 2.0 * PI / drive_freq;
    let spp = (period / series.dt).round() as usize;
    if spp < 4 {
        return Err(MmtError::Undersampled(
            "fewer than 4 samples per drive period".into(),
        ));
    }
    let n_cycles = (series.len() - 1) / spp;
    if n_cycles < 20 {
        return Err(MmtError::InsufficientData(format!(
            "series covers {n_cycles} drive periods; need at least 20"
        )));
    }
    let cycle_rms: Vec<f64> = (0..n_cycles)
        .map(|c| {
            let s = &series.theta[c * spp..(c + 1) * spp];
            (s.iter().map(|t| t * t).sum::<f64>() / spp as f64).sqrt()
        })
        .collect();
    let converged = cycle_settled(&cycle_rms);
    let start = (n_cycles - SETTLE_WINDOW_CYCLES) * spp;
    let end = n_cycles * spp;
    let window = start..end;
    let n = (end - start) as f64;
    let theta_rms =
        (series.theta[window.clone()].iter().map(|t| t * t).sum::<f64>() / n).sqrt();
    let theta_max = series.theta[window.clone()]
        .iter()
        .fold(0.0f64, |m, &t| m.max(t.abs()));
    let p_avg = window
        .clone()
        .map(|i| series.v_d[i] * series.i_d[i])
        .sum::<f64>()
        / n;
    // lock-in style fundamental of the received field
    let (mut in_phase, mut quad) = (0.0, 0.0);
    for i in window {
        let phase = drive_freq * series.time[i];
        in_phase += series.b_rx[i] * phase.sin();
        quad += series.b_rx[i] * phase.cos();
    }
    let b_amp = 2.0 / n * (in_phase * in_phase + quad * quad).sqrt();
    Ok(SteadyState {
        theta_rms,
        b_rx_rms: b_amp / 2f64.sqrt(),
        p_avg,
        theta_max,
        converged,
    })
}

fn cycle_settled(cycle_rms: &[f64]) -> bool {
    if cycle_rms.len() < SETTLE_WINDOW_CYCLES {
        return false;
    }
    let tail = &cycle_rms[cycle_rms.len() - SETTLE_WINDOW_CYCLES..];
    tail.windows(2).all(|w| {
        let scale = w[0].abs().max(1e-30);
        ((w[1] - w[0]) / scale).abs() < CYCLE_SETTLE_TOL
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
}

/// Stepped-sine sweep protocol.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// First frequency visited, Hz.
    pub f_start_hz: f64,
    /// Last frequency visited, Hz.
    pub f_stop_hz: f64,
    pub n_points: usize,
    pub direction: SweepDirection,
    /// Drive level, V rms.
    pub v_rms: f64,
    /// Cap on settling time per point, drive periods.
    pub max_periods: usize,
    /// Carry the settled state into the next frequency point (default);
    /// re-zeroing suppresses the nonlinear jump and is kept for comparison.
    pub carry_state: bool,
}

impl SweepConfig {
    pub fn new(
        f_start_hz: f64,
        f_stop_hz: f64,
        n_points: usize,
        direction: SweepDirection,
        v_rms: f64,
    ) -> Result<Self> {
        if f_start_hz <= 0.0 || f_stop_hz <= 0.0 || f_start_hz == f_stop_hz {
            return Err(MmtError::InvalidInput(
                "sweep endpoints must be positive and distinct".into(),
            ));
        }
        let ascending = f_stop_hz > f_start_hz;
        if ascending != (direction == SweepDirection::Up) {
            return Err(MmtError::InvalidInput(
                "sweep endpoints do not match the stated direction".into(),
            ));
        }
        if n_points < 2 {
            return Err(MmtError::InvalidInput("sweep needs at least 2 points".into()));
        }
        Ok(SweepConfig {
            f_start_hz,
            f_stop_hz,
            n_points,
            direction,
            v_rms,
            max_periods: 2000,
            carry_state: true,
        })
    }
}

/// One settled sweep point.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub freq_hz: f64,
    pub theta_rms: f64,
    pub theta_max: f64,
    pub b_rx_rms: f64,
    pub p_avg: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub direction: SweepDirection,
}

impl SweepResult {
    /// Point with the largest received field.
    pub fn peak(&self) -> &SweepPoint {
        self.points
            .iter()
            .max_by(|a, b| a.b_rx_rms.total_cmp(&b.b_rx_rms))
            .expect("sweep has at least two points")
    }
}

/// Stepped-sine frequency sweep: settle at each frequency, record rms
/// quantities, and seed the next point with the settled state. The state
/// carryover is what exposes the jump between branches of a nonlinear
/// response.
pub fn frequency_sweep(
    model: &ResonatorModel,
    circuit: &CircuitParams,
    torque_law: &TorqueLaw,
    cfg: &SweepConfig,
    opts: &SimOptions,
) -> Result<SweepResult> {
    let mut state = State {
        theta: 0.0,
        theta_dot: 0.0,
        i_d: 0.0,
    };
    let mut points = Vec::with_capacity(cfg.n_points);
    for k in 0..cfg.n_points {
        let f_hz = cfg.f_start_hz
            + (cfg.f_stop_hz - cfg.f_start_hz) * k as f64 / (cfg.n_points - 1) as f64;
        if !cfg.carry_state {
            state = State {
                theta: 0.0,
                theta_dot: 0.0,
                i_d: 0.0,
            };
        }
        let (point, settled) = settle_at_frequency(model, circuit, torque_law, cfg, opts, f_hz, state)?;
        state = settled;
        points.push(point);
    }
    Ok(SweepResult {
        points,
        direction: cfg.direction,
    })
}

/// Integrate at a fixed frequency until the cycle rms settles (or the period
/// cap is hit), then summarize the final ten cycles.
fn settle_at_frequency(
    model: &ResonatorModel,
    circuit: &CircuitParams,
    torque_law: &TorqueLaw,
    cfg: &SweepConfig,
    opts: &SimOptions,
    f_hz: f64,
    start: State,
) -> Result<(SweepPoint, State)> {
    let omega = 2.0 * PI * f_hz;
    let drive = DriveSignal::sine(cfg.v_rms, omega, f64::INFINITY)?;
    let deriv = make_deriv(model, circuit, &drive, torque_law, opts);
    let spp = opts.steps_per_period.max(4);
    let dt = 2.0 * PI / omega / spp as f64;
    let mut state = start;
    let mut t = 0.0;
    let mut rms_history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut periods_run = 0;

    // accumulators over the most recent SETTLE_WINDOW_CYCLES periods
    let window = SETTLE_WINDOW_CYCLES;
    let mut tail: Vec<(f64, f64, f64, f64)> = Vec::new(); // per-cycle (Σθ², θmax, Σvi, —)
    let mut fundamental: Vec<(f64, f64)> = Vec::new(); // per-cycle lock-in sums of b_rx

    while periods_run < cfg.max_periods {
        let (mut sum_theta2, mut theta_max, mut sum_vi) = (0.0, 0.0f64, 0.0);
        let (mut in_phase, mut quad) = (0.0, 0.0);
        for step in 0..spp {
            let v = drive.voltage(t);
            sum_theta2 += state.theta * state.theta;
            theta_max = theta_max.max(state.theta.abs());
            sum_vi += v * state.i_d;
            let b = received_total_field(
                state.theta,
                state.i_d,
                model.rotor_moment,
                &circuit.coil,
                opts.receiver_distance,
                circuit.d_cr,
            )?;
            let phase = omega * t;
            in_phase += b * phase.sin();
            quad += b * phase.cos();
            state = rk4_step(state, t, dt, &deriv);
            t += dt;
            if !(state.theta.is_finite() && state.theta_dot.is_finite() && state.i_d.is_finite())
            {
                return Err(MmtError::IntegrationDiverged {
                    step: periods_run * spp + step + 1,
                    time: t,
                });
            }
        }
        periods_run += 1;
        rms_history.push((sum_theta2 / spp as f64).sqrt());
        tail.push((sum_theta2, theta_max, sum_vi, 0.0));
        fundamental.push((in_phase, quad));
        if tail.len() > window {
            tail.remove(0);
            fundamental.remove(0);
        }
        if periods_run >= 2 * window && cycle_settled(&rms_history) {
            converged = true;
            break;
        }
    }

    let n = (tail.len() * spp) as f64;
    let theta_rms = (tail.iter().map(|c| c.0).sum::<f64>() / n).sqrt();
    let theta_max = tail.iter().fold(0.0f64, |m, c| m.max(c.1));
    let p_avg = tail.iter().map(|c| c.2).sum::<f64>() / n;
    let (si, sq) = fundamental
        .iter()
        .fold((0.0, 0.0), |acc, f| (acc.0 + f.0, acc.1 + f.1));
    let b_rx_rms = 2.0 / n * (si * si + sq * sq).sqrt() / 2f64.sqrt();
    Ok((
        SweepPoint {
            freq_hz: f_hz,
            theta_rms,
            theta_max,
            b_rx_rms,
            p_avg,
            converged,
        },
        state,
    ))
}

/// Multi-rotor lumped model for time-domain simulation: pairwise dipole
/// couplings plus one shared drive current through the module coil(s).
#[derive(Debug, Clone)]
pub struct ArrayDynamicsModel {
    pub inertias: Vec<f64>,
    pub dampings: Vec<f64>,
    /// (i, j, c_ij) with c_ij = μ₀·M_i·M_j/(4π·d_ij³); torque on i is
    /// c_ij(2 sin θ_i cos θ_j + cos θ_i sin θ_j) in the restoring convention.
    pub rotor_pairs: Vec<(usize, usize, f64)>,
    /// (i, c_is) per rotor-stator pair; restoring torque 2·c_is·sin θ_i.
    pub stator_terms: Vec<(usize, f64)>,
    /// Drive torque / back-emf coefficient per rotor, N·m/A.
    pub gammas: Vec<f64>,
    /// Rotor dipole magnitude for the radiated field, A·m².
    pub rotor_moment: f64,
}

/// Trajectory of an N-rotor simulation. Per-rotor angles are stored
/// row-major: `theta[k][i]` is rotor `i` at sample `k`.
#[derive(Debug, Clone)]
pub struct ArrayTimeSeries {
    pub dt: f64,
    pub time: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub theta_dot: Vec<Vec<f64>>,
    pub i_d: Vec<f64>,
    pub v_d: Vec<f64>,
    pub b_rx: Vec<f64>,
}

impl ArrayTimeSeries {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Integrate an N-rotor array sharing one drive current.
pub fn simulate_array(
    array: &ArrayDynamicsModel,
    circuit: &CircuitParams,
    drive: &DriveSignal,
    initial_theta: &[f64],
    opts: &SimOptions,
) -> Result<ArrayTimeSeries> {
    let n = array.inertias.len();
    if array.dampings.len() != n || array.gammas.len() != n || initial_theta.len() != n {
        return Err(MmtError::InvalidInput(
            "array model vectors must share one length".into(),
        ));
    }
    let base_freq = drive.carrier_freq();
    if base_freq <= 0.0 {
        return Err(MmtError::InvalidInput(
            "array simulation needs a positive drive frequency".into(),
        ));
    }
    let dt = 2.0 * PI / base_freq / opts.steps_per_period.max(1) as f64;
    let n_steps = (drive.duration / dt).ceil() as usize;

    let torque = |theta: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        for &(i, c) in &array.stator_terms {
            out[i] += 2.0 * c * theta[i].sin();
        }
        for &(i, j, c) in &array.rotor_pairs {
            let (si, ci) = theta[i].sin_cos();
            let (sj, cj) = theta[j].sin_cos();
            out[i] += c * (2.0 * si * cj + ci * sj);
            out[j] += c * (2.0 * sj * ci + cj * si);
        }
    };

    // state layout: [θ_0..θ_{n-1}, θ̇_0..θ̇_{n-1}, i_d]
    let deriv = |t: f64, s: &[f64], ds: &mut [f64]| {
        let (theta, rest) = s.split_at(n);
        let (theta_dot, i_slice) = rest.split_at(n);
        let i_d = i_slice[0];
        let mut tau = vec![0.0; n];
        torque(theta, &mut tau);
        let cos_eff: Vec<f64> = theta
            .iter()
            .map(|&t| if opts.small_angle { 1.0 } else { t.cos() })
            .collect();
        let mut emf = 0.0;
        for i in 0..n {
            ds[i] = theta_dot[i];
            ds[n + i] = (-array.dampings[i] * theta_dot[i]
                - tau[i]
                - array.gammas[i] * cos_eff[i] * i_d)
                / array.inertias[i];
            emf += array.gammas[i] * cos_eff[i] * theta_dot[i];
        }
        ds[2 * n] = (drive.voltage(t) - circuit.coil.resistance * i_d + emf)
            / circuit.coil.inductance;
    };

    let dim = 2 * n + 1;
    let mut state = vec![0.0; dim];
    state[..n].copy_from_slice(initial_theta);
    let mut series = ArrayTimeSeries {
        dt,
        time: Vec::with_capacity(n_steps + 1),
        theta: Vec::with_capacity(n_steps + 1),
        theta_dot: Vec::with_capacity(n_steps + 1),
        i_d: Vec::with_capacity(n_steps + 1),
        v_d: Vec::with_capacity(n_steps + 1),
        b_rx: Vec::with_capacity(n_steps + 1),
    };
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut scratch = vec![0.0; dim];
    let mut t = 0.0;
    for step in 0..=n_steps {
        let i_d = state[2 * n];
        let sin_sum: f64 = state[..n].iter().map(|t| t.sin()).sum();
        let mech = -MU_0 * array.rotor_moment * sin_sum
            / (2.0 * PI * opts.receiver_distance.powi(3));
        let coil_term = MU_0 * circuit.coil.turns as f64 * circuit.coil.area * i_d
            / (2.0 * PI * (circuit.d_cr + opts.receiver_distance).powi(3));
        series.time.push(t);
        series.theta.push(state[..n].to_vec());
        series.theta_dot.push(state[n..2 * n].to_vec());
        series.i_d.push(i_d);
        series.v_d.push(drive.voltage(t));
        series.b_rx.push(mech + coil_term);
        if step == n_steps {
            break;
        }
        // RK4 on the flat state vector
        deriv(t, &state, &mut k[0]);
        for i in 0..dim {
            scratch[i] = state[i] + dt / 2.0 * k[0][i];
        }
        deriv(t + dt / 2.0, &scratch, &mut k[1]);
        for i in 0..dim {
            scratch[i] = state[i] + dt / 2.0 * k[1][i];
        }
        deriv(t + dt / 2.0, &scratch, &mut k[2]);
        for i in 0..dim {
            scratch[i] = state[i] + dt * k[2][i];
        }
        deriv(t + dt, &scratch, &mut k[3]);
        for i in 0..dim {
            state[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        t += dt;
        if state.iter().any(|x| !x.is_finite()) {
            return Err(MmtError::IntegrationDiverged { step: step + 1, time: t });
        }
    }
    Ok(series)
}
