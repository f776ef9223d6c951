//! On-off keying on the drive voltage, lock-in style envelope recovery of
//! the received field, and bit decoding.

use crate::dynamics::{DriveSignal, DriveWaveform, TimeSeries};
use crate::{MmtError, Result};
use std::f64::consts::PI;

/// Minimum carrier cycles per bit accepted by the encoder.
const MIN_CYCLES_PER_BIT: f64 = 10.0;

/// A binary message and its rate.
#[derive(Debug, Clone)]
pub struct BitStream {
    pub bits: Vec<bool>,
    /// bits per second.
    pub bitrate: f64,
}

impl BitStream {
    pub fn new(bits: Vec<bool>, bitrate: f64) -> Result<Self> {
        if bits.is_empty() {
            return Err(MmtError::InvalidInput("bit stream is empty".into()));
        }
        if bitrate <= 0.0 {
            return Err(MmtError::InvalidInput("bitrate must be positive".into()));
        }
        Ok(BitStream { bits, bitrate })
    }

    /// Parse an ASCII `0`/`1` string.
    pub fn from_ascii(text: &str, bitrate: f64) -> Result<Self> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(MmtError::InvalidInput(format!(
                    "bit stream accepts only '0'/'1', found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        BitStream::new(bits, bitrate)
    }

    pub fn to_ascii(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn duration(&self) -> f64 {
        self.bits.len() as f64 / self.bitrate
    }
}

/// Encode a bit stream as OOK: √2·v_on·sin(ωt) during `1` bits, zero during
/// `0` bits. The carrier must complete at least ten cycles per bit.
pub fn encode_ook(stream: &BitStream, v_on: f64, carrier: f64) -> Result<DriveSignal> {
    if v_on < 0.0 || carrier <= 0.0 {
        return Err(MmtError::InvalidInput(
            "encode needs non-negative level and positive carrier".into(),
        ));
    }
    let cycles_per_bit = carrier / (2.0 * PI) / stream.bitrate;
    if cycles_per_bit < MIN_CYCLES_PER_BIT {
        return Err(MmtError::Config(format!(
            "carrier completes {cycles_per_bit:.1} cycles per bit; need at least {MIN_CYCLES_PER_BIT}"
        )));
    }
    Ok(DriveSignal {
        waveform: DriveWaveform::Ook {
            bits: stream.bits.clone(),
            bitrate: stream.bitrate,
            v_on,
            carrier,
        },
        duration: stream.duration(),
    })
}

/// Ring-up/ring-down time constant of the mechanical envelope, λ = 2I/b.
pub fn envelope_time_constant(inertia: f64, damping: f64) -> Result<f64> {
    if damping <= 0.0 {
        return Err(MmtError::Undamped(
            "envelope time constant is infinite without damping".into(),
        ));
    }
    Ok(2.0 * inertia / damping)
}

/// Synchronous (lock-in) envelope of the received field at the carrier.
///
/// The series is mixed with quadrature references at the carrier and each
/// product is low-passed at one tenth of the carrier frequency (two cascaded
/// first-order stages); the output is the instantaneous amplitude.
pub fn extract_envelope(series: &TimeSeries, carrier: f64) -> Result<Vec<f64>> {
    if carrier <= 0.0 {
        return Err(MmtError::InvalidInput("carrier must be positive".into()));
    }
    let samples_per_cycle = 2.0 * PI / carrier / series.dt;
    if samples_per_cycle < 20.0 {
        return Err(MmtError::Undersampled(format!(
            "{samples_per_cycle:.1} samples per carrier cycle; need at least 20"
        )));
    }
    let cutoff = carrier / 10.0;
    let alpha = series.dt * cutoff / (1.0 + series.dt * cutoff);
    let mut lp = [0.0f64; 4]; // two stages per quadrature
    let mut envelope = Vec::with_capacity(series.len());
    for k in 0..series.len() {
        let phase = carrier * series.time[k];
        let x_i = series.b_rx[k] * phase.sin();
        let x_q = series.b_rx[k] * phase.cos();
        lp[0] += alpha * (x_i - lp[0]);
        lp[1] += alpha * (lp[0] - lp[1]);
        lp[2] += alpha * (x_q - lp[2]);
        lp[3] += alpha * (lp[2] - lp[3]);
        envelope.push(2.0 * (lp[1] * lp[1] + lp[3] * lp[3]).sqrt());
    }
    Ok(envelope)
}

/// Decoded message plus the decision context.
#[derive(Debug, Clone)]
pub struct DemodResult {
    pub decoded: Vec<bool>,
    /// Envelope the decision was made on, T.
    pub envelope: Vec<f64>,
    /// Decision threshold, T.
    pub threshold: f64,
    /// Bit errors against the transmitted stream (when provided).
    pub errors: usize,
}

/// Threshold-decode an envelope at the given bitrate.
///
/// The threshold is the midpoint of the 10th and 90th percentile of the
/// envelope sampled at bit centers; center sampling keeps ring-up transients
/// out of the statistics. A flat envelope (on/off contrast under 5%) cannot
/// be thresholded and is rejected.
pub fn decode_ook(
    envelope: &[f64],
    dt: f64,
    bitrate: f64,
    expected_length: usize,
) -> Result<(Vec<bool>, f64)> {
    if expected_length == 0 || bitrate <= 0.0 || dt <= 0.0 {
        return Err(MmtError::InvalidInput("decode parameters out of range".into()));
    }
    let needed = expected_length as f64 / bitrate;
    let have = (envelope.len().saturating_sub(1)) as f64 * dt;
    if have + 0.5 * dt < needed {
        return Err(MmtError::InsufficientData(format!(
            "envelope spans {have:.3} s; message needs {needed:.3} s"
        )));
    }
    let centers: Vec<f64> = (0..expected_length)
        .map(|k| {
            let t = (k as f64 + 0.5) / bitrate;
            let idx = ((t / dt).round() as usize).min(envelope.len() - 1);
            envelope[idx]
        })
        .collect();
    let mut sorted = centers.clone();
    sorted.sort_by(f64::total_cmp);
    let p10 = percentile(&sorted, 0.10);
    let p90 = percentile(&sorted, 0.90);
    if p90 - p10 < 0.05 * p90.abs() || p90 == 0.0 {
        return Err(MmtError::DecodeAmbiguous(format!(
            "envelope is flat: p10 = {p10:.3e}, p90 = {p90:.3e}"
        )));
    }
    let threshold = 0.5 * (p10 + p90);
    Ok((centers.iter().map(|&c| c > threshold).collect(), threshold))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Envelope-extract and decode a simulated series in one step; when the
/// transmitted stream is given the error count is filled in.
pub fn demodulate(
    series: &TimeSeries,
    carrier: f64,
    bitrate: f64,
    expected_length: usize,
    transmitted: Option<&[bool]>,
) -> Result<DemodResult> {
    let envelope = extract_envelope(series, carrier)?;
    let (decoded, threshold) = decode_ook(&envelope, series.dt, bitrate, expected_length)?;
    let errors = transmitted.map_or(0, |tx| count_bit_errors(tx, &decoded));
    Ok(DemodResult {
        decoded,
        envelope,
        threshold,
        errors,
    })
}

/// Hamming distance plus any length mismatch.
pub fn count_bit_errors(transmitted: &[bool], decoded: &[bool]) -> usize {
    let common = transmitted
        .iter()
        .zip(decoded)
        .filter(|(a, b)| a != b)
        .count();
    common + transmitted.len().abs_diff(decoded.len())
}
