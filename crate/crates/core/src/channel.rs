//! Propagation path between the transmitting machine and the receiver.
//!
//! Noise is Gaussian and calibrated per sample against the ON-level power of
//! the clean envelope. Distance maps to SNR by piecewise-linear interpolation
//! over measured anchors. Also here: the shielding attenuation formula, an
//! internal RAM jammer impairment and DDR clock harmonics.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use thiserror::Error;

use crate::seed::{derive_seed, rng_from};
use crate::waveform::EnvelopeSignal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("cannot calibrate noise: signal has no ON samples")]
    Calibration,
    #[error("snr must be finite or +inf, got {0}")]
    InvalidSnr(f64),
    #[error("distance {0} cm outside the calibrated 50..=700 cm range")]
    Domain(f64),
    #[error("invalid shield: {0}")]
    InvalidShield(String),
    #[error("invalid jammer: {0}")]
    InvalidJammer(String),
    #[error("invalid noise shape: {0}")]
    InvalidNoise(String),
    #[error("clock must be positive and count at least 1")]
    InvalidHarmonics,
}

/// Average SNR measured at each anchor distance (cm, dB).
pub const SNR_ANCHORS: [(f64, f64); 8] = [
    (50.0, 38.0),
    (100.0, 30.0),
    (200.0, 27.0),
    (300.0, 22.0),
    (400.0, 17.0),
    (500.0, 15.0),
    (600.0, 12.0),
    (700.0, 8.0),
];

/// Spectral shape of the additive noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseShape {
    /// Independent samples.
    #[default]
    White,
    /// First-order low-pass (AR(1)) noise with the given correlation time,
    /// standing in for a receiver whose envelope resolution is coarser than
    /// the simulation sample period. Marginal variance is unchanged.
    LowPass { correlation_us: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerConfig {
    duty_cycle: f64,
    burst_ms: f64,
    amplitude: f64,
}

impl JammerConfig {
    pub fn new(duty_cycle: f64, burst_ms: f64, amplitude: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&duty_cycle) {
            return Err(ChannelError::InvalidJammer(format!(
                "duty cycle {duty_cycle} outside [0, 1]"
            )));
        }
        if !(burst_ms.is_finite() && burst_ms > 0.0) {
            return Err(ChannelError::InvalidJammer(format!(
                "burst time {burst_ms} ms must be positive"
            )));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(ChannelError::InvalidJammer(format!(
                "amplitude {amplitude} must be non-negative"
            )));
        }
        Ok(Self {
            duty_cycle,
            burst_ms,
            amplitude,
        })
    }

    pub fn duty_cycle(&self) -> f64 {
        self.duty_cycle
    }

    pub fn burst_ms(&self) -> f64 {
        self.burst_ms
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

/// Noise level, seed and optional impairments for one pass through the air gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    snr_db: f64,
    seed: u64,
    jammer: Option<JammerConfig>,
    noise: NoiseShape,
}

impl ChannelModel {
    /// `snr_db = f64::INFINITY` disables noise.
    pub fn new(snr_db: f64, seed: u64) -> Result<Self, ChannelError> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(ChannelError::InvalidSnr(snr_db));
        }
        Ok(Self {
            snr_db,
            seed,
            jammer: None,
            noise: NoiseShape::White,
        })
    }

    pub fn noiseless(seed: u64) -> Self {
        Self::new(f64::INFINITY, seed).expect("infinity is a valid snr")
    }

    pub fn at_distance(distance_cm: f64, seed: u64) -> Result<Self, ChannelError> {
        Self::new(distance_to_snr(distance_cm)?, seed)
    }

    pub fn with_jammer(mut self, jammer: JammerConfig) -> Self {
        self.jammer = Some(jammer);
        self
    }

    pub fn with_noise(mut self, noise: NoiseShape) -> Result<Self, ChannelError> {
        if let NoiseShape::LowPass { correlation_us } = noise {
            if !(correlation_us.is_finite() && correlation_us >= 0.0) {
                return Err(ChannelError::InvalidNoise(format!(
                    "correlation time {correlation_us} us"
                )));
            }
        }
        self.noise = noise;
        Ok(self)
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn jammer(&self) -> Option<&JammerConfig> {
        self.jammer.as_ref()
    }

    pub fn noise(&self) -> NoiseShape {
        self.noise
    }

    pub fn noise_enabled(&self) -> bool {
        self.snr_db != f64::INFINITY
    }

    /// Jammer (if any), then noise calibrated on the clean input.
    pub fn apply(&self, signal: &EnvelopeSignal) -> Result<EnvelopeSignal, ChannelError> {
        if signal.is_empty() {
            return Err(ChannelError::EmptySignal);
        }
        let sigma = if self.noise_enabled() {
            Some(noise_sigma(signal, self.snr_db)?)
        } else {
            None
        };
        let mut out = match &self.jammer {
            Some(cfg) => apply_jammer(signal, cfg, derive_seed(self.seed, &[JAMMER_STREAM])),
            None => signal.clone(),
        };
        if let Some(sigma) = sigma {
            out = add_noise(&out, sigma, self.noise, self.seed);
        }
        Ok(out)
    }
}

const JAMMER_STREAM: u64 = 0x6a61_6d6d;

/// Mean power of the ON-level samples: those above half the peak magnitude.
pub fn on_level_power(signal: &EnvelopeSignal) -> Option<f64> {
    let peak = signal.samples().iter().fold(0f32, |m, s| m.max(s.abs()));
    if peak == 0.0 {
        return None;
    }
    let cut = peak / 2.0;
    let (sum, n) = signal
        .samples()
        .iter()
        .filter(|s| s.abs() > cut)
        .fold((0f64, 0usize), |(acc, n), &s| {
            (acc + f64::from(s) * f64::from(s), n + 1)
        });
    Some(sum / n as f64)
}

/// σ such that `P_on / σ² = 10^(snr_db / 10)`.
pub fn noise_sigma(signal: &EnvelopeSignal, snr_db: f64) -> Result<f64, ChannelError> {
    let p_on = on_level_power(signal).ok_or(ChannelError::Calibration)?;
    Ok((p_on / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Adds white Gaussian noise at the model's SNR. Jammer and noise shape are
/// not applied here; see [`ChannelModel::apply`].
pub fn apply_awgn(
    signal: &EnvelopeSignal,
    model: &ChannelModel,
) -> Result<EnvelopeSignal, ChannelError> {
    if signal.is_empty() {
        return Err(ChannelError::EmptySignal);
    }
    if !model.noise_enabled() {
        return Ok(signal.clone());
    }
    let sigma = noise_sigma(signal, model.snr_db)?;
    Ok(add_noise(signal, sigma, NoiseShape::White, model.seed))
}

fn add_noise(signal: &EnvelopeSignal, sigma: f64, shape: NoiseShape, seed: u64) -> EnvelopeSignal {
    let mut rng = rng_from(seed);
    let rho = match shape {
        NoiseShape::White => 0.0,
        NoiseShape::LowPass { correlation_us } => {
            let tau = correlation_us * 1e-6 * f64::from(signal.sample_rate());
            if tau > 0.0 {
                (-1.0 / tau).exp()
            } else {
                0.0
            }
        }
    };
    let innovation = (1.0 - rho * rho).sqrt();
    let mut state: f64 = StandardNormal.sample(&mut rng);
    let samples = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if i > 0 {
                let w: f64 = StandardNormal.sample(&mut rng);
                state = rho * state + innovation * w;
            }
            (f64::from(s) + sigma * state) as f32
        })
        .collect();
    EnvelopeSignal::from_parts(samples, signal.sample_rate())
}

/// SNR for a receiver distance, interpolated linearly between anchors.
pub fn distance_to_snr(distance_cm: f64) -> Result<f64, ChannelError> {
    let (first, last) = (SNR_ANCHORS[0].0, SNR_ANCHORS[SNR_ANCHORS.len() - 1].0);
    if !(first..=last).contains(&distance_cm) {
        return Err(ChannelError::Domain(distance_cm));
    }
    for w in SNR_ANCHORS.windows(2) {
        let ((d0, s0), (d1, s1)) = (w[0], w[1]);
        if distance_cm <= d1 {
            return Ok(s0 + (s1 - s0) * (distance_cm - d0) / (d1 - d0));
        }
    }
    unreachable!("range checked above")
}

/// Material and frequency of a conductive enclosure wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShieldSpec {
    /// Conductivity, S/m.
    pub sigma: f64,
    /// Thickness, m.
    pub thickness: f64,
    /// Permeability, H/m.
    pub mu: f64,
    /// Frequency, Hz.
    pub frequency: f64,
}

impl ShieldSpec {
    pub fn new(sigma: f64, thickness: f64, mu: f64, frequency: f64) -> Result<Self, ChannelError> {
        for (name, v) in [
            ("conductivity", sigma),
            ("thickness", thickness),
            ("permeability", mu),
            ("frequency", frequency),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ChannelError::InvalidShield(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            sigma,
            thickness,
            mu,
            frequency,
        })
    }

    /// `σd / (µf)`.
    pub fn ratio(&self) -> f64 {
        (self.sigma * self.thickness) / (self.mu * self.frequency)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attenuation {
    /// `10·log10(1 / (1 + (σd/µf)²))`; never positive.
    pub attenuation_db: f64,
    /// `|attenuation_db|`.
    pub shielding_db: f64,
}

/// Shielding attenuation `A = 10·log10(1 / (1 + (σd/(µf))²))`, evaluated as
/// written. Note the ratio is not dimensionless in SI units, and a 1 mm copper
/// wall at 1.6 GHz comes out near 29 dB.
pub fn faraday_attenuation(spec: &ShieldSpec) -> Attenuation {
    let r = spec.ratio();
    // -10·log10(1 + r²), kept accurate for tiny r and free of overflow for huge r.
    let a = if r < 1e150 {
        -10.0 * (r * r).ln_1p() / std::f64::consts::LN_10
    } else {
        -(20.0 * r.log10() + 10.0 * (1.0 / (r * r)).ln_1p() / std::f64::consts::LN_10)
    };
    // 0.0 rather than -0.0 for the no-shield limit
    let a = if a == 0.0 { 0.0 } else { a };
    Attenuation {
        attenuation_db: a,
        shielding_db: a.abs(),
    }
}

/// Per-sample jammer activity: alternating exponential OFF/ON bursts with
/// mean ON length `burst_ms` and long-run ON fraction `duty_cycle`.
pub fn jammer_mask(len: usize, sample_rate: u32, cfg: &JammerConfig, seed: u64) -> Vec<bool> {
    if cfg.duty_cycle == 0.0 {
        return vec![false; len];
    }
    if cfg.duty_cycle == 1.0 {
        return vec![true; len];
    }
    let mut rng = rng_from(seed);
    let mean_on = cfg.burst_ms / 1000.0;
    let mean_off = mean_on * (1.0 - cfg.duty_cycle) / cfg.duty_cycle;
    let on_len = Exp::new(1.0 / mean_on).expect("positive rate");
    let off_len = Exp::new(1.0 / mean_off).expect("positive rate");
    let rate = f64::from(sample_rate);

    let mut mask = Vec::with_capacity(len);
    let mut on = rng.random_bool(cfg.duty_cycle);
    let mut t = 0.0f64;
    while mask.len() < len {
        t += if on {
            on_len.sample(&mut rng)
        } else {
            off_len.sample(&mut rng)
        };
        let end = ((t * rate).round() as usize).min(len);
        mask.resize(end.max(mask.len()), on);
        on = !on;
    }
    mask
}

/// Adds the jammer's random ON/OFF envelope at level `amplitude`.
pub fn apply_jammer(signal: &EnvelopeSignal, cfg: &JammerConfig, seed: u64) -> EnvelopeSignal {
    if cfg.duty_cycle == 0.0 || cfg.amplitude == 0.0 {
        return signal.clone();
    }
    let mask = jammer_mask(signal.len(), signal.sample_rate(), cfg, seed);
    let a = cfg.amplitude as f32;
    let samples = signal
        .samples()
        .iter()
        .zip(&mask)
        .map(|(&s, &on)| if on { s + a } else { s })
        .collect();
    EnvelopeSignal::from_parts(samples, signal.sample_rate())
}

/// `[clock, 2·clock, …, n·clock]` in GHz. Harmonics are formed on a 1 Hz grid
/// so `(1.6, 3)` yields exactly `[1.6, 3.2, 4.8]`.
pub fn clock_harmonics(clock_ghz: f64, n: usize) -> Result<Vec<f64>, ChannelError> {
    if !(clock_ghz.is_finite() && clock_ghz > 0.0) || n == 0 {
        return Err(ChannelError::InvalidHarmonics);
    }
    let clock_hz = (clock_ghz * 1e9).round();
    Ok((1..=n).map(|k| (clock_hz * k as f64) / 1e9).collect())
}
