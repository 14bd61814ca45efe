//! Line-coded symbols to timed carrier activity and sampled baseband envelopes.
//!
//! The memory-bus carrier is modelled at baseband: an ON interval renders as a
//! constant amplitude, an OFF interval as zero. All durations are integer
//! microseconds and sample boundaries are placed by one global rounding of the
//! cumulative time, so long schedules never drift.

mod driver;
mod files;

pub use driver::{
    execute_schedule, IntervalTiming, TimingReport, DEFAULT_BUFFER_SIZE, MIN_BUFFER_SIZE,
};
pub use files::{
    metadata_path, read_envelope, read_iq, read_metadata, write_envelope, write_metadata,
    EnvelopeMeta, JammerMeta,
};

use thiserror::Error;

use crate::frames::{build_frame, BitStream, Frame, FrameError, LineCode};

/// Minimum samples per Manchester half-bit for the receiver to resolve it.
pub const MIN_SAMPLES_PER_HALFBIT: f64 = 4.0;

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("invalid symbol timing: {0}")]
    InvalidTiming(String),
    #[error("amplitude must be positive and finite, got {0}")]
    InvalidAmplitude(f64),
    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("buffer of {size} bytes is below the {MIN_BUFFER_SIZE}-byte minimum")]
    BufferTooSmall { size: usize },
    #[error("memory activity driver unsupported on this platform: {0}")]
    Unsupported(&'static str),
    #[error("malformed signal file: {0}")]
    Format(String),
    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bit period and synthesis rate shared by transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolTiming {
    bit_time_us: u64,
    sample_rate: u32,
}

impl SymbolTiming {
    /// `bit_time_us` must be even so Manchester half-bits are whole microseconds.
    pub fn new(bit_time_us: u64, sample_rate: u32) -> Result<Self, WaveformError> {
        if bit_time_us == 0 || sample_rate == 0 {
            return Err(WaveformError::InvalidTiming(
                "bit time and sample rate must be positive".into(),
            ));
        }
        if !bit_time_us.is_multiple_of(2) {
            return Err(WaveformError::InvalidTiming(format!(
                "bit time {bit_time_us} us is odd; half-bits must be whole microseconds"
            )));
        }
        let timing = Self {
            bit_time_us,
            sample_rate,
        };
        if timing.samples_per_halfbit() < MIN_SAMPLES_PER_HALFBIT {
            return Err(WaveformError::InvalidTiming(format!(
                "{:.2} samples per half-bit at {} S/s and {} us bits; need at least {}",
                timing.samples_per_halfbit(),
                sample_rate,
                bit_time_us,
                MIN_SAMPLES_PER_HALFBIT
            )));
        }
        Ok(timing)
    }

    pub fn from_ms(bit_time_ms: f64, sample_rate: u32) -> Result<Self, WaveformError> {
        if !(bit_time_ms.is_finite() && bit_time_ms > 0.0) {
            return Err(WaveformError::InvalidTiming(format!(
                "bit time must be positive, got {bit_time_ms} ms"
            )));
        }
        Self::new((bit_time_ms * 1000.0).round() as u64, sample_rate)
    }

    pub fn bit_time_us(&self) -> u64 {
        self.bit_time_us
    }

    pub fn bit_time_ms(&self) -> f64 {
        self.bit_time_us as f64 / 1000.0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn half_bit_us(&self) -> u64 {
        self.bit_time_us / 2
    }

    /// Duration of one on-air symbol: a full bit for OOK, a half-bit for Manchester.
    pub fn symbol_us(&self, scheme: LineCode) -> u64 {
        self.bit_time_us / scheme.symbols_per_bit() as u64
    }

    pub fn samples_per_halfbit(&self) -> f64 {
        self.sample_rate as f64 * self.bit_time_us as f64 / 2e6
    }

    /// Nearest sample index to a time offset, in exact integer arithmetic.
    pub fn us_to_samples(&self, us: u64) -> usize {
        ((us as u128 * self.sample_rate as u128 + 500_000) / 1_000_000) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    /// Memory-write burst: carrier present.
    On,
    /// Idle (thread sleep): carrier absent.
    Off,
}

impl Activity {
    fn from_symbol(s: u8) -> Self {
        if s == 1 {
            Activity::On
        } else {
            Activity::Off
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub state: Activity,
    pub duration_us: u64,
}

/// Ordered carrier on/off intervals.
///
/// Runs are merged within a frame; [`ActivitySchedule::append`] keeps the
/// boundary between separately built segments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivitySchedule {
    intervals: Vec<Interval>,
}

impl ActivitySchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_us(&self) -> u64 {
        self.intervals.iter().map(|i| i.duration_us).sum()
    }

    /// Adds time in `state`, extending the last interval if it has the same state.
    /// Zero durations are ignored.
    pub fn push(&mut self, state: Activity, duration_us: u64) {
        if duration_us == 0 {
            return;
        }
        match self.intervals.last_mut() {
            Some(last) if last.state == state => last.duration_us += duration_us,
            _ => self.intervals.push(Interval { state, duration_us }),
        }
    }

    /// Concatenates another segment without merging across the boundary.
    pub fn append(&mut self, other: &ActivitySchedule) {
        self.intervals.extend_from_slice(&other.intervals);
    }

    pub fn silence(duration_us: u64) -> Self {
        let mut s = Self::new();
        s.push(Activity::Off, duration_us);
        s
    }
}

/// One interval per maximal run of equal symbols.
pub fn schedule_from_symbols(
    symbols: &BitStream,
    timing: &SymbolTiming,
    scheme: LineCode,
) -> ActivitySchedule {
    let symbol_us = timing.symbol_us(scheme);
    let mut schedule = ActivitySchedule::new();
    for s in symbols.iter() {
        schedule.push(Activity::from_symbol(s), symbol_us);
    }
    schedule
}

/// Sampled real baseband amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSignal {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl EnvelopeSignal {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, WaveformError> {
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(WaveformError::NonFinite(i));
        }
        if sample_rate == 0 {
            return Err(WaveformError::InvalidTiming(
                "sample rate must be positive".into(),
            ));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Skips the finiteness scan; callers guarantee every sample is finite.
    pub(crate) fn from_parts(samples: Vec<f32>, sample_rate: u32) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Per-sample ON mask of a clean envelope: true where the level exceeds zero.
    pub fn on_mask(&self) -> Vec<bool> {
        self.samples.iter().map(|&s| s > 0.0).collect()
    }
}

/// Renders a schedule as a piecewise-constant envelope.
pub fn synthesize_envelope(
    schedule: &ActivitySchedule,
    timing: &SymbolTiming,
    amplitude: f64,
) -> Result<EnvelopeSignal, WaveformError> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(WaveformError::InvalidAmplitude(amplitude));
    }
    let total = timing.us_to_samples(schedule.total_us());
    let mut samples = Vec::with_capacity(total);
    let mut elapsed_us = 0u64;
    for interval in schedule.intervals() {
        elapsed_us += interval.duration_us;
        let end = timing.us_to_samples(elapsed_us);
        let level = match interval.state {
            Activity::On => amplitude as f32,
            Activity::Off => 0.0,
        };
        samples.resize(end, level);
    }
    debug_assert_eq!(samples.len(), total);
    Ok(EnvelopeSignal::from_parts(samples, timing.sample_rate()))
}

/// Serializes a frame, applies the line code and lays out its schedule.
pub fn frame_schedule(frame: &Frame, timing: &SymbolTiming, scheme: LineCode) -> ActivitySchedule {
    let symbols = scheme.encode(&frame.serialize());
    schedule_from_symbols(&symbols, timing, scheme)
}

/// Full transmitter for one payload: frame, line-code, schedule.
pub fn transmit_schedule(
    payload: &BitStream,
    timing: &SymbolTiming,
    scheme: LineCode,
) -> Result<ActivitySchedule, WaveformError> {
    let frame = build_frame(payload)?;
    Ok(frame_schedule(&frame, timing, scheme))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(v: &[u8]) -> BitStream {
        BitStream::from_bits(v.to_vec()).unwrap()
    }

    fn iv(state: Activity, duration_us: u64) -> Interval {
        Interval { state, duration_us }
    }

    #[test]
    fn timing_invariants() {
        assert!(SymbolTiming::new(1000, 8000).is_ok());
        // 3.5 samples per half-bit
        assert!(SymbolTiming::new(1000, 7000).is_err());
        assert!(SymbolTiming::new(0, 8000).is_err());
        assert!(SymbolTiming::new(1001, 100_000).is_err());
        assert!(SymbolTiming::from_ms(-1.0, 8000).is_err());
        let t = SymbolTiming::from_ms(0.1, 200_000).unwrap();
        assert_eq!(t.bit_time_us(), 100);
        assert_eq!(t.samples_per_halfbit(), 10.0);
    }

    #[test]
    fn ook_schedules() {
        let t = SymbolTiming::from_ms(10.0, 200_000).unwrap();
        let s = schedule_from_symbols(&bits(&[1, 0]), &t, LineCode::Ook);
        assert_eq!(
            s.intervals(),
            &[iv(Activity::On, 10_000), iv(Activity::Off, 10_000)]
        );
        let s = schedule_from_symbols(&bits(&[1, 1, 1]), &t, LineCode::Ook);
        assert_eq!(s.intervals(), &[iv(Activity::On, 30_000)]);
        assert!(schedule_from_symbols(&BitStream::new(), &t, LineCode::Ook).is_empty());
    }

    #[test]
    fn manchester_halfbits_merge() {
        let t = SymbolTiming::from_ms(10.0, 200_000).unwrap();
        let s = schedule_from_symbols(&bits(&[0, 1, 1, 0]), &t, LineCode::Manchester);
        assert_eq!(
            s.intervals(),
            &[
                iv(Activity::Off, 5000),
                iv(Activity::On, 10_000),
                iv(Activity::Off, 5000)
            ]
        );
    }

    #[test]
    fn append_keeps_frame_boundary() {
        let mut a = ActivitySchedule::silence(100);
        a.append(&ActivitySchedule::silence(50));
        assert_eq!(a.intervals().len(), 2);
        a.push(Activity::Off, 10);
        assert_eq!(a.intervals().len(), 2);
        assert_eq!(a.total_us(), 160);
    }

    #[test]
    fn synthesize_examples() {
        let t = SymbolTiming::new(1000, 1_000_000).unwrap();
        let mut s = ActivitySchedule::new();
        s.push(Activity::On, 1000);
        let e = synthesize_envelope(&s, &t, 1.0).unwrap();
        assert_eq!(e.len(), 1000);
        assert!(e.samples().iter().all(|&x| x == 1.0));
        assert!(synthesize_envelope(&ActivitySchedule::new(), &t, 1.0)
            .unwrap()
            .is_empty());
        assert!(synthesize_envelope(&s, &t, 0.0).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            EnvelopeSignal::new(vec![0.0, f32::NAN], 10),
            Err(WaveformError::NonFinite(1))
        ));
    }

    proptest! {
        #[test]
        fn total_duration_and_sample_count(
            v in proptest::collection::vec(0u8..=1, 0..200),
            manchester in any::<bool>(),
            half_us in 2u64..3000,
            rate in 8_000u32..400_000,
        ) {
            let scheme = if manchester { LineCode::Manchester } else { LineCode::Ook };
            let Ok(t) = SymbolTiming::new(half_us * 2, rate) else { return Ok(()); };
            let sym = bits(&v);
            let s = schedule_from_symbols(&sym, &t, scheme);
            prop_assert_eq!(s.total_us(), v.len() as u64 * t.symbol_us(scheme));
            prop_assert!(s.intervals().iter().all(|i| i.duration_us > 0));
            prop_assert!(s.intervals().windows(2).all(|w| w[0].state != w[1].state));

            let e = synthesize_envelope(&s, &t, 1.0).unwrap();
            // independent integer oracle: round-half-up of total_us * rate / 1e6
            let total_us = v.len() as u128 * t.symbol_us(scheme) as u128;
            let expected = (total_us * rate as u128 * 2 + 1_000_000) / 2_000_000;
            prop_assert_eq!(e.len() as u128, expected);

            // midpoints of each symbol reproduce the pattern
            let sym_us = t.symbol_us(scheme);
            for (k, b) in sym.iter().enumerate() {
                let mid = t.us_to_samples(k as u64 * sym_us + sym_us / 2);
                prop_assert_eq!(e.samples()[mid] > 0.5, b == 1);
            }
            prop_assert_eq!(synthesize_envelope(&s, &t, 1.0).unwrap(), e);
        }
    }
}
