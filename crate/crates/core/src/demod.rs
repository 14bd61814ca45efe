//! Receiver chain: smooth → threshold → preamble sync → slice → line decode → frame.
//!
//! Each stage is exposed on its own so alternate rules can be swapped in.

use thiserror::Error;

use crate::frames::{
    parse_frame_body, BitStream, Frame, FrameError, LineCode, FRAME_OVERHEAD_BITS,
    LENGTH_FIELD_BITS, PREAMBLE,
};
use crate::harness::snr_from_levels;
use crate::waveform::{EnvelopeSignal, SymbolTiming};

/// Below this percentile spread a signal carries no usable ON/OFF contrast.
const MIN_SPREAD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DemodError {
    #[error("invalid demodulator config: {0}")]
    InvalidConfig(String),
    #[error("signal is empty")]
    EmptySignal,
    #[error("no signal: amplitude distribution is degenerate")]
    NoSignal,
    #[error("preamble not found")]
    SyncNotFound,
    #[error("signal ended after {} of {needed} symbols", .symbols.len())]
    Truncated { symbols: BitStream, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Cut halfway between the 5th and 95th percentiles.
    Midpoint,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodConfig {
    timing: SymbolTiming,
    scheme: LineCode,
    smooth_window: usize,
    sync_tolerance: f64,
    threshold_mode: ThresholdMode,
}

impl DemodConfig {
    /// Defaults: odd smoothing window of about a quarter half-bit, exact
    /// preamble match, midpoint threshold.
    pub fn new(timing: SymbolTiming, scheme: LineCode) -> Self {
        let quarter = (timing.samples_per_halfbit() / 4.0).floor() as usize;
        let smooth_window = if quarter.is_multiple_of(2) {
            quarter.saturating_sub(1).max(1)
        } else {
            quarter
        };
        Self {
            timing,
            scheme,
            smooth_window,
            sync_tolerance: 0.0,
            threshold_mode: ThresholdMode::Midpoint,
        }
    }

    pub fn with_smooth_window(mut self, window: usize) -> Result<Self, DemodError> {
        let max = self.timing.samples_per_halfbit().floor() as usize;
        if window == 0 || window > max {
            return Err(DemodError::InvalidConfig(format!(
                "smoothing window {window} outside 1..={max}"
            )));
        }
        self.smooth_window = window;
        Ok(self)
    }

    pub fn with_sync_tolerance(mut self, tolerance: f64) -> Result<Self, DemodError> {
        if !(0.0..0.5).contains(&tolerance) {
            return Err(DemodError::InvalidConfig(format!(
                "sync tolerance {tolerance} outside [0, 0.5)"
            )));
        }
        self.sync_tolerance = tolerance;
        Ok(self)
    }

    pub fn with_threshold(mut self, mode: ThresholdMode) -> Result<Self, DemodError> {
        if let ThresholdMode::Fixed(level) = mode {
            if !level.is_finite() {
                return Err(DemodError::InvalidConfig(
                    "fixed threshold must be finite".into(),
                ));
            }
        }
        self.threshold_mode = mode;
        Ok(self)
    }

    pub fn timing(&self) -> &SymbolTiming {
        &self.timing
    }

    pub fn scheme(&self) -> LineCode {
        self.scheme
    }

    pub fn smooth_window(&self) -> usize {
        self.smooth_window
    }

    pub fn sync_tolerance(&self) -> f64 {
        self.sync_tolerance
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        self.threshold_mode
    }

    fn symbol_us(&self) -> u64 {
        self.timing.symbol_us(self.scheme)
    }

    /// Start offset (in samples, relative to `start`) of symbol `k`.
    fn symbol_offset(&self, k: usize) -> usize {
        self.timing.us_to_samples(k as u64 * self.symbol_us())
    }
}

/// Centered moving average; windows shrink at the edges.
pub fn smooth(signal: &EnvelopeSignal, window: usize) -> EnvelopeSignal {
    let window = window.max(1);
    if window == 1 {
        return signal.clone();
    }
    let x = signal.samples();
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0f64);
    let mut acc = 0f64;
    for &s in x {
        acc += f64::from(s);
        prefix.push(acc);
    }
    let back = (window - 1) / 2;
    let ahead = window / 2;
    let samples = (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + ahead + 1).min(x.len());
            ((prefix[hi] - prefix[lo]) / (hi - lo) as f64) as f32
        })
        .collect();
    EnvelopeSignal::new(samples, signal.sample_rate()).expect("averages of finite samples")
}

fn percentile(sorted_scratch: &mut [f32], q: f64) -> f32 {
    let idx = ((sorted_scratch.len() - 1) as f64 * q).round() as usize;
    *sorted_scratch.select_nth_unstable_by(idx, f32::total_cmp).1
}

/// The cut level a [`ThresholdMode`] selects for this signal.
///
/// Midpoint falls back to the min/max midpoint when one level occupies more
/// than 95% of the samples (long runs of a single symbol).
pub fn threshold_level(signal: &EnvelopeSignal, mode: ThresholdMode) -> Result<f64, DemodError> {
    if signal.is_empty() {
        return Err(DemodError::EmptySignal);
    }
    match mode {
        ThresholdMode::Fixed(level) => Ok(level),
        ThresholdMode::Midpoint => {
            let mut scratch = signal.samples().to_vec();
            let p5 = f64::from(percentile(&mut scratch, 0.05));
            let p95 = f64::from(percentile(&mut scratch, 0.95));
            if p95 - p5 >= MIN_SPREAD {
                return Ok((p5 + p95) / 2.0);
            }
            let (lo, hi) = signal
                .samples()
                .iter()
                .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &s| {
                    (lo.min(s), hi.max(s))
                });
            let (lo, hi) = (f64::from(lo), f64::from(hi));
            if hi - lo < MIN_SPREAD {
                return Err(DemodError::NoSignal);
            }
            Ok((lo + hi) / 2.0)
        }
    }
}

/// Per-sample hard decisions: `sample >= cut` → 1.
pub fn threshold(signal: &EnvelopeSignal, mode: ThresholdMode) -> Result<BitStream, DemodError> {
    let cut = threshold_level(signal, mode)?;
    Ok(signal
        .samples()
        .iter()
        .map(|&s| f64::from(s) >= cut)
        .collect())
}

/// Per-sample decisions with prefix counts for O(1) window sums.
struct SampleBits<'a> {
    bits: &'a [u8],
    ones_before: Vec<u32>,
}

impl<'a> SampleBits<'a> {
    fn new(bits: &'a BitStream) -> Self {
        let mut ones_before = Vec::with_capacity(bits.len() + 1);
        let mut acc = 0u32;
        ones_before.push(0);
        for b in bits.iter() {
            acc += u32::from(b);
            ones_before.push(acc);
        }
        Self {
            bits: bits.as_slice(),
            ones_before,
        }
    }

    fn len(&self) -> usize {
        self.bits.len()
    }

    fn ones(&self, lo: usize, hi: usize) -> u32 {
        self.ones_before[hi] - self.ones_before[lo]
    }
}

/// The line-coded preamble as sample runs `(start, end, level)` from offset 0.
fn preamble_template(cfg: &DemodConfig) -> (Vec<(usize, usize, u8)>, usize) {
    let symbols = cfg.scheme.encode(&Frame::preamble());
    let mut runs: Vec<(usize, usize, u8)> = Vec::new();
    for (k, s) in symbols.iter().enumerate() {
        let (a, b) = (cfg.symbol_offset(k), cfg.symbol_offset(k + 1));
        match runs.last_mut() {
            Some(last) if last.2 == s => last.1 = b,
            _ => runs.push((a, b, s)),
        }
    }
    let len = cfg.symbol_offset(symbols.len());
    (runs, len)
}

/// Preamble matcher. Samples next to each template transition are excluded
/// from the tolerance test, since rounding of symbol boundaries and smoothing
/// can move an edge by a sample or more.
struct Correlator {
    runs: Vec<(usize, usize, u8)>,
    cores: Vec<(usize, usize, u8)>,
    len: usize,
    need: usize,
}

impl Correlator {
    fn new(cfg: &DemodConfig) -> Self {
        let (runs, len) = preamble_template(cfg);
        let guard = 1 + cfg.smooth_window / 2;
        let cores: Vec<_> = runs
            .iter()
            .map(|&(a, b, level)| {
                let g = guard.min((b - a - 1) / 2);
                (a + g, b - g, level)
            })
            .collect();
        let core_len: usize = cores.iter().map(|&(a, b, _)| b - a).sum();
        let max_mismatch = (cfg.sync_tolerance * core_len as f64).floor() as usize;
        Self {
            runs,
            cores,
            len,
            need: core_len - max_mismatch,
        }
    }

    fn matches(runs: &[(usize, usize, u8)], bits: &SampleBits<'_>, at: usize) -> usize {
        runs.iter()
            .map(|&(a, b, level)| {
                let ones = bits.ones(at + a, at + b) as usize;
                if level == 1 {
                    ones
                } else {
                    (b - a) - ones
                }
            })
            .sum()
    }

    /// First offset at or after `from` within tolerance, refined to the best
    /// match over the following template length.
    fn search(&self, bits: &SampleBits<'_>, from: usize) -> Result<usize, DemodError> {
        if bits.len() < self.len {
            return Err(DemodError::SyncNotFound);
        }
        let last = bits.len() - self.len;
        let score = |o: usize| {
            (
                Self::matches(&self.cores, bits, o),
                Self::matches(&self.runs, bits, o),
            )
        };
        let first = (from..=last)
            .find(|&o| Self::matches(&self.cores, bits, o) >= self.need)
            .ok_or(DemodError::SyncNotFound)?;
        let mut best = (first, score(first));
        for o in first + 1..=(first + self.len).min(last) {
            let m = score(o);
            if m > best.1 {
                best = (o, m);
            }
        }
        Ok(best.0)
    }
}

/// Sample index where the line-coded preamble best matches.
pub fn find_preamble(samplebits: &BitStream, cfg: &DemodConfig) -> Result<usize, DemodError> {
    find_preamble_from(samplebits, 0, cfg)
}

/// As [`find_preamble`], ignoring candidates before `from`.
pub fn find_preamble_from(
    samplebits: &BitStream,
    from: usize,
    cfg: &DemodConfig,
) -> Result<usize, DemodError> {
    Correlator::new(cfg).search(&SampleBits::new(samplebits), from)
}

/// Votes for one symbol: ones among the central half of its window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Vote {
    ones: u32,
    total: u32,
}

impl Vote {
    /// Strict majority; ties go to 0.
    fn decide(self) -> u8 {
        u8::from(2 * self.ones > self.total)
    }

    fn fraction(self) -> f64 {
        f64::from(self.ones) / f64::from(self.total.max(1))
    }
}

/// Central-half window `[lo, hi)` of symbol `k` from `start`.
fn central_window(cfg: &DemodConfig, start: usize, k: usize) -> (usize, usize) {
    let (a, b) = (
        start + cfg.symbol_offset(k),
        start + cfg.symbol_offset(k + 1),
    );
    let quarter = (b - a) / 4;
    (a + quarter, b - quarter)
}

fn vote_symbols(
    bits: &SampleBits<'_>,
    start: usize,
    cfg: &DemodConfig,
    count: usize,
) -> Result<Vec<Vote>, Vec<Vote>> {
    let mut votes = Vec::with_capacity(count);
    for k in 0..count {
        let (lo, hi) = central_window(cfg, start, k);
        if start + cfg.symbol_offset(k + 1) > bits.len() {
            return Err(votes);
        }
        votes.push(Vote {
            ones: bits.ones(lo, hi),
            total: (hi - lo) as u32,
        });
    }
    Ok(votes)
}

/// Majority vote over the central 50% of each symbol window.
pub fn slice_symbols(
    samplebits: &BitStream,
    start: usize,
    cfg: &DemodConfig,
    count: usize,
) -> Result<BitStream, DemodError> {
    let bits = SampleBits::new(samplebits);
    match vote_symbols(&bits, start, cfg, count) {
        Ok(v) => Ok(v.iter().map(|v| v.decide() == 1).collect()),
        Err(partial) => Err(DemodError::Truncated {
            symbols: partial.iter().map(|v| v.decide() == 1).collect(),
            needed: count,
        }),
    }
}

/// Bits from symbol votes. Manchester pairs that violate the code are
/// resolved by comparing the two halves' vote fractions (equal → 0).
fn decode_votes(votes: &[Vote], scheme: LineCode) -> (BitStream, usize) {
    match scheme {
        LineCode::Ook => (votes.iter().map(|v| v.decide() == 1).collect(), 0),
        LineCode::Manchester => {
            let mut violations = 0;
            let bits = votes
                .chunks_exact(2)
                .map(|pair| {
                    let (first, second) = (pair[0].decide(), pair[1].decide());
                    if first != second {
                        second == 1
                    } else {
                        violations += 1;
                        pair[1].fraction() > pair[0].fraction()
                    }
                })
                .collect();
            (bits, violations)
        }
    }
}

/// Soft metrics over the central windows of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    pub mean_on: f64,
    pub mean_off: f64,
    /// `None` when either level has fewer than 100 samples.
    pub est_snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub frame: Frame,
    pub start_sample: usize,
    pub end_sample: usize,
    pub crc_valid: bool,
    /// Manchester pairs that were not a valid transition.
    pub code_violations: usize,
    pub stats: FrameStats,
}

/// A frame whose preamble was found but whose samples ran out.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFrame {
    pub start_sample: usize,
    pub length_field: Option<u16>,
    /// Payload bits recovered before the signal ended.
    pub payload: BitStream,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeResult {
    pub frames: Vec<DecodedFrame>,
    pub truncated: Option<PartialFrame>,
    /// Line symbols recovered for every frame, in order.
    pub raw_symbols: BitStream,
}

impl DecodeResult {
    pub fn valid_payloads(&self) -> impl Iterator<Item = &BitStream> {
        self.frames
            .iter()
            .filter(|f| f.crc_valid)
            .map(|f| f.frame.payload())
    }
}

fn frame_stats(
    signal: &EnvelopeSignal,
    votes: &[Vote],
    start: usize,
    cfg: &DemodConfig,
) -> FrameStats {
    let x = signal.samples();
    let (mut on, mut off) = (Vec::new(), Vec::new());
    for (k, v) in votes.iter().enumerate() {
        let (lo, hi) = central_window(cfg, start, k);
        let dest = if v.decide() == 1 { &mut on } else { &mut off };
        dest.extend_from_slice(&x[lo..hi]);
    }
    let mean = |v: &[f32]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().map(|&s| f64::from(s)).sum::<f64>() / v.len() as f64
        }
    };
    FrameStats {
        mean_on: mean(&on),
        mean_off: mean(&off),
        est_snr_db: snr_from_levels(&on, &off).ok(),
    }
}

/// Runs the full receiver over `signal`, recovering every frame in order.
///
/// Sync failures end the scan; CRC failures are reported per frame and the
/// scan continues one bit time after each frame.
pub fn demodulate(signal: &EnvelopeSignal, cfg: &DemodConfig) -> Result<DecodeResult, DemodError> {
    let smoothed = smooth(signal, cfg.smooth_window);
    let samplebits = threshold(&smoothed, cfg.threshold_mode)?;
    let bits = SampleBits::new(&samplebits);
    let correlator = Correlator::new(cfg);
    let per_bit = cfg.scheme.symbols_per_bit();
    let header_bits = PREAMBLE.len() + LENGTH_FIELD_BITS;
    let gap = cfg.timing.us_to_samples(cfg.timing.bit_time_us());

    let mut result = DecodeResult::default();
    let mut pos = 0;
    while let Ok(start) = correlator.search(&bits, pos) {
        let header = match vote_symbols(&bits, start, cfg, header_bits * per_bit) {
            Ok(v) => decode_votes(&v, cfg.scheme).0,
            Err(_) => {
                result.truncated = Some(PartialFrame {
                    start_sample: start,
                    length_field: None,
                    payload: BitStream::new(),
                });
                break;
            }
        };
        let length = header.as_slice()[PREAMBLE.len()..]
            .iter()
            .fold(0u16, |acc, &b| (acc << 1) | u16::from(b));
        let total_bits = FRAME_OVERHEAD_BITS + length as usize;
        let votes = match vote_symbols(&bits, start, cfg, total_bits * per_bit) {
            Ok(v) => v,
            Err(partial) => {
                let whole = partial.len() / per_bit * per_bit;
                let (got, _) = decode_votes(&partial[..whole], cfg.scheme);
                let payload = got.as_slice().get(header_bits..).unwrap_or_default();
                let payload = &payload[..payload.len().min(length as usize)];
                result.truncated = Some(PartialFrame {
                    start_sample: start,
                    length_field: Some(length),
                    payload: BitStream::from_bits(payload.to_vec()).expect("binary"),
                });
                break;
            }
        };
        let (frame_bits, code_violations) = decode_votes(&votes, cfg.scheme);
        result
            .raw_symbols
            .extend(&votes.iter().map(|v| v.decide() == 1).collect());
        let (frame, crc_valid) = match parse_frame_body(&frame_bits.as_slice()[PREAMBLE.len()..]) {
            Ok(frame) => (frame, true),
            Err(FrameError::Integrity { frame, .. }) => (*frame, false),
            Err(e) => unreachable!("frame length was taken from the header: {e}"),
        };
        let end_sample = start + cfg.symbol_offset(votes.len());
        result.frames.push(DecodedFrame {
            stats: frame_stats(signal, &votes, start, cfg),
            frame,
            start_sample: start,
            end_sample,
            crc_valid,
            code_violations,
        });
        pos = end_sample + gap;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_awgn, ChannelModel};
    use crate::waveform::{synthesize_envelope, transmit_schedule, ActivitySchedule};

    fn timing() -> SymbolTiming {
        SymbolTiming::from_ms(1.0, 40_000).unwrap()
    }

    fn tx(payload: &BitStream, scheme: LineCode, lead_us: u64) -> EnvelopeSignal {
        let t = timing();
        let mut s = ActivitySchedule::silence(lead_us);
        s.append(&transmit_schedule(payload, &t, scheme).unwrap());
        s.append(&ActivitySchedule::silence(2000));
        synthesize_envelope(&s, &t, 1.0).unwrap()
    }

    #[test]
    fn smooth_examples() {
        let sig = EnvelopeSignal::new(vec![0.3, 0.7, 0.1], 10).unwrap();
        assert_eq!(smooth(&sig, 1), sig);
        let flat = EnvelopeSignal::new(vec![0.5; 20], 10).unwrap();
        assert!(smooth(&flat, 5)
            .samples()
            .iter()
            .all(|&s| (s - 0.5).abs() < 1e-7));
        let mut imp = vec![0.0; 11];
        imp[5] = 1.0;
        let out = smooth(&EnvelopeSignal::new(imp, 10).unwrap(), 5);
        for (i, &s) in out.samples().iter().enumerate() {
            let want = if (3..=7).contains(&i) { 0.2 } else { 0.0 };
            assert!((s - want).abs() < 1e-7, "sample {i} = {s}");
        }
        assert_eq!(out.len(), 11);
        // edge windows shrink
        let edge = smooth(
            &EnvelopeSignal::new(vec![1.0, 0.0, 0.0, 0.0], 10).unwrap(),
            3,
        );
        assert!((edge.samples()[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn threshold_examples() {
        let sig = tx(&BitStream::from_hex("a5").unwrap(), LineCode::Ook, 0);
        let mask = threshold(&sig, ThresholdMode::Midpoint).unwrap();
        let want: BitStream = sig.samples().iter().map(|&s| s > 0.0).collect();
        assert_eq!(mask, want);
        let zeros = EnvelopeSignal::new(vec![0.0; 100], 10).unwrap();
        assert_eq!(
            threshold(&zeros, ThresholdMode::Midpoint),
            Err(DemodError::NoSignal)
        );
        let fixed = threshold(&sig, ThresholdMode::Fixed(2.0)).unwrap();
        assert_eq!(fixed.count_ones(), 0);
    }

    #[test]
    fn threshold_long_single_level_falls_back() {
        let mut v = vec![1.0f32; 1000];
        v[0] = 0.0;
        let sig = EnvelopeSignal::new(v, 10).unwrap();
        assert_eq!(threshold_level(&sig, ThresholdMode::Midpoint).unwrap(), 0.5);
    }

    #[test]
    fn threshold_mask_error_rate_at_20_db() {
        let payload: BitStream = (0..400).map(|i| (i * 7 + i / 3) % 5 < 2).collect();
        let clean = tx(&payload, LineCode::Ook, 1000);
        let noisy = apply_awgn(&clean, &ChannelModel::new(20.0, 9).unwrap()).unwrap();
        let mask = threshold(&noisy, ThresholdMode::Midpoint).unwrap();
        let wrong = mask
            .iter()
            .zip(clean.samples())
            .filter(|(m, &c)| (*m == 1) != (c > 0.0))
            .count();
        let rate = wrong as f64 / mask.len() as f64;
        // sigma = 0.1 -> Q(5) ~ 3e-7 per sample
        assert!(rate < 0.01, "mask error rate {rate}");
    }

    #[test]
    fn preamble_offsets() {
        let p = BitStream::from_hex("44415441").unwrap();
        for scheme in [LineCode::Ook, LineCode::Manchester] {
            let cfg = DemodConfig::new(timing(), scheme);
            let at0 = threshold(&tx(&p, scheme, 0), ThresholdMode::Midpoint).unwrap();
            assert_eq!(find_preamble(&at0, &cfg).unwrap(), 0);
            let lead = 3700;
            let n = timing().us_to_samples(lead);
            let sig = smooth(&tx(&p, scheme, lead), cfg.smooth_window());
            let bits = threshold(&sig, ThresholdMode::Midpoint).unwrap();
            let found = find_preamble(&bits, &cfg).unwrap();
            assert!(
                found.abs_diff(n) <= cfg.smooth_window() / 2,
                "{scheme}: {found} vs {n}"
            );
        }
    }

    #[test]
    fn pure_noise_never_syncs() {
        let cfg = DemodConfig::new(timing(), LineCode::Manchester);
        let mut rejections = 0;
        for seed in 0..100 {
            // 0 dB around a unit carrier; only the noise matters past the cut
            let base = EnvelopeSignal::new(
                (0..8000).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
                40_000,
            )
            .unwrap();
            let noisy = apply_awgn(&base, &ChannelModel::new(0.0, seed).unwrap()).unwrap();
            let bits = threshold(
                &smooth(&noisy, cfg.smooth_window()),
                ThresholdMode::Midpoint,
            )
            .unwrap();
            if find_preamble(&bits, &cfg) == Err(DemodError::SyncNotFound) {
                rejections += 1;
            }
        }
        assert!(rejections >= 99, "{rejections}/100");
    }

    #[test]
    fn slicing_rules() {
        let cfg = DemodConfig::new(timing(), LineCode::Ook);
        let payload = BitStream::from_hex("c3").unwrap();
        let sig = tx(&payload, LineCode::Ook, 0);
        let bits = threshold(&sig, ThresholdMode::Midpoint).unwrap();
        let frame = crate::frames::build_frame(&payload).unwrap().serialize();
        assert_eq!(slice_symbols(&bits, 0, &cfg, frame.len()).unwrap(), frame);

        // even window split evenly -> 0
        let spb = timing().us_to_samples(1000);
        let mut tie = vec![0u8; spb];
        let (lo, hi) = central_window(&cfg, 0, 0);
        for (i, v) in tie.iter_mut().enumerate().take(hi).skip(lo) {
            *v = u8::from(i < lo + (hi - lo) / 2);
        }
        let tie = BitStream::from_bits(tie).unwrap();
        assert_eq!(slice_symbols(&tie, 0, &cfg, 1).unwrap().to_text(), "0");

        let short = BitStream::from_bits(bits.as_slice()[..spb * 10 + 3].to_vec()).unwrap();
        match slice_symbols(&short, 0, &cfg, frame.len()) {
            Err(DemodError::Truncated { symbols, needed }) => {
                assert_eq!(symbols.len(), 10);
                assert_eq!(needed, frame.len());
                assert_eq!(symbols.as_slice(), &frame.as_slice()[..10]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let c = DemodConfig::new(timing(), LineCode::Ook);
        assert!(c.with_smooth_window(0).is_err());
        assert!(c.with_smooth_window(21).is_err());
        assert!(c.with_smooth_window(20).is_ok());
        assert!(c.with_sync_tolerance(0.5).is_err());
        assert!(c.with_sync_tolerance(-0.1).is_err());
        assert!(c.with_sync_tolerance(0.49).is_ok());
        assert_eq!(c.smooth_window() % 2, 1);
    }

    #[test]
    fn demodulate_data_word_both_schemes() {
        let p = BitStream::from_hex("44415441").unwrap();
        for scheme in [LineCode::Ook, LineCode::Manchester] {
            let cfg = DemodConfig::new(timing(), scheme);
            let r = demodulate(&tx(&p, scheme, 1500), &cfg).unwrap();
            assert_eq!(r.frames.len(), 1, "{scheme}");
            let f = &r.frames[0];
            assert!(f.crc_valid);
            assert_eq!(f.frame.payload().to_bytes(), b"DATA");
            assert_eq!(f.code_violations, 0);
            assert!(f.stats.est_snr_db.is_none_or(|s| s.is_infinite()));
            assert!((f.stats.mean_on - 1.0).abs() < 1e-9);
            assert!(r.truncated.is_none());
        }
    }

    #[test]
    fn two_frames_with_gap() {
        let t = timing();
        let a = BitStream::from_hex("0f").unwrap();
        let b = BitStream::from_hex("beef").unwrap();
        for scheme in [LineCode::Ook, LineCode::Manchester] {
            let mut s = ActivitySchedule::silence(2000);
            s.append(&transmit_schedule(&a, &t, scheme).unwrap());
            s.append(&ActivitySchedule::silence(5000));
            s.append(&transmit_schedule(&b, &t, scheme).unwrap());
            s.append(&ActivitySchedule::silence(1000));
            let sig = synthesize_envelope(&s, &t, 1.0).unwrap();
            let r = demodulate(&sig, &DemodConfig::new(t, scheme)).unwrap();
            let got: Vec<_> = r.valid_payloads().cloned().collect();
            assert_eq!(got, vec![a.clone(), b.clone()], "{scheme}");
            assert!(r.frames[0].start_sample < r.frames[1].start_sample);
        }
    }

    #[test]
    fn truncated_frame_reports_partial_payload() {
        let t = timing();
        let p = BitStream::from_hex("ffff00ff").unwrap();
        let mut s = ActivitySchedule::silence(1000);
        s.append(&transmit_schedule(&p, &t, LineCode::Ook).unwrap());
        let full = synthesize_envelope(&s, &t, 1.0).unwrap();
        // keep preamble + header + 20 payload bits
        let keep = t.us_to_samples(1000 + 44 * 1000 + 300);
        let cut = EnvelopeSignal::new(full.samples()[..keep].to_vec(), full.sample_rate()).unwrap();
        let r = demodulate(&cut, &DemodConfig::new(t, LineCode::Ook)).unwrap();
        assert!(r.frames.is_empty());
        let partial = r.truncated.unwrap();
        assert_eq!(partial.length_field, Some(32));
        assert_eq!(partial.payload.as_slice(), &p.as_slice()[..20]);
    }

    #[test]
    fn corrupted_frame_flagged_and_scan_continues() {
        let t = timing();
        let a = BitStream::from_hex("1234").unwrap();
        let b = BitStream::from_hex("5678").unwrap();
        let mut s = ActivitySchedule::silence(1000);
        s.append(&transmit_schedule(&a, &t, LineCode::Ook).unwrap());
        s.append(&ActivitySchedule::silence(3000));
        s.append(&transmit_schedule(&b, &t, LineCode::Ook).unwrap());
        s.append(&ActivitySchedule::silence(1000));
        let mut sig = synthesize_envelope(&s, &t, 1.0).unwrap().into_samples();
        // flip payload bit 3 of frame a (bit 27 of the frame, starting at 1 ms)
        let lo = t.us_to_samples(1000 + 27 * 1000);
        let hi = t.us_to_samples(1000 + 28 * 1000);
        for v in &mut sig[lo..hi] {
            *v = 1.0 - *v;
        }
        let sig = EnvelopeSignal::new(sig, t.sample_rate()).unwrap();
        let r = demodulate(&sig, &DemodConfig::new(t, LineCode::Ook)).unwrap();
        assert_eq!(r.frames.len(), 2);
        assert!(!r.frames[0].crc_valid);
        assert_eq!(r.frames[0].frame.payload().hamming(&a), 1);
        assert!(r.frames[1].crc_valid);
        assert_eq!(r.frames[1].frame.payload(), &b);
    }

    #[test]
    fn manchester_violation_resolved_softly() {
        let votes = [
            Vote { ones: 0, total: 10 },
            Vote { ones: 9, total: 10 },
            Vote { ones: 6, total: 10 },
            Vote { ones: 8, total: 10 },
            Vote { ones: 5, total: 10 },
            Vote { ones: 5, total: 10 },
        ];
        let (bits, violations) = decode_votes(&votes, LineCode::Manchester);
        assert_eq!(bits.to_text(), "110");
        assert_eq!(violations, 2);
    }
}
