//! Experiment driver: BER sweeps over bit time × channel point, SNR
//! estimation, exfiltration-time arithmetic and table rendering.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{distance_to_snr, ChannelError, ChannelModel, JammerConfig, NoiseShape};
use crate::demod::{demodulate, DemodConfig, DemodError};
use crate::frames::{BitStream, LineCode, MAX_PAYLOAD_BITS};
use crate::seed::{derive_seed, rng_from};
use crate::waveform::{
    synthesize_envelope, transmit_schedule, ActivitySchedule, SymbolTiming, WaveformError,
};

/// 100 samples per half-bit at a 1 ms bit time.
pub const DEFAULT_SAMPLE_RATE: u32 = 200_000;
/// Correlation time of the simulated receiver noise.
pub const NOISE_CORRELATION_US: f64 = 100.0;
/// Fraction of preamble samples allowed to disagree during sync.
pub const DEFAULT_SYNC_TOLERANCE: f64 = 0.25;
/// Fewest ON and OFF samples [`estimate_snr`] will work from.
pub const MIN_ESTIMATE_SAMPLES: usize = 100;

const PAYLOAD_STREAM: u64 = 0;
const CHANNEL_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("need at least {MIN_ESTIMATE_SAMPLES} ON and OFF samples, got {on} and {off}")]
    Estimation { on: usize, off: usize },
    #[error("mask has {mask} entries for {samples} samples")]
    MaskLength { mask: usize, samples: usize },
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Demod(#[from] DemodError),
}

/// Simulated receiver and framing context shared by every trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub sample_rate: u32,
    pub amplitude: f64,
    pub noise: NoiseShape,
    pub sync_tolerance: f64,
    /// Silence before and after each frame, in bit times.
    pub lead_in_bits: u64,
    pub tail_bits: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            amplitude: 1.0,
            noise: NoiseShape::LowPass {
                correlation_us: NOISE_CORRELATION_US,
            },
            sync_tolerance: DEFAULT_SYNC_TOLERANCE,
            lead_in_bits: 2,
            tail_bits: 2,
        }
    }
}

/// A point on the channel axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelPoint {
    DistanceCm(f64),
    /// `f64::INFINITY` disables noise.
    SnrDb(f64),
}

impl ChannelPoint {
    pub fn snr_db(self) -> Result<f64, ChannelError> {
        match self {
            ChannelPoint::DistanceCm(d) => distance_to_snr(d),
            ChannelPoint::SnrDb(s) => Ok(s),
        }
    }

    pub fn distance_cm(self) -> Option<f64> {
        match self {
            ChannelPoint::DistanceCm(d) => Some(d),
            ChannelPoint::SnrDb(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub bit_times_ms: Vec<f64>,
    pub points: Vec<ChannelPoint>,
    pub payload_bits: usize,
    pub trials: usize,
    pub seed: u64,
    pub scheme: LineCode,
    pub calibration: Calibration,
    pub jammer: Option<JammerConfig>,
}

impl SweepSpec {
    pub fn new(
        bit_times_ms: Vec<f64>,
        distances_cm: Vec<f64>,
        payload_bits: usize,
        trials: usize,
        seed: u64,
        scheme: LineCode,
    ) -> Self {
        Self {
            bit_times_ms,
            points: distances_cm
                .into_iter()
                .map(ChannelPoint::DistanceCm)
                .collect(),
            payload_bits,
            trials,
            seed,
            scheme,
            calibration: Calibration::default(),
            jammer: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.into()));
        if self.bit_times_ms.is_empty() || self.points.is_empty() {
            return bad("bit times and channel points must be non-empty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(8..=MAX_PAYLOAD_BITS).contains(&self.payload_bits) {
            return bad("payload_bits must be in 8..=65535");
        }
        Ok(())
    }
}

/// Running sums for a set of samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn add(&mut self, x: f32) {
        let x = f64::from(x);
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn mean_sq(&self) -> f64 {
        self.sum_sq / self.n as f64
    }

    fn variance(&self) -> f64 {
        let m = self.sum / self.n as f64;
        (self.mean_sq() - m * m).max(0.0)
    }
}

/// Signal power is the ON-level mean square less the noise variance, so the
/// estimate is unbiased for additive noise. Returns +∞ for a noiseless floor.
fn snr_from_moments(on: &Moments, off: &Moments) -> Result<f64, HarnessError> {
    if on.n < MIN_ESTIMATE_SAMPLES || off.n < MIN_ESTIMATE_SAMPLES {
        return Err(HarnessError::Estimation {
            on: on.n,
            off: off.n,
        });
    }
    let noise = off.variance();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    let signal = on.mean_sq() - noise;
    if signal <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

/// SNR in dB from samples known to be ON and OFF.
pub fn snr_from_levels(on: &[f32], off: &[f32]) -> Result<f64, HarnessError> {
    let collect = |v: &[f32]| {
        let mut m = Moments::default();
        v.iter().for_each(|&x| m.add(x));
        m
    };
    snr_from_moments(&collect(on), &collect(off))
}

/// SNR in dB of `signal` given which samples the transmitter held ON.
pub fn estimate_snr(
    signal: &crate::waveform::EnvelopeSignal,
    mask: &[bool],
) -> Result<f64, HarnessError> {
    if mask.len() != signal.len() {
        return Err(HarnessError::MaskLength {
            mask: mask.len(),
            samples: signal.len(),
        });
    }
    let (mut on, mut off) = (Moments::default(), Moments::default());
    for (&x, &m) in signal.samples().iter().zip(mask) {
        if m {
            on.add(x)
        } else {
            off.add(x)
        }
    }
    snr_from_moments(&on, &off)
}

/// Bit errors of `decoded` against `reference`, position by position.
/// Missing trailing bits count as errors; surplus bits are ignored.
pub fn payload_errors(reference: &BitStream, decoded: &BitStream) -> usize {
    let common = reference.len().min(decoded.len());
    let diff = reference.as_slice()[..common]
        .iter()
        .zip(&decoded.as_slice()[..common])
        .filter(|(a, b)| a != b)
        .count();
    diff + (reference.len() - common)
}

/// Outcome of one frame through the link.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialOutcome {
    pub bits_sent: usize,
    pub bit_errors: usize,
    pub bits_lost: usize,
    pub frame_lost: bool,
    pub crc_valid: bool,
    on: Moments,
    off: Moments,
}

/// One configured TX → channel → RX path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    timing: SymbolTiming,
    scheme: LineCode,
    snr_db: f64,
    calibration: Calibration,
    jammer: Option<JammerConfig>,
    demod: DemodConfig,
}

impl Link {
    pub fn new(
        bit_time_ms: f64,
        scheme: LineCode,
        snr_db: f64,
        calibration: Calibration,
    ) -> Result<Self, HarnessError> {
        let timing = SymbolTiming::from_ms(bit_time_ms, calibration.sample_rate)?;
        ChannelModel::new(snr_db, 0)?.with_noise(calibration.noise)?;
        let demod =
            DemodConfig::new(timing, scheme).with_sync_tolerance(calibration.sync_tolerance)?;
        Ok(Self {
            timing,
            scheme,
            snr_db,
            calibration,
            jammer: None,
            demod,
        })
    }

    pub fn with_jammer(mut self, jammer: Option<JammerConfig>) -> Self {
        self.jammer = jammer;
        self
    }

    pub fn timing(&self) -> &SymbolTiming {
        &self.timing
    }

    pub fn demod_config(&self) -> &DemodConfig {
        &self.demod
    }

    /// Sends `payload` as one frame with silence either side and decodes it.
    /// The first recovered frame is compared to the payload.
    pub fn run(&self, payload: &BitStream, seed: u64) -> Result<TrialOutcome, HarnessError> {
        let bit_us = self.timing.bit_time_us();
        let mut schedule = ActivitySchedule::silence(self.calibration.lead_in_bits * bit_us);
        schedule.append(&transmit_schedule(payload, &self.timing, self.scheme)?);
        schedule.append(&ActivitySchedule::silence(
            self.calibration.tail_bits * bit_us,
        ));
        let clean = synthesize_envelope(&schedule, &self.timing, self.calibration.amplitude)?;

        let mut model = ChannelModel::new(self.snr_db, seed)?.with_noise(self.calibration.noise)?;
        if let Some(j) = self.jammer {
            model = model.with_jammer(j);
        }
        let rx = model.apply(&clean)?;

        let mut out = TrialOutcome {
            bits_sent: payload.len(),
            ..TrialOutcome::default()
        };
        for (&c, &x) in clean.samples().iter().zip(rx.samples()) {
            if c > 0.0 {
                out.on.add(x)
            } else {
                out.off.add(x)
            }
        }

        let decoded = match demodulate(&rx, &self.demod) {
            Ok(r) => r,
            Err(DemodError::NoSignal) => {
                out.frame_lost = true;
                out.bits_lost = payload.len();
                return Ok(out);
            }
            Err(e) => return Err(e.into()),
        };
        if let Some(f) = decoded.frames.first() {
            out.bit_errors = payload_errors(payload, f.frame.payload());
            out.crc_valid = f.crc_valid;
        } else if let Some(p) = &decoded.truncated {
            out.bit_errors = payload_errors(payload, &p.payload);
        } else {
            out.frame_lost = true;
            out.bits_lost = payload.len();
        }
        Ok(out)
    }
}

/// Aggregate for one (bit time, channel point) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub snr_db: f64,
    pub bits_sent: usize,
    pub bit_errors: usize,
    pub bits_lost: usize,
    pub frames_lost: usize,
    /// `None` when the cell did not produce enough ON/OFF samples.
    pub est_snr_db: Option<f64>,
}

impl CellStats {
    /// Errors over all bits sent; bits of lost frames are not errors.
    pub fn ber(&self) -> f64 {
        if self.bits_sent == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits_sent as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub bit_time_ms: f64,
    pub point: ChannelPoint,
    pub result: Result<CellStats, String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BerReport {
    /// Bit-time major, channel-point minor, in spec order.
    pub cells: Vec<Cell>,
}

impl BerReport {
    pub fn get(&self, bit_time_ms: f64, point: ChannelPoint) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.bit_time_ms == bit_time_ms && c.point == point)
    }
}

fn random_payload(bits: usize, seed: u64) -> BitStream {
    let mut rng = rng_from(seed);
    (0..bits).map(|_| rng.random::<bool>()).collect()
}

/// Runs every cell of `spec`. Trials run in parallel; each draws its payload
/// and channel from seeds derived from (base seed, cell, trial), so results do
/// not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<BerReport, HarnessError> {
    spec.validate()?;
    let cells: Vec<(f64, ChannelPoint)> = spec
        .bit_times_ms
        .iter()
        .flat_map(|&t| spec.points.iter().map(move |&p| (t, p)))
        .collect();
    let links: Vec<Result<Link, String>> = cells
        .iter()
        .map(|&(t, p)| {
            let snr = p.snr_db().map_err(|e| e.to_string())?;
            Link::new(t, spec.scheme, snr, spec.calibration)
                .map(|l| l.with_jammer(spec.jammer))
                .map_err(|e| e.to_string())
        })
        .collect();

    let jobs: Vec<(usize, usize)> = links
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_ok())
        .flat_map(|(c, _)| (0..spec.trials).map(move |k| (c, k)))
        .collect();
    let outcomes: Vec<(usize, Result<TrialOutcome, String>)> = jobs
        .par_iter()
        .map(|&(c, k)| {
            let link = links[c].as_ref().expect("filtered");
            let payload = random_payload(
                spec.payload_bits,
                derive_seed(spec.seed, &[c as u64, k as u64, PAYLOAD_STREAM]),
            );
            let seed = derive_seed(spec.seed, &[c as u64, k as u64, CHANNEL_STREAM]);
            (c, link.run(&payload, seed).map_err(|e| e.to_string()))
        })
        .collect();

    let mut totals: Vec<Result<(TrialOutcome, usize), String>> = links
        .iter()
        .map(|l| match l {
            Ok(_) => Ok((TrialOutcome::default(), 0)),
            Err(e) => Err(e.clone()),
        })
        .collect();
    for (c, outcome) in outcomes {
        let slot = &mut totals[c];
        match (slot.as_mut(), outcome) {
            (Ok((acc, lost)), Ok(o)) => {
                acc.bits_sent += o.bits_sent;
                acc.bit_errors += o.bit_errors;
                acc.bits_lost += o.bits_lost;
                *lost += usize::from(o.frame_lost);
                acc.on.merge(&o.on);
                acc.off.merge(&o.off);
            }
            (Ok(_), Err(e)) => *slot = Err(e),
            (Err(_), _) => {}
        }
    }

    let report_cells = cells
        .into_iter()
        .zip(links)
        .zip(totals)
        .map(|(((bit_time_ms, point), link), total)| Cell {
            bit_time_ms,
            point,
            result: total.map(|(acc, frames_lost)| CellStats {
                snr_db: link.as_ref().map(|l| l.snr_db).unwrap_or(f64::NAN),
                bits_sent: acc.bits_sent,
                bit_errors: acc.bit_errors,
                bits_lost: acc.bits_lost,
                frames_lost,
                est_snr_db: snr_from_moments(&acc.on, &acc.off).ok(),
            }),
        })
        .collect();
    Ok(BerReport {
        cells: report_cells,
    })
}

/// Result of a high-rate link test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub bits_sent: usize,
    pub bit_errors: usize,
    pub bits_lost: usize,
}

impl ProbeResult {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits_sent.max(1) as f64
    }
}

/// Largest payload the probe puts in one frame.
const PROBE_FRAME_BITS: usize = 1024;

/// Sends `bits` random bits at `bit_rate_bps` (Manchester, default
/// calibration), split into frames of at most 1024 bits.
pub fn highrate_probe(
    bit_rate_bps: u32,
    snr_db: f64,
    bits: usize,
    seed: u64,
) -> Result<ProbeResult, HarnessError> {
    if bit_rate_bps < 1000 {
        return Err(HarnessError::InvalidSpec(format!(
            "bit rate {bit_rate_bps} below 1000 bps"
        )));
    }
    if bits == 0 {
        return Err(HarnessError::InvalidSpec("bits must be at least 1".into()));
    }
    let link = Link::new(
        1000.0 / f64::from(bit_rate_bps),
        LineCode::Manchester,
        snr_db,
        Calibration::default(),
    )?;
    let chunks: Vec<(usize, usize)> = (0..bits)
        .step_by(PROBE_FRAME_BITS)
        .enumerate()
        .map(|(k, at)| (k, (bits - at).min(PROBE_FRAME_BITS)))
        .collect();
    let outcomes = chunks
        .par_iter()
        .map(|&(k, n)| {
            let payload = random_payload(n, derive_seed(seed, &[k as u64, PAYLOAD_STREAM]));
            link.run(&payload, derive_seed(seed, &[k as u64, CHANNEL_STREAM]))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(outcomes.iter().fold(
        ProbeResult {
            bits_sent: 0,
            bit_errors: 0,
            bits_lost: 0,
        },
        |acc, o| ProbeResult {
            bits_sent: acc.bits_sent + o.bits_sent,
            bit_errors: acc.bit_errors + o.bit_errors,
            bits_lost: acc.bits_lost + o.bits_lost,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExfilItem {
    name: String,
    size_bits: u64,
}

impl ExfilItem {
    pub fn new(name: impl Into<String>, size_bits: u64) -> Result<Self, HarnessError> {
        if size_bits == 0 {
            return Err(HarnessError::InvalidSpec(
                "item size must be positive".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            size_bits,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size_bits(&self) -> u64 {
        self.size_bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExfilTime {
    pub payload_secs: f64,
    /// Preamble, length field and CRC for a single frame.
    pub overhead_secs: f64,
}

impl ExfilTime {
    pub fn total_secs(&self) -> f64 {
        self.payload_secs + self.overhead_secs
    }
}

pub fn exfil_time(item: &ExfilItem, bit_time_ms: f64) -> ExfilTime {
    ExfilTime {
        payload_secs: item.size_bits as f64 * bit_time_ms / 1000.0,
        overhead_secs: crate::frames::FRAME_OVERHEAD_BITS as f64 * bit_time_ms / 1000.0,
    }
}

/// Bit times of the published exfiltration table, in column order.
pub const EXFIL_BIT_TIMES_MS: [f64; 3] = [10.0, 5.0, 1.0];

/// A published exfiltration row: label, size, and the printed cell values.
/// `None` marks cells printed as "realtime".
pub struct PublishedExfil {
    pub name: &'static str,
    pub size_bits: u64,
    pub printed_secs: [Option<f64>; 3],
}

pub const PUBLISHED_EXFIL: [PublishedExfil; 6] = [
    PublishedExfil {
        name: "Keylogging",
        size_bits: 16,
        printed_secs: [None, None, None],
    },
    PublishedExfil {
        name: "4096 bit RSA key",
        size_bits: 4096,
        printed_secs: [Some(41.96), Some(20.48), Some(4.096)],
    },
    PublishedExfil {
        name: "Biometric information",
        size_bits: 10_000,
        printed_secs: [Some(100.0), Some(50.0), Some(10.0)],
    },
    PublishedExfil {
        name: "Password",
        size_bits: 128,
        printed_secs: [Some(1.28), Some(0.64), Some(0.128)],
    },
    PublishedExfil {
        name: "Small image (.jpg)",
        size_bits: 25_000,
        printed_secs: [Some(250.0), Some(125.0), Some(25.0)],
    },
    PublishedExfil {
        name: "Textual document (.txt, .docx)",
        size_bits: 40_000,
        printed_secs: [Some(400.0), Some(200.0), Some(40.0)],
    },
];

/// One computed cell, with a note where the published value disagrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ExfilCell {
    pub bit_time_ms: f64,
    pub time: ExfilTime,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExfilRow {
    pub item: ExfilItem,
    pub cells: Vec<ExfilCell>,
}

fn same_secs(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Recomputes the published table and annotates printed cells that do not
/// equal size × bit time.
pub fn exfil_table() -> Vec<ExfilRow> {
    PUBLISHED_EXFIL
        .iter()
        .map(|row| {
            let item =
                ExfilItem::new(row.name, row.size_bits).expect("published sizes are positive");
            let cells = EXFIL_BIT_TIMES_MS
                .iter()
                .zip(row.printed_secs)
                .map(|(&t, printed)| {
                    let time = exfil_time(&item, t);
                    let note = match printed {
                        Some(p) if !same_secs(p, time.payload_secs) => Some(format!(
                            "computed {} s, published {} s",
                            fmt_secs(time.payload_secs),
                            fmt_secs(p)
                        )),
                        None => Some("published as realtime".to_string()),
                        _ => None,
                    };
                    ExfilCell {
                        bit_time_ms: t,
                        time,
                        note,
                    }
                })
                .collect();
            ExfilRow { item, cells }
        })
        .collect()
}

/// Shortest decimal that round-trips, with float noise removed.
pub fn fmt_secs(s: f64) -> String {
    let rounded = (s * 1e9).round() / 1e9;
    format!("{rounded}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => Err(format!("unknown format '{other}' (expected csv or text)")),
        }
    }
}

pub const BER_CSV_HEADER: &str =
    "bit_time_ms,distance_cm,snr_db,bits_sent,bit_errors,bits_lost,frames_lost,est_snr_db,ber";

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.1}")
    }
}

fn fmt_pct(ber: f64) -> String {
    format!("{:.1}%", ber * 100.0)
}

fn point_label(p: ChannelPoint) -> String {
    match p {
        ChannelPoint::DistanceCm(d) => format!("d = {d} cm"),
        ChannelPoint::SnrDb(s) => format!("snr = {} dB", fmt_db(s)),
    }
}

/// Renders a report. CSV has one row per cell; text is a grid with bit times
/// down and channel points across. Output is a pure function of the report.
pub fn emit_tables(report: &BerReport, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => emit_csv(report),
        TableFormat::Text => emit_text(report),
    }
}

fn emit_csv(report: &BerReport) -> String {
    let mut out = String::from(BER_CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        let distance = c
            .point
            .distance_cm()
            .map(|d| d.to_string())
            .unwrap_or_default();
        let _ = match &c.result {
            Ok(s) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.bit_time_ms,
                distance,
                fmt_db(s.snr_db),
                s.bits_sent,
                s.bit_errors,
                s.bits_lost,
                s.frames_lost,
                s.est_snr_db.map(fmt_db).unwrap_or_default(),
                fmt_pct(s.ber())
            ),
            Err(e) => writeln!(
                out,
                "{},{},,,,,,,error: {}",
                c.bit_time_ms,
                distance,
                e.replace([',', '\n'], " ")
            ),
        };
    }
    out
}

fn emit_text(report: &BerReport) -> String {
    let mut times: Vec<f64> = Vec::new();
    let mut points: Vec<ChannelPoint> = Vec::new();
    for c in &report.cells {
        if !times.contains(&c.bit_time_ms) {
            times.push(c.bit_time_ms);
        }
        if !points.contains(&c.point) {
            points.push(c.point);
        }
    }
    let mut rows: Vec<Vec<String>> = vec![std::iter::once(String::new())
        .chain(points.iter().map(|&p| point_label(p)))
        .collect()];
    for &t in &times {
        let mut row = vec![format!("t = {t} ms")];
        for &p in &points {
            row.push(match report.get(t, p).map(|c| &c.result) {
                Some(Ok(s)) => fmt_pct(s.ber()),
                _ => "-".to_string(),
            });
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, &w))| {
                if i == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Renders the recomputed exfiltration table.
pub fn emit_exfil_table(rows: &[ExfilRow], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str("item,size_bits,bit_time_ms,payload_s,overhead_s,note\n");
            for r in rows {
                for c in &r.cells {
                    let _ = writeln!(
                        out,
                        "\"{}\",{},{},{},{},{}",
                        r.item.name(),
                        r.item.size_bits(),
                        c.bit_time_ms,
                        fmt_secs(c.time.payload_secs),
                        fmt_secs(c.time.overhead_secs),
                        c.note.as_deref().unwrap_or("")
                    );
                }
            }
        }
        TableFormat::Text => {
            let name_w = rows.iter().map(|r| r.item.name().len()).max().unwrap_or(0);
            for r in rows {
                let cells: Vec<String> = r
                    .cells
                    .iter()
                    .map(|c| {
                        format!(
                            "t={} ms: {} s",
                            c.bit_time_ms,
                            fmt_secs(c.time.payload_secs)
                        )
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{:<name_w$}  {:>6} bits  {}",
                    r.item.name(),
                    r.item.size_bits(),
                    cells.join("  ")
                );
                for c in r.cells.iter().filter(|c| c.note.is_some()) {
                    let _ = writeln!(
                        out,
                        "{:<name_w$}    note (t={} ms): {}",
                        "",
                        c.bit_time_ms,
                        c.note.as_deref().unwrap_or_default()
                    );
                }
            }
        }
    }
    out
}
