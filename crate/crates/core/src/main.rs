use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ramsignal::channel::{
    clock_harmonics, distance_to_snr, faraday_attenuation, ChannelModel, JammerConfig, NoiseShape,
    ShieldSpec, SNR_ANCHORS,
};
use ramsignal::demod::{demodulate, DemodConfig};
use ramsignal::frames::{build_frame, BitStream, LineCode};
use ramsignal::harness::{
    emit_exfil_table, emit_tables, exfil_table, exfil_time, fmt_secs, payload_errors, run_sweep,
    ChannelPoint, ExfilItem, Link, SweepSpec, TableFormat, DEFAULT_SAMPLE_RATE,
    DEFAULT_SYNC_TOLERANCE, NOISE_CORRELATION_US,
};
use ramsignal::waveform::{
    read_envelope, read_iq, read_metadata, synthesize_envelope, transmit_schedule, write_envelope,
    write_metadata, ActivitySchedule, EnvelopeMeta, JammerMeta, SymbolTiming,
};

const EXIT_DECODE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ramsignal",
    version,
    about = "Memory-bus emanation covert channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the frame and line-coded symbols for a payload.
    Encode {
        #[command(flatten)]
        payload: PayloadArgs,
        #[arg(long, default_value = "manchester")]
        scheme: LineCode,
    },
    /// Write a noiseless envelope file (plus JSON sidecar) for a payload.
    Synth {
        #[command(flatten)]
        payload: PayloadArgs,
        #[command(flatten)]
        link: LinkArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pass an envelope file through the simulated channel.
    Channel {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Recover frames from an envelope or IQ file.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        /// Input is interleaved f32 I/Q rather than an envelope.
        #[arg(long)]
        iq: bool,
        /// Overrides the sidecar.
        #[arg(long)]
        scheme: Option<LineCode>,
        #[arg(long)]
        bit_time_ms: Option<f64>,
        #[arg(long)]
        sample_rate: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_SYNC_TOLERANCE)]
        sync_tolerance: f64,
        #[arg(long)]
        smooth_window: Option<usize>,
        /// Expected payload, for per-frame BER.
        #[arg(long)]
        reference_hex: Option<String>,
        #[arg(long, default_value = "csv")]
        format: TableFormat,
    },
    /// BER sweep over bit time × distance (or SNR).
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 5.0, 1.0])]
        bit_time_ms: Vec<f64>,
        #[arg(long, value_delimiter = ',', conflicts_with = "snr_db")]
        distance_cm: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        snr_db: Vec<f64>,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 256)]
        payload_bits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "manchester")]
        scheme: LineCode,
        #[command(flatten)]
        jammer: JammerArgs,
        #[arg(long, default_value = "text")]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exfiltration time for an item, or the reference table without arguments.
    ExfilTime {
        #[arg(long, requires = "bit_time_ms")]
        size_bits: Option<u64>,
        #[arg(long)]
        bit_time_ms: Option<f64>,
        #[arg(long, default_value = "text")]
        format: TableFormat,
    },
    /// Shield attenuation in dB.
    Faraday {
        /// Conductivity, S/m.
        #[arg(long)]
        sigma: f64,
        /// Wall thickness, m.
        #[arg(long)]
        thickness: f64,
        /// Permeability, H/m.
        #[arg(long)]
        mu: f64,
        /// Frequency, Hz.
        #[arg(long)]
        frequency: f64,
    },
    /// First harmonics of a memory clock, in GHz.
    Harmonics {
        #[arg(long)]
        clock_ghz: f64,
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Encode, synthesize, pass through the channel and decode in one step.
    Roundtrip {
        #[command(flatten)]
        payload: PayloadArgs,
        #[command(flatten)]
        link: LinkArgs,
        #[command(flatten)]
        channel: ChannelArgs,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PayloadArgs {
    #[arg(long)]
    payload_hex: Option<String>,
    /// Raw bytes, sent MSB first.
    #[arg(long)]
    payload_file: Option<PathBuf>,
}

#[derive(Args)]
struct LinkArgs {
    #[arg(long, default_value = "manchester")]
    scheme: LineCode,
    #[arg(long, default_value_t = 1.0)]
    bit_time_ms: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: u32,
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long, conflicts_with = "snr_db")]
    distance_cm: Option<f64>,
    /// `inf` disables noise.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Noise correlation time; 0 gives white noise.
    #[arg(long)]
    correlation_us: Option<f64>,
    #[command(flatten)]
    jammer: JammerArgs,
}

#[derive(Args)]
struct JammerArgs {
    #[arg(long)]
    jammer_duty: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    jammer_amplitude: f64,
    #[arg(long, default_value_t = 5.0)]
    jammer_burst_ms: f64,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Decode(String),
}

type CliResult<T = ()> = Result<T, CliError>;

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

impl PayloadArgs {
    fn load(&self) -> CliResult<BitStream> {
        let bits = match (&self.payload_hex, &self.payload_file) {
            (Some(hex), _) => BitStream::from_hex(hex).map_err(config)?,
            (None, Some(path)) => BitStream::from_bytes(
                &fs::read(path).map_err(|e| config(format!("{}: {e}", path.display())))?,
            ),
            (None, None) => return Err(config("a payload is required")),
        };
        Ok(bits)
    }
}

impl JammerArgs {
    fn config(&self) -> CliResult<Option<JammerConfig>> {
        self.jammer_duty
            .map(|d| JammerConfig::new(d, self.jammer_burst_ms, self.jammer_amplitude))
            .transpose()
            .map_err(config)
    }
}

impl ChannelArgs {
    /// Flags override whatever the sidecar recorded.
    fn merge_into(&self, meta: &mut EnvelopeMeta) -> CliResult {
        if let Some(d) = self.distance_cm {
            meta.distance_cm = Some(d);
            meta.snr_db = None;
        }
        if let Some(s) = self.snr_db {
            meta.snr_db = Some(s);
            meta.distance_cm = None;
        }
        if let Some(seed) = self.seed {
            meta.seed = Some(seed);
        }
        if let Some(j) = self.jammer.config()? {
            meta.jammer = Some(JammerMeta {
                duty_cycle: j.duty_cycle(),
                burst_ms: j.burst_ms(),
                amplitude: j.amplitude(),
            });
        }
        Ok(())
    }

    fn noise(&self) -> NoiseShape {
        match self.correlation_us.unwrap_or(NOISE_CORRELATION_US) {
            0.0 => NoiseShape::White,
            c => NoiseShape::LowPass { correlation_us: c },
        }
    }
}

fn model_from_meta(meta: &EnvelopeMeta, noise: NoiseShape) -> CliResult<ChannelModel> {
    let snr = match (meta.snr_db, meta.distance_cm) {
        (Some(s), _) => s,
        (None, Some(d)) => distance_to_snr(d).map_err(config)?,
        (None, None) => return Err(config("channel needs --distance-cm or --snr-db")),
    };
    let mut model = ChannelModel::new(snr, meta.seed.unwrap_or(0))
        .and_then(|m| m.with_noise(noise))
        .map_err(config)?;
    if let Some(j) = &meta.jammer {
        model = model
            .with_jammer(JammerConfig::new(j.duty_cycle, j.burst_ms, j.amplitude).map_err(config)?);
    }
    Ok(model)
}

fn framed_schedule(
    payload: &BitStream,
    timing: &SymbolTiming,
    scheme: LineCode,
) -> CliResult<ActivitySchedule> {
    let guard = 2 * timing.bit_time_us();
    let mut s = ActivitySchedule::silence(guard);
    s.append(&transmit_schedule(payload, timing, scheme).map_err(config)?);
    s.append(&ActivitySchedule::silence(guard));
    Ok(s)
}

fn write_out(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| config(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_encode(payload: &PayloadArgs, scheme: LineCode) -> CliResult {
    let frame = build_frame(&payload.load()?).map_err(config)?;
    let bits = frame.serialize();
    println!("frame:   {bits}");
    println!("symbols: {}", scheme.encode(&bits));
    Ok(())
}

fn cmd_synth(
    payload: &PayloadArgs,
    link: &LinkArgs,
    channel: &ChannelArgs,
    out: &Path,
) -> CliResult {
    let payload = payload.load()?;
    let timing = SymbolTiming::from_ms(link.bit_time_ms, link.sample_rate).map_err(config)?;
    let signal = synthesize_envelope(
        &framed_schedule(&payload, &timing, link.scheme)?,
        &timing,
        1.0,
    )
    .map_err(config)?;
    let mut meta = EnvelopeMeta {
        sample_rate: link.sample_rate,
        bit_time_ms: timing.bit_time_ms(),
        scheme: link.scheme,
        payload_bits: payload.len(),
        snr_db: None,
        distance_cm: None,
        seed: None,
        jammer: None,
    };
    channel.merge_into(&mut meta)?;
    write_envelope(out, &signal).map_err(config)?;
    write_metadata(out, &meta).map_err(config)?;
    eprintln!("wrote {} samples to {}", signal.len(), out.display());
    Ok(())
}

fn cmd_channel(input: &Path, out: &Path, channel: &ChannelArgs) -> CliResult {
    let mut meta = read_metadata(input).map_err(config)?;
    channel.merge_into(&mut meta)?;
    let model = model_from_meta(&meta, channel.noise())?;
    let signal = read_envelope(input, meta.sample_rate).map_err(config)?;
    let rx = model.apply(&signal).map_err(config)?;
    write_envelope(out, &rx).map_err(config)?;
    write_metadata(out, &meta).map_err(config)?;
    eprintln!("applied {} dB to {} samples", model.snr_db(), rx.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_decode(
    input: &Path,
    iq: bool,
    scheme: Option<LineCode>,
    bit_time_ms: Option<f64>,
    sample_rate: Option<u32>,
    sync_tolerance: f64,
    smooth_window: Option<usize>,
    reference_hex: Option<&str>,
    format: TableFormat,
) -> CliResult {
    let meta = read_metadata(input).ok();
    let pick = |flag: Option<f64>, side: Option<f64>, what: &str| {
        flag.or(side)
            .ok_or_else(|| config(format!("no {what}: pass it or provide a sidecar")))
    };
    let rate = pick(
        sample_rate.map(f64::from),
        meta.as_ref().map(|m| f64::from(m.sample_rate)),
        "--sample-rate",
    )? as u32;
    let bit_time = pick(
        bit_time_ms,
        meta.as_ref().map(|m| m.bit_time_ms),
        "--bit-time-ms",
    )?;
    let scheme = scheme
        .or(meta.as_ref().map(|m| m.scheme))
        .ok_or_else(|| config("no --scheme: pass it or provide a sidecar"))?;
    let reference = reference_hex
        .map(BitStream::from_hex)
        .transpose()
        .map_err(config)?;

    let signal = if iq {
        read_iq(input, rate)
    } else {
        read_envelope(input, rate)
    }
    .map_err(config)?;
    let timing = SymbolTiming::from_ms(bit_time, rate).map_err(config)?;
    let mut cfg = DemodConfig::new(timing, scheme)
        .with_sync_tolerance(sync_tolerance)
        .map_err(config)?;
    if let Some(w) = smooth_window {
        cfg = cfg.with_smooth_window(w).map_err(config)?;
    }
    let result = demodulate(&signal, &cfg).map_err(|e| CliError::Decode(e.to_string()))?;

    let mut report = String::new();
    let ber = |p: &BitStream| {
        reference
            .as_ref()
            .map(|r| format!("{:.4}", payload_errors(r, p) as f64 / r.len().max(1) as f64))
            .unwrap_or_default()
    };
    let snr = |s: Option<f64>| s.map(|v| format!("{v:.1}")).unwrap_or_default();
    match format {
        TableFormat::Csv => {
            report.push_str(
                "start_sample,length_bits,crc_valid,est_snr_db,ber_vs_reference,payload_hex\n",
            );
            for f in &result.frames {
                let _ = writeln!(
                    report,
                    "{},{},{},{},{},{}",
                    f.start_sample,
                    f.frame.length_field(),
                    f.crc_valid,
                    snr(f.stats.est_snr_db),
                    ber(f.frame.payload()),
                    f.frame.payload().to_hex()
                );
            }
        }
        TableFormat::Text => {
            for f in &result.frames {
                let _ = writeln!(
                    report,
                    "frame @{}  {} bits  crc {}  snr {} dB  payload {}",
                    f.start_sample,
                    f.frame.length_field(),
                    if f.crc_valid { "ok" } else { "BAD" },
                    snr(f.stats.est_snr_db),
                    f.frame.payload().to_hex()
                );
            }
        }
    }
    print!("{report}");
    if let Some(p) = &result.truncated {
        eprintln!(
            "truncated frame at sample {} ({} payload bits recovered)",
            p.start_sample,
            p.payload.len()
        );
    }
    if result.frames.is_empty() {
        return Err(CliError::Decode("no frame found".into()));
    }
    if result.frames.iter().any(|f| !f.crc_valid) {
        return Err(CliError::Decode("CRC mismatch".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    bit_time_ms: &[f64],
    distance_cm: &[f64],
    snr_db: &[f64],
    trials: usize,
    payload_bits: usize,
    seed: u64,
    scheme: LineCode,
    jammer: &JammerArgs,
    format: TableFormat,
    out: Option<&Path>,
) -> CliResult {
    let distances = if distance_cm.is_empty() && snr_db.is_empty() {
        SNR_ANCHORS.iter().map(|a| a.0).collect()
    } else {
        distance_cm.to_vec()
    };
    let mut spec = SweepSpec::new(
        bit_time_ms.to_vec(),
        distances,
        payload_bits,
        trials,
        seed,
        scheme,
    );
    if !snr_db.is_empty() {
        spec.points = snr_db.iter().map(|&s| ChannelPoint::SnrDb(s)).collect();
    }
    spec.jammer = jammer.config()?;
    let report = run_sweep(&spec).map_err(config)?;
    write_out(out, &emit_tables(&report, format))
}

fn cmd_exfil(size_bits: Option<u64>, bit_time_ms: Option<f64>, format: TableFormat) -> CliResult {
    match (size_bits, bit_time_ms) {
        (Some(bits), Some(t)) => {
            if !(t.is_finite() && t > 0.0) {
                return Err(config("bit time must be positive"));
            }
            let time = exfil_time(&ExfilItem::new("item", bits).map_err(config)?, t);
            println!(
                "payload {} s, framing overhead {} s",
                fmt_secs(time.payload_secs),
                fmt_secs(time.overhead_secs)
            );
        }
        _ => print!("{}", emit_exfil_table(&exfil_table(), format)),
    }
    Ok(())
}

fn cmd_roundtrip(payload: &PayloadArgs, link: &LinkArgs, channel: &ChannelArgs) -> CliResult {
    let payload = payload.load()?;
    let snr = match (channel.snr_db, channel.distance_cm) {
        (Some(s), _) => s,
        (None, Some(d)) => distance_to_snr(d).map_err(config)?,
        (None, None) => f64::INFINITY,
    };
    let cal = ramsignal::harness::Calibration {
        sample_rate: link.sample_rate,
        noise: channel.noise(),
        ..Default::default()
    };
    let l = Link::new(link.bit_time_ms, link.scheme, snr, cal)
        .map_err(config)?
        .with_jammer(channel.jammer.config()?);
    let outcome = l.run(&payload, channel.seed.unwrap_or(0)).map_err(config)?;
    println!(
        "bits {}  errors {}  lost {}  crc {}",
        outcome.bits_sent,
        outcome.bit_errors,
        outcome.bits_lost,
        if outcome.crc_valid { "ok" } else { "BAD" }
    );
    if outcome.frame_lost {
        return Err(CliError::Decode("frame lost".into()));
    }
    if outcome.bit_errors > 0 || !outcome.crc_valid {
        return Err(CliError::Decode("payload mismatch".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Encode { payload, scheme } => cmd_encode(&payload, scheme),
        Command::Synth {
            payload,
            link,
            channel,
            out,
        } => cmd_synth(&payload, &link, &channel, &out),
        Command::Channel {
            input,
            out,
            channel,
        } => cmd_channel(&input, &out, &channel),
        Command::Decode {
            input,
            iq,
            scheme,
            bit_time_ms,
            sample_rate,
            sync_tolerance,
            smooth_window,
            reference_hex,
            format,
        } => cmd_decode(
            &input,
            iq,
            scheme,
            bit_time_ms,
            sample_rate,
            sync_tolerance,
            smooth_window,
            reference_hex.as_deref(),
            format,
        ),
        Command::Sweep {
            bit_time_ms,
            distance_cm,
            snr_db,
            trials,
            payload_bits,
            seed,
            scheme,
            jammer,
            format,
            out,
        } => cmd_sweep(
            &bit_time_ms,
            &distance_cm,
            &snr_db,
            trials,
            payload_bits,
            seed,
            scheme,
            &jammer,
            format,
            out.as_deref(),
        ),
        Command::ExfilTime {
            size_bits,
            bit_time_ms,
            format,
        } => cmd_exfil(size_bits, bit_time_ms, format),
        Command::Faraday {
            sigma,
            thickness,
            mu,
            frequency,
        } => {
            let spec = ShieldSpec::new(sigma, thickness, mu, frequency).map_err(config)?;
            let a = faraday_attenuation(&spec);
            println!(
                "A = {:.4} dB (shielding {:.4} dB)",
                a.attenuation_db, a.shielding_db
            );
            Ok(())
        }
        Command::Harmonics { clock_ghz, count } => {
            let h = clock_harmonics(clock_ghz, count).map_err(config)?;
            let list: Vec<String> = h.iter().map(|f| format!("{f}")).collect();
            println!("{}", list.join(" "));
            Ok(())
        }
        Command::Roundtrip {
            payload,
            link,
            channel,
        } => cmd_roundtrip(&payload, &link, &channel),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Decode(m)) => {
            eprintln!("decode failed: {m}");
            ExitCode::from(EXIT_DECODE)
        }
    }
}
