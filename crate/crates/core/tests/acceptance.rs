//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use ramsignal::channel::{
    apply_awgn, clock_harmonics, faraday_attenuation, ChannelModel, JammerConfig, ShieldSpec,
    SNR_ANCHORS,
};
use ramsignal::demod::{demodulate, DemodConfig};
use ramsignal::frames::{build_frame, manchester_decode, manchester_encode, BitStream, LineCode};
use ramsignal::harness::{
    emit_tables, estimate_snr, exfil_table, exfil_time, highrate_probe, run_sweep, BerReport,
    ChannelPoint, ExfilItem, SweepSpec, TableFormat, DEFAULT_SAMPLE_RATE,
};
use ramsignal::seed::rng_from;
use ramsignal::waveform::{
    execute_schedule, synthesize_envelope, transmit_schedule, Activity, ActivitySchedule,
    SymbolTiming, WaveformError, DEFAULT_BUFFER_SIZE,
};

const FIXTURE_FRAME: &str = include_str!("fixtures/data_frame.txt");
const FIXTURE_FRAME_MANCHESTER: &str = include_str!("fixtures/data_frame_manchester.txt");
const FIXTURE_SHIELD: &str = include_str!("fixtures/shield_attenuation.csv");

type Criterion = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn ac1_noiseless_roundtrip() -> Verdict {
    let started = Instant::now();
    let strategy = (
        prop_oneof![Just(LineCode::Ook), Just(LineCode::Manchester)],
        prop_oneof![Just(10.0), Just(5.0), Just(1.0)],
        proptest::collection::vec(any::<bool>(), 1..=96),
        0u64..=10,
    );
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&strategy, |(scheme, bit_ms, bits, lead_bits)| {
        let payload: BitStream = bits.into_iter().collect();
        let timing = SymbolTiming::from_ms(bit_ms, DEFAULT_SAMPLE_RATE).unwrap();
        let mut s = ActivitySchedule::silence(lead_bits * timing.bit_time_us());
        s.append(&transmit_schedule(&payload, &timing, scheme).unwrap());
        s.append(&ActivitySchedule::silence(timing.bit_time_us()));
        let sig = synthesize_envelope(&s, &timing, 1.0).unwrap();
        let r = demodulate(&sig, &DemodConfig::new(timing, scheme)).unwrap();
        prop_assert_eq!(r.frames.len(), 1);
        prop_assert!(r.frames[0].crc_valid);
        prop_assert_eq!(r.frames[0].frame.payload(), &payload);
        Ok(())
    });
    let elapsed = started.elapsed();
    match result {
        Ok(()) => check(
            elapsed < Duration::from_secs(60),
            format!("1000 payloads recovered in {:.1} s", elapsed.as_secs_f64()),
        ),
        Err(e) => Verdict::Fail(format!("{e}")),
    }
}

fn ac2_manchester_doubling() -> Verdict {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&proptest::collection::vec(any::<bool>(), 0..512), |bits| {
        let b: BitStream = bits.into_iter().collect();
        let enc = manchester_encode(&b);
        prop_assert_eq!(enc.len(), 2 * b.len());
        let dec = manchester_decode(&enc).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(dec, b);
        Ok(())
    });
    match result {
        Ok(()) => Verdict::Pass("2x length and decode(encode(x)) == x over 1000 inputs".into()),
        Err(e) => Verdict::Fail(format!("{e}")),
    }
}

fn ac3_preamble_fixture() -> Verdict {
    let frame = build_frame(&BitStream::from_bytes(b"DATA"))
        .unwrap()
        .serialize();
    let ook = frame.to_text();
    let man = LineCode::Manchester.encode(&frame).to_text();
    let ok = ook == FIXTURE_FRAME.trim()
        && man == FIXTURE_FRAME_MANCHESTER.trim()
        && ook.starts_with("10101010");
    check(
        ok,
        format!("\"DATA\" frame {} bits, byte-exact vs fixture", frame.len()),
    )
}

fn ac4_channel_calibration() -> Verdict {
    let mut rng = rng_from(4);
    let payload: BitStream = (0..2048)
        .map(|_| rand::Rng::random::<bool>(&mut rng))
        .collect();
    let timing = SymbolTiming::from_ms(1.0, DEFAULT_SAMPLE_RATE).unwrap();
    let clean = synthesize_envelope(
        &transmit_schedule(&payload, &timing, LineCode::Ook).unwrap(),
        &timing,
        1.0,
    )
    .unwrap();
    let mask = clean.on_mask();
    let mut worst = 0f64;
    let mut notes = Vec::new();
    for snr in [8.0, 17.0, 22.0, 38.0] {
        let noisy = apply_awgn(&clean, &ChannelModel::new(snr, 100 + snr as u64).unwrap()).unwrap();
        let est = estimate_snr(&noisy, &mask).unwrap();
        worst = worst.max((est - snr).abs());
        notes.push(format!("{snr}->{est:.2}"));
    }
    check(
        worst <= 0.5 && clean.len() >= 100_000,
        format!(
            "{} samples, {} dB (max error {worst:.3} dB)",
            clean.len(),
            notes.join(", ")
        ),
    )
}

fn cell_ber(report: &BerReport, t: f64, p: ChannelPoint) -> (f64, usize, usize) {
    let s = report.get(t, p).unwrap().result.as_ref().unwrap();
    (s.ber(), s.bits_sent, s.frames_lost)
}

fn ac5_ber_structure() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;

    // (a) 38 dB at every bit time
    let spec = SweepSpec::new(
        vec![10.0, 5.0, 1.0],
        vec![50.0],
        256,
        40,
        5,
        LineCode::Manchester,
    );
    let report = run_sweep(&spec).unwrap();
    let a_ok = report.cells.iter().all(|c| {
        let s = c.result.as_ref().unwrap();
        s.bit_errors == 0 && s.frames_lost == 0 && s.bits_sent >= 10_000
    });
    ok &= a_ok;
    details.push(format!(
        "(a) 38 dB zero errors over 10240 bits per bit time: {a_ok}"
    ));

    // (b) and (c): fastest bit time across every anchor
    let anchors: Vec<f64> = SNR_ANCHORS.iter().map(|a| a.0).collect();
    let spec = SweepSpec::new(vec![1.0], anchors.clone(), 256, 30, 6, LineCode::Manchester);
    let report = run_sweep(&spec).unwrap();
    let bers: Vec<(f64, usize)> = anchors
        .iter()
        .map(|&d| {
            let (ber, n, _) = cell_ber(&report, 1.0, ChannelPoint::DistanceCm(d));
            (ber, n)
        })
        .collect();
    // anchors run from high to low SNR; allow 3 standard errors of slack
    let b_ok = bers.windows(2).all(|w| {
        let ((hi, n1), (lo, n2)) = (w[0], w[1]);
        let se = (hi * (1.0 - hi) / n1 as f64 + lo * (1.0 - lo) / n2 as f64).sqrt();
        hi <= lo + 3.0 * se
    });
    ok &= b_ok;
    let listing: Vec<String> = bers
        .iter()
        .map(|b| format!("{:.2}%", b.0 * 100.0))
        .collect();
    details.push(format!(
        "(b) non-increasing in SNR [{}]: {b_ok}",
        listing.join(" ")
    ));
    let c_ok = bers[bers.len() - 1].0 > bers[0].0;
    ok &= c_ok;
    details.push(format!("(c) BER(8 dB) > BER(38 dB) at 1 ms: {c_ok}"));

    // (d) fast link at low SNR
    let probe = highrate_probe(10_000, 5.0, 10_240, 7).unwrap();
    let d_ok = probe.ber() > 0.05;
    ok &= d_ok;
    details.push(format!(
        "(d) 10 kbps at 5 dB BER {:.1}%: {d_ok}",
        probe.ber() * 100.0
    ));

    check(ok, details.join("; "))
}

fn ac6_exfil_table() -> Verdict {
    let expected: [(u64, [f64; 3]); 5] = [
        (128, [1.28, 0.64, 0.128]),
        (10_000, [100.0, 50.0, 10.0]),
        (25_000, [250.0, 125.0, 25.0]),
        (40_000, [400.0, 200.0, 40.0]),
        (4096, [40.96, 20.48, 4.096]),
    ];
    let mut ok = true;
    for (bits, secs) in expected {
        let item = ExfilItem::new("x", bits).unwrap();
        for (t, want) in [10.0, 5.0, 1.0].into_iter().zip(secs) {
            let got = exfil_time(&item, t).payload_secs;
            ok &= (got - want).abs() <= 1e-12 * want;
        }
    }
    let rsa_note = exfil_table()
        .into_iter()
        .find(|r| r.item.size_bits() == 4096)
        .and_then(|r| r.cells[0].note.clone());
    let noted = rsa_note.as_deref() == Some("computed 40.96 s, published 41.96 s");
    check(
        ok && noted,
        format!("consistent cells exact: {ok}; RSA annotation: {rsa_note:?}"),
    )
}

fn ac7_faraday() -> Verdict {
    let mut worst = 0f64;
    let mut n = 0;
    for line in FIXTURE_SHIELD
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
    {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let a =
            faraday_attenuation(&ShieldSpec::new(v[0], v[1], v[2], v[3]).unwrap()).attenuation_db;
        worst = worst.max(((a - v[4]) / v[4]).abs());
        n += 1;
    }
    let unit = faraday_attenuation(&ShieldSpec::new(2.0, 3.0, 1.5, 4.0).unwrap()).attenuation_db;
    let unit_ok = (unit - -3.0103).abs() < 5e-5;
    check(
        n == 100 && worst <= 1e-9 && unit_ok,
        format!("{n} specs, max relative error {worst:.2e}; ratio 1 -> {unit:.4} dB"),
    )
}

fn ac8_harmonics() -> Verdict {
    let h = clock_harmonics(1.6, 3).unwrap();
    check(h == vec![1.6, 3.2, 4.8], format!("{h:?}"))
}

fn ac9_jammer() -> Verdict {
    let mut spec = SweepSpec::new(vec![1.0], vec![300.0], 256, 30, 9, LineCode::Manchester);
    let clean = run_sweep(&spec).unwrap();
    spec.jammer = Some(JammerConfig::new(0.5, 5.0, 1.0).unwrap());
    let jammed = run_sweep(&spec).unwrap();
    let p = ChannelPoint::DistanceCm(300.0);
    let (b0, _, _) = cell_ber(&clean, 1.0, p);
    let (b1, _, lost) = cell_ber(&jammed, 1.0, p);
    check(
        b1 > b0,
        format!(
            "22 dB: unjammed {:.2}%, jammed {:.2}% ({lost} frames lost)",
            b0 * 100.0,
            b1 * 100.0
        ),
    )
}

fn ac10_determinism() -> Verdict {
    let spec = SweepSpec::new(vec![5.0, 1.0], vec![300.0, 700.0], 64, 8, 10, LineCode::Ook);
    let a = emit_tables(&run_sweep(&spec).unwrap(), TableFormat::Csv);
    let b = emit_tables(&run_sweep(&spec).unwrap(), TableFormat::Csv);
    check(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn ac11_timing_driver() -> Verdict {
    let mut s = ActivitySchedule::new();
    for k in 0..100u64 {
        s.push(Activity::On, 4000 + 200 * (k % 3));
        s.push(Activity::Off, 6000 - 200 * (k % 3));
    }
    match execute_schedule(&s, DEFAULT_BUFFER_SIZE) {
        Err(WaveformError::Unsupported(why)) => Verdict::Skip(why.into()),
        Err(e) => Verdict::Fail(e.to_string()),
        Ok(report) => {
            let measured = report.measured_total().as_secs_f64();
            let err = (measured - 1.0).abs();
            check(err <= 0.02, format!("1 s schedule took {measured:.4} s"))
        }
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("AC1 noiseless roundtrip", ac1_noiseless_roundtrip),
        ("AC2 manchester doubling", ac2_manchester_doubling),
        ("AC3 preamble fixture", ac3_preamble_fixture),
        ("AC4 channel calibration", ac4_channel_calibration),
        ("AC5 BER structure", ac5_ber_structure),
        ("AC6 exfiltration table", ac6_exfil_table),
        ("AC7 shield attenuation", ac7_faraday),
        ("AC8 clock harmonics", ac8_harmonics),
        ("AC9 jammer degradation", ac9_jammer),
        ("AC10 sweep determinism", ac10_determinism),
        ("AC11 timing driver", ac11_timing_driver),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Verdict::Pass(d) => println!("PASS {name}: {d}"),
            Verdict::Skip(d) => println!("SKIP {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
