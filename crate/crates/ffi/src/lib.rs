//! C ABI over the `ramsignal` toolkit.
//!
//! Conventions:
//! - Every fallible call returns an [`RsigStatus`]; on failure a message is
//!   available from [`rsig_last_error`] on the same thread.
//! - Objects are opaque handles created by `rsig_*` constructors and released
//!   with the matching `*_free`. Freeing NULL is a no-op.
//! - Payloads cross the boundary as bytes, most significant bit first.
//! - Panics never unwind into C; they surface as `RSIG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ramsignal::channel::{
    distance_to_snr, faraday_attenuation, ChannelModel, NoiseShape, ShieldSpec,
};
use ramsignal::demod::{demodulate, DecodeResult, DemodConfig};
use ramsignal::frames::{BitStream, LineCode};
use ramsignal::harness::{exfil_time, ExfilItem};
use ramsignal::waveform::{
    synthesize_envelope, transmit_schedule, ActivitySchedule, EnvelopeSignal, SymbolTiming,
};

pub const RSIG_SCHEME_OOK: u32 = 0;
pub const RSIG_SCHEME_MANCHESTER: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsigStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    BufferTooSmall = 4,
    NoSignal = 5,
    Panic = 6,
}

/// An amplitude envelope.
pub struct RsigSignal {
    inner: EnvelopeSignal,
}

/// Frames recovered by [`rsig_demodulate`].
pub struct RsigDecodeResult {
    inner: DecodeResult,
}

/// Summary of one recovered frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RsigFrameInfo {
    pub start_sample: usize,
    pub end_sample: usize,
    pub payload_bits: u32,
    pub crc_valid: bool,
    pub code_violations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Fail(RsigStatus, String);

impl Fail {
    fn invalid(e: impl std::fmt::Display) -> Self {
        Fail(RsigStatus::InvalidArgument, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RsigStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RsigStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RsigStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(RsigStatus::NullPointer, format!("{what} is NULL")))
    } else {
        Ok(())
    }
}

fn scheme(code: u32) -> Result<LineCode, Fail> {
    match code {
        RSIG_SCHEME_OOK => Ok(LineCode::Ook),
        RSIG_SCHEME_MANCHESTER => Ok(LineCode::Manchester),
        other => Err(Fail::invalid(format!("unknown scheme {other}"))),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rsig_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frames `payload` (`payload_len` bytes), line-codes it and renders the
/// envelope with one bit time of silence either side.
///
/// # Safety
/// `payload` must point to `payload_len` readable bytes (it may be NULL when
/// `payload_len` is 0); `out` must be a valid pointer to write a handle to.
#[no_mangle]
pub unsafe extern "C" fn rsig_signal_synthesize(
    payload: *const u8,
    payload_len: usize,
    scheme_code: u32,
    bit_time_us: u64,
    sample_rate: u32,
    amplitude: f64,
    out: *mut *mut RsigSignal,
) -> RsigStatus {
    guard(|| {
        non_null(out, "out")?;
        if payload_len > 0 {
            non_null(payload, "payload")?;
        }
        let bytes = if payload_len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(payload, payload_len)
        };
        let scheme = scheme(scheme_code)?;
        let timing = SymbolTiming::new(bit_time_us, sample_rate).map_err(Fail::invalid)?;
        let mut s = ActivitySchedule::silence(bit_time_us);
        s.append(
            &transmit_schedule(&BitStream::from_bytes(bytes), &timing, scheme)
                .map_err(Fail::invalid)?,
        );
        s.append(&ActivitySchedule::silence(bit_time_us));
        let inner = synthesize_envelope(&s, &timing, amplitude).map_err(Fail::invalid)?;
        *out = Box::into_raw(Box::new(RsigSignal { inner }));
        Ok(())
    })
}

/// Copies `len` samples into a new signal.
///
/// # Safety
/// `samples` must point to `len` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_signal_from_samples(
    samples: *const f32,
    len: usize,
    sample_rate: u32,
    out: *mut *mut RsigSignal,
) -> RsigStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(samples, "samples")?;
        let v = std::slice::from_raw_parts(samples, len).to_vec();
        let inner = EnvelopeSignal::new(v, sample_rate).map_err(Fail::invalid)?;
        *out = Box::into_raw(Box::new(RsigSignal { inner }));
        Ok(())
    })
}

/// Number of samples; 0 for NULL.
///
/// # Safety
/// `signal` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsig_signal_len(signal: *const RsigSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.inner.len())
}

/// Borrowed view of the samples, valid until the handle is freed.
///
/// # Safety
/// `signal` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsig_signal_samples(signal: *const RsigSignal) -> *const f32 {
    signal
        .as_ref()
        .map_or(ptr::null(), |s| s.inner.samples().as_ptr())
}

/// # Safety
/// `signal` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsig_signal_sample_rate(signal: *const RsigSignal) -> u32 {
    signal.as_ref().map_or(0, |s| s.inner.sample_rate())
}

/// # Safety
/// `signal` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsig_signal_free(signal: *mut RsigSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

/// Adds calibrated Gaussian noise. `snr_db` may be +inf (no noise);
/// `correlation_us` of 0 gives white noise.
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_channel_apply(
    input: *const RsigSignal,
    snr_db: f64,
    seed: u64,
    correlation_us: f64,
    out: *mut *mut RsigSignal,
) -> RsigStatus {
    guard(|| {
        non_null(input, "input")?;
        non_null(out, "out")?;
        let noise = if correlation_us == 0.0 {
            NoiseShape::White
        } else {
            NoiseShape::LowPass { correlation_us }
        };
        let model = ChannelModel::new(snr_db, seed)
            .and_then(|m| m.with_noise(noise))
            .map_err(Fail::invalid)?;
        let inner = model.apply(&(*input).inner).map_err(Fail::invalid)?;
        *out = Box::into_raw(Box::new(RsigSignal { inner }));
        Ok(())
    })
}

/// Runs the receiver. A signal without any ON/OFF contrast gives
/// `RSIG_STATUS_NO_SIGNAL`; a signal with no frame gives an empty result.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_demodulate(
    signal: *const RsigSignal,
    scheme_code: u32,
    bit_time_us: u64,
    sync_tolerance: f64,
    out: *mut *mut RsigDecodeResult,
) -> RsigStatus {
    guard(|| {
        non_null(signal, "signal")?;
        non_null(out, "out")?;
        let sig = &(*signal).inner;
        let timing = SymbolTiming::new(bit_time_us, sig.sample_rate()).map_err(Fail::invalid)?;
        let cfg = DemodConfig::new(timing, scheme(scheme_code)?)
            .with_sync_tolerance(sync_tolerance)
            .map_err(Fail::invalid)?;
        let inner = demodulate(sig, &cfg).map_err(|e| Fail(RsigStatus::NoSignal, e.to_string()))?;
        *out = Box::into_raw(Box::new(RsigDecodeResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsig_result_frame_count(result: *const RsigDecodeResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.frames.len())
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_result_frame(
    result: *const RsigDecodeResult,
    index: usize,
    out: *mut RsigFrameInfo,
) -> RsigStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        let result = &*result;
        let f = result
            .inner
            .frames
            .get(index)
            .ok_or_else(|| Fail(RsigStatus::OutOfRange, format!("no frame {index}")))?;
        *out = RsigFrameInfo {
            start_sample: f.start_sample,
            end_sample: f.end_sample,
            payload_bits: u32::from(f.frame.length_field()),
            crc_valid: f.crc_valid,
            code_violations: f.code_violations,
        };
        Ok(())
    })
}

/// Copies frame `index`'s payload as bytes (last byte zero-padded). Always
/// stores the required size in `written`; if `buf_len` is too small nothing
/// is copied and `RSIG_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `result` must be a live handle; `buf` must have `buf_len` writable bytes
/// (may be NULL when `buf_len` is 0); `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_result_payload(
    result: *const RsigDecodeResult,
    index: usize,
    buf: *mut u8,
    buf_len: usize,
    written: *mut usize,
) -> RsigStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(written, "written")?;
        let result = &*result;
        let f = result
            .inner
            .frames
            .get(index)
            .ok_or_else(|| Fail(RsigStatus::OutOfRange, format!("no frame {index}")))?;
        let bytes = f.frame.payload().to_bytes();
        *written = bytes.len();
        if bytes.len() > buf_len {
            return Err(Fail(
                RsigStatus::BufferTooSmall,
                format!("payload needs {} bytes", bytes.len()),
            ));
        }
        if !bytes.is_empty() {
            non_null(buf, "buf")?;
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        }
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsig_result_free(result: *mut RsigDecodeResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Calibrated SNR at `distance_cm` (50 to 700 cm).
///
/// # Safety
/// `out_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_distance_to_snr(distance_cm: f64, out_db: *mut f64) -> RsigStatus {
    guard(|| {
        non_null(out_db, "out_db")?;
        *out_db = distance_to_snr(distance_cm)
            .map_err(|e| Fail(RsigStatus::OutOfRange, e.to_string()))?;
        Ok(())
    })
}

/// Shield attenuation in dB (never positive).
///
/// # Safety
/// `out_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_faraday_attenuation(
    sigma: f64,
    thickness: f64,
    mu: f64,
    frequency: f64,
    out_db: *mut f64,
) -> RsigStatus {
    guard(|| {
        non_null(out_db, "out_db")?;
        let spec = ShieldSpec::new(sigma, thickness, mu, frequency).map_err(Fail::invalid)?;
        *out_db = faraday_attenuation(&spec).attenuation_db;
        Ok(())
    })
}

/// Payload transmission time and single-frame overhead, in seconds.
///
/// # Safety
/// `payload_s` and `overhead_s` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsig_exfil_time(
    size_bits: u64,
    bit_time_ms: f64,
    payload_s: *mut f64,
    overhead_s: *mut f64,
) -> RsigStatus {
    guard(|| {
        non_null(payload_s, "payload_s")?;
        non_null(overhead_s, "overhead_s")?;
        if !(bit_time_ms.is_finite() && bit_time_ms > 0.0) {
            return Err(Fail::invalid("bit time must be positive"));
        }
        let t = exfil_time(
            &ExfilItem::new("item", size_bits).map_err(Fail::invalid)?,
            bit_time_ms,
        );
        *payload_s = t.payload_secs;
        *overhead_s = t.overhead_secs;
        Ok(())
    })
}
