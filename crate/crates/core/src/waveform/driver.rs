//! Executes an activity schedule as real memory-bus traffic.
//!
//! ON intervals stream non-temporal (cache-bypassing) stores over a buffer;
//! OFF intervals idle. Only timing is verified; emission is not.
//!
//! Run on one dedicated thread, ideally pinned, and keep other memory-heavy
//! work off the machine while it runs.

use std::time::{Duration, Instant};

use super::{Activity, ActivitySchedule, WaveformError};

pub const MIN_BUFFER_SIZE: usize = 1 << 20;
pub const DEFAULT_BUFFER_SIZE: usize = 16 << 20;

/// Words written between deadline checks (32 KiB).
const STORE_CHUNK_WORDS: usize = 4096;
/// Below this much remaining OFF time the driver spins instead of sleeping.
const SPIN_MARGIN: Duration = Duration::from_micros(300);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalTiming {
    pub state: Activity,
    pub requested_us: u64,
    /// Offsets from the start of execution.
    pub start: Duration,
    pub end: Duration,
}

impl IntervalTiming {
    pub fn measured_us(&self) -> f64 {
        (self.end - self.start).as_secs_f64() * 1e6
    }

    pub fn error_us(&self) -> f64 {
        self.measured_us() - self.requested_us as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub intervals: Vec<IntervalTiming>,
}

impl TimingReport {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn requested_us(&self) -> u64 {
        self.intervals.iter().map(|i| i.requested_us).sum()
    }

    pub fn measured_total(&self) -> Duration {
        self.intervals.last().map(|i| i.end).unwrap_or_default()
    }

    /// 99th-percentile |measured − requested| over intervals at least `min_us` long.
    pub fn p99_abs_error_us(&self, min_us: u64) -> Option<f64> {
        let mut errs: Vec<f64> = self
            .intervals
            .iter()
            .filter(|i| i.requested_us >= min_us)
            .map(|i| i.error_us().abs())
            .collect();
        if errs.is_empty() {
            return None;
        }
        errs.sort_by(f64::total_cmp);
        let rank = ((errs.len() as f64 * 0.99).ceil() as usize).clamp(1, errs.len());
        Some(errs[rank - 1])
    }
}

/// Plays `schedule` in real time. Deadlines are absolute from the start so
/// per-interval overruns do not accumulate.
pub fn execute_schedule(
    schedule: &ActivitySchedule,
    buffer_size: usize,
) -> Result<TimingReport, WaveformError> {
    if !stream_store::SUPPORTED {
        return Err(WaveformError::Unsupported(
            "non-temporal stores require x86_64",
        ));
    }
    if buffer_size < MIN_BUFFER_SIZE {
        return Err(WaveformError::BufferTooSmall { size: buffer_size });
    }
    if schedule.is_empty() {
        return Ok(TimingReport::default());
    }

    let mut buffer = vec![0i64; buffer_size / 8];
    let mut cursor = 0usize;
    let mut token = 0i64;
    let mut report = TimingReport {
        intervals: Vec::with_capacity(schedule.intervals().len()),
    };

    let origin = Instant::now();
    let mut deadline = Duration::ZERO;
    for interval in schedule.intervals() {
        let start = origin.elapsed();
        deadline += Duration::from_micros(interval.duration_us);
        match interval.state {
            Activity::On => {
                while origin.elapsed() < deadline {
                    token = token.wrapping_add(1);
                    let end = (cursor + STORE_CHUNK_WORDS).min(buffer.len());
                    stream_store::fill(&mut buffer[cursor..end], token);
                    cursor = if end == buffer.len() { 0 } else { end };
                }
                stream_store::fence();
            }
            Activity::Off => idle_until(origin, deadline),
        }
        report.intervals.push(IntervalTiming {
            state: interval.state,
            requested_us: interval.duration_us,
            start,
            end: origin.elapsed(),
        });
    }
    std::hint::black_box(&buffer);
    Ok(report)
}

fn idle_until(origin: Instant, deadline: Duration) {
    loop {
        let now = origin.elapsed();
        if now >= deadline {
            return;
        }
        let remaining = deadline - now;
        if remaining > SPIN_MARGIN {
            std::thread::sleep(remaining - SPIN_MARGIN);
        } else {
            std::hint::spin_loop();
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod stream_store {
    use std::arch::x86_64::{_mm_sfence, _mm_stream_si64};

    pub const SUPPORTED: bool = true;

    pub fn fill(words: &mut [i64], value: i64) {
        for w in words.iter_mut() {
            // SAFETY: `w` is a valid, aligned, exclusive i64 location; SSE2
            // (MOVNTI) is part of the x86_64 baseline.
            unsafe { _mm_stream_si64(w as *mut i64, value) };
        }
    }

    pub fn fence() {
        // SAFETY: SFENCE has no memory-safety preconditions.
        unsafe { _mm_sfence() };
    }
}

#[cfg(not(target_arch = "x86_64"))]
mod stream_store {
    pub const SUPPORTED: bool = false;

    pub fn fill(_words: &mut [i64], _value: i64) {}

    pub fn fence() {}
}
