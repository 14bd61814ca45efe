//! Simulation toolkit for a covert channel that leaks data from an air-gapped
//! machine through the electromagnetic emanations of its memory bus.
//!
//! The transmit side frames a payload, line-codes it and turns it into an
//! ON/OFF activity schedule (optionally executed as real non-temporal store
//! traffic). The channel adds calibrated noise and impairments; the receive
//! side recovers frames from an amplitude envelope.

pub mod channel;
pub mod demod;
pub mod frames;
pub mod harness;
pub mod seed;
pub mod waveform;

pub use channel::{ChannelError, ChannelModel, JammerConfig, NoiseShape, ShieldSpec};
pub use demod::{demodulate, DecodeResult, DemodConfig, DemodError, ThresholdMode};
pub use frames::{build_frame, parse_frame, BitStream, Frame, FrameError, LineCode};
pub use harness::{run_sweep, BerReport, HarnessError, SweepSpec};
pub use waveform::{synthesize_envelope, EnvelopeSignal, SymbolTiming, WaveformError};
