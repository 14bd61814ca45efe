//! Payload framing and bit-level line coding.
//!
//! A frame on the air is
//!
//! ```text
//! preamble (8) | length (16, MSB-first) | payload (length bits) | crc (16, MSB-first)
//! ```
//!
//! The CRC is CRC-16/CCITT (polynomial `0x1021`, init `0xFFFF`, no reflection,
//! no final xor) computed over the length field followed by the payload bits.
//! Payloads are bit-granular, so the CRC runs over a bit count that need not
//! be a multiple of eight.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Alternating sync pattern opening every frame.
pub const PREAMBLE: [u8; 8] = [1, 0, 1, 0, 1, 0, 1, 0];
pub const LENGTH_FIELD_BITS: usize = 16;
pub const CRC_BITS: usize = 16;
/// Bits added around every payload: preamble, length field and CRC.
pub const FRAME_OVERHEAD_BITS: usize = PREAMBLE.len() + LENGTH_FIELD_BITS + CRC_BITS;
pub const MAX_PAYLOAD_BITS: usize = u16::MAX as usize;

const CRC_POLY: u16 = 0x1021;
const CRC_INIT: u16 = 0xFFFF;

/// Errors raised while building, parsing or line-decoding frames.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("invalid symbol {value:?} at position {index}; expected 0 or 1")]
    InvalidSymbol { index: usize, value: char },
    #[error("invalid hex payload: {0}")]
    InvalidHex(String),
    #[error("payload of {bits} bits exceeds the {MAX_PAYLOAD_BITS}-bit frame limit")]
    PayloadTooLong { bits: usize },
    #[error("preamble mismatch: found {found}")]
    BadPreamble { found: String },
    #[error("frame truncated: needed {needed} bits, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("crc mismatch: stored {:#06x}, computed {computed:#06x}", frame.crc())]
    Integrity { frame: Box<Frame>, computed: u16 },
    #[error("manchester stream has odd length {len}")]
    OddLength { len: usize },
    #[error("manchester code violation at bit {bit_index}")]
    CodeViolation { bit_index: usize },
}

/// Ordered sequence of binary symbols. Every element is 0 or 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStream(Vec<u8>);

impl BitStream {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn with_capacity(n: usize) -> Self {
        Self(Vec::with_capacity(n))
    }

    /// Wraps raw symbols, rejecting anything other than 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, FrameError> {
        if let Some((index, &v)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(FrameError::InvalidSymbol {
                index,
                value: char::from_digit(u32::from(v), 36).unwrap_or('?'),
            });
        }
        Ok(Self(bits))
    }

    /// Expands bytes MSB-first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Vec::with_capacity(bytes.len() * 8);
        for &byte in bytes {
            for shift in (0..8).rev() {
                out.push((byte >> shift) & 1);
            }
        }
        Self(out)
    }

    pub fn from_hex(s: &str) -> Result<Self, FrameError> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let cleaned = cleaned
            .strip_prefix("0x")
            .or_else(|| cleaned.strip_prefix("0X"))
            .unwrap_or(&cleaned);
        hex::decode(cleaned)
            .map(|b| Self::from_bytes(&b))
            .map_err(|e| FrameError::InvalidHex(e.to_string()))
    }

    /// Parses the fixture text format: ASCII `0`/`1`, whitespace ignored.
    pub fn parse_text(s: &str) -> Result<Self, FrameError> {
        let mut out = Vec::with_capacity(s.len());
        for (index, c) in s.chars().filter(|c| !c.is_whitespace()).enumerate() {
            match c {
                '0' => out.push(0),
                '1' => out.push(1),
                value => return Err(FrameError::InvalidSymbol { index, value }),
            }
        }
        Ok(Self(out))
    }

    pub fn to_text(&self) -> String {
        self.0
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }

    /// Packs MSB-first; a trailing partial byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
            })
            .collect()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(u8::from(bit));
    }

    pub fn extend(&mut self, other: &BitStream) {
        self.0.extend_from_slice(&other.0);
    }

    fn push_u16(&mut self, v: u16) {
        for shift in (0..16).rev() {
            self.0.push(((v >> shift) & 1) as u8);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// Number of positions where `self` and `other` differ, over the shorter length.
    pub fn hamming(&self, other: &BitStream) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Display for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for BitStream {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_text(s)
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self(iter.into_iter().map(u8::from).collect())
    }
}

impl AsRef<[u8]> for BitStream {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// Line code applied to a serialized frame before synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineCode {
    /// Symbol = bit: carrier on for 1, off for 0.
    Ook,
    /// Two half-bit symbols per bit: 1 → (0,1), 0 → (1,0).
    Manchester,
}

impl LineCode {
    pub fn symbols_per_bit(self) -> usize {
        match self {
            LineCode::Ook => 1,
            LineCode::Manchester => 2,
        }
    }

    pub fn encode(self, bits: &BitStream) -> BitStream {
        match self {
            LineCode::Ook => ook_map(bits),
            LineCode::Manchester => manchester_encode(bits),
        }
    }

    pub fn decode(self, symbols: &BitStream) -> Result<BitStream, FrameError> {
        match self {
            LineCode::Ook => Ok(symbols.clone()),
            LineCode::Manchester => manchester_decode(symbols),
        }
    }
}

impl fmt::Display for LineCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineCode::Ook => "ook",
            LineCode::Manchester => "manchester",
        })
    }
}

impl FromStr for LineCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ook" => Ok(LineCode::Ook),
            "manchester" => Ok(LineCode::Manchester),
            other => Err(format!(
                "unknown line code {other:?}; expected ook or manchester"
            )),
        }
    }
}

/// A frame as carried on the air. The stored `crc` is whatever was received;
/// frames produced by [`build_frame`] always carry a valid one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    payload: BitStream,
    crc: u16,
}

impl Frame {
    pub fn preamble() -> BitStream {
        BitStream(PREAMBLE.to_vec())
    }

    pub fn length_field(&self) -> u16 {
        self.payload.len() as u16
    }

    pub fn payload(&self) -> &BitStream {
        &self.payload
    }

    pub fn into_payload(self) -> BitStream {
        self.payload
    }

    pub fn crc(&self) -> u16 {
        self.crc
    }

    pub fn crc_valid(&self) -> bool {
        frame_crc(self.length_field(), &self.payload) == self.crc
    }

    pub fn serialized_len(&self) -> usize {
        FRAME_OVERHEAD_BITS + self.payload.len()
    }

    /// `preamble ∥ length ∥ payload ∥ crc`, multi-bit fields MSB-first.
    pub fn serialize(&self) -> BitStream {
        let mut out = BitStream::with_capacity(self.serialized_len());
        out.0.extend_from_slice(&PREAMBLE);
        out.push_u16(self.length_field());
        out.extend(&self.payload);
        out.push_u16(self.crc);
        out
    }
}

pub fn build_frame(payload: &BitStream) -> Result<Frame, FrameError> {
    if payload.len() > MAX_PAYLOAD_BITS {
        return Err(FrameError::PayloadTooLong {
            bits: payload.len(),
        });
    }
    let crc = frame_crc(payload.len() as u16, payload);
    Ok(Frame {
        payload: payload.clone(),
        crc,
    })
}

/// Parses a serialized frame starting at its first preamble bit.
///
/// Trailing bits after the CRC are ignored. On a CRC mismatch the received
/// frame is still handed back inside [`FrameError::Integrity`].
pub fn parse_frame(bits: &BitStream) -> Result<Frame, FrameError> {
    let head = &bits.0[..bits.len().min(PREAMBLE.len())];
    if head != PREAMBLE {
        if head.len() < PREAMBLE.len() && PREAMBLE.starts_with(head) {
            return Err(FrameError::Truncated {
                needed: PREAMBLE.len(),
                available: head.len(),
            });
        }
        return Err(FrameError::BadPreamble {
            found: BitStream(head.to_vec()).to_text(),
        });
    }
    parse_frame_body(&bits.0[PREAMBLE.len()..])
}

/// Parses the part of a frame that follows the preamble.
///
/// Used by receivers that have already located the preamble by correlation
/// and should not reject a frame over a preamble bit error.
pub fn parse_frame_body(bits: &[u8]) -> Result<Frame, FrameError> {
    let length_field = read_u16(bits, 0).ok_or(FrameError::Truncated {
        needed: PREAMBLE.len() + LENGTH_FIELD_BITS,
        available: PREAMBLE.len() + bits.len(),
    })?;
    let payload_len = length_field as usize;
    let needed = LENGTH_FIELD_BITS + payload_len + CRC_BITS;
    if bits.len() < needed {
        return Err(FrameError::Truncated {
            needed: PREAMBLE.len() + needed,
            available: PREAMBLE.len() + bits.len(),
        });
    }
    let payload = BitStream(bits[LENGTH_FIELD_BITS..LENGTH_FIELD_BITS + payload_len].to_vec());
    let crc = read_u16(bits, LENGTH_FIELD_BITS + payload_len).expect("length checked above");
    let frame = Frame { payload, crc };
    let computed = frame_crc(length_field, &frame.payload);
    if computed != crc {
        return Err(FrameError::Integrity {
            frame: Box::new(frame),
            computed,
        });
    }
    Ok(frame)
}

fn read_u16(bits: &[u8], at: usize) -> Option<u16> {
    let field = bits.get(at..at + 16)?;
    Some(field.iter().fold(0u16, |acc, &b| (acc << 1) | u16::from(b)))
}

const CRC_TABLE: [u16; 256] = {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut k = 0;
        while k < 8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ CRC_POLY
            } else {
                crc << 1
            };
            k += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
};

/// CRC-16/CCITT over an arbitrary-length bit sequence (MSB-first).
pub fn crc16_bits(bits: &[u8]) -> u16 {
    let mut crc = CRC_INIT;
    let mut chunks = bits.chunks_exact(8);
    for chunk in &mut chunks {
        let byte = chunk.iter().fold(0u8, |acc, &b| (acc << 1) | b);
        crc = (crc << 8) ^ CRC_TABLE[usize::from((crc >> 8) as u8 ^ byte)];
    }
    for &bit in chunks.remainder() {
        let top = ((crc >> 15) as u8) ^ bit;
        crc <<= 1;
        if top & 1 == 1 {
            crc ^= CRC_POLY;
        }
    }
    crc
}

/// Frame checksum over the length field followed by the payload.
pub fn frame_crc(length_field: u16, payload: &BitStream) -> u16 {
    let mut covered = BitStream::with_capacity(LENGTH_FIELD_BITS + payload.len());
    covered.push_u16(length_field);
    covered.extend(payload);
    crc16_bits(covered.as_slice())
}

/// Bit 1 becomes half-bits (0,1), bit 0 becomes (1,0).
pub fn manchester_encode(bits: &BitStream) -> BitStream {
    let mut out = Vec::with_capacity(bits.len() * 2);
    for b in bits.iter() {
        out.push(1 - b);
        out.push(b);
    }
    BitStream(out)
}

pub fn manchester_decode(halfbits: &BitStream) -> Result<BitStream, FrameError> {
    if !halfbits.len().is_multiple_of(2) {
        return Err(FrameError::OddLength {
            len: halfbits.len(),
        });
    }
    halfbits
        .0
        .chunks_exact(2)
        .enumerate()
        .map(|(bit_index, pair)| match (pair[0], pair[1]) {
            (0, 1) => Ok(1),
            (1, 0) => Ok(0),
            _ => Err(FrameError::CodeViolation { bit_index }),
        })
        .collect::<Result<Vec<u8>, _>>()
        .map(BitStream)
}

/// On-off keying works directly on bits: 1 = carrier on, 0 = carrier off.
pub fn ook_map(bits: &BitStream) -> BitStream {
    bits.clone()
}
