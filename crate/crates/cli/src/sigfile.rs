//! `.sig` binary signal files.
//!
//! Little-endian layout: magic `CS2S`, `u32` format version, `u64` sample
//! count, `f64` sample rate, then the samples as `f64`.

use std::path::Path;

use cs2::SignalBuffer;

use crate::CliError;

pub const MAGIC: &[u8; 4] = b"CS2S";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 8 + 8;

pub fn encode(signal: &SignalBuffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * signal.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(signal.len() as u64).to_le_bytes());
    out.extend_from_slice(&signal.sample_rate().to_le_bytes());
    for v in signal.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SignalBuffer, String> {
    if bytes.len() < HEADER {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err("bad magic, not a CS2S signal file".into());
    }
    let word = |range: std::ops::Range<usize>| -> [u8; 8] { bytes[range].try_into().unwrap() };
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let count = u64::from_le_bytes(word(8..16));
    let rate = f64::from_le_bytes(word(16..24));
    let body = &bytes[HEADER..];
    if (body.len() as u64) != count.saturating_mul(8) {
        return Err(format!("header declares {count} samples but body holds {} bytes", body.len()));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SignalBuffer::new(samples, rate).map_err(|e| e.to_string())
}

pub fn write(path: &Path, signal: &SignalBuffer) -> Result<(), CliError> {
    std::fs::write(path, encode(signal)).map_err(|e| CliError::io(path, e))
}

/// Reads a signal; malformed content is reported as an I/O error.
pub fn read(path: &Path) -> Result<SignalBuffer, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let s = SignalBuffer::new(vec![0.1, -2.5e-300, 1e300, -0.0, 3.0], 24_000.0).unwrap();
        let bytes = encode(&s);
        assert_eq!(bytes.len(), HEADER + 40);
        assert_eq!(&bytes[..4], b"CS2S");
        let back = decode(&bytes).unwrap();
        assert_eq!(back.sample_rate(), 24_000.0);
        let bits = |v: &SignalBuffer| v.samples().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&s));
    }

    #[test]
    fn rejects_corrupt_files() {
        let s = SignalBuffer::from_samples(vec![1.0, 2.0]).unwrap();
        let bytes = encode(&s);
        assert!(decode(&bytes[..10]).is_err());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = bytes;
        bad[4] = 9;
        assert!(decode(&bad).is_err());
        // A well-formed header with zero samples still violates the signal invariants.
        let empty = [&MAGIC[..], &VERSION.to_le_bytes(), &0u64.to_le_bytes(), &1f64.to_le_bytes()].concat();
        assert!(decode(&empty).is_err());
    }
}
