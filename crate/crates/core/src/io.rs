//! OCLT tensor record format and the dataset manifest.
//!
//! Record layout (all little-endian):
//!   bytes 0-3   magic "OCLT"
//!   byte  4     version (1)
//!   byte  5     rank (1 = vector, 3 = feature map)
//!   next        rank × u32 dims (feature maps: h, w, d)
//!   next        dim-product × f32 payload
//!   last 8      XXH64 (seed 0) of all preceding bytes
//!
//! The payload is bit-exact: signed zeros and subnormals survive a
//! round-trip unchanged.

use crate::error::{Error, Result};
use crate::hash::xxh64;
use crate::tensor::{FeatureMap, Vector};

pub const MAGIC: &[u8; 4] = b"OCLT";
pub const VERSION: u8 = 1;

/// A decoded OCLT record.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Vector(Vector),
    Map(FeatureMap),
}

impl Tensor {
    fn dims(&self) -> Vec<u32> {
        match self {
            Tensor::Vector(v) => vec![v.dim() as u32],
            Tensor::Map(m) => vec![m.h() as u32, m.w() as u32, m.d() as u32],
        }
    }

    fn payload(&self) -> &[f32] {
        match self {
            Tensor::Vector(v) => v.data(),
            Tensor::Map(m) => m.data(),
        }
    }
}

pub fn write_tensor_record(t: &Tensor) -> Result<Vec<u8>> {
    let payload = t.payload();
    if !payload.iter().all(|v| v.is_finite()) {
        return Err(Error::Data("non-finite value in tensor payload".into()));
    }
    let dims = t.dims();
    let mut out = Vec::with_capacity(6 + 4 * dims.len() + 4 * payload.len() + 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(dims.len() as u8);
    for d in &dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = xxh64(&out, 0);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

pub fn read_tensor_record(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 6 {
        return Err(Error::Truncation(format!("record of {} bytes has no header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, expected OCLT".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    let rank = bytes[5] as usize;
    if rank != 1 && rank != 3 {
        return Err(Error::Format(format!("unsupported rank {rank}")));
    }
    let dims_end = 6 + 4 * rank;
    if bytes.len() < dims_end {
        return Err(Error::Truncation("record ends inside dims".into()));
    }
    let dims: Vec<usize> = (0..rank)
        .map(|i| {
            u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap()) as usize
        })
        .collect();
    let count: usize = dims.iter().product();
    let payload_end = dims_end + 4 * count;
    if bytes.len() < payload_end + 8 {
        return Err(Error::Truncation(format!(
            "payload of {count} floats needs {} bytes, record has {}",
            payload_end + 8,
            bytes.len()
        )));
    }
    let stored = u64::from_le_bytes(bytes[payload_end..payload_end + 8].try_into().unwrap());
    let actual = xxh64(&bytes[..payload_end], 0);
    if stored != actual {
        return Err(Error::Format(format!(
            "checksum mismatch: stored {stored:#018x}, computed {actual:#018x}"
        )));
    }
    let payload: Vec<f32> = bytes[dims_end..payload_end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if !payload.iter().all(|v| v.is_finite()) {
        return Err(Error::Data("non-finite value in tensor payload".into()));
    }
    match rank {
        1 => Ok(Tensor::Vector(Vector::new(payload)?)),
        _ => Ok(Tensor::Map(FeatureMap::new(dims[0], dims[1], dims[2], payload)?)),
    }
}

/// One line of a dataset manifest: `path,label,split`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: u32,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{},{},{}\n", e.path, e.label, e.split.as_str()));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!(
                "manifest line {}: expected path,label,split",
                lineno + 1
            )));
        }
        let label: u32 = parts[1]
            .parse()
            .map_err(|_| Error::Format(format!("manifest line {}: bad label {:?}", lineno + 1, parts[1])))?;
        let split = match parts[2] {
            "train" => Split::Train,
            "test" => Split::Test,
            other => {
                return Err(Error::Format(format!(
                    "manifest line {}: bad split {other:?}",
                    lineno + 1
                )))
            }
        };
        entries.push(ManifestEntry { path: parts[0].to_string(), label, split });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn vector_round_trip() {
        let v = Tensor::Vector(Vector::new(vec![1.0, 2.0, 3.0]).unwrap());
        let bytes = write_tensor_record(&v).unwrap();
        assert_eq!(read_tensor_record(&bytes).unwrap(), v);
    }

    #[test]
    fn two_element_vector_is_26_bytes() {
        let v = Tensor::Vector(Vector::new(vec![0.0, 0.0]).unwrap());
        assert_eq!(write_tensor_record(&v).unwrap().len(), 26);
    }

    #[test]
    fn map_round_trip() {
        let m = Tensor::Map(FeatureMap::new(2, 2, 1, vec![1., 2., 3., 4.]).unwrap());
        let bytes = write_tensor_record(&m).unwrap();
        assert_eq!(read_tensor_record(&bytes).unwrap(), m);
    }

    #[test]
    fn truncated_payload_errors() {
        let m = Tensor::Map(FeatureMap::new(2, 2, 1, vec![1., 2., 3., 4.]).unwrap());
        let bytes = write_tensor_record(&m).unwrap();
        // drop one payload float plus checksum
        match read_tensor_record(&bytes[..bytes.len() - 12]) {
            Err(Error::Truncation(_)) => {}
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_errors() {
        let v = Tensor::Vector(Vector::new(vec![1.0]).unwrap());
        let mut bytes = write_tensor_record(&v).unwrap();
        bytes[0] = b'X';
        assert!(matches!(read_tensor_record(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let v = Tensor::Vector(Vector::new(vec![1.0, 2.0]).unwrap());
        let mut bytes = write_tensor_record(&v).unwrap();
        bytes[14] ^= 0x40;
        assert!(matches!(read_tensor_record(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn negative_zero_sign_bit_survives() {
        let v = Tensor::Vector(Vector::new(vec![-0.0]).unwrap());
        let bytes = write_tensor_record(&v).unwrap();
        match read_tensor_record(&bytes).unwrap() {
            Tensor::Vector(out) => {
                assert_eq!(out.data()[0].to_bits(), (-0.0f32).to_bits());
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn large_random_map_round_trips_bit_exact() {
        let mut rng = RngStream::new(77, "io/large");
        let data: Vec<f32> = (0..1_000_000).map(|_| rng.uniform01() as f32 * 2.0 - 1.0).collect();
        let m = Tensor::Map(FeatureMap::new(100, 100, 100, data).unwrap());
        let bytes = write_tensor_record(&m).unwrap();
        let bytes2 = write_tensor_record(&read_tensor_record(&bytes).unwrap()).unwrap();
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn manifest_round_trip_and_errors() {
        let entries = vec![
            ManifestEntry { path: "a/b.oclt".into(), label: 3, split: Split::Train },
            ManifestEntry { path: "c.oclt".into(), label: 0, split: Split::Test },
        ];
        let text = write_manifest(&entries);
        assert_eq!(parse_manifest(&text).unwrap(), entries);
        assert!(parse_manifest("one,two").is_err());
        assert!(parse_manifest("p,notanum,train").is_err());
        assert!(parse_manifest("p,1,val").is_err());
    }
}
