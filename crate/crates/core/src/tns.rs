//! `TNS1` tensor files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "TNS1" | rank: u32 | dims: rank × u64 | dtype: u8 (1 = f64) | payload: row-major f64 LE
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TNS1";
pub const DTYPE_F64: u8 = 1;

pub fn encode(dims: &[usize], data: &[f64]) -> Result<Vec<u8>> {
    let count: usize = dims.iter().product();
    if count != data.len() {
        return Err(Error::shape(format!(
            "dims {dims:?} hold {count} values, data has {}",
            data.len()
        )));
    }
    let mut out = Vec::with_capacity(4 + 4 + 8 * dims.len() + 1 + 8 * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.push(DTYPE_F64);
    for &v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 9 || &bytes[..4] != MAGIC {
        return Err(bad("missing TNS1 magic".into()));
    }
    let rank = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header = 8 + 8 * rank + 1;
    if bytes.len() < header {
        return Err(bad(format!("truncated header for rank {rank}")));
    }
    let dims: Vec<usize> = (0..rank)
        .map(|k| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap()) as usize)
        .collect();
    let dtype = bytes[header - 1];
    if dtype != DTYPE_F64 {
        return Err(bad(format!("unsupported dtype code {dtype}")));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad("dimension product overflows".into()))?;
    if bytes.len() != header + 8 * count {
        return Err(bad(format!(
            "payload has {} bytes, dims {dims:?} need {}",
            bytes.len() - header,
            8 * count
        )));
    }
    let data = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, data))
}

pub fn write(path: &Path, dims: &[usize], data: &[f64]) -> Result<()> {
    let bytes = encode(dims, data)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Reads a file and checks its dims.
pub fn read_expect(path: &Path, dims: &[usize]) -> Result<Vec<f64>> {
    let (found, data) = read(path)?;
    if found != dims {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected dims {dims:?}, found {found:?}"),
        });
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_layout() {
        let bytes = encode(&[2, 1], &[1.0, -2.5]).unwrap();
        let mut expect = b"TNS1".to_vec();
        expect.extend_from_slice(&[2, 0, 0, 0]);
        expect.extend_from_slice(&[2, 0, 0, 0, 0, 0, 0, 0]);
        expect.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        expect.push(1);
        expect.extend_from_slice(&1.0f64.to_le_bytes());
        expect.extend_from_slice(&(-2.5f64).to_le_bytes());
        assert_eq!(bytes, expect);
    }

    #[test]
    fn rejects_corruption() {
        let p = Path::new("mem");
        let mut bytes = encode(&[3], &[1.0, 2.0, 3.0]).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1], p).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes, p), Err(Error::Format { .. })));
        let mut bytes = encode(&[1], &[1.0]).unwrap();
        bytes[16] = 2;
        assert!(decode(&bytes, p).is_err());
        assert!(encode(&[2, 2], &[0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(dims in proptest::collection::vec(1usize..5, 0..4), seed in any::<u64>()) {
            let count: usize = dims.iter().product();
            let data: Vec<f64> = (0..count).map(|k| f64::from_bits(seed.wrapping_mul(k as u64 + 1) >> 2)).collect();
            let bytes = encode(&dims, &data).unwrap();
            let (d2, v2) = decode(&bytes, Path::new("mem")).unwrap();
            prop_assert_eq!(d2, dims);
            prop_assert!(v2.iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
