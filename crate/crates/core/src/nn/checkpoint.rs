use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::bytes;
use crate::error::{Error, Result};
use crate::scalar::{cast, widen, Scalar};
use crate::tensor::Tensor;

const MAGIC: &str = "celltraffic-ckpt v1";

/// Write named parameter tensors to a single file: a short text header
/// (magic, count, one `name dims...` line per tensor) followed by the
/// concatenated little-endian f64 payloads in header order. The write is
/// atomic, so a crash never leaves a half-written checkpoint behind.
pub fn save_checkpoint<T: Scalar>(path: &Path, params: &[(&str, &Tensor<T>)]) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut header = format!("{MAGIC}\n{}\n", params.len());
    let mut payload = Vec::new();
    for (name, tensor) in params {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::domain(format!(
                "checkpoint name `{name}` must be non-empty without whitespace"
            )));
        }
        if !seen.insert(*name) {
            return Err(Error::domain(format!("duplicate checkpoint name `{name}`")));
        }
        header.push_str(name);
        for d in tensor.shape() {
            header.push_str(&format!(" {d}"));
        }
        header.push('\n');
        payload.extend_from_slice(&bytes::f64s_to_le(
            tensor.data().iter().map(|&v| widen(v)),
        ));
    }
    let mut out = header.into_bytes();
    out.extend_from_slice(&payload);
    bytes::atomic_write(path, &out)
}

fn next_line<'a>(raw: &'a [u8], offset: &mut usize, path: &Path) -> Result<&'a str> {
    let rest = &raw[*offset..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(path, "truncated header"))?;
    let line = std::str::from_utf8(&rest[..end])
        .map_err(|_| Error::format(path, "header is not UTF-8"))?;
    *offset += end + 1;
    Ok(line)
}

/// Read a checkpoint written by [`save_checkpoint`], preserving order.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<Vec<(String, Tensor<T>)>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut offset = 0usize;
    if next_line(&raw, &mut offset, path)? != MAGIC {
        return Err(Error::format(path, format!("expected `{MAGIC}` header")));
    }
    let count: usize = next_line(&raw, &mut offset, path)?
        .trim()
        .parse()
        .map_err(|_| Error::format(path, "bad tensor count"))?;
    let mut entries = Vec::with_capacity(count);
    let mut total = 0usize;
    for _ in 0..count {
        let line = next_line(&raw, &mut offset, path)?;
        let mut fields = line.split(' ');
        let name = fields
            .next()
            .filter(|n| !n.is_empty())
            .ok_or_else(|| Error::format(path, "missing tensor name"))?
            .to_string();
        let shape = fields
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|_| Error::format(path, format!("bad dimension `{f}` for `{name}`")))
            })
            .collect::<Result<Vec<usize>>>()?;
        total += shape.iter().product::<usize>();
        entries.push((name, shape));
    }
    let payload = &raw[offset..];
    if payload.len() != total * 8 {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, expected {}", payload.len(), total * 8),
        ));
    }
    let values = bytes::f64s_from_le(path, payload)?;
    let mut out = Vec::with_capacity(count);
    let mut at = 0usize;
    for (name, shape) in entries {
        let len: usize = shape.iter().product();
        let data = values[at..at + len].iter().map(|&v| cast(v)).collect();
        at += len;
        out.push((name, Tensor::new(&shape, data)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits_and_order() {
        let w1 = Tensor::new(&[2, 3], vec![0.1, -2.5, 1.0 / 3.0, 1e-300, 7.0, 0.0]).unwrap();
        let w2 = Tensor::new(&[1, 2], vec![std::f64::consts::PI, -0.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &[("w1", &w1), ("head.w", &w2)]).unwrap();

        let loaded = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].0, "w1");
        assert_eq!(loaded[1].0, "head.w");
        assert_eq!(loaded[0].1.shape(), &[2, 3]);
        for (a, b) in w1.data().iter().zip(loaded[0].1.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in w2.data().iter().zip(loaded[1].1.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn save_is_byte_deterministic() {
        let w = Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        save_checkpoint(&a, &[("w", &w)]).unwrap();
        save_checkpoint(&b, &[("w", &w)]).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn rejects_bad_names_and_corrupt_files() {
        let w = Tensor::<f64>::zeros(&[1, 1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        assert!(save_checkpoint(&path, &[("has space", &w)]).is_err());
        assert!(save_checkpoint(&path, &[("w", &w), ("w", &w)]).is_err());

        save_checkpoint(&path, &[("w", &w)]).unwrap();
        let mut raw = fs::read(&path).unwrap();
        raw.truncate(raw.len() - 4);
        fs::write(&path, &raw).unwrap();
        assert!(load_checkpoint::<f64>(&path).is_err());

        fs::write(&path, b"something else v9\n0\n").unwrap();
        assert!(load_checkpoint::<f64>(&path).is_err());
    }
}
