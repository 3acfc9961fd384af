//! Key and value files.

use std::fs;
use std::io;
use std::path::Path;

/// Reads keys: one per line, or `(u32 little-endian length, bytes)` records
/// when `binary`. In text mode a final newline does not start a new key.
pub fn read_keys(path: &Path, binary: bool) -> io::Result<Vec<Vec<u8>>> {
    let data = fs::read(path)?;
    if binary {
        parse_binary(&data)
    } else {
        Ok(parse_text(&data))
    }
}

pub fn parse_text(data: &[u8]) -> Vec<Vec<u8>> {
    let body = data.strip_suffix(b"\n").unwrap_or(data);
    if data.is_empty() {
        return Vec::new();
    }
    body.split(|&b| b == b'\n').map(<[u8]>::to_vec).collect()
}

pub fn parse_binary(mut data: &[u8]) -> io::Result<Vec<Vec<u8>>> {
    let mut keys = Vec::new();
    while !data.is_empty() {
        let (len, rest) = data
            .split_first_chunk::<4>()
            .ok_or_else(|| invalid(format!("truncated length prefix of key {}", keys.len())))?;
        let len = u32::from_le_bytes(*len) as usize;
        if rest.len() < len {
            return Err(invalid(format!("key {} claims {len} bytes, {} left", keys.len(), rest.len())));
        }
        keys.push(rest[..len].to_vec());
        data = &rest[len..];
    }
    Ok(keys)
}

/// Reads one unsigned value per line, decimal or `0x` hexadecimal. Blank
/// lines are skipped.
pub fn read_values(path: &Path) -> io::Result<Vec<u64>> {
    parse_values(&fs::read_to_string(path)?)
}

pub fn parse_values(text: &str) -> io::Result<Vec<u64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_u64(l.trim()).map_err(|e| invalid(format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn parse_u64(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("cannot parse {s:?}: {e}"))
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_keys() {
        assert_eq!(parse_text(b""), Vec::<Vec<u8>>::new());
        assert_eq!(parse_text(b"a\nb\n"), vec![b"a".to_vec(), b"b".to_vec()]);
        assert_eq!(parse_text(b"a\n\nb"), vec![b"a".to_vec(), vec![], b"b".to_vec()]);
        assert_eq!(parse_text(b"\n"), vec![Vec::<u8>::new()]);
    }

    #[test]
    fn binary_keys() {
        let data = [1, 0, 0, 0, b'x', 0, 0, 0, 0, 2, 0, 0, 0, b'\n', 0];
        assert_eq!(parse_binary(&data).unwrap(), vec![b"x".to_vec(), vec![], vec![b'\n', 0]]);
        assert!(parse_binary(&[5, 0, 0, 0, 1]).is_err());
        assert!(parse_binary(&[5, 0]).is_err());
    }

    #[test]
    fn values() {
        assert_eq!(parse_values("1\n0x1F\n\n18446744073709551615\n").unwrap(), vec![1, 31, u64::MAX]);
        assert!(parse_values("1\nabc\n").is_err());
    }
}
