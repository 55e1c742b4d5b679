use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit grayscale image as stored in binary PGM (P5).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

pub fn encode_pgm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    assert_eq!(data.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let bytes = encode_pgm(width, height, data);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let bad = |m: &str| Error::Image(format!("invalid PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| bad("header"))?
                .to_string(),
        );
    }
    if fields[0] != "P5" {
        return Err(bad("not a P5 file"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("dimensions"));
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    pos += 1;
    let data = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| bad("truncated data"))?
        .to_vec();
    Ok(PgmImage { width, height, data })
}

pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}
