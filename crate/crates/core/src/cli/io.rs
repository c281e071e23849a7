//! Matrix files.
//!
//! Two formats are accepted and told apart by the first four bytes:
//!
//! * GRCM binary: `b"GRCM"`, version byte `0x01`, `rows: u32 LE`, `cols: u32 LE`,
//!   then `rows·cols` little-endian `f64` values in row-major order.
//! * Headerless CSV: one token row per line, comma-separated decimal floats.
//!   Blank lines and lines starting with `#` are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::ChannelMatrix;

pub const GRCM_MAGIC: &[u8; 4] = b"GRCM";
pub const GRCM_VERSION: u8 = 0x01;
const HEADER_LEN: usize = 13;

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Loads a matrix, auto-detecting GRCM or CSV.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<ChannelMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&bytes)
}

pub fn parse_matrix(bytes: &[u8]) -> Result<ChannelMatrix> {
    if bytes.starts_with(GRCM_MAGIC) {
        decode_grcm(bytes)
    } else {
        parse_csv(bytes)
    }
}

pub fn decode_grcm(bytes: &[u8]) -> Result<ChannelMatrix> {
    if bytes.len() < 4 || &bytes[..4] != GRCM_MAGIC {
        return Err(format_err(0, "missing GRCM magic"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(bytes.len(), "truncated header"));
    }
    if bytes[4] != GRCM_VERSION {
        return Err(format_err(4, format!("unsupported version {:#04x}", bytes[4])));
    }
    let rows = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    if rows == 0 {
        return Err(format_err(5, "row count is zero"));
    }
    if cols == 0 {
        return Err(format_err(9, "column count is zero"));
    }
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| format_err(5, "dimensions overflow"))?;
    if bytes.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload: expected {expected} bytes for {rows}x{cols}"),
        ));
    }
    if bytes.len() > expected {
        return Err(format_err(expected, "trailing bytes after payload"));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ChannelMatrix::new(rows, cols, data)
}

pub fn encode_grcm(m: &ChannelMatrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::arg("row count exceeds u32"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::arg("column count exceeds u32"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(GRCM_MAGIC);
    out.push(GRCM_VERSION);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Writes `m` as GRCM, truncating any existing file.
pub fn save_matrix(m: &ChannelMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_grcm(m)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

fn parse_csv(bytes: &[u8]) -> Result<ChannelMatrix> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| format_err(e.valid_up_to(), "not GRCM and not valid UTF-8 text"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() || body.trim_start().starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        let mut field_start = start;
        for field in body.split(',') {
            let value = field.trim().parse::<f64>().map_err(|_| {
                format_err(field_start, format!("cannot parse `{}` as a number", field.trim()))
            })?;
            row.push(value);
            field_start += field.len() + 1;
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err(
                    start,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(format_err(0, "no data rows"));
    }
    ChannelMatrix::from_rows(&rows)
}
