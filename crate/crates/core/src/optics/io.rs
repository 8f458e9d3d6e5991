//! Snapshot formats: 8-bit PGM previews and raw little-endian `f32` grids.
//!
//! The raw format is a 16-byte header (`b"OPB1"`, `u32` rows, `u32` cols,
//! `u32` data-kind tag, all little-endian) followed by `rows·cols` `f32`
//! values in row-major order.

use std::io::{Read, Write};

use crate::error::{Error, Result, Shape};

pub const RAW_MAGIC: &[u8; 4] = b"OPB1";

/// What a raw grid holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum DataKind {
    Phase = 1,
    Intensity = 2,
    PolicyMean = 3,
}

impl DataKind {
    fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            1 => Some(DataKind::Phase),
            2 => Some(DataKind::Intensity),
            3 => Some(DataKind::PolicyMean),
            _ => None,
        }
    }
}

pub fn write_raw<W: Write>(mut w: W, shape: Shape, kind: DataKind, values: &[f64]) -> Result<()> {
    if values.len() != shape.len() {
        return Err(Error::Data(format!(
            "raw grid {shape} needs {} values, got {}",
            shape.len(),
            values.len()
        )));
    }
    let mut buf = Vec::with_capacity(16 + 4 * values.len());
    buf.extend_from_slice(RAW_MAGIC);
    buf.extend_from_slice(&(shape.rows as u32).to_le_bytes());
    buf.extend_from_slice(&(shape.cols as u32).to_le_bytes());
    buf.extend_from_slice(&(kind as u32).to_le_bytes());
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_raw<R: Read>(mut r: R) -> Result<(Shape, DataKind, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(Error::format(bytes.len() as u64, "raw grid shorter than its 16-byte header"));
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(Error::format(0, "expected magic \"OPB1\""));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let shape = Shape::new(word(4) as usize, word(8) as usize);
    let kind = DataKind::from_tag(word(12))
        .ok_or_else(|| Error::format(12, format!("unknown data-kind tag {}", word(12))))?;
    let need = 16 + 4 * shape.len();
    if bytes.len() != need {
        return Err(Error::format(
            bytes.len().min(need) as u64,
            format!("expected {need} bytes for a {shape} grid, found {}", bytes.len()),
        ));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((shape, kind, values))
}

/// Write an 8-bit binary PGM, mapping `[min, max]` linearly onto `[0, 255]`.
/// The original range is recorded in a header comment.
pub fn write_pgm<W: Write>(mut w: W, shape: Shape, values: &[f64]) -> Result<()> {
    if values.len() != shape.len() {
        return Err(Error::Data("pgm pixel count does not match shape".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if values.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let span = hi - lo;
    let mut buf = format!("P5\n# min={lo:e} max={hi:e}\n{} {}\n255\n", shape.cols, shape.rows).into_bytes();
    buf.extend(values.iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    w.write_all(&buf)?;
    Ok(())
}

/// Read an 8-bit binary PGM as values in `[0, 1]`.
pub fn read_pgm(bytes: &[u8]) -> Result<(Shape, Vec<f64>)> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
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
            return Err(Error::format(pos as u64, "truncated PGM header"));
        }
        tokens.push((start, std::str::from_utf8(&bytes[start..pos]).unwrap_or("")));
    }
    if tokens[0].1 != "P5" {
        return Err(Error::format(0, "expected PGM magic \"P5\""));
    }
    let num = |i: usize| -> Result<usize> {
        tokens[i]
            .1
            .parse()
            .map_err(|_| Error::format(tokens[i].0 as u64, format!("bad PGM header field {:?}", tokens[i].1)))
    };
    let (cols, rows, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(tokens[3].0 as u64, "only 8-bit PGM is supported"));
    }
    pos += 1;
    let shape = Shape::new(rows, cols);
    let body = bytes.get(pos..pos + shape.len()).ok_or_else(|| {
        Error::format(bytes.len() as u64, format!("PGM body shorter than {} pixels", shape.len()))
    })?;
    Ok((shape, body.iter().map(|&b| b as f64 / maxval as f64).collect()))
}
