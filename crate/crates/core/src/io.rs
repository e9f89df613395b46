//! Field serialization: decimal CSV, a little-endian `f32` binary container
//! and 8-bit binary PGM.
//!
//! `f32bin` layout: magic `GMF1`, then `height`, `width` and a reserved zero
//! as little-endian `u32`, then `height * width` little-endian `f32` values
//! in row-major order. Values are widened to `f64` on read; writing narrows
//! them to `f32`, so only `f32`-representable fields round-trip bitwise.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::Field;

pub const F32BIN_MAGIC: &[u8; 4] = b"GMF1";
pub const F32BIN_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    F32Bin,
    Pgm,
}

impl FieldFormat {
    /// Guesses the format from a file extension (`csv`, `pgm`, anything else is `f32bin`).
    pub fn from_path(path: &Path) -> FieldFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FieldFormat::Csv,
            Some(e) if e.eq_ignore_ascii_case("pgm") => FieldFormat::Pgm,
            _ => FieldFormat::F32Bin,
        }
    }
}

impl FromStr for FieldFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FieldFormat::Csv),
            "f32bin" => Ok(FieldFormat::F32Bin),
            "pgm" => Ok(FieldFormat::Pgm),
            other => Err(Error::Config(format!("unknown field format {other:?}"))),
        }
    }
}

pub fn read_field(path: impl AsRef<Path>, format: FieldFormat) -> Result<Field> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(path, &bytes, format)
}

pub fn write_field(field: &Field, path: impl AsRef<Path>, format: FieldFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(field, format).map_err(|e| match e {
        Error::Format { location, message, .. } => Error::Format {
            path: path.to_path_buf(),
            location,
            message,
        },
        other => other,
    })?;
    write_atomic(path, &bytes)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

pub fn encode(field: &Field, format: FieldFormat) -> Result<Vec<u8>> {
    match format {
        FieldFormat::Csv => Ok(encode_csv(field)),
        FieldFormat::F32Bin => encode_f32bin(field),
        FieldFormat::Pgm => Ok(encode_pgm(field)),
    }
}

pub fn decode(path: &Path, bytes: &[u8], format: FieldFormat) -> Result<Field> {
    match format {
        FieldFormat::Csv => decode_csv(path, bytes),
        FieldFormat::F32Bin => decode_f32bin(path, bytes),
        FieldFormat::Pgm => decode_pgm(path, bytes),
    }
}

fn format_error(path: &Path, location: String, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        location,
        message: message.into(),
    }
}

fn encode_csv(field: &Field) -> Vec<u8> {
    let mut out = String::new();
    for r in 0..field.height() {
        let row: Vec<String> = field.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn decode_csv(path: &Path, bytes: &[u8]) -> Result<Field> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| format_error(path, format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
    let mut width = None;
    let mut height = 0;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut count = 0;
        for token in line.split(',') {
            let v: f64 = token
                .trim()
                .parse()
                .map_err(|_| format_error(path, format!("line {lineno}"), format!("not a number: {token:?}")))?;
            if !v.is_finite() {
                return Err(format_error(path, format!("line {lineno}"), format!("non-finite value {token:?}")));
            }
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(format_error(
                    path,
                    format!("line {lineno}"),
                    format!("expected {w} columns, found {count}"),
                ))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.ok_or_else(|| format_error(path, "line 1".into(), "empty file"))?;
    Field::new(height, width, values)
}

fn encode_f32bin(field: &Field) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(F32BIN_HEADER_LEN + 4 * field.len());
    out.extend_from_slice(F32BIN_MAGIC);
    for dim in [field.height(), field.width(), 0] {
        let dim = u32::try_from(dim).map_err(|_| Error::InvalidParam(format!("dimension {dim} exceeds u32")))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for (index, &v) in field.values().iter().enumerate() {
        if v.abs() > f32::MAX as f64 {
            return Err(Error::RangeError {
                index,
                value: v,
                lo: f32::MIN as f64,
                hi: f32::MAX as f64,
            });
        }
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

fn decode_f32bin(path: &Path, bytes: &[u8]) -> Result<Field> {
    if bytes.len() < F32BIN_HEADER_LEN {
        return Err(format_error(
            path,
            format!("byte {}", bytes.len()),
            format!("truncated header ({} of {F32BIN_HEADER_LEN} bytes)", bytes.len()),
        ));
    }
    if &bytes[0..4] != F32BIN_MAGIC {
        return Err(format_error(path, "byte 0".into(), "bad magic, expected GMF1"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (height, width, reserved) = (word(4), word(8), word(12));
    if reserved != 0 {
        return Err(format_error(path, "byte 12".into(), "reserved header word is not zero"));
    }
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(F32BIN_HEADER_LEN))
        .ok_or_else(|| format_error(path, "byte 4".into(), "dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(format_error(
            path,
            format!("byte {}", bytes.len().min(expected)),
            format!("expected {expected} bytes for {height}x{width}, found {}", bytes.len()),
        ));
    }
    let values: Vec<f64> = bytes[F32BIN_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(format_error(
            path,
            format!("byte {}", F32BIN_HEADER_LEN + 4 * i),
            "non-finite value",
        ));
    }
    Field::new(height, width, values)
}

/// Linear rescale of `[min, max]` onto `0..=255`; a constant field maps to 0.
pub fn to_gray8(field: &Field) -> Vec<u8> {
    let (lo, hi) = (field.min(), field.max());
    field
        .values()
        .iter()
        .map(|&v| {
            if hi > lo {
                ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect()
}

fn encode_pgm(field: &Field) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", field.width(), field.height()).into_bytes();
    out.extend(to_gray8(field));
    out
}

fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<Field> {
    let mut pos = 0;
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(format_error(path, format!("byte {start}"), "unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    if next_token(&mut pos)? != "P5" {
        return Err(format_error(path, "byte 0".into(), "expected binary PGM magic P5"));
    }
    let number = |pos: &mut usize| -> Result<usize> {
        let at = *pos;
        let t = next_token(pos)?;
        t.parse()
            .map_err(|_| format_error(path, format!("byte {at}"), format!("bad header number {t:?}")))
    };
    let width = number(&mut pos)?;
    let height = number(&mut pos)?;
    let maxval = number(&mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(format_error(path, format!("byte {pos}"), format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(format_error(
            path,
            format!("byte {}", bytes.len()),
            format!("truncated raster, expected {n} bytes"),
        ));
    }
    let values = bytes[pos..pos + n].iter().map(|&b| b as f64 / maxval as f64).collect();
    Field::new(height, width, values)
}
