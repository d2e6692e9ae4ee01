//! On-disk dataset formats: CSV, the `DDL1` raw-f64 container and
//! directories of binary PGM (P5) images.
//!
//! Container layout (all little-endian):
//!
//! ```text
//! b"DDL1" | u32 rows | u32 cols | rows·cols × f64, row-major
//! ```

use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::DataMatrix;
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"DDL1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    RawF64,
    PgmDir,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "raw" | "raw-f64" => Ok(Self::RawF64),
            "pgm" | "pgm-dir" => Ok(Self::PgmDir),
            other => Err(Error::invalid(format!("unknown dataset format `{other}`"))),
        }
    }
}

impl DataFormat {
    /// Guess from the path: directories are PGM sets, `.csv` is CSV, anything
    /// else is a raw container.
    pub fn infer(path: &Path) -> Self {
        if path.is_dir() {
            Self::PgmDir
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::Csv
        } else {
            Self::RawF64
        }
    }
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<DataMatrix> {
    match format {
        DataFormat::Csv => {
            let text = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_csv(&text)
        }
        DataFormat::RawF64 => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            DataMatrix::new(read_container_bytes(&bytes)?)
        }
        DataFormat::PgmDir => load_pgm_dir(path),
    }
}

/// One sample per line, comma-separated, no header; values must already lie
/// in [-1, 1].
pub fn parse_csv(bytes: &[u8]) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut dim = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::malformed("csv", e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: record.len(),
                })
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::malformed("csv", format!("line {}: `{field}` is not a number", rows + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let dim = dim.ok_or_else(|| Error::malformed("csv", "no samples"))?;
    DataMatrix::new(DMatrix::from_row_slice(rows, dim, &values))
}

pub fn read_container(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_container_bytes(&bytes)
}

/// Decode a `DDL1` container. Values are not range-checked here.
pub fn read_container_bytes(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let mut cursor = bytes;
    let mut magic = [0u8; 4];
    cursor
        .read_exact(&mut magic)
        .map_err(|_| Error::malformed("raw-f64", "truncated header"))?;
    if &magic != CONTAINER_MAGIC {
        return Err(Error::BadMagic {
            expected: "DDL1",
            found: magic.to_vec(),
        });
    }
    let rows = read_u32(&mut cursor).ok_or_else(|| Error::malformed("raw-f64", "truncated header"))? as usize;
    let cols = read_u32(&mut cursor).ok_or_else(|| Error::malformed("raw-f64", "truncated header"))? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::malformed("raw-f64", "zero rows or columns"));
    }
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::malformed("raw-f64", "size overflow"))?;
    if !cursor.len().is_multiple_of(8) {
        return Err(Error::malformed("raw-f64", "payload is not a whole number of f64 values"));
    }
    let got = cursor.len() / 8;
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    let values: Vec<f64> = cursor
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn write_container_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * m.len());
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn write_container(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, write_container_bytes(m)).map_err(|e| Error::io(path, e))
}

fn read_u32(cursor: &mut &[u8]) -> Option<u32> {
    let mut buf = [0u8; 4];
    cursor.read_exact(&mut buf).ok()?;
    Some(u32::from_le_bytes(buf))
}

/// A decoded P5 image, pixels already mapped to [-1, 1] row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

/// Decode one binary PGM. Only 8-bit images (maxval ≤ 255) are accepted;
/// pixel p becomes `2p / maxval - 1`, i.e. `p / 127.5 - 1` for maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let mut pos = 0usize;
    if bytes.get(..2) != Some(b"P5") {
        return Err(Error::malformed("pgm", "missing P5 magic"));
    }
    pos += 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        skip_space_and_comments(bytes, &mut pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos || pos - start > 9 {
            return Err(Error::malformed("pgm", "bad header number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .expect("at most nine digits");
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::malformed("pgm", "zero-sized image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::malformed("pgm", format!("unsupported maxval {maxval}")));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::malformed("pgm", "missing separator before raster")),
    }
    let count = width * height;
    let raster = bytes
        .get(pos..pos + count)
        .ok_or_else(|| Error::malformed("pgm", format!("raster has fewer than {count} bytes")))?;
    let scale = 2.0 / maxval as f64;
    let pixels = raster
        .iter()
        .map(|&p| {
            if p as usize > maxval {
                Err(Error::malformed("pgm", format!("pixel {p} exceeds maxval {maxval}")))
            } else if maxval == 255 {
                Ok(p as f64 / 127.5 - 1.0)
            } else {
                Ok(p as f64 * scale - 1.0)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PgmImage {
        width,
        height,
        pixels,
    })
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        if bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        } else if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

/// Every `*.pgm` file in `dir`, in file-name order, flattened to one row each.
fn load_pgm_dir(dir: &Path) -> Result<DataMatrix> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::malformed("pgm", format!("no .pgm files in {}", dir.display())));
    }
    let mut shape = None;
    let mut values = Vec::new();
    for p in &paths {
        let img = parse_pgm(&fs::read(p).map_err(|e| Error::io(p, e))?)?;
        match shape {
            None => shape = Some((img.width, img.height)),
            Some((w, h)) if (w, h) != (img.width, img.height) => {
                return Err(Error::DimensionMismatch {
                    expected: w * h,
                    got: img.width * img.height,
                })
            }
            _ => {}
        }
        values.extend(img.pixels);
    }
    let (w, h) = shape.expect("at least one image");
    DataMatrix::new(DMatrix::from_row_slice(paths.len(), w * h, &values))
}
