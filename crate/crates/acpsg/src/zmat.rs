//! ZMAT: the binary matrix format used for every on-disk matrix.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ZMAT"
//! 4       4     version, u32 = 1
//! 8       8     rows, u64
//! 16      8     cols, u64
//! 24      8*r*c payload, f64 row-major
//! ```
//!
//! Total length is `24 + 8 * rows * cols` bytes. Round trips are bit-exact
//! for finite values; NaN and infinities are rejected on read.

use crate::error::{Error, Result};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Matrices are stored double precision regardless of the scalar type used
/// in memory.
pub type Mat = Array2<f64>;

pub const MAGIC: [u8; 4] = *b"ZMAT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 24;

/// Serialize a matrix to a writer.
pub fn write_matrix<W: Write>(m: &Mat, mut w: W) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for &x in m.iter() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Deserialize a matrix from a reader. Inverse of [`write_matrix`].
pub fn read_matrix<R: Read>(mut r: R) -> Result<Mat> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| truncated("magic", e))?;
    if magic != MAGIC {
        return Err(Error::Format { found: magic });
    }

    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|e| truncated("version", e))?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::UnsupportedVersion { found: version });
    }

    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf).map_err(|e| truncated("rows", e))?;
    let rows = u64::from_le_bytes(u64buf);
    r.read_exact(&mut u64buf).map_err(|e| truncated("cols", e))?;
    let cols = u64::from_le_bytes(u64buf);

    let count = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .and_then(|n| n.checked_mul(8).map(|_| n))
        .ok_or_else(|| Error::Corrupt(format!("declared size {rows}x{cols} overflows")))?;

    let mut data = Vec::with_capacity(count);
    let mut f64buf = [0u8; 8];
    for idx in 0..count {
        r.read_exact(&mut f64buf).map_err(|e| {
            truncated(
                &format!("payload entry {idx} of {count}"),
                e,
            )
        })?;
        let x = f64::from_le_bytes(f64buf);
        if !x.is_finite() {
            return Err(Error::InvalidValue {
                row: idx / cols.max(1) as usize,
                col: idx % cols.max(1) as usize,
                value: x,
            });
        }
        data.push(x);
    }

    Array2::from_shape_vec((rows as usize, cols as usize), data)
        .map_err(|e| Error::Corrupt(e.to_string()))
}

fn truncated(what: &str, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Corrupt(format!("stream truncated while reading {what}"))
    } else {
        Error::Corrupt(format!("read failure at {what}: {e}"))
    }
}

/// Write a matrix to `path`, creating parent directories if needed.
pub fn write_matrix_file(m: &Mat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(path, e))?;
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix(m, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a matrix from `path`, checking the file length matches the header.
pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let m = read_matrix(BufReader::new(file))?;
    let expected = HEADER_LEN + 8 * (m.nrows() as u64) * (m.ncols() as u64);
    if len != expected {
        return Err(Error::Corrupt(format!(
            "{} is {len} bytes, header declares {expected}",
            path.display()
        )));
    }
    Ok(m)
}
