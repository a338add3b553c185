//! `.svol` volume files.
//!
//! A single UTF-8 JSON header line `{"dims":[nx,ny,nz],"dtype":"f32le"}`
//! terminated by `\n`, followed by `nx*ny*nz` little-endian `f32` samples in
//! x-fastest order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::ScalarVolume;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dims: [usize; 3],
    dtype: String,
}

const DTYPE: &str = "f32le";

pub fn write_svol<W: Write>(mut w: W, v: &ScalarVolume) -> Result<()> {
    let header = Header {
        dims: v.dims(),
        dtype: DTYPE.to_string(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(v.len() * 4);
    for &x in v.data() {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_svol<R: Read>(r: R) -> Result<ScalarVolume> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::Format("missing header newline".into()));
    }
    let header: Header = serde_json::from_str(line.trim_end_matches('\n'))
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.dtype != DTYPE {
        return Err(Error::Format(format!(
            "unsupported dtype {:?}",
            header.dtype
        )));
    }
    let n = header
        .dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or(Error::InvalidDims(header.dims))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 4 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, got {}",
            n * 4,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    ScalarVolume::from_vec(header.dims, data)
}

pub fn save_svol(path: impl AsRef<Path>, v: &ScalarVolume) -> Result<()> {
    let mut buf = Vec::new();
    write_svol(&mut buf, v)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_svol(path: impl AsRef<Path>) -> Result<ScalarVolume> {
    read_svol(fs::File::open(path)?)
}
