//! Binary snapshot files.
//!
//! Layout, little-endian throughout: the magic bytes `GDNL`, a `u32`
//! format version, `u64` point count, then `f64` box length, time and `σ`,
//! followed by `n` pairs of `f64` (real, imaginary). Only centred grids are
//! stored; the origin is implied as `−L/2`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Complex, Field, Grid1D};

pub const MAGIC: &[u8; 4] = b"GDNL";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 8 + 3 * 8;

pub fn encode(f: &Field, sigma: f64) -> Result<Vec<u8>> {
    let g = f.grid();
    let centred = Grid1D::new(g.n(), g.length())?;
    if !g.same_as(&centred) {
        return Err(Error::Format("only centred grids can be stored".into()));
    }
    let mut out = Vec::with_capacity(HEADER_BYTES + 16 * g.n());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u64).to_le_bytes());
    for v in [g.length(), f.time(), sigma] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in f.samples() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("eight bytes"))
}

/// Decode a snapshot into the field and its `σ`.
pub fn decode(bytes: &[u8]) -> Result<(Field, f64)> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("four bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("eight bytes"));
    let (length, time, sigma) = (f64_at(bytes, 16), f64_at(bytes, 24), f64_at(bytes, 32));
    if !(length.is_finite() && time.is_finite() && sigma.is_finite()) {
        return Err(Error::Format("non-finite header value".into()));
    }
    let expected = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(16))
        .and_then(|b| b.checked_add(HEADER_BYTES))
        .ok_or_else(|| Error::Format(format!("point count {n} is too large")))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!("expected {expected} bytes for {n} points, found {}", bytes.len())));
    }
    let grid = Grid1D::new(n as usize, length).map_err(|e| Error::Format(e.to_string()))?;
    let samples = bytes[HEADER_BYTES..]
        .chunks_exact(16)
        .map(|c| Complex::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let field = Field::new(grid, time, samples).map_err(|e| Error::Format(e.to_string()))?;
    Ok((field, sigma))
}

pub fn write(path: &Path, f: &Field, sigma: f64) -> Result<()> {
    let bytes = encode(f, sigma)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<(Field, f64)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let g = Grid1D::new(64, 12.0).unwrap();
        Field::from_fn(g, 2.5, |x| Complex::new((-x * x).exp(), x.sin() * 1e-3)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = sample();
        let (back, sigma) = decode(&encode(&f, 1.5).unwrap()).unwrap();
        assert_eq!(sigma, 1.5);
        assert_eq!(back.time(), 2.5);
        assert!(back.grid().same_as(f.grid()));
        assert_eq!(back.samples(), f.samples());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let good = encode(&sample(), 1.0).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        assert!(matches!(decode(&good[..good.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(decode(&good[..10]), Err(Error::Format(_))));
        let mut bad = good.clone();
        bad[24..32].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
        let mut bad = good;
        bad[40..48].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(matches!(decode(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn shifted_grids_are_refused() {
        let g = Grid1D::with_origin(16, 4.0, 0.0).unwrap();
        assert!(matches!(encode(&Field::zeros(g, 0.0), 1.0), Err(Error::Format(_))));
    }
}
