//! Binary eigendecomposition cache.
//!
//! Little-endian layout: magic `TCS1`; `u32` n, K, M; `f64` h; `u64` dim;
//! `u64` symbol hash; `dim` eigenvalues as `f64`; `dim²` eigenvector entries
//! as interleaved `(re, im)` `f64` pairs, column-major with columns in
//! eigenvalue order and rows in the grid's mode order.

use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;

use fnv::FnvHasher;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantize::{OperatorMatrix, Quantization};
use crate::spectral::EigenDecomposition;
use crate::symbol::SymbolSpec;

const MAGIC: &[u8; 4] = b"TCS1";
const HEADER_LEN: usize = 4 + 3 * 4 + 8 + 8 + 8;

/// 64-bit FNV-1a of the canonical symbol text joined with the quantization kind.
pub fn symbol_hash(spec: &SymbolSpec, kind: Quantization) -> Result<u64> {
    let mut h = FnvHasher::default();
    h.write(spec.canonical_text()?.as_bytes());
    h.write(b"|");
    h.write(kind.name().as_bytes());
    Ok(h.finish())
}

pub fn encode(dec: &EigenDecomposition, hash: u64) -> Vec<u8> {
    let g = dec.grid();
    let d = dec.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * d + 16 * d * d);
    out.extend_from_slice(MAGIC);
    for v in [g.dim(), g.band_limit(), g.samples()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.h().to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&hash.to_le_bytes());
    for e in dec.eigenvalues() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    // nalgebra storage is column-major already.
    for c in dec.vectors().iter() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Cache("file is truncated".into()))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

/// Decodes a cache written for the matrix `a` and symbol `hash`. Returns
/// `Ok(None)` when the header describes a different grid or symbol.
pub fn decode(bytes: &[u8], a: &OperatorMatrix, hash: u64) -> Result<Option<EigenDecomposition>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if &cur.take::<4>()? != MAGIC {
        return Err(Error::Cache("bad magic bytes".into()));
    }
    let g = a.grid();
    let (n, k, m) = (cur.u32()?, cur.u32()?, cur.u32()?);
    let h = cur.f64()?;
    let d = cur.u64()?;
    let stored_hash = cur.u64()?;
    if n as usize != g.dim()
        || k as usize != g.band_limit()
        || m as usize != g.samples()
        || h.to_bits() != g.h().to_bits()
        || d as usize != g.num_modes()
        || stored_hash != hash
    {
        return Ok(None);
    }
    let d = d as usize;
    if bytes.len() != HEADER_LEN + 8 * d + 16 * d * d {
        return Err(Error::Cache(format!("file length {} does not match dimension {d}", bytes.len())));
    }
    let mut eigenvalues = Vec::with_capacity(d);
    for _ in 0..d {
        eigenvalues.push(cur.f64()?);
    }
    let mut entries = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let re = cur.f64()?;
        let im = cur.f64()?;
        entries.push(Complex64::new(re, im));
    }
    let vectors = DMatrix::from_vec(d, d, entries);
    EigenDecomposition::from_parts(a, eigenvalues, vectors).map(Some)
}

pub fn write(path: &Path, dec: &EigenDecomposition, hash: u64) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(dec, hash))?;
    Ok(())
}

/// Loads a matching cache; a missing file yields `Ok(None)`.
pub fn read(path: &Path, a: &OperatorMatrix, hash: u64) -> Result<Option<EigenDecomposition>> {
    let mut bytes = Vec::new();
    match std::fs::File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes)?;
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    decode(&bytes, a, hash)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::grid::TorusGrid;
    use crate::quantize::weyl_matrix;
    use crate::spectral::eigendecompose;
    use crate::symbol::Symbol;

    #[test]
    fn fnv_reference_values() {
        let hash = |s: &[u8]| {
            let mut h = FnvHasher::default();
            h.write(s);
            h.finish()
        };
        assert_eq!(hash(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(hash(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(hash(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn round_trip() {
        let g = TorusGrid::new(1, 6, 0.25).unwrap();
        let a = weyl_matrix(&Symbol::pendulum().unwrap(), &g, &Exec::serial()).unwrap();
        let dec = eigendecompose(&a).unwrap();
        let bytes = encode(&dec, 42);
        assert_eq!(&bytes[..4], b"TCS1");
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 13 + 16 * 169);
        let back = decode(&bytes, &a, 42).unwrap().unwrap();
        assert_eq!(back.eigenvalues(), dec.eigenvalues());
        assert_eq!(back.vectors(), dec.vectors());
        assert!(decode(&bytes, &a, 43).unwrap().is_none());
        assert!(decode(&bytes[..bytes.len() - 1], &a, 42).is_err());
        assert!(decode(b"XXXX", &a, 42).is_err());
    }

    #[test]
    fn hash_depends_on_kind_and_text() {
        let p = SymbolSpec::builtin("pendulum", 1).unwrap();
        let f = SymbolSpec::builtin("free", 1).unwrap();
        let a = symbol_hash(&p, Quantization::Weyl).unwrap();
        assert_ne!(a, symbol_hash(&p, Quantization::KohnNirenberg).unwrap());
        assert_ne!(a, symbol_hash(&f, Quantization::Weyl).unwrap());
        let spaced: SymbolSpec = serde_json::from_str(
            r#"{"n":1,"order":2.0,"ellipticity":{"C":0.25,"c":3.0},"terms":[{"xi":"0.5 * |xi|^2"},{"x":[{"mode":[0],"re":1.0},{"mode":[1],"re":-0.5},{"mode":[-1],"re":-0.5}],"xi":"1"}]}"#,
        )
        .unwrap();
        assert_eq!(a, symbol_hash(&spaced, Quantization::Weyl).unwrap());
    }
}
