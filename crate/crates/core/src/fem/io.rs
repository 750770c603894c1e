//! Eigenpair export.
//!
//! Binary eigenvector layout, all little-endian:
//!
//! ```text
//! magic    8 bytes  "PBEIGV01"
//! n        u64      reduced dof count
//! count    u64      number of eigenpairs
//! eta      f64
//! then `count` records of
//!   lambda f64, residual f64, n x (re f64, im f64)
//! ```
//!
//! Files are keyed by [`vector_key`], a SHA-256 over the mesh text, `eta`
//! and the pair count, so a cached dump is only reused for the same problem.

use std::fmt::Write as _;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::EigResult;
use crate::error::{Error, Result};
use crate::geometry::{io::write_mesh, Mesh};

const MAGIC: &[u8; 8] = b"PBEIGV01";

/// CSV rows `eta,epsilon,p,lambda,residual` with 1-based band index `p`.
pub fn eig_csv(rows: &[(f64, f64, &EigResult)]) -> String {
    let mut s = String::from("eta,epsilon,p,lambda,residual\n");
    for (eta, eps, r) in rows {
        for (p, (l, res)) in r.values.iter().zip(&r.residuals).enumerate() {
            writeln!(s, "{eta},{eps},{},{l},{res}", p + 1).unwrap();
        }
    }
    s
}

pub fn vector_key(mesh: &Mesh, eta: f64, count: usize) -> String {
    let mut h = Sha256::new();
    h.update(write_mesh(mesh, None).as_bytes());
    h.update(eta.to_le_bytes());
    h.update((count as u64).to_le_bytes());
    hex::encode(h.finalize())
}

pub fn encode_vectors(eta: f64, r: &EigResult) -> Vec<u8> {
    let n = r.vectors.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(32 + r.values.len() * (16 + 16 * n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(r.values.len() as u64).to_le_bytes());
    out.extend_from_slice(&eta.to_le_bytes());
    for ((l, res), v) in r.values.iter().zip(&r.residuals).zip(&r.vectors) {
        out.extend_from_slice(&l.to_le_bytes());
        out.extend_from_slice(&res.to_le_bytes());
        for z in v {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

/// Inverse of [`encode_vectors`]; returns `(eta, result)` with `cycles = 0`.
pub fn decode_vectors(bytes: &[u8]) -> Result<(f64, EigResult)> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: msg.to_string(),
    };
    if bytes.len() < 32 || &bytes[..8] != MAGIC {
        return Err(bad("not an eigenvector dump"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().unwrap() };
    let n = u64::from_le_bytes(word(8)) as usize;
    let count = u64::from_le_bytes(word(16)) as usize;
    let eta = f64::from_le_bytes(word(24));
    let rec = n
        .checked_mul(16)
        .and_then(|x| x.checked_add(16))
        .ok_or_else(|| bad("size overflow"))?;
    if count.checked_mul(rec).and_then(|x| x.checked_add(32)) != Some(bytes.len()) {
        return Err(bad("truncated or oversized eigenvector dump"));
    }
    let mut r = EigResult {
        values: vec![],
        vectors: vec![],
        residuals: vec![],
        cycles: 0,
    };
    let mut at = 32;
    let mut next = || {
        let v = f64::from_le_bytes(word(at));
        at += 8;
        v
    };
    for _ in 0..count {
        r.values.push(next());
        r.residuals.push(next());
        r.vectors.push((0..n).map(|_| Complex64::new(next(), next())).collect());
    }
    Ok((eta, r))
}
