//! Binary snapshot files: `PDAFLOW1`, `nx`, `ny` (u64 LE), then every
//! distribution value as f64 LE in (cell, direction) order, cells row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::lattice::{FlowField, Lattice, Q};

pub const FLOW_MAGIC: &[u8; 8] = b"PDAFLOW1";

pub fn write_snapshot(path: &Path, field: &FlowField) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(FLOW_MAGIC)?;
    out.write_all(&(field.nx() as u64).to_le_bytes())?;
    out.write_all(&(field.ny() as u64).to_le_bytes())?;
    for v in field.distributions() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path, lattice: &Lattice) -> Result<FlowField> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != FLOW_MAGIC {
        return Err(Error::format(path, "not a PDAFLOW1 snapshot"));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let nx = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let ny = u64::from_le_bytes(word) as usize;
    if nx != lattice.nx() {
        return Err(Error::shape("snapshot nx", lattice.nx(), nx));
    }
    if ny != lattice.ny() {
        return Err(Error::shape("snapshot ny", lattice.ny(), ny));
    }
    let mut bytes = Vec::with_capacity(nx * ny * Q * 8);
    input.read_to_end(&mut bytes)?;
    if bytes.len() != nx * ny * Q * 8 {
        return Err(Error::format(path, "truncated distribution block"));
    }
    let f = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    lattice.field_from_distributions(f)
}
