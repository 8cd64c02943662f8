//! Trajectory file formats.
//!
//! Columnar text: a header line `step x_1 .. x_d` followed by one
//! whitespace-separated row per step.
//!
//! Binary frame (all integers little-endian):
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `RWTJ`                |
//! | 4      | 4    | format version (`u32`, = 1) |
//! | 8      | 4    | dimension `d` (`u32`)       |
//! | 12     | 8    | steps `n` (`u64`)           |
//! | 20     | 8    | environment seed (`u64`)    |
//! | 28     | 8    | walk seed (`u64`)           |
//! | 36     | 8 d (n + 1) | positions, `i64`, step-major |

use std::io::{BufRead, Read, Write};

use super::Trajectory;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: [u8; 4] = *b"RWTJ";
const BINARY_VERSION: u32 = 1;

pub fn write_columnar<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    write!(out, "step")?;
    for c in 1..=traj.dim() {
        write!(out, " x_{c}")?;
    }
    writeln!(out)?;
    for k in 0..=traj.steps() {
        write!(out, "{k}")?;
        for x in traj.position(k) {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the columnar format; seeds are not part of it and come back as zero.
pub fn read_columnar<R: BufRead>(input: R) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::usage("empty trajectory file"))??;
    let dim = header.split_whitespace().count().saturating_sub(1);
    let mut positions = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<i64> = line
            .split_whitespace()
            .map(|f| f.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::usage(format!("row {k}: {e}")))?;
        if fields.len() != dim + 1 || fields[0] != k as i64 {
            return Err(Error::usage(format!("row {k} is malformed")));
        }
        positions.extend_from_slice(&fields[1..]);
    }
    Trajectory::from_positions(dim, positions, 0, 0)
}

pub fn write_binary<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    out.write_all(&BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(traj.dim() as u32).to_le_bytes())?;
    out.write_all(&(traj.steps() as u64).to_le_bytes())?;
    out.write_all(&traj.env_seed().to_le_bytes())?;
    out.write_all(&traj.walk_seed().to_le_bytes())?;
    for x in traj.positions_flat() {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Trajectory> {
    let mut header = [0u8; 36];
    input.read_exact(&mut header)?;
    if header[0..4] != BINARY_MAGIC {
        return Err(Error::usage("not a trajectory frame (bad magic)"));
    }
    let word = |r: std::ops::Range<usize>| -> u64 {
        let mut b = [0u8; 8];
        b[..r.len()].copy_from_slice(&header[r]);
        u64::from_le_bytes(b)
    };
    let version = word(4..8);
    if version != u64::from(BINARY_VERSION) {
        return Err(Error::usage(format!("unsupported frame version {version}")));
    }
    let dim = word(8..12) as usize;
    let n = word(12..20) as usize;
    let env_seed = word(20..28);
    let walk_seed = word(28..36);
    let count = (n + 1)
        .checked_mul(dim)
        .ok_or_else(|| Error::usage("frame size overflows"))?;
    let mut buf = vec![0u8; count * 8];
    input.read_exact(&mut buf)?;
    let positions = buf
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Trajectory::from_positions(dim, positions, env_seed, walk_seed)
}
