//! Binary file formats: field snapshots and noise-path dumps.
//!
//! Snapshot layout: magic "SALTSPEC1", u8 dimension, u32 cutoff, u32 flags
//! (bit 0 zero-average, bit 1 divergence-free), u8 component count, then per
//! component the (2K+1)^N coefficients in lexicographic k order as
//! little-endian (re, im) f64 pairs. Loaders reject files whose Hermitian
//! symmetry is violated beyond 1e-9, and re-verify any flag that is set.
//!
//! Noise-path layout: magic "SALTPATH1", u64 seed, f64 dt, u64 steps,
//! u64 columns, then the increments row-major as little-endian f64.

use crate::error::{Result, SaltError};
use crate::noise::NoisePath;
use crate::spectral::{SpectralScalarField, SpectralVectorField};
use num_complex::Complex64;
use std::io::{Read, Write};

pub const SNAPSHOT_MAGIC: &[u8; 9] = b"SALTSPEC1";
pub const PATH_MAGIC: &[u8; 9] = b"SALTPATH1";

pub const FLAG_ZERO_AVERAGE: u32 = 1;
pub const FLAG_DIVERGENCE_FREE: u32 = 2;

/// Hermitian-symmetry rejection threshold, relative to the largest stored
/// coefficient (at least absolute).
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Write a vector field snapshot; flags are measured, not trusted.
pub fn write_snapshot<W: Write>(field: &SpectralVectorField, mut out: W) -> Result<()> {
    let scale = field.max_coeff_abs().max(1.0);
    let mut flags = 0u32;
    if field.is_zero_average(1e-12 * scale) {
        flags |= FLAG_ZERO_AVERAGE;
    }
    if field.is_divergence_free(HERMITIAN_TOL * scale) {
        flags |= FLAG_DIVERGENCE_FREE;
    }
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&[field.dim() as u8])?;
    out.write_all(&(field.cutoff() as u32).to_le_bytes())?;
    out.write_all(&flags.to_le_bytes())?;
    out.write_all(&[field.dim() as u8])?;
    for l in 0..field.dim() {
        for c in field.component(l).coeffs() {
            out.write_all(&c.re.to_le_bytes())?;
            out.write_all(&c.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Load and validate a snapshot.
pub fn read_snapshot<R: Read>(mut input: R) -> Result<SpectralVectorField> {
    let mut magic = [0u8; 9];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(SaltError::FormatViolation("bad snapshot magic".into()));
    }
    let mut byte = [0u8; 1];
    input.read_exact(&mut byte)?;
    let dim = byte[0] as usize;
    if dim != 2 && dim != 3 {
        return Err(SaltError::FormatViolation(format!("dimension {dim} not in {{2,3}}")));
    }
    let cutoff = read_u32(&mut input)? as i64;
    let flags = read_u32(&mut input)?;
    input.read_exact(&mut byte)?;
    let components = byte[0] as usize;
    if components != dim {
        return Err(SaltError::FormatViolation(format!(
            "component count {components} does not match dimension {dim}"
        )));
    }
    let per_component = ((2 * cutoff + 1) as usize).pow(dim as u32);
    let mut comps = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut field = SpectralScalarField::zero(dim, cutoff);
        {
            let coeffs = field.coeffs_mut();
            for slot in coeffs.iter_mut().take(per_component) {
                *slot = Complex64::new(read_f64(&mut input)?, read_f64(&mut input)?);
            }
        }
        comps.push(field);
    }
    let field = SpectralVectorField::new(comps);
    let scale = field.max_coeff_abs().max(1.0);
    let violation = field.hermitian_violation();
    if violation > HERMITIAN_TOL * scale {
        return Err(SaltError::FormatViolation(format!(
            "Hermitian symmetry violated by {violation:.3e}"
        )));
    }
    if flags & FLAG_ZERO_AVERAGE != 0 && !field.is_zero_average(1e-9 * scale) {
        return Err(SaltError::FormatViolation(
            "zero-average flag set but mean mode is nonzero".into(),
        ));
    }
    if flags & FLAG_DIVERGENCE_FREE != 0 && !field.is_divergence_free(1e-9 * scale) {
        return Err(SaltError::FormatViolation(
            "divergence-free flag set but k.f_k != 0".into(),
        ));
    }
    Ok(field)
}

/// Dump a noise path for exact replay.
pub fn write_noise_path<W: Write>(path: &NoisePath, mut out: W) -> Result<()> {
    out.write_all(PATH_MAGIC)?;
    out.write_all(&path.seed().to_le_bytes())?;
    out.write_all(&path.dt().to_le_bytes())?;
    out.write_all(&(path.steps() as u64).to_le_bytes())?;
    out.write_all(&(path.columns() as u64).to_le_bytes())?;
    for x in path.increments() {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Restore a dumped noise path.
pub fn read_noise_path<R: Read>(mut input: R) -> Result<NoisePath> {
    let mut magic = [0u8; 9];
    input.read_exact(&mut magic)?;
    if &magic != PATH_MAGIC {
        return Err(SaltError::FormatViolation("bad noise path magic".into()));
    }
    let seed = read_u64(&mut input)?;
    let dt = read_f64(&mut input)?;
    if !(dt > 0.0) {
        return Err(SaltError::FormatViolation(format!("nonpositive dt {dt}")));
    }
    let steps = read_u64(&mut input)? as usize;
    let columns = read_u64(&mut input)? as usize;
    let mut increments = Vec::with_capacity(steps * columns);
    for _ in 0..steps * columns {
        increments.push(read_f64(&mut input)?);
    }
    NoisePath::from_parts(seed, dt, steps, columns, increments)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
