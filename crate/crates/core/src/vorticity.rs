//! Vorticity calculus on the 3-torus.
//!
//! curl, the antisymmetrised advection operator that closes the vorticity
//! equation, and Biot-Savart inversion. On the torus the zero-mean
//! divergence-free velocity recovered from a vorticity is canonical:
//! u_k = i k x w_k / |k|^2 for k != 0.

use crate::error::{Result, SaltError};
use crate::operators::nonlinear_l;
use crate::spectral::{SpectralScalarField, SpectralVectorField};
use num_complex::Complex64;

/// A divergence-free zero-average 3D field holding a vorticity.
#[derive(Clone, Debug)]
pub struct VorticityState {
    w: SpectralVectorField,
}

impl VorticityState {
    pub fn new(w: SpectralVectorField) -> Result<Self> {
        if w.dim() != 3 {
            return Err(SaltError::DimensionMismatch { expected: 3, got: w.dim() });
        }
        w.require_solenoidal()?;
        Ok(Self { w })
    }

    pub fn field(&self) -> &SpectralVectorField {
        &self.w
    }

    pub fn into_field(self) -> SpectralVectorField {
        self.w
    }
}

/// curl f = (d2 f3 - d3 f2, d3 f1 - d1 f3, d1 f2 - d2 f1). 3D only.
pub fn curl(f: &SpectralVectorField) -> Result<SpectralVectorField> {
    if f.dim() != 3 {
        return Err(SaltError::DimensionMismatch { expected: 3, got: f.dim() });
    }
    let d = |comp: usize, axis: usize| -> Result<SpectralScalarField> {
        f.component(comp).partial_derivative(axis)
    };
    let c1 = {
        let mut a = d(2, 2)?;
        a.add_assign(&{
            let mut b = d(1, 3)?;
            b.scale(-1.0);
            b
        });
        a
    };
    let c2 = {
        let mut a = d(0, 3)?;
        a.add_assign(&{
            let mut b = d(2, 1)?;
            b.scale(-1.0);
            b
        });
        a
    };
    let c3 = {
        let mut a = d(1, 1)?;
        a.add_assign(&{
            let mut b = d(0, 2)?;
            b.scale(-1.0);
            b
        });
        a
    };
    Ok(SpectralVectorField::new(vec![c1, c2, c3]))
}

/// The vorticity advection operator: L_f g - L_g f, exact at the extended
/// band. Antisymmetric in its arguments by construction.
pub fn vort_l(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
    truncate_to: Option<i64>,
) -> Result<SpectralVectorField> {
    if f.dim() != 3 || g.dim() != 3 {
        return Err(SaltError::DimensionMismatch { expected: 3, got: f.dim().min(g.dim()) });
    }
    let forward = nonlinear_l(f, g, truncate_to)?;
    let backward = nonlinear_l(g, f, truncate_to)?;
    Ok(forward.sub(&backward))
}

/// Velocity from vorticity: u_k = i k x w_k / |k|^2, u_0 = 0.
///
/// The output is divergence-free and zero-average per mode, and
/// curl(u) = w whenever w itself is divergence-free and zero-average.
pub fn biot_savart(w: &SpectralVectorField) -> Result<SpectralVectorField> {
    if w.dim() != 3 {
        return Err(SaltError::DimensionMismatch { expected: 3, got: w.dim() });
    }
    w.require_solenoidal()?;
    let mut u = SpectralVectorField::zero(3, w.cutoff());
    for (k, _) in w.component(0).iter() {
        if k.is_zero() {
            continue;
        }
        let wk = [
            w.component(0).get(&k),
            w.component(1).get(&k),
            w.component(2).get(&k),
        ];
        let kf = [
            k.component(0) as f64,
            k.component(1) as f64,
            k.component(2) as f64,
        ];
        let cross = [
            kf[1] * wk[2] - kf[2] * wk[1],
            kf[2] * wk[0] - kf[0] * wk[2],
            kf[0] * wk[1] - kf[1] * wk[0],
        ];
        let i_over = Complex64::new(0.0, 1.0 / k.norm_sq() as f64);
        for l in 0..3 {
            u.component_mut(l).set(&k, i_over * cross[l]);
        }
    }
    Ok(u)
}
