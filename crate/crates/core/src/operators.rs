//! Operator calculus on divergence-free fields.
//!
//! The pieces of the velocity equation: the Leray projector and its
//! Helmholtz decomposition, the Stokes operator with fractional powers,
//! the advective nonlinearity L_f g = sum_j f^j d_j g, the transport-plus-
//! stretch noise operator B = L_xi + T_xi with its adjoint, the
//! commutator [Laplacian, B], and the Ito correction (1/2) sum_i P B_i^2.
//!
//! Compositions are evaluated exactly: applying an operator to a field of
//! cutoff K yields the full extended band (K plus the operator's own band)
//! and truncation happens only where a caller asks for it. Identities then
//! hold to round-off rather than to discretization error.

use crate::error::{Result, SaltError};
use crate::spectral::{
    laplacian, pairwise_sum, volume, SobolevIndex, SpectralScalarField, SpectralVectorField,
};
use num_complex::Complex64;

/// Helmholtz decomposition on the torus: f = solenoidal + gradient + constant.
#[derive(Clone, Debug)]
pub struct LerayDecomposition {
    /// The divergence-free zero-average part P f.
    pub solenoidal: SpectralVectorField,
    /// The curl-free part, a gradient of a scalar.
    pub gradient_part: SpectralVectorField,
    /// The mean mode, one real value per component.
    pub constant_part: Vec<f64>,
}

/// Orthogonal projection onto divergence-free zero-average fields.
///
/// Per mode k != 0 the solenoidal part is f_k - (k.f_k) k / |k|^2; the
/// k = 0 amplitude becomes the constant part.
pub fn leray_project(f: &SpectralVectorField) -> LerayDecomposition {
    let dim = f.dim();
    let cutoff = f.cutoff();
    let mut solenoidal = SpectralVectorField::zero(dim, cutoff);
    let mut gradient_part = SpectralVectorField::zero(dim, cutoff);
    let mut constant_part = vec![0.0; dim];
    for (k, _) in f.component(0).iter() {
        if k.is_zero() {
            for l in 0..dim {
                constant_part[l] = f.component(l).get(&k).re;
            }
            continue;
        }
        let mut dot = Complex64::default();
        for j in 0..dim {
            dot += Complex64::new(k.component(j) as f64, 0.0) * f.component(j).get(&k);
        }
        let inv = 1.0 / k.norm_sq() as f64;
        for l in 0..dim {
            let g = dot * (k.component(l) as f64 * inv);
            gradient_part.component_mut(l).set(&k, g);
            solenoidal.component_mut(l).set(&k, f.component(l).get(&k) - g);
        }
    }
    LerayDecomposition { solenoidal, gradient_part, constant_part }
}

/// Shorthand for the solenoidal part of the decomposition.
pub fn project(f: &SpectralVectorField) -> SpectralVectorField {
    leray_project(f).solenoidal
}

/// Largest |k_a (f_k)_b - k_b (f_k)_a|; zero iff the field is a gradient
/// plus a constant.
pub fn curl_free_residual(f: &SpectralVectorField) -> f64 {
    let dim = f.dim();
    let mut worst = 0.0f64;
    for (k, _) in f.component(0).iter() {
        for a in 0..dim {
            for b in (a + 1)..dim {
                let r = Complex64::new(k.component(a) as f64, 0.0) * f.component(b).get(&k)
                    - Complex64::new(k.component(b) as f64, 0.0) * f.component(a).get(&k);
                worst = worst.max(r.norm());
            }
        }
    }
    worst
}

/// Stokes operator A = -P Laplacian: mode k scaled by |k|^2.
///
/// Defined only on divergence-free zero-average fields; anything else is a
/// contract violation, not a silent projection.
pub fn stokes_apply(f: &SpectralVectorField) -> Result<SpectralVectorField> {
    f.require_solenoidal()?;
    Ok(f.map_components(|c| {
        let mut out = c.clone();
        for (k, v) in c.iter() {
            out.set(&k, v * k.norm_sq() as f64);
        }
        out
    }))
}

/// Fractional Stokes power A^s: mode k scaled by |k|^{2s}.
///
/// Supported exponents are the half-integers 0, 1/2, 1, 3/2, 2.
pub fn stokes_power(f: &SpectralVectorField, s: f64) -> Result<SpectralVectorField> {
    let doubled = 2.0 * s;
    if doubled < 0.0 || doubled > 4.0 || doubled.fract() != 0.0 {
        return Err(SaltError::InvalidArgument(format!(
            "Stokes power s={s} not in {{0, 1/2, 1, 3/2, 2}}"
        )));
    }
    f.require_solenoidal()?;
    let twice = doubled as u32;
    Ok(f.map_components(|c| {
        let mut out = c.clone();
        for (k, v) in c.iter() {
            let lambda = k.norm_sq() as f64;
            let factor = match twice {
                0 => 1.0,
                1 => lambda.sqrt(),
                2 => lambda,
                3 => lambda * lambda.sqrt(),
                _ => lambda * lambda,
            };
            out.set(&k, v * factor);
        }
        out
    }))
}

/// The m-th Stokes inner product <f, g>_m = <A^{m/2} f, A^{m/2} g>,
/// evaluated as (2 pi)^N sum_k |k|^{2m} f_k . conj(g_k).
pub fn m_inner(f: &SpectralVectorField, g: &SpectralVectorField, m: SobolevIndex) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(SaltError::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    f.require_solenoidal()?;
    g.require_solenoidal()?;
    let (small, large) = if f.cutoff() <= g.cutoff() { (f, g) } else { (g, f) };
    let order = m.order() as i32;
    let mut terms = Vec::with_capacity(small.component(0).coeffs().len());
    for (k, _) in small.component(0).iter() {
        let lambda_m = (k.norm_sq() as f64).powi(order);
        let mut dot = 0.0;
        for l in 0..f.dim() {
            let a = small.component(l).get(&k);
            let b = large.component(l).get(&k);
            dot += a.re * b.re + a.im * b.im;
        }
        terms.push(lambda_m * dot);
    }
    Ok(volume(f.dim()) * pairwise_sum(&terms))
}

/// ||f||_m^2 in the Stokes scale.
pub fn m_norm_sq(f: &SpectralVectorField, m: usize) -> Result<f64> {
    m_inner(f, f, SobolevIndex::new(m)?)
}

/// Advective nonlinearity (L_f g)^l = sum_j f^j d_j g^l, exact at band
/// K_f + K_g unless truncated.
pub fn nonlinear_l(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
    truncate_to: Option<i64>,
) -> Result<SpectralVectorField> {
    if f.dim() != g.dim() {
        return Err(SaltError::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    let dim = f.dim();
    let kout = truncate_to.unwrap_or(f.cutoff() + g.cutoff());
    let mut comps = Vec::with_capacity(dim);
    for l in 0..dim {
        let mut acc = SpectralScalarField::zero(dim, kout);
        for j in 0..dim {
            let dg = g.component(l).partial_derivative(j + 1)?;
            acc.add_assign(&f.component(j).multiply(&dg, Some(kout))?);
        }
        comps.push(acc);
    }
    Ok(SpectralVectorField::new(comps))
}

/// Stretch term (T_xi f)^l = sum_j f^j d_l xi^j: pointwise multiplication
/// of f by the Jacobian transpose of xi.
pub fn transport_t(
    xi: &SpectralVectorField,
    f: &SpectralVectorField,
    truncate_to: Option<i64>,
) -> Result<SpectralVectorField> {
    if xi.dim() != f.dim() {
        return Err(SaltError::DimensionMismatch { expected: xi.dim(), got: f.dim() });
    }
    let dim = f.dim();
    let kout = truncate_to.unwrap_or(f.cutoff() + xi.cutoff());
    let mut comps = Vec::with_capacity(dim);
    for l in 0..dim {
        let mut acc = SpectralScalarField::zero(dim, kout);
        for j in 0..dim {
            let dxi = xi.component(j).partial_derivative(l + 1)?;
            acc.add_assign(&f.component(j).multiply(&dxi, Some(kout))?);
        }
        comps.push(acc);
    }
    Ok(SpectralVectorField::new(comps))
}

/// L^2 adjoint of the stretch term: (T*_xi g)^j = sum_l g^l d_l xi^j,
/// multiplication by the Jacobian of xi.
pub fn transport_t_star(
    xi: &SpectralVectorField,
    g: &SpectralVectorField,
    truncate_to: Option<i64>,
) -> Result<SpectralVectorField> {
    if xi.dim() != g.dim() {
        return Err(SaltError::DimensionMismatch { expected: xi.dim(), got: g.dim() });
    }
    let dim = g.dim();
    let kout = truncate_to.unwrap_or(g.cutoff() + xi.cutoff());
    let mut comps = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut acc = SpectralScalarField::zero(dim, kout);
        for l in 0..dim {
            let dxi = xi.component(j).partial_derivative(l + 1)?;
            acc.add_assign(&g.component(l).multiply(&dxi, Some(kout))?);
        }
        comps.push(acc);
    }
    Ok(SpectralVectorField::new(comps))
}

/// The SALT operator B_xi f = L_xi f + T_xi f.
pub fn salt_b(
    xi: &SpectralVectorField,
    f: &SpectralVectorField,
    truncate_to: Option<i64>,
) -> Result<SpectralVectorField> {
    let mut out = nonlinear_l(xi, f, truncate_to)?;
    out.add_assign(&transport_t(xi, f, truncate_to)?);
    Ok(out)
}

/// L^2 adjoint of the SALT operator: B*_xi g = -L_xi g + T*_xi g.
pub fn salt_b_star(
    xi: &SpectralVectorField,
    g: &SpectralVectorField,
    truncate_to: Option<i64>,
) -> Result<SpectralVectorField> {
    let mut out = nonlinear_l(xi, g, truncate_to)?;
    out.scale(-1.0);
    out.add_assign(&transport_t_star(xi, g, truncate_to)?);
    Ok(out)
}

/// Commutator [Laplacian, B_xi] f = Laplacian(B f) - B(Laplacian f),
/// evaluated as the literal difference of the two compositions.
pub fn commutator_delta_b(
    xi: &SpectralVectorField,
    f: &SpectralVectorField,
) -> Result<SpectralVectorField> {
    let direct = laplacian(&salt_b(xi, f, None)?);
    let swapped = salt_b(xi, &laplacian(f), None)?;
    Ok(direct.sub(&swapped))
}

/// The commutator in closed form:
/// sum_{k,j} ( d_k^2 xi^j d_j f  +  2 d_k xi^j d_k d_j f
///           + 2 d_k f^j d_k grad xi^j  +  f^j d_k^2 grad xi^j ).
///
/// An independent evaluation path against [`commutator_delta_b`].
pub fn closed_form_commutator(
    xi: &SpectralVectorField,
    f: &SpectralVectorField,
) -> Result<SpectralVectorField> {
    if xi.dim() != f.dim() {
        return Err(SaltError::DimensionMismatch { expected: xi.dim(), got: f.dim() });
    }
    let dim = f.dim();
    let kout = xi.cutoff() + f.cutoff();
    let mut out = SpectralVectorField::zero(dim, kout);
    for kk in 0..dim {
        for j in 0..dim {
            let xi_j = xi.component(j);
            let f_j = f.component(j);
            let dk_xi = xi_j.partial_derivative(kk + 1)?;
            let dkk_xi = dk_xi.partial_derivative(kk + 1)?;
            let dk_f = f_j.partial_derivative(kk + 1)?;
            for l in 0..dim {
                let f_l = f.component(l);
                let dj_f = f_l.partial_derivative(j + 1)?;
                let dkj_f = dj_f.partial_derivative(kk + 1)?;
                let dl_xi = xi_j.partial_derivative(l + 1)?;
                let dkl_xi = dl_xi.partial_derivative(kk + 1)?;
                let dkkl_xi = dkl_xi.partial_derivative(kk + 1)?;

                let mut term = dkk_xi.multiply(&dj_f, Some(kout))?;
                let mut t2 = dk_xi.multiply(&dkj_f, Some(kout))?;
                t2.scale(2.0);
                term.add_assign(&t2);
                let mut t3 = dk_f.multiply(&dkl_xi, Some(kout))?;
                t3.scale(2.0);
                term.add_assign(&t3);
                term.add_assign(&f_j.multiply(&dkkl_xi, Some(kout))?);
                out.component_mut(l).add_assign(&term);
            }
        }
    }
    Ok(out)
}

/// Ito-Stratonovich correction (1/2) sum_i P B_i^2 f, with every B_i^2
/// composed at full extended band and projected and truncated to the band
/// of f only at the end. An empty correlation list yields the zero field.
pub fn ito_correction(
    xis: &[SpectralVectorField],
    f: &SpectralVectorField,
) -> Result<SpectralVectorField> {
    f.require_solenoidal()?;
    let mut acc: Option<SpectralVectorField> = None;
    for xi in xis {
        let b1 = salt_b(xi, f, None)?;
        let b2 = salt_b(xi, &b1, None)?;
        acc = Some(match acc {
            None => b2,
            Some(a) => a.added(&b2),
        });
    }
    let mut out = match acc {
        None => return Ok(SpectralVectorField::zero(f.dim(), f.cutoff())),
        Some(a) => project(&a).with_cutoff(f.cutoff()),
    };
    out.scale(0.5);
    Ok(out)
}
