//! Band-limited real scalar fields on the torus, stored spectrally.

use super::fft::{fast_size, fft_nd, wrap};
use crate::error::{Result, SaltError};
use num_complex::Complex64;

/// A lattice point of Z^N, N in {2, 3}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct WaveVector {
    comps: [i64; 3],
    dim: usize,
}

impl WaveVector {
    pub fn new(comps: &[i64]) -> Self {
        let dim = comps.len();
        debug_assert!(dim == 2 || dim == 3);
        let mut c = [0i64; 3];
        c[..dim].copy_from_slice(comps);
        Self { comps: c, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn component(&self, axis: usize) -> i64 {
        self.comps[axis]
    }

    pub fn components(&self) -> &[i64] {
        &self.comps[..self.dim]
    }

    pub fn negate(&self) -> Self {
        let mut c = [0i64; 3];
        for j in 0..self.dim {
            c[j] = -self.comps[j];
        }
        Self { comps: c, dim: self.dim }
    }

    /// |k|^2, the Stokes eigenvalue attached to this mode.
    pub fn norm_sq(&self) -> i64 {
        self.components().iter().map(|&k| k * k).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components().iter().all(|&k| k == 0)
    }

    pub fn max_abs(&self) -> i64 {
        self.components().iter().map(|&k| k.abs()).max().unwrap_or(0)
    }
}

/// A real scalar trigonometric polynomial, held as complex Fourier
/// coefficients over the symmetric cube |k_j| <= K.
///
/// Reality of the field is the Hermitian symmetry f(-k) = conj(f(k));
/// every operation here preserves it, and [`hermitian_violation`]
/// (Self::hermitian_violation) measures any drift.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScalarField {
    dim: usize,
    cutoff: i64,
    /// Dense storage in lexicographic k order, index built from k_j + K.
    coeffs: Vec<Complex64>,
}

impl SpectralScalarField {
    pub fn zero(dim: usize, cutoff: i64) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        assert!(cutoff >= 0);
        let side = (2 * cutoff + 1) as usize;
        Self {
            dim,
            cutoff,
            coeffs: vec![Complex64::default(); side.pow(dim as u32)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    fn side(&self) -> usize {
        (2 * self.cutoff + 1) as usize
    }

    #[inline]
    fn index_of(&self, k: &WaveVector) -> Option<usize> {
        if k.dim() != self.dim || k.max_abs() > self.cutoff {
            return None;
        }
        let side = self.side() as i64;
        let mut idx = 0i64;
        for j in 0..self.dim {
            idx = idx * side + (k.component(j) + self.cutoff);
        }
        Some(idx as usize)
    }

    /// Coefficient at k; zero for modes outside the band.
    #[inline]
    pub fn get(&self, k: &WaveVector) -> Complex64 {
        match self.index_of(k) {
            Some(i) => self.coeffs[i],
            None => Complex64::default(),
        }
    }

    /// Set the coefficient at k. Panics if k lies outside the band.
    #[inline]
    pub fn set(&mut self, k: &WaveVector, value: Complex64) {
        let i = self.index_of(k).expect("wavevector outside stored band");
        self.coeffs[i] = value;
    }

    #[inline]
    pub fn add_at(&mut self, k: &WaveVector, value: Complex64) {
        let i = self.index_of(k).expect("wavevector outside stored band");
        self.coeffs[i] += value;
    }

    /// All lattice points of the stored cube in lexicographic order.
    pub fn wavevectors(&self) -> impl Iterator<Item = WaveVector> + '_ {
        let side = self.side() as i64;
        let cutoff = self.cutoff;
        let dim = self.dim;
        (0..self.coeffs.len() as i64).map(move |mut idx| {
            let mut comps = [0i64; 3];
            for j in (0..dim).rev() {
                comps[j] = idx % side - cutoff;
                idx /= side;
            }
            WaveVector { comps, dim }
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (WaveVector, Complex64)> + '_ {
        self.wavevectors().zip(self.coeffs.iter().copied())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Largest |f(-k) - conj(f(k))| over the band.
    pub fn hermitian_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, c) in self.iter() {
            let mirrored = self.get(&k.negate());
            worst = worst.max((mirrored - c.conj()).norm());
        }
        worst
    }

    /// Project exactly onto the Hermitian-symmetric subspace.
    pub fn symmetrize(&mut self) {
        let kvecs: Vec<WaveVector> = self.wavevectors().collect();
        for k in kvecs {
            let c = self.get(&k);
            let m = self.get(&k.negate());
            let avg = 0.5 * (c + m.conj());
            self.set(&k, avg);
            self.set(&k.negate(), avg.conj());
        }
        // mean mode is its own mirror: force it real
        let zero = WaveVector::new(&vec![0; self.dim]);
        let c0 = self.get(&zero);
        self.set(&zero, Complex64::new(c0.re, 0.0));
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Copy into a (possibly) different band. Shrinking drops modes.
    pub fn with_cutoff(&self, cutoff: i64) -> Self {
        let mut out = Self::zero(self.dim, cutoff);
        let keep = cutoff.min(self.cutoff);
        for (k, c) in self.iter() {
            if k.max_abs() <= keep {
                out.set(&k, c);
            }
        }
        out
    }

    /// d/dx_j with 1-based axis j, per-mode multiplication by i k_j.
    pub fn partial_derivative(&self, axis: usize) -> Result<Self> {
        if axis == 0 || axis > self.dim {
            return Err(SaltError::AxisOutOfRange { axis, dim: self.dim });
        }
        let mut out = self.clone();
        let a = axis - 1;
        for (k, c) in self.iter() {
            out.set(&k, Complex64::new(0.0, k.component(a) as f64) * c);
        }
        Ok(out)
    }

    /// Apply a repeated-derivative multi-index (alpha_1, ..., alpha_N).
    pub fn derivative_multi(&self, alpha: &[usize]) -> Result<Self> {
        if alpha.len() != self.dim {
            return Err(SaltError::DimensionMismatch { expected: self.dim, got: alpha.len() });
        }
        let mut out = self.clone();
        for (k, c) in self.iter() {
            let mut factor = Complex64::new(1.0, 0.0);
            for (j, &a) in alpha.iter().enumerate() {
                let ik = Complex64::new(0.0, k.component(j) as f64);
                for _ in 0..a {
                    factor *= ik;
                }
            }
            out.set(&k, factor * c);
        }
        Ok(out)
    }

    /// Per-mode multiplication by -|k|^2.
    pub fn laplacian(&self) -> Self {
        let mut out = self.clone();
        for (k, c) in self.iter() {
            out.set(&k, -(k.norm_sq() as f64) * c);
        }
        out
    }

    /// Exact product of two band-limited fields.
    ///
    /// The result lives at band K_f + K_g (the full spectral convolution),
    /// computed on a zero-padded grid large enough that no aliasing occurs,
    /// then optionally truncated to `truncate_to`.
    pub fn multiply(&self, other: &Self, truncate_to: Option<i64>) -> Result<Self> {
        if self.dim != other.dim {
            return Err(SaltError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if let Some(t) = truncate_to {
            if t < 0 {
                return Err(SaltError::InvalidArgument(
                    "truncation cutoff must be non-negative".into(),
                ));
            }
        }
        let full = self.cutoff + other.cutoff;
        let kout = match truncate_to {
            Some(t) => t.min(full),
            None => full,
        };
        // A grid of full + kout + 1 points per axis keeps every retained
        // mode collision-free: aliasing partners of |k| <= kout live at
        // distance R > full + kout from it, outside the product band.
        let r = fast_size((full + kout + 1) as usize);
        let mut ga = self.synthesize_complex(r);
        let gb = other.synthesize_complex(r);
        for (a, b) in ga.iter_mut().zip(gb.iter()) {
            *a *= b;
        }
        let mut product = Self::analyze_complex(&ga, self.dim, r, kout);
        product.symmetrize();
        Ok(product)
    }

    /// Complex grid values on the R^N uniform grid x_j = 2 pi j / R.
    ///
    /// Modes wrap onto bins mod R; callers sampling a field for its values
    /// need R >= 2K+1, while the convolution path in [`multiply`]
    /// (Self::multiply) relies on the wrapped form deliberately.
    pub(crate) fn synthesize_complex(&self, r: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); r.pow(self.dim as u32)];
        for (k, c) in self.iter() {
            if c == Complex64::default() {
                continue;
            }
            let mut idx = 0usize;
            for j in 0..self.dim {
                idx = idx * r + wrap(k.component(j), r);
            }
            buf[idx] += c;
        }
        fft_nd(&mut buf, self.dim, r, true);
        buf
    }

    /// Recover band-K coefficients from complex grid values (exact when the
    /// grid function is band-limited to K and R >= 2K+1... here callers
    /// guarantee no collisions by construction).
    pub(crate) fn analyze_complex(grid: &[Complex64], dim: usize, r: usize, cutoff: i64) -> Self {
        let mut data = grid.to_vec();
        fft_nd(&mut data, dim, r, false);
        let scale = 1.0 / r.pow(dim as u32) as f64;
        let mut out = Self::zero(dim, cutoff);
        let kvecs: Vec<WaveVector> = out.wavevectors().collect();
        for k in kvecs {
            let mut idx = 0usize;
            for j in 0..dim {
                idx = idx * r + wrap(k.component(j), r);
            }
            out.set(&k, data[idx] * scale);
        }
        out
    }

    /// Exact value of the trigonometric polynomial at an arbitrary point.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (k, c) in self.iter() {
            if c == Complex64::default() {
                continue;
            }
            let mut phase = 0.0;
            for j in 0..self.dim {
                phase += k.component(j) as f64 * x[j];
            }
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc
    }

    /// Real grid samples at resolution R per axis (R >= 2K+1).
    pub fn sample_grid(&self, r: usize) -> Result<Vec<f64>> {
        if (r as i64) < 2 * self.cutoff + 1 {
            return Err(SaltError::InvalidArgument(format!(
                "resolution {} below alias-free minimum {}",
                r,
                2 * self.cutoff + 1
            )));
        }
        Ok(self.synthesize_complex(r).iter().map(|c| c.re).collect())
    }

    /// Largest |f| over the R^N sample grid.
    pub fn grid_max_abs(&self, r: usize) -> Result<f64> {
        Ok(self
            .sample_grid(r)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim);
        if self.cutoff == other.cutoff {
            for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
                *a += b;
            }
        } else {
            for (k, c) in other.iter() {
                if k.max_abs() <= self.cutoff {
                    self.add_at(&k, c);
                } else {
                    assert!(
                        c.norm() == 0.0,
                        "add_assign would drop a nonzero mode outside the target band"
                    );
                }
            }
        }
    }
}

/// Pairwise (cascade) summation in fixed order: deterministic and with
/// O(log n) error growth instead of O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
