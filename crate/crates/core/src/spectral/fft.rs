//! Grid synthesis and analysis for band-limited fields.
//!
//! Fields are trigonometric polynomials f(x) = sum_k f_k e^{ik.x} on the
//! torus [0, 2pi)^N. Sampling on an R^N uniform grid with R >= 2K+1 is
//! lossless, so products of band-limited fields computed on a grid of at
//! least 2(K_f + K_g) + 1 points per axis recover the exact spectral
//! convolution (no aliasing).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLAN_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Smallest 5-smooth integer >= n (sizes rustfft handles without Bluestein).
pub fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2usize, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// In-place N-dimensional FFT over a row-major cube of side `r`.
///
/// `inverse = true` computes sum with e^{+i...} (synthesis direction),
/// `inverse = false` sum with e^{-i...} (analysis). Neither is scaled.
pub fn fft_nd(data: &mut [Complex64], dim: usize, r: usize, inverse: bool) {
    debug_assert_eq!(data.len(), r.pow(dim as u32));
    let fft = plan(r, inverse);
    let mut line = vec![Complex64::default(); r];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        // stride between consecutive entries along `axis`
        let stride = r.pow((dim - 1 - axis) as u32);
        let lines = data.len() / r;
        for l in 0..lines {
            // base index of the l-th line along this axis
            let block = l / stride;
            let offset = l % stride;
            let base = block * stride * r + offset;
            for j in 0..r {
                line[j] = data[base + j * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for j in 0..r {
                data[base + j * stride] = line[j];
            }
        }
    }
}

/// Wrap a signed wavenumber onto the grid bin in 0..r.
#[inline]
pub fn wrap(k: i64, r: usize) -> usize {
    k.rem_euclid(r as i64) as usize
}
