//! Ensemble identity checks at the sample counts the operator calculus is
//! specified for, plus an independent high-order finite-difference oracle
//! for the spectral derivative.

use saltns::ensemble::{random_solenoidal, random_vector};
use saltns::operators::{m_norm_sq, nonlinear_l, salt_b};
use saltns::rng::SplitMix64;
use saltns::spectral::{l2_inner, sobolev_norm_sq, SobolevIndex};
use saltns::vorticity::{curl, vort_l};
use std::f64::consts::TAU;

#[test]
fn advection_antisymmetry_and_cancellation_over_100_triples() {
    for (dim, cutoff) in [(2usize, 4i64), (2, 8), (3, 4)] {
        let mut rng = SplitMix64::from_key(&[dim as u64, cutoff as u64, 0xaa]);
        for trial in 0..100 {
            let phi = random_solenoidal(dim, cutoff, 2.0, &mut rng);
            let f = random_vector(dim, cutoff, 2.0, &mut rng);
            let g = random_vector(dim, cutoff, 2.0, &mut rng);
            let lf = nonlinear_l(&phi, &f, None).unwrap();
            let lg = nonlinear_l(&phi, &g, None).unwrap();
            let lhs = l2_inner(&lf, &g).unwrap();
            let rhs = l2_inner(&f, &lg).unwrap();
            let scale = m_norm_sq(&phi, 1).unwrap().sqrt()
                * sobolev_norm_sq(&f, SobolevIndex::new(1).unwrap()).sqrt()
                * l2_inner(&g, &g).unwrap().sqrt();
            assert!(
                (lhs + rhs).abs() <= 1e-11 * scale.max(1.0),
                "antisymmetry residual at N={dim} K={cutoff} trial {trial}"
            );
            let cancel = l2_inner(&lf, &f).unwrap();
            let cancel_scale = m_norm_sq(&phi, 1).unwrap().sqrt()
                * sobolev_norm_sq(&f, SobolevIndex::new(1).unwrap()).sqrt()
                * l2_inner(&f, &f).unwrap().sqrt();
            assert!(
                cancel.abs() <= 1e-11 * cancel_scale.max(1.0),
                "cancellation residual at N={dim} K={cutoff} trial {trial}"
            );
        }
    }
}

#[test]
fn curl_salt_intertwining_over_100_pairs() {
    let mut rng = SplitMix64::from_key(&[3, 4, 0xcc]);
    for trial in 0..100 {
        let xi = random_solenoidal(3, 2, 2.0, &mut rng);
        let f = random_solenoidal(3, 4, 2.0, &mut rng);
        let lhs = curl(&salt_b(&xi, &f, None).unwrap()).unwrap();
        let rhs = vort_l(&xi, &curl(&f).unwrap(), None).unwrap();
        let scale = lhs.max_coeff_abs().max(1.0);
        for l in 0..3 {
            for (k, c) in lhs.component(l).iter() {
                assert!(
                    (rhs.component(l).get(&k) - c).norm() <= 1e-11 * scale,
                    "trial {trial} component {l} mode {:?}",
                    k.components()
                );
            }
        }
    }
}

/// Sixth-order central-difference derivative of grid samples along axis 1.
fn sixth_order_derivative(values: &[f64], r: usize, dim: usize) -> Vec<f64> {
    let h = TAU / r as f64;
    let stride = r.pow((dim - 1) as u32);
    let mut out = vec![0.0; values.len()];
    let coeff = [45.0, -9.0, 1.0]; // (f_{+1}-f_{-1}), (f_{+2}-f_{-2}), (f_{+3}-f_{-3})
    for (i, slot) in out.iter_mut().enumerate() {
        let line = (i / stride) % r;
        let base = i - line * stride;
        let mut acc = 0.0;
        for (step, c) in coeff.iter().enumerate() {
            let fwd = base + ((line + step + 1) % r) * stride;
            let bwd = base + ((line + r - step - 1) % r) * stride;
            acc += c * (values[fwd] - values[bwd]);
        }
        *slot = acc / (60.0 * h);
    }
    out
}

#[test]
fn spectral_derivative_matches_high_order_differences_to_1e6() {
    let mut rng = SplitMix64::new(97);
    let f = saltns::ensemble::random_scalar(2, 8, 0.5, &mut rng);
    let r = 512usize;
    let samples = f.sample_grid(r).unwrap();
    let oracle = sixth_order_derivative(&samples, r, 2);
    let exact = f.partial_derivative(1).unwrap().sample_grid(r).unwrap();
    let sup = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in oracle.iter().zip(exact.iter()) {
        assert!((a - b).abs() <= 1e-6 * sup, "residual {:.3e}", (a - b).abs() / sup);
    }
}
