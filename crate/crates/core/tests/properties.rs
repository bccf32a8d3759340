//! Property tests: structural invariants over randomly drawn fields.

use proptest::prelude::*;
use saltns::ensemble::{random_scalar, random_vector};
use saltns::operators::leray_project;
use saltns::rng::SplitMix64;
use saltns::snapshot::{read_snapshot, write_snapshot};
use saltns::spectral::{l2_inner, volume};

fn field_params() -> impl Strategy<Value = (u64, usize, i64)> {
    (any::<u64>(), 2usize..=3, 1i64..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn products_preserve_hermitian_symmetry((seed, dim, cutoff) in field_params()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_scalar(dim, cutoff, 1.0, &mut rng);
        let g = random_scalar(dim, cutoff, 1.0, &mut rng);
        let p = f.multiply(&g, None).unwrap();
        prop_assert!(p.hermitian_violation() <= 1e-13 * p.max_coeff_abs().max(1.0));
        let d = p.partial_derivative(1).unwrap();
        prop_assert!(d.hermitian_violation() <= 1e-13 * d.max_coeff_abs().max(1.0));
    }

    #[test]
    fn derivative_product_rule_holds((seed, dim, cutoff) in field_params()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_scalar(dim, cutoff, 1.0, &mut rng);
        let g = random_scalar(dim, cutoff, 1.0, &mut rng);
        let lhs = f.multiply(&g, None).unwrap().partial_derivative(1).unwrap();
        let mut rhs = f.partial_derivative(1).unwrap().multiply(&g, None).unwrap();
        rhs.add_assign(&f.multiply(&g.partial_derivative(1).unwrap(), None).unwrap());
        let scale = lhs.max_coeff_abs().max(rhs.max_coeff_abs()).max(1.0);
        for (k, c) in lhs.iter() {
            prop_assert!((rhs.get(&k) - c).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn parseval_agrees_with_grid_quadrature((seed, dim, cutoff) in field_params()) {
        let mut rng = SplitMix64::new(seed);
        let v = random_vector(dim, cutoff, 1.0, &mut rng);
        let spectral = l2_inner(&v, &v).unwrap();
        prop_assert!(spectral >= 0.0);
        let r = (4 * cutoff + 1) as usize;
        let mut quad = 0.0;
        for l in 0..dim {
            let samples = v.component(l).sample_grid(r).unwrap();
            quad += samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
        }
        quad *= volume(dim);
        prop_assert!((spectral - quad).abs() <= 1e-12 * spectral.max(1.0));
    }

    #[test]
    fn leray_reconstructs_and_separates((seed, dim, cutoff) in field_params()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_vector(dim, cutoff, 1.0, &mut rng);
        let d = leray_project(&f);
        let scale = f.max_coeff_abs().max(1.0);
        prop_assert!(d.solenoidal.divergence_residual() <= 1e-13 * scale);
        prop_assert!(saltns::operators::curl_free_residual(&d.gradient_part) <= 1e-13 * scale);
        let mut rebuilt = d.solenoidal.clone();
        rebuilt.add_assign(&d.gradient_part);
        for l in 0..dim {
            let zero = saltns::spectral::WaveVector::new(&vec![0; dim]);
            let mean = rebuilt.component(l).get(&zero)
                + num_complex::Complex64::new(d.constant_part[l], 0.0);
            prop_assert!((mean - f.component(l).get(&zero)).norm() <= 1e-12 * scale);
            for (k, c) in f.component(l).iter() {
                if k.is_zero() {
                    continue;
                }
                prop_assert!((rebuilt.component(l).get(&k) - c).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn snapshots_round_trip_bit_exact((seed, dim, cutoff) in field_params()) {
        let mut rng = SplitMix64::new(seed);
        let f = random_vector(dim, cutoff, 1.0, &mut rng);
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(f, back);
    }
}
