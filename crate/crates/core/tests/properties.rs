use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use turbmimo_core::channel::{
    erasure_correlation, erasure_pattern_law, rail_kraus, Jones, RailBlock,
};
use turbmimo_core::fft::Fft2d;
use turbmimo_core::mimo::erasure_vector;
use turbmimo_core::optics::fresnel_propagate;
use turbmimo_core::permanent::permanent;
use turbmimo_core::photon::{distinguishable_stats, indistinguishable_stats};
use turbmimo_core::{CMatrix, ComplexField, CrosstalkMatrix, ErasureVector, Grid};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn square(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn contraction(max_n: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max_n).prop_flat_map(|n| (square(n), 0.05..1.0f64)).prop_filter_map("zero matrix", |(m, s)| {
        let smax = m.clone().singular_values().max();
        (smax > 1e-6).then(|| m * Complex64::new(s / smax, 0.0))
    })
}

fn ensemble(n: usize) -> impl Strategy<Value = Vec<ErasureVector>> {
    prop::collection::vec(prop::collection::vec(0.0..=1.0f64, n), 2..30).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, e)| ErasureVector::new(e, i as u64).unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_round_trip(log_n in 2u32..6, seed in prop::collection::vec(complex(), 1024)) {
        let n = 1usize << log_n;
        let plan = Fft2d::new(n);
        let original: Vec<Complex64> = seed.into_iter().cycle().take(n * n).collect();
        let mut data = original.clone();
        plan.forward(&mut data);
        let energy: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        let input: f64 = original.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((energy - input).abs() <= 1e-10 * input.max(1.0));
        plan.inverse(&mut data);
        for (a, b) in data.iter().zip(&original) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fresnel_conserves_power(samples in prop::collection::vec(complex(), 32 * 32), z in 1.0..2e4f64) {
        let grid = Grid::new(32, 2.5e-3).unwrap();
        let field = ComplexField::from_samples(grid, samples).unwrap();
        let out = fresnel_propagate(&field, z, 1550e-9).unwrap();
        prop_assert!((out.power() - field.power()).abs() <= 1e-12 * field.power().max(1e-300));
    }

    #[test]
    fn permanent_is_permutation_invariant(m in (2usize..6).prop_flat_map(square), shift in 1usize..5) {
        let n = m.nrows();
        let rotated = CMatrix::from_fn(n, n, |i, j| m[((i + shift) % n, (j + 2 * shift) % n)]);
        let a = permanent(&m).unwrap();
        let b = permanent(&rotated).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        let transposed = permanent(&m.transpose()).unwrap();
        prop_assert!((a - transposed).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn photon_probabilities_are_normalized(t in contraction(4)) {
        let t = CrosstalkMatrix::from_matrix(t).unwrap();
        let ind = indistinguishable_stats(&t).unwrap();
        let dis = distinguishable_stats(&t).unwrap();
        for s in [&ind, &dis] {
            prop_assert!((s.total_probability - 1.0).abs() < 1e-10);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s.p_all_kept));
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s.p_collision));
        }
        let product: f64 = t.column_power().iter().product();
        prop_assert!((dis.p_all_kept - product).abs() < 1e-12);
    }

    #[test]
    fn erasure_lies_in_the_unit_interval(t in contraction(5)) {
        let t = CrosstalkMatrix::from_matrix(t).unwrap();
        for &e in erasure_vector(&t).eps() {
            prop_assert!((0.0..=1.0).contains(&e));
        }
    }

    #[test]
    fn kraus_sets_are_complete(t in (square(2), 0.0..1.0f64)) {
        let (m, s) = t;
        let smax = m.clone().singular_values().max().max(1e-12);
        let b = Jones::from_iterator(m.iter().map(|z| z * (s / smax)));
        let k = rail_kraus(&RailBlock::new(b).unwrap()).unwrap();
        prop_assert!((k.completeness() - Jones::identity()).norm() < 1e-12);
    }

    #[test]
    fn pattern_law_is_a_distribution(rows in (1usize..6).prop_flat_map(ensemble)) {
        let law = erasure_pattern_law(&rows).unwrap();
        prop_assert!((law.total() - 1.0).abs() < 1e-12);
        prop_assert!(law.p.iter().all(|&p| p >= 0.0));
        let n = rows[0].n();
        for (m, marg) in law.marginals().iter().enumerate() {
            let mean = rows.iter().map(|e| e.eps()[m]).sum::<f64>() / rows.len() as f64;
            prop_assert!((marg - mean).abs() < 1e-12);
        }
        prop_assert_eq!(law.p.len(), 1 << n);
        prop_assert!(law.total_variation_from_product() >= 0.0);
    }

    #[test]
    fn correlation_is_symmetric_and_bounded(rows in (2usize..6).prop_flat_map(ensemble)) {
        let c = erasure_correlation(&rows).unwrap();
        let n = c.corr.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = c.corr[(i, j)];
                if v.is_nan() {
                    prop_assert!(c.saturated[i] || c.saturated[j]);
                    continue;
                }
                prop_assert!((v - c.corr[(j, i)]).abs() < 1e-12);
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&v));
            }
        }
    }
}
