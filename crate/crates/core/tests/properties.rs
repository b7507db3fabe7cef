use dyadic_lab::dyadic::{average, haar_coefficient, martingale_difference};
use dyadic_lab::embedding::{carleson_measure_of, four_terms, key_sum, maximal_weighted};
use dyadic_lab::shifts::form_value;
use dyadic_lab::weights::{a2_characteristic, dual, gen_cascade, weighted_haar, weighted_inner, weighted_norm};
use dyadic_lab::{DyadicIndex, HaarExpansion64, LeafFunction64, ShiftSpec64, Weight64};
use proptest::prelude::*;

fn leaf_fn(max_depth: u32) -> impl Strategy<Value = LeafFunction64> {
    (1..=max_depth).prop_flat_map(|d| {
        prop::collection::vec(-10.0f64..10.0, 1usize << d).prop_map(move |v| LeafFunction64::new(d, v).unwrap())
    })
}

fn pair_with_weight(max_depth: u32) -> impl Strategy<Value = (LeafFunction64, LeafFunction64, Weight64)> {
    (1..=max_depth, 0.0f64..0.95, any::<u64>()).prop_flat_map(|(d, eps, seed)| {
        let n = 1usize << d;
        (prop::collection::vec(-1.0f64..1.0, n), prop::collection::vec(-1.0f64..1.0, n)).prop_map(move |(a, b)| {
            (
                LeafFunction64::new(d, a).unwrap(),
                LeafFunction64::new(d, b).unwrap(),
                gen_cascade(d, eps, seed).unwrap(),
            )
        })
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(f in leaf_fn(12)) {
        let e = HaarExpansion64::analyze(&f);
        let energy = f.l2_norm().powi(2);
        let parts = e.mean().powi(2) + e.coefficients().iter().map(|c| c * c).sum::<f64>();
        prop_assert!((energy - parts).abs() < 1e-10 * energy);
        let back = e.synthesize();
        for (x, y) in f.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * f.l2_norm().max(1.0));
        }
    }

    #[test]
    fn telescoping(f in leaf_fn(8)) {
        for i in DyadicIndex::internal(f.depth()) {
            let (a, d) = (average(&f, i).unwrap(), martingale_difference(&f, i).unwrap());
            prop_assert!((average(&f, i.left()).unwrap() - (a + d)).abs() < 1e-13 * (1.0 + a.abs()));
            prop_assert!((average(&f, i.right()).unwrap() - (a - d)).abs() < 1e-13 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn flipped_sign_convention_changes_no_absolute_quantity((phi, psi, w) in pair_with_weight(7)) {
        // Mirroring the tree maps h_I to -h_{I'}, which is the opposite convention.
        let (pm, sm, wm) = (phi.mirrored(), psi.mirrored(), w.mirrored());
        prop_assert!(rel(key_sum(&phi, &psi, &w).unwrap(), key_sum(&pm, &sm, &wm).unwrap()) < 1e-12);
        let (a, b) = (four_terms(&phi, &psi, &w).unwrap(), four_terms(&pm, &sm, &wm).unwrap());
        prop_assert!(rel(a.total(), b.total()) < 1e-12);
        prop_assert_eq!(a2_characteristic(&w).characteristic, a2_characteristic(&wm).characteristic);
        let (m, mm) = (carleson_measure_of(&w), carleson_measure_of(&wm));
        prop_assert!(rel(m.norm_with_witness().0, mm.norm_with_witness().0) < 1e-12);
        for i in DyadicIndex::internal(phi.depth()) {
            let j = DyadicIndex::new(i.level, (1u64 << i.level) - 1 - i.position).unwrap();
            let (c, cm) = (haar_coefficient(&phi, i).unwrap(), haar_coefficient(&pm, j).unwrap());
            prop_assert!((c + cm).abs() < 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn a2_at_least_one_and_dual_symmetric(d in 1u32..10, eps in 0.0f64..0.99, seed in any::<u64>()) {
        let w: Weight64 = gen_cascade(d, eps, seed).unwrap();
        let q = a2_characteristic(&w).characteristic;
        prop_assert!(q >= 1.0);
        prop_assert_eq!(q, a2_characteristic(&dual(&w)).characteristic);
        prop_assert_eq!(carleson_measure_of(&w), carleson_measure_of(&dual(&w)));
    }

    #[test]
    fn weighted_parseval((f, _, w) in pair_with_weight(10)) {
        let mean = weighted_inner(&f, &LeafFunction64::constant(f.depth(), 1.0).unwrap(), &w).unwrap()
            / w.as_function().integral();
        let f0 = f.map(|x| x - mean);
        let energy = weighted_norm(&f0, &w).unwrap().powi(2);
        let mut parts = 0.0;
        for i in DyadicIndex::internal(f.depth()) {
            let h = weighted_haar(&w, i).unwrap().sample(f.depth()).unwrap();
            parts += weighted_inner(&f0, &h, &w).unwrap().powi(2);
        }
        prop_assert!(rel(energy, parts) < 1e-9);
    }

    #[test]
    fn key_sum_below_four_terms((phi, psi, w) in pair_with_weight(8)) {
        let key = key_sum(&phi, &psi, &w).unwrap();
        prop_assert!(key <= four_terms(&phi, &psi, &w).unwrap().total() * (1.0 + 1e-12));
    }

    #[test]
    fn maximal_function_is_monotone((phi, psi, w) in pair_with_weight(8), t in 0.0f64..1.0) {
        let small = phi.abs().zip_with(&psi.abs(), |a, b| a.min(b) * t).unwrap();
        let big = phi.abs().zip_with(&psi.abs(), |a, b| a.max(b)).unwrap();
        let (ms, mb) = (maximal_weighted(&small, &w).unwrap(), maximal_weighted(&big, &w).unwrap());
        for (a, b) in ms.values().iter().zip(mb.values()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn shift_value_ignores_coefficient_signs(
        (f1, f2, _) in pair_with_weight(6),
        n in 0u32..2,
        seed in any::<u64>(),
        mask in any::<u64>(),
    ) {
        let d = f1.depth();
        prop_assume!(n < d);
        let spec = ShiftSpec64::random(n, d, seed).unwrap();
        let flipped: Vec<f64> =
            spec.coeffs().iter().enumerate().map(|(k, &c)| if mask >> (k % 64) & 1 == 1 { -c } else { c }).collect();
        let other = ShiftSpec64::new(n, d, flipped).unwrap();
        prop_assert_eq!(form_value(&spec, &f1, &f2).unwrap(), form_value(&other, &f1, &f2).unwrap());
        let scaled = form_value(&spec, &f1.scale(-3.0), &f2).unwrap();
        prop_assert!(rel(scaled, 3.0 * form_value(&spec, &f1, &f2).unwrap()) < 1e-12);
    }
}

#[test]
fn haar_gram_is_identity() {
    for depth in 1..=8 {
        let hs: Vec<LeafFunction64> =
            DyadicIndex::internal(depth).map(|i| LeafFunction64::haar(depth, i).unwrap()).collect();
        for (a, ha) in hs.iter().enumerate() {
            for (b, hb) in hs.iter().enumerate() {
                let g = ha.inner(hb).unwrap();
                assert!((g - f64::from(u8::from(a == b))).abs() < 1e-12, "depth {depth} ({a}, {b}) = {g}");
            }
        }
    }
}

#[test]
fn single_precision_matches_double_on_small_trees() {
    let w64: Weight64 = gen_cascade(6, 0.6, 3).unwrap();
    let w32 = dyadic_lab::Weight32::from_values(6, w64.values().iter().map(|&x| x as f32).collect()).unwrap();
    let (q64, q32) = (a2_characteristic(&w64).characteristic, a2_characteristic(&w32).characteristic);
    assert!((q64 - f64::from(q32)).abs() < 1e-4 * q64);
}
