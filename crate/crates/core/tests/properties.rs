use dh_shadow::betti::bubble_swaps;
use dh_shadow::betti::BubbleOrder;
use dh_shadow::hecke::{apply_word, deligne_normalize, normal_form, GroupoidWord};
use dh_shadow::kms::{flow, reduce_mod_one, same_mod_lattice, KmsPoint};
use dh_shadow::random::Sampler;
use dh_shadow::rh::{conjugate_shadow, monodromy_shadow};
use dh_shadow::twistor::{multichoose, sym_check, weight_table, WeightProfile};
use dh_shadow::Complex64;
use proptest::prelude::*;

fn complex(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(|(re, im)| Complex64::new(re, im))
}

fn kms_point() -> impl Strategy<Value = KmsPoint> {
    (-3.0..3.0f64, complex(3.0)).prop_map(|(a, alpha)| KmsPoint::new(a, alpha))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flow_is_lattice_equivariant(x in kms_point(), k in -20i64..20, lambda in complex(4.0)) {
        let f0 = flow(x, lambda);
        let f1 = flow(x.lattice_shift(k), lambda);
        prop_assert!((f1.p - f0.p - k as f64).abs() < 1e-12);
        prop_assert!((f1.e - f0.e + lambda * k as f64).norm() < 1e-12);
    }

    #[test]
    fn flow_at_zero_is_the_kms_point(x in kms_point()) {
        let f = flow(x, Complex64::new(0.0, 0.0));
        prop_assert_eq!(f.p, x.a);
        prop_assert_eq!(f.e, x.alpha);
    }

    #[test]
    fn lattice_shift_is_invisible_mod_one(x in kms_point(), k in -50i64..50) {
        prop_assert!(same_mod_lattice(x, x.lattice_shift(k), 1e-12));
        let r = reduce_mod_one(x.a + k as f64);
        prop_assert!(r > -0.5 && r <= 0.5);
    }

    #[test]
    fn word_times_inverse_is_identity(seed in any::<u64>(), len in 0usize..7) {
        let mut s = Sampler::new(seed);
        let r = s.index(1, 4);
        let k = s.index(1, 3);
        let labels = s.labels(k);
        let w = s.word(&labels, r, len);
        let nf = normal_form(&w.after(&w.inverse()), r, &labels).unwrap();
        prop_assert!(nf.is_identity());
        let nf = normal_form(&w.inverse().after(&w), r, &labels).unwrap();
        prop_assert!(nf.is_identity());
    }

    #[test]
    fn normal_forms_compose_like_words(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let r = s.index(1, 4);
        let k = s.index(1, 2);
        let labels = s.labels(k);
        let (l1, l2) = (s.index(0, 4), s.index(0, 4));
        let w1 = s.word(&labels, r, l1);
        let w2 = s.word(&labels, r, l2);
        let whole = normal_form(&w2.after(&w1), r, &labels).unwrap();
        let parts = normal_form(&w2, r, &labels).unwrap().compose(&normal_form(&w1, r, &labels).unwrap());
        prop_assert!(whole.same_action(&parts));
        prop_assert!(whole.inverse().compose(&whole).is_identity());
    }

    #[test]
    fn normal_form_acts_like_its_word(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let r = s.index(1, 4);
        let k = s.index(1, 2);
        let lambda = s.annulus(0.3, 2.0);
        let shadow = s.residue_shadow(r, k, lambda);
        let len = s.index(0, 6);
        let w = s.word(&shadow.labels, r, len);
        let direct = apply_word(&w, &shadow, 1e-9);
        let nf = normal_form(&w, r, &shadow.labels).unwrap();
        match direct {
            Ok(out) => {
                let via = nf.apply(&shadow).unwrap();
                prop_assert!(via.approx_eq(&out, 1e-9));
                prop_assert!(nf.domain_violation(&shadow, 1e-9).is_none());
            }
            Err(_) => prop_assert!(nf.domain_violation(&shadow, 1e-9).is_some()),
        }
    }

    #[test]
    fn words_round_trip_through_text(seed in any::<u64>(), len in 0usize..8) {
        let mut s = Sampler::new(seed);
        let r = s.index(2, 4);
        let labels = s.labels(2);
        let w = s.word(&labels, r, len);
        let parsed: GroupoidWord = w.to_string().parse().unwrap();
        prop_assert!(normal_form(&parsed, r, &labels).unwrap()
            .same_action(&normal_form(&w, r, &labels).unwrap()));
    }

    #[test]
    fn deligne_lands_in_window(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let r = s.index(1, 4);
        let lambda = s.annulus(0.2, 3.0);
        let k = s.index(1, 3);
        let mut shadow = s.residue_shadow(r, k, lambda);
        for t in shadow.theta.iter_mut().flatten() {
            *t *= 4.0;
        }
        let (word, normalized) = deligne_normalize(&shadow, 1e-9).unwrap();
        let replay = apply_word(&word, &shadow, 1e-9).unwrap();
        prop_assert!(replay.approx_eq(&normalized, 1e-9));
        for t in normalized.theta.iter().flatten() {
            let x = (t / lambda).re;
            prop_assert!(x > -1.0 && x <= 0.0, "Re(θ/λ) = {x}");
        }
    }

    #[test]
    fn conjugate_chart_inverts_monodromy(theta in complex(2.0), r in 0.4..2.5f64, phi in 0.0..std::f64::consts::TAU) {
        let lambda = Complex64::from_polar(r, phi);
        let mut s = Sampler::new(0);
        let mut shadow = s.residue_shadow(1, 1, lambda);
        shadow.theta[0][0] = theta;
        let cs = conjugate_shadow(&shadow).unwrap();
        let mu = monodromy_shadow(theta, lambda).unwrap();
        let mu_c = monodromy_shadow(cs.theta[0][0], cs.lambda).unwrap();
        prop_assert!((mu * mu_c - 1.0).norm() < 1e-9 * mu.norm().max(mu_c.norm()).max(1.0));
    }

    #[test]
    fn bubble_decompositions_sort(seed in any::<u64>(), r in 1usize..7) {
        let mut s = Sampler::new(seed);
        let sigma = s.permutation(r);
        for order in [BubbleOrder::Forward, BubbleOrder::Backward, BubbleOrder::OddEven] {
            let mut keys = sigma.clone();
            for p in bubble_swaps(&sigma, order) {
                prop_assert!(keys[p] > keys[p + 1]);
                keys.swap(p, p + 1);
            }
            prop_assert_eq!(&keys, &(0..r).collect::<Vec<_>>());
        }
    }

    #[test]
    fn weight_table_counts_all_monomials(n0 in 0u32..6, n1 in 0u32..6, n2 in 0u32..6, d in 0u32..8) {
        prop_assume!(n0 + n1 + n2 > 0);
        let p = WeightProfile::new(n0, n1, n2).unwrap();
        let t = weight_table(&p, d);
        prop_assert_eq!(t.total(), multichoose(n0 + n1 + n2, d));
        prop_assert!(t.entries.keys().all(|&k| k <= 2 * d));
    }

    #[test]
    fn sym_check_holds(n0 in 0u32..4, n1 in 0u32..4, n2 in 0u32..4, d in 0u32..5) {
        prop_assume!(n0 + n1 + n2 > 0);
        prop_assert!(sym_check(&WeightProfile::new(n0, n1, n2).unwrap(), d).pass);
    }
}
