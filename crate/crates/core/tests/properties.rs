use fockcut::dynamics::Evolution;
use fockcut::linalg::{self, Mat, C64};
use fockcut::seminorm::{lassner_opnorm, lassner_sum};
use fockcut::{Band, DecayFunction, FockOperator, TruncationSpec};
use proptest::prelude::*;

fn ladder_word(spec: &TruncationSpec, word: &[bool]) -> FockOperator {
    let a = FockOperator::annihilation(spec);
    let ad = FockOperator::creation(spec);
    word.iter().fold(FockOperator::identity(&spec.space()), |acc, &raise| acc.compose(if raise { &ad } else { &a }).unwrap())
}

fn supported(d: usize, support: usize, values: &[(f64, f64)]) -> FockOperator {
    let spec = TruncationSpec::new(d, support, d - support).unwrap();
    let mut m = Mat::zeros(d + 1, d + 1);
    let mut it = values.iter().cycle();
    for r in 0..=support {
        for c in 0..=support {
            let (re, im) = it.next().unwrap();
            m[(r, c)] = C64::new(*re, *im);
        }
    }
    let band = Band { lower: support, raise: support };
    FockOperator::from_parts(spec.space(), m, Some(d), band, Some(support), None, "X").unwrap()
}

fn entries() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn products_are_exact_on_their_trusted_region(word in prop::collection::vec(any::<bool>(), 1..=4), d in 6usize..14) {
        let small = TruncationSpec::new(d, d - 1, 1).unwrap();
        let large = TruncationSpec::new(2 * d, d - 1, d + 1).unwrap();
        let x = ladder_word(&small, &word);
        let y = ladder_word(&large, &word);
        let t = x.trusted().expect("ladder words keep a trusted corner");
        prop_assert!(t + word.len() >= d - 1);
        for r in 0..=t {
            for c in 0..=t {
                prop_assert!((x.entry(r, c) - y.entry(r, c)).norm() <= 1e-12 * (1.0 + y.entry(r, c).norm()));
            }
        }
    }

    #[test]
    fn summed_seminorm_is_a_seminorm(u in entries(), v in entries(), re in -3.0..3.0f64, im in -3.0..3.0f64, k in 0u32..3) {
        let f = DecayFunction::exponential(1.0);
        let x = supported(10, 5, &u);
        let y = supported(10, 5, &v);
        let nx = lassner_sum(&x, &f, k).unwrap().upper();
        let ny = lassner_sum(&y, &f, k).unwrap().upper();
        let sum = lassner_sum(&x.add(&y).unwrap(), &f, k).unwrap().upper();
        prop_assert!(nx >= 0.0);
        prop_assert!(sum <= (nx + ny) * (1.0 + 1e-12) + 1e-14);
        let c = C64::new(re, im);
        let scaled = lassner_sum(&x.scale(c), &f, k).unwrap().upper();
        prop_assert!((scaled - c.norm() * nx).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn operator_norm_form_is_adjoint_invariant(u in entries(), k in 0u32..3) {
        let f = DecayFunction::stretched(1.5);
        let x = supported(9, 6, &u);
        let a = lassner_opnorm(&x, &f, k).unwrap();
        let b = lassner_opnorm(&x.adjoint(), &f, k).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn faster_decay_gives_smaller_seminorm(u in entries(), k in 0u32..3, fast in 1.0..3.0f64) {
        let x = supported(10, 7, &u);
        let slow = DecayFunction::exponential(1.0);
        let quick = DecayFunction::exponential(1.0 + fast);
        prop_assert!(lassner_sum(&x, &quick, k).unwrap().upper() <= lassner_sum(&x, &slow, k).unwrap().upper() + 1e-14);
        prop_assert!(lassner_opnorm(&x, &quick, k).unwrap() <= lassner_opnorm(&x, &slow, k).unwrap() + 1e-14);
    }

    #[test]
    fn cutoff_evolution_is_an_automorphism(l in 1usize..6, g in -1.0..1.0f64, s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let spec = TruncationSpec::with_guard(l, 4).unwrap();
        let a = FockOperator::annihilation(&spec);
        let al = a.cutoff(l, 0).unwrap();
        let h = FockOperator::number(&spec).cutoff(l, 0).unwrap()
            .add_scaled(linalg::real(g), &al.add(&al.adjoint()).unwrap()).unwrap();
        let ev = Evolution::new(&h).unwrap();
        let ad = a.adjoint();
        let x = ev.evolve(&a, t).unwrap().operator;
        let xd = ev.evolve(&ad, t).unwrap().operator;
        prop_assert!(x.adjoint().deviation(&xd).unwrap() < 1e-11);
        let prod = ev.evolve(&a.compose(&ad).unwrap(), t).unwrap().operator;
        prop_assert!(prod.deviation(&x.compose(&xd).unwrap()).unwrap() < 1e-10);
        let twice = ev.evolve(&ev.evolve(&a, s).unwrap().operator, t).unwrap().operator;
        prop_assert!(twice.deviation(&ev.evolve(&a, s + t).unwrap().operator).unwrap() < 1e-10);
    }
}
