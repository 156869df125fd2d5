mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use wsal::engine::in_disagreement_region;
use wsal::hypotheses::{
    diff_counts, empirical_error, Classifier, DisagreementRegion, Disc, LabeledExample, Line, Space, Tau,
    TripleExample,
};
use wsal::Error;

fn line_examples() -> impl Strategy<Value = Vec<LabeledExample<f64>>> {
    prop::collection::vec((0u8..9, any::<bool>()), 0..12)
        .prop_map(|v| v.into_iter().map(|(x, y)| LabeledExample::new(x as f64 / 8.0, label(y))).collect())
}

fn disc_examples(max: usize) -> impl Strategy<Value = Vec<LabeledExample<[f64; 2]>>> {
    prop::collection::vec((0.0..std::f64::consts::TAU, 0.05f64..1.0, any::<bool>()), 1..max).prop_map(|v| {
        v.into_iter().map(|(a, r, y)| LabeledExample::new([r * a.cos(), r * a.sin()], label(y))).collect()
    })
}

fn tau() -> impl Strategy<Value = Tau> {
    (0u64..6, 1u64..8).prop_map(|(n, d)| Tau::new(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn line_cons_learn_is_optimal(data in line_examples().prop_filter("nonempty", |d| !d.is_empty()),
                                  cons in line_examples().prop_map(|mut c| { c.truncate(3); c })) {
        match (brute_cons_line(&cons, &data), Line::cons_learn(&cons, &data)) {
            (Some(best), Ok(h)) => {
                prop_assert_eq!(empirical_error(&h, &data).unwrap().errors, best);
                for c in &cons {
                    prop_assert_eq!(h.predict(&c.point), c.label);
                }
            }
            (None, Err(e)) => prop_assert_eq!(e, Error::Infeasible),
            (b, h) => prop_assert!(false, "brute {:?} vs {:?}", b, h),
        }
    }

    #[test]
    fn line_region_matches_enumeration(data in line_examples().prop_filter("nonempty", |d| !d.is_empty()),
                                       tau in tau(), probes in prop::collection::vec(0u8..33, 1..8)) {
        let mut sorted = data.clone();
        let region = Line::build_region(&mut sorted, tau).unwrap();
        for p in probes {
            let x = p as f64 / 32.0;
            let expect = brute_region_line(&data, tau, x);
            prop_assert_eq!(in_disagreement_region::<Line>(&data, tau, &x).unwrap(), expect, "x {}", x);
            prop_assert_eq!(region.contains(&x), expect, "cached x {}", x);
        }
    }

    #[test]
    fn line_diff_erm_is_optimal(raw in prop::collection::vec((0u8..9, any::<bool>(), any::<bool>()), 1..12),
                                budget in 0u64..4) {
        let triples: Vec<TripleExample<f64>> = raw
            .into_iter()
            .map(|(x, s, w)| TripleExample { point: x as f64 / 8.0, label_strong: label(s), label_weak: label(w) })
            .collect();
        let h = Line::cost_sensitive_diff_erm(&triples, budget).unwrap();
        let (pos, fn_count) = diff_counts(&h, &triples);
        prop_assert!(fn_count <= budget);
        prop_assert_eq!(pos, brute_diff_line(&triples, budget));
    }

    #[test]
    fn disc_cons_learn_is_optimal(data in disc_examples(10), cons in disc_examples(3)) {
        match (brute_cons_disc(&cons, &data), Disc::cons_learn(&cons, &data)) {
            (Some(best), Ok(h)) => {
                prop_assert_eq!(empirical_error(&h, &data).unwrap().errors, best);
                for c in &cons {
                    prop_assert_eq!(h.predict(&c.point), c.label);
                }
            }
            (None, Err(e)) => prop_assert_eq!(e, Error::Infeasible),
            (b, h) => prop_assert!(false, "brute {:?} vs {:?}", b, h),
        }
    }

    #[test]
    fn disc_region_matches_enumeration(data in disc_examples(10), tau in tau(), probes in disc_examples(6)) {
        let mut sorted = data.clone();
        let region = Disc::build_region(&mut sorted, tau).unwrap();
        for p in probes {
            let expect = brute_region_disc(&data, tau, p.point);
            prop_assert_eq!(in_disagreement_region::<Disc>(&data, tau, &p.point).unwrap(), expect);
            prop_assert_eq!(region.contains(&p.point), expect);
        }
    }

    #[test]
    fn disc_diff_erm_is_optimal(pts in disc_examples(12), weak in prop::collection::vec(any::<bool>(), 12),
                                budget in 0u64..4) {
        let triples: Vec<TripleExample<[f64; 2]>> = pts
            .iter()
            .zip(weak)
            .map(|(e, w)| TripleExample { point: e.point, label_strong: e.label, label_weak: label(w) })
            .collect();
        let h = Disc::cost_sensitive_diff_erm(&triples, budget).unwrap();
        let (pos, fn_count) = diff_counts(&h, &triples);
        prop_assert!(fn_count <= budget);
        prop_assert_eq!(pos, brute_diff_disc(&triples, budget));
    }

    #[test]
    fn erm_attains_the_unconstrained_minimum(data in line_examples().prop_filter("nonempty", |d| !d.is_empty())) {
        let mut d = data.clone();
        let (h, err) = Line::erm(&mut d).unwrap();
        prop_assert_eq!(err.errors, brute_cons_line(&[], &data).unwrap());
        prop_assert_eq!(empirical_error(&h, &data).unwrap(), err);
    }
}

#[test]
fn empty_inputs() {
    let conflict = [LabeledExample::new(0.3, label(true)), LabeledExample::new(0.3, label(false))];
    assert_eq!(Line::cons_learn(&conflict, &[]).map(|_| ()), Err(Error::Infeasible));
    assert!(Line::erm(&mut []).is_err());
    assert!(in_disagreement_region::<Disc>(&[], Tau::new(1, 2), &[0.1, 0.1]).is_err());
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let t = random_triples_line(&mut rng, 5);
    assert!(Line::cost_sensitive_diff_erm(&t, 0).is_ok());
}
