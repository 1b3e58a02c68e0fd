use gibbslab_core::bitshift::{cylinder_of_values, ChannelParams};
use gibbslab_core::oracle::brute_channel_distribution;
use gibbslab_core::relent::{tv_identity_check, window_relative_entropy};
use gibbslab_core::weak_gibbs::{finite_volume_mu, glue_tail, WGParams};
use gibbslab_core::{
    tv_distance, Alphabet, Configuration, MeasureProvider, NumMode, ProbValue, TableProvider, Window,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn r(n: i64, d: i64) -> ProbValue {
    ProbValue::ratio(n, d)
}

fn channel() -> impl Strategy<Value = ChannelParams> {
    (2i32..=3, 1i32..=2, 0i64..=12).prop_flat_map(|(d, span, eps)| {
        prop::collection::vec(1i64..=5, (span + 1) as usize).prop_map(move |raw| {
            let total: i64 = raw.iter().sum();
            let p = raw.iter().map(|&w| r(w, total)).collect();
            ChannelParams::new(d, d + span, p, r(eps, 36)).unwrap()
        })
    })
}

fn table(alphabet: Alphabet, window: Window, raw: Vec<i64>, label: &str) -> TableProvider {
    let total: i64 = raw.iter().sum();
    TableProvider::new(alphabet, window, raw.into_iter().map(|w| r(w, total)).collect(), label).unwrap()
}

/// Two strictly positive tables on `[lo, lo+size-1]` over a binary alphabet.
fn table_pair() -> impl Strategy<Value = (TableProvider, TableProvider, Window)> {
    (1usize..=5, -2i64..=2).prop_flat_map(|(size, lo)| {
        let n = 1usize << size;
        (
            prop::collection::vec(1i64..=9, n),
            prop::collection::vec(1i64..=9, n),
            Just(Window::new(lo, lo + size as i64 - 1).unwrap()),
        )
            .prop_map(|(a, b, w)| (table(Alphabet::binary(), w, a, "nu"), table(Alphabet::binary(), w, b, "mu"), w))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channel_law_is_consistent_and_stationary(params in channel(), raw in prop::collection::vec(0usize..16, 1..=4)) {
        let symbols = params.output_alphabet().symbols().to_vec();
        let y: Vec<i32> = raw.iter().map(|&i| symbols[i % symbols.len()]).collect();
        let base = cylinder_of_values(&params, &y).unwrap();
        let mut right = ProbValue::zero(NumMode::Rational);
        let mut left = ProbValue::zero(NumMode::Rational);
        for &s in &symbols {
            let mut a = y.clone();
            a.push(s);
            right = &right + &cylinder_of_values(&params, &a).unwrap();
            let mut b = vec![s];
            b.extend_from_slice(&y);
            left = &left + &cylinder_of_values(&params, &b).unwrap();
        }
        prop_assert_eq!(&right, &base);
        prop_assert_eq!(&left, &base);
    }

    #[test]
    fn channel_forward_agrees_with_oracle(params in channel(), len in 1usize..=3) {
        let dist = brute_channel_distribution(&params, len).unwrap();
        let mut total = ProbValue::zero(NumMode::Rational);
        for (w, p) in &dist {
            prop_assert_eq!(&cylinder_of_values(&params, w).unwrap(), p);
            total = &total + p;
        }
        prop_assert_eq!(total, r(1, 1));
    }

    #[test]
    fn relative_entropy_is_nonnegative((nu, mu, w) in table_pair()) {
        let h = window_relative_entropy(&nu, &mu, w).unwrap();
        prop_assert!(h.value.to_f64() >= -1e-12);
        let self_h = window_relative_entropy(&nu, &nu, w).unwrap();
        prop_assert!(self_h.identical);
        prop_assert_eq!(self_h.value.to_f64(), 0.0);
    }

    #[test]
    fn tv_identity_holds_exactly((nu, mu, w) in table_pair(), a in 0usize..5, b in 0usize..5) {
        let size = w.size();
        let (a, b) = ((a % size).min(b % size), (a % size).max(b % size));
        let lam = Window::new(w.lo() + a as i64, w.lo() + b as i64).unwrap();
        let check = tv_identity_check(&nu, &mu, lam, w).unwrap();
        prop_assert!(check.equal);
        prop_assert_eq!(check.lhs, check.rhs);
    }

    #[test]
    fn tv_distance_is_a_bounded_symmetric_sum((nu, mu, w) in table_pair()) {
        let law = |p: &TableProvider| -> BTreeMap<Vec<i32>, ProbValue> {
            gibbslab_core::provider::words(p.alphabet(), w.size())
                .map(|v| {
                    let c = Configuration::word(Alphabet::binary(), w.lo(), v.clone()).unwrap();
                    (v, p.cylinder(&c).unwrap())
                })
                .collect()
        };
        let (a, b) = (law(&nu), law(&mu));
        let d = tv_distance(&a, &b).unwrap();
        prop_assert_eq!(&d, &tv_distance(&b, &a).unwrap());
        prop_assert!(d >= r(0, 1) && d <= r(2, 1));
        prop_assert!(tv_distance(&a, &a).unwrap().is_zero());
    }

    #[test]
    fn glue_takes_head_then_tail(
        omega in prop::collection::vec(0i32..=1, 1..40),
        eta in prop::collection::vec(0i32..=1, 1..40),
        n in 1usize..40,
    ) {
        let o = Configuration::binary_zero_tail(1, omega.clone()).unwrap();
        let e = Configuration::binary_zero_tail(1, eta.clone()).unwrap();
        let g = glue_tail(&o, &e, n).unwrap();
        for i in 1..=45i64 {
            let want = if i as usize <= n { o.get(i) } else { e.get(i) };
            prop_assert_eq!(g.get(i), want, "site {}", i);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn finite_volume_measure_is_normalised_and_consistent(m in (1usize..=4).prop_map(|h| 2 * h), rho in 1i64..=7) {
        let mu = finite_volume_mu(&WGParams::new(r(rho, 8), m).unwrap()).unwrap();
        let alphabet = Alphabet::binary();
        let mut total = ProbValue::zero(NumMode::Rational);
        for w in gibbslab_core::provider::words(&alphabet, m + 1) {
            total = &total + &mu.cylinder(&Configuration::word(alphabet.clone(), 0, w).unwrap()).unwrap();
        }
        prop_assert_eq!(total, r(1, 1));
        for w in gibbslab_core::provider::words(&alphabet, m - 1) {
            let short = mu.cylinder(&Configuration::word(alphabet.clone(), 0, w.clone()).unwrap()).unwrap();
            let mut sum = ProbValue::zero(NumMode::Rational);
            for s in [0, 1] {
                let mut longer = w.clone();
                longer.push(s);
                sum = &sum + &mu.cylinder(&Configuration::word(alphabet.clone(), 0, longer).unwrap()).unwrap();
            }
            prop_assert_eq!(sum, short);
        }
    }
}
