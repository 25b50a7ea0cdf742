use gkloc::classify::diff_parity_ok;
use gkloc::lengths::e_p;
use gkloc::padic_core::prime_factors;
use gkloc::qform::{
    diagonal_entries, diagonalize, hasse_invariant, represented_over, represents_locally, DiagonalForm, QuadSpace,
    SymForm,
};
use gkloc::{hilbert_symbol, Place, PrimeContext, Rat, UnitClass};
use proptest::prelude::*;

fn nonzero_rat() -> impl Strategy<Value = Rat> {
    (prop_oneof![-500i64..=-1, 1i64..=500], 1i64..=80).prop_map(|(n, d)| Rat::new(n.into(), d.into()))
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11])
}

fn nonsingular() -> impl Strategy<Value = SymForm> {
    prop::array::uniform6(-9i64..=9)
        .prop_map(|[a, b, c, d, e, f]| SymForm::from_ints(3, &[a, b, c, b, d, e, c, e, f]).unwrap())
        .prop_filter("nonsingular", |s| s.det() != Rat::from_integer(0.into()))
}

/// Row operations and swaps starting from the identity.
fn unimodular() -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((0usize..3, 0usize..3, -3i64..=3), 1..8).prop_map(|ops| {
        let mut u = [[1i64, 0, 0], [0, 1, 0], [0, 0, 1]];
        for (i, j, k) in ops {
            if i == j {
                u.swap(i, (i + 1) % 3);
            } else {
                let rj = u[j];
                for (x, y) in u[i].iter_mut().zip(rj) {
                    *x += k * y;
                }
            }
        }
        u.iter().flatten().map(|&x| Rat::from_integer(x.into())).collect()
    })
}

fn unit() -> impl Strategy<Value = UnitClass> {
    prop_oneof![Just(UnitClass::One), Just(UnitClass::Delta)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hilbert_product_formula(a in nonzero_rat(), b in nonzero_rat()) {
        let mut places = vec![Place::Real, Place::Finite(2)];
        for x in [&a, &b] {
            for q in prime_factors(x.numer()).into_iter().chain(prime_factors(x.denom())) {
                places.push(Place::Finite(q));
            }
        }
        places.sort();
        places.dedup();
        let prod: i8 = places.iter().map(|&v| hilbert_symbol(&a, &b, v).unwrap()).product();
        prop_assert_eq!(prod, 1);
    }

    #[test]
    fn chi_is_multiplicative(p in prime(), x in 1i64..1000, y in 1i64..1000) {
        let c = PrimeContext::new(p).unwrap();
        prop_assume!(x % p as i64 != 0 && y % p as i64 != 0);
        prop_assert_eq!(c.chi_int(x * y), c.chi_int(x) * c.chi_int(y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn diagonal_form_is_gl_invariant(p in prime(), s in nonsingular(), u in unimodular()) {
        let c = PrimeContext::new(p).unwrap();
        let d1 = diagonalize(&c, &s).unwrap();
        let d2 = diagonalize(&c, &s.conjugate(&u)).unwrap();
        prop_assert_eq!(&d1, &d2);
        prop_assert_eq!(
            hasse_invariant(&d1.entries(), Place::Finite(p)),
            hasse_invariant(&diagonal_entries(&c, &s).unwrap(), Place::Finite(p))
        );
    }

    #[test]
    fn diff_is_odd_for_positive_definite(a in prop::array::uniform9(-3i64..=3), d in prop::sample::select(vec![2i64, 3, 5, 6, 7, 13])) {
        let mut m = [0i64; 9];
        for i in 0..3 {
            for j in 0..3 {
                m[3 * i + j] = (0..3).map(|k| a[3 * i + k] * a[3 * j + k]).sum::<i64>() + i64::from(i == j);
            }
        }
        prop_assert!(diff_parity_ok(&SymForm::from_ints(3, &m).unwrap(), d).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exactly_one_space_represents(p in prime(), s in nonsingular()) {
        let c = PrimeContext::new(p).unwrap();
        let entries = diagonal_entries(&c, &s).unwrap();
        let by = |q: QuadSpace| represented_over(&entries, &q.diagonal(&c), Place::Finite(p)).unwrap();
        prop_assert_ne!(by(QuadSpace::V), by(QuadSpace::VPrime));
        let t = diagonalize(&c, &s).unwrap();
        prop_assert_eq!(by(QuadSpace::VPrime), represents_locally(&t, QuadSpace::VPrime).unwrap());
    }

    #[test]
    fn length_grows_with_exponents(p in prime(), a2 in 0i64..5, gap in 0i64..5, u in prop::collection::vec(unit(), 3)) {
        let c = PrimeContext::new(p).unwrap();
        let a3 = a2 + gap;
        let t = DiagonalForm::raw(c, vec![0, a2, a3], u.clone());
        let plain = DiagonalForm::raw(c, vec![0, a2, a3], vec![UnitClass::One; 3]);
        let v = e_p(&t).unwrap().value;
        prop_assert_eq!(&v, &e_p(&plain).unwrap().value);
        let up3 = e_p(&DiagonalForm::raw(c, vec![0, a2, a3 + 1], u.clone())).unwrap().value;
        let up2 = e_p(&DiagonalForm::raw(c, vec![0, a2 + 1, a3 + 1], u)).unwrap().value;
        prop_assert!(up3 > v);
        prop_assert!(up2 > v);
    }
}
