use gkloc::density::{a_polynomial, derivative_at_one, NamedForm};
use gkloc::lengths::e_p;
use gkloc::qform::{represented_over, represents_locally, rats, DiagonalForm, QuadSpace};
use gkloc::{Place, PrimeContext, Rat, UnitClass};
use num_traits::One;

fn sweep(p: u64) -> Vec<DiagonalForm> {
    let c = PrimeContext::new(p).unwrap();
    let mut out = Vec::new();
    for a2 in 0..=4i64 {
        for a3 in a2..=4 - a2 {
            for u in 0..8 {
                let units = (0..3).map(|i| if u >> i & 1 == 1 { UnitClass::Delta } else { UnitClass::One }).collect();
                out.push(DiagonalForm::raw(c, vec![0, a2, a3], units));
            }
        }
    }
    out
}

#[test]
fn inert_derivative_equals_length() {
    for p in [3u64, 5] {
        let pm2 = Rat::new(1.into(), (p * p).into());
        let factor = (Rat::one() + &pm2) * (Rat::one() - &pm2);
        let mut hits = 0;
        for t in sweep(p) {
            let a = a_polynomial(NamedForm::S, &t).unwrap();
            let represented = represents_locally(&t, QuadSpace::V).unwrap();
            // the value at X = 1 vanishes exactly off the represented forms
            assert_eq!(a.eval(&Rat::one()) == Rat::from_integer(0.into()), !represented, "{t}");
            if !represented {
                let e = e_p(&t).unwrap();
                assert!(e.in_domain);
                assert_eq!(derivative_at_one(&a), -&factor * &e.value, "{t}");
                hits += 1;
            }
        }
        assert!(hits > 10);
    }
}

#[test]
fn split_derivative_equals_length() {
    for p in [3u64, 5] {
        let c = PrimeContext::new(p).unwrap();
        let pm2 = Rat::new(1.into(), (p * p).into());
        let factor = (Rat::one() - &pm2) * (Rat::one() - &pm2);
        let h4 = rats(&[1, -1, 1, -1]);
        let mut hits = 0;
        for t in sweep(p) {
            let a = a_polynomial(NamedForm::H4, &t).unwrap();
            let represented = represented_over(&t.entries(), &h4, Place::Finite(c.p())).unwrap();
            assert_eq!(a.eval(&Rat::one()) == Rat::from_integer(0.into()), !represented, "{t}");
            if !represented {
                assert_eq!(derivative_at_one(&a), -&factor * e_p(&t).unwrap().value, "{t}");
                hits += 1;
            }
        }
        assert!(hits > 10);
    }
}
