use gkloc::classify::{classify_cycle, is_regular, Locus, PrimeCase};
use gkloc::eislocal::{
    degree_factor, whittaker_derivative, whittaker_derivative_via_density, whittaker_value,
    whittaker_value_via_density, GammaToken,
};
use gkloc::qform::{DiagonalForm, SymForm};
use gkloc::{Error, Place, PrimeContext, Rat, UnitClass};
use num_traits::Zero;

fn forms(p: u64, max_sum: i64) -> Vec<DiagonalForm> {
    let c = PrimeContext::new(p).unwrap();
    let mut out = Vec::new();
    for a2 in 0..=max_sum {
        for a3 in a2..=max_sum - a2 {
            for m in 0..8u32 {
                let u = (0..3).map(|i| if m >> i & 1 == 1 { UnitClass::Delta } else { UnitClass::One }).collect();
                out.push(DiagonalForm::raw(c, vec![0, a2, a3], u));
            }
        }
    }
    out
}

#[test]
fn derivative_two_paths_agree() {
    for p in [3u64, 5] {
        for case in [PrimeCase::Inert, PrimeCase::Split] {
            let mut n = 0;
            for t in forms(p, 4) {
                match whittaker_derivative(&t, case) {
                    Ok(closed) => {
                        assert_eq!(closed, whittaker_derivative_via_density(&t, case).unwrap(), "p={p} {case:?} {t}");
                        assert_eq!(closed.gamma, GammaToken::V);
                        n += 1;
                    }
                    Err(Error::Unsupported(_)) => {}
                    Err(e) => panic!("{t}: {e}"),
                }
            }
            assert!(n >= 8, "p={p} {case:?}: only {n} forms");
        }
    }
}

#[test]
fn value_two_paths_agree() {
    for case in [PrimeCase::Inert, PrimeCase::Split] {
        for t in forms(3, 2) {
            let Ok(closed) = whittaker_value(&t, case) else { continue };
            assert!(!closed.magnitude.is_zero());
            let prec = t.exps()[2] as u32 + 1;
            assert_eq!(closed, whittaker_value_via_density(&t, case, prec).unwrap(), "{case:?} {t}");
        }
    }
}

#[test]
fn components_exactly_when_p_divides_t() {
    let c = PrimeContext::new(3).unwrap();
    let mut seen = [false, false];
    for seed in 0..200i64 {
        let g = |k: i64| (seed * 7919 + k * 104729) % 11 - 5;
        let scale = if seed % 3 == 0 { 3 } else { 1 };
        let m: Vec<i64> = [g(1), g(2), g(3), g(2), g(4), g(5), g(3), g(5), g(6)].iter().map(|x| x * scale).collect();
        let s = SymForm::from_ints(3, &m).unwrap();
        if s.det().is_zero() {
            continue;
        }
        let divisible = m.iter().all(|x| x % 3 == 0);
        let locus = classify_cycle(&c, &s, PrimeCase::Inert).unwrap().locus;
        assert_eq!(locus == Locus::ContainsComponents, divisible, "{m:?}");
        seen[divisible as usize] = true;
    }
    assert!(seen[0] && seen[1]);
}

#[test]
fn degree_factor_needs_regularity() {
    let t = SymForm::from_ints(3, &[1, 0, 0, 0, 2, 0, 0, 0, 3]).unwrap();
    let f = degree_factor(&t, 2, 1).unwrap();
    assert_eq!((f.prime, f.e_p.clone(), f.local_form.as_str()), (3, Rat::from_integer(1.into()), "1,D,p"));
    // Diff = {3} but 3 divides the level
    assert!(matches!(degree_factor(&t, 2, 3), Err(Error::NotRegular(_))));
    // 3 is inert in Q(sqrt 2): a T divisible by 3 with Diff = {3} is not regular
    let mut found = 0;
    for (x, y, z) in [(1, 1, 1), (1, 1, 2), (1, 2, 2), (1, 2, 3), (1, 1, 3), (2, 2, 3), (1, 3, 3), (1, 2, 5)] {
        let div = SymForm::from_ints(3, &[3 * x, 0, 0, 0, 3 * y, 0, 0, 0, 3 * z]).unwrap();
        let reg = is_regular(&div, 2, 1).unwrap();
        if reg.diff.iter().collect::<Vec<_>>() == [&Place::Finite(3)] {
            assert!(!reg.regular, "{x},{y},{z}");
            assert!(matches!(degree_factor(&div, 2, 1), Err(Error::NotRegular(_))));
            found += 1;
        }
    }
    assert!(found > 0);
}
