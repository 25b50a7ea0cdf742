use gkloc::density::{
    closed_form, count_at, count_naive, density_bruteforce, diag_from_ints, kitaoka_h4, NamedForm,
};
use gkloc::qform::{DiagonalForm, SymForm};
use gkloc::{PrimeContext, Rat, UnitClass};
use num_traits::One;

fn ctx(p: u64) -> PrimeContext {
    PrimeContext::new(p).unwrap()
}

fn with_hyperbolic(ctx: &PrimeContext, s: NamedForm, r: usize) -> DiagonalForm {
    let mut e = s.integer_entries(ctx).to_vec();
    for _ in 0..r {
        e.extend([1, -1]);
    }
    diag_from_ints(ctx, &e)
}

#[test]
fn fast_paths_match_naive_count() {
    let c = ctx(3);
    let s = SymForm::from_ints(3, &[1, 0, 0, 0, 2, 1, 0, 1, 3]).unwrap();
    for t in [
        SymForm::from_ints(1, &[2]).unwrap(),
        SymForm::from_ints(2, &[1, 0, 0, 3]).unwrap(),
        SymForm::from_ints(2, &[3, 0, 0, 3]).unwrap(),
        SymForm::from_ints(2, &[0, 0, 0, 0]).unwrap(),
    ] {
        let fast = count_at(&c, &s, &t, 1).unwrap().count;
        assert_eq!(fast, count_naive(&c, &s, &t, 1));
    }
    let s2 = SymForm::from_ints(2, &[1, 0, 0, 6]).unwrap();
    let t2 = SymForm::from_ints(2, &[3, 0, 0, 6]).unwrap();
    assert_eq!(count_at(&c, &s2, &t2, 2).unwrap().count, count_naive(&c, &s2, &t2, 2));
}

#[test]
fn unary_and_binary_closed_forms_match_counts() {
    for p in [3u64, 5] {
        let c = ctx(p);
        for named in [NamedForm::S, NamedForm::H4] {
            for r in 0..=1usize {
                if p == 5 && r == 1 {
                    continue;
                }
                let s = with_hyperbolic(&c, named, r);
                let base = named.diagonal(&c);
                let mut targets = Vec::new();
                for a in 0..=1 {
                    for u in [UnitClass::One, UnitClass::Delta] {
                        targets.push(DiagonalForm::raw(c, vec![a], vec![u]));
                    }
                }
                for (a1, a2) in [(0, 0), (0, 1), (1, 1)] {
                    for u1 in [UnitClass::One, UnitClass::Delta] {
                        for u2 in [UnitClass::One, UnitClass::Delta] {
                            targets.push(DiagonalForm::raw(c, vec![a1, a2], vec![u1, u2]));
                        }
                    }
                }
                for t in targets {
                    let poly = closed_form(&base, &t).unwrap();
                    let want = poly.eval_at_r(&c, r as u32);
                    let got = count_at(&c, &s.to_symform(), &t.to_symform(), 2).unwrap();
                    assert_eq!(got.density, want, "p={p} S={named:?} r={r} T={t}");
                }
            }
        }
    }
}

#[test]
fn kitaoka_matches_count_at_r0() {
    let c = ctx(3);
    let h4 = NamedForm::H4.diagonal(&c).to_symform();
    for u in 0..8 {
        let units: Vec<UnitClass> =
            (0..3).map(|i| if u >> i & 1 == 1 { UnitClass::Delta } else { UnitClass::One }).collect();
        for (a2, a3) in [(0, 0), (0, 1), (1, 1)] {
            let t = DiagonalForm::raw(c, vec![0, a2, a3], units.clone());
            let k = kitaoka_h4(&t).unwrap();
            let got = count_at(&c, &h4, &t.to_symform(), 2).unwrap();
            assert_eq!(got.density, k.product.eval(&Rat::one()), "T={t}");
        }
    }
}

#[test]
fn stabilization_small_cases() {
    let c = ctx(3);
    let s = NamedForm::S.diagonal(&c).to_symform();
    let t = DiagonalForm::raw(c, vec![0, 1], vec![UnitClass::One, UnitClass::Delta]);
    let res = density_bruteforce(&c, &s, &t.to_symform(), 2).unwrap();
    assert!(res.stabilized);
}
