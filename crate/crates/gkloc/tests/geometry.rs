use gkloc::btree::{
    classify_fixed_set, construct_triple, construct_triple_even, construct_triple_general, FixedSetType, LatticeClass,
    SpecialEndo, Tree,
};
use gkloc::qform::DiagonalForm;
use gkloc::{Error, PrimeContext, UnitClass};

fn c3() -> PrimeContext {
    PrimeContext::new(3).unwrap()
}

fn endos() -> Vec<SpecialEndo> {
    let c = c3();
    [((1, 0), 0, 0), ((0, 0), 1, -3), ((1, 1), 1, 1), ((2, 0), 3, 1), ((0, 1), 1, 2), ((3, 0), 1, 3), ((1, 2), 0, 1), ((0, 0), 3, 3), ((3, 3), 1, -1), ((2, 1), 9, 1)]
        .into_iter()
        .map(|(a, b, c0)| SpecialEndo::from_ints(&c, a, b, c0).unwrap())
        .collect()
}

#[test]
fn stable_lattices_are_the_closed_tube() {
    let tree = Tree::new(c3());
    let ball = tree.ball(3).unwrap();
    for beta in endos() {
        for v in &ball.vertices {
            let d = tree.displacement(&beta, v).unwrap();
            let img = tree.apply_endo(&beta, v).unwrap();
            assert_eq!(d, tree.distance(v, &img), "{v}");
            assert_eq!(tree.stabilizes(&beta, v).unwrap(), d as i64 <= beta.ord(), "{v} ord {}", beta.ord());
        }
    }
}

#[test]
fn fixed_set_shape_matches_parity() {
    let tree = Tree::new(c3());
    let ball = tree.ball(3).unwrap();
    let mut seen = [0, 0];
    for beta in endos() {
        let fixed = tree.fixed_vertices(&beta, &ball).unwrap();
        match classify_fixed_set(&beta) {
            FixedSetType::SubtreePgl2Qp => {
                for v in fixed.iter().filter(|v| v.depth() < 3) {
                    let inside = tree.neighbors(v).unwrap().into_iter().filter(|w| fixed.contains(w)).count();
                    assert_eq!(inside, 4, "{v}");
                    seen[0] += 1;
                }
            }
            FixedSetType::SingleMidpoint => {
                assert!(fixed.is_empty());
                let near: Vec<_> = ball.vertices.iter().filter(|v| tree.displacement(&beta, v).unwrap() == 1).collect();
                if !near.is_empty() {
                    assert_eq!(near.len(), 2);
                    assert_eq!(tree.distance(near[0], near[1]), 1);
                    seen[1] += 1;
                }
            }
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

fn targets(max: i64) -> Vec<DiagonalForm> {
    let c = c3();
    let mut out = Vec::new();
    for a in 0..=max {
        for b in a..=max {
            for d in b..=max {
                for m in 0..8u32 {
                    let u = (0..3).map(|i| if m >> i & 1 == 1 { UnitClass::Delta } else { UnitClass::One }).collect();
                    out.push(DiagonalForm::raw(c, vec![a, b, d], u));
                }
            }
        }
    }
    out
}

#[test]
fn tubes_are_convex_subtrees() {
    let tree = Tree::new(c3());
    for tq in targets(2) {
        let Ok(triple) = construct_triple(&tq) else { continue };
        let rep = tree.tube_count(&triple).unwrap();
        assert_eq!(rep.edges + 1, rep.count, "{tq}: a connected subgraph of a tree");
        for u in &rep.vertices {
            for v in &rep.vertices {
                let mut x = *u;
                while x != *v {
                    let d = tree.distance(&x, v);
                    x = tree.neighbors(&x).unwrap().into_iter().find(|w| tree.distance(w, v) + 1 == d).unwrap();
                    assert!(tree.in_tube(&triple.betas, &x).unwrap(), "{tq}: geodesic leaves the tube at {x}");
                }
            }
        }
        // a common fixed vertex exists exactly when every exponent is even
        let all_even = tq.exps().iter().all(|r| r % 2 == 0);
        let fixed_by_all = rep
            .vertices
            .iter()
            .any(|v| triple.betas.iter().all(|b| tree.displacement(b, v).unwrap() == 0));
        assert_eq!(fixed_by_all, all_even, "{tq}");
    }
}

#[test]
fn both_routes_give_the_same_tube() {
    let tree = Tree::new(c3());
    let mut compared = 0;
    for tq in targets(2).into_iter().filter(|t| t.exps()[0] % 2 == 0) {
        match (construct_triple_even(&tq), construct_triple_general(&tq)) {
            (Ok(a), Ok(b)) => {
                assert!(b.betas.iter().all(|x| x.has_standard_shape()));
                assert_eq!(tree.tube_count(&a).unwrap().count, tree.tube_count(&b).unwrap().count, "{tq}");
                compared += 1;
            }
            (Err(Error::NotRepresentable), Err(Error::NotRepresentable)) => {}
            (a, b) => panic!("{tq}: routes disagree on existence: {:?} / {:?}", a.err(), b.err()),
        }
    }
    assert!(compared > 10);
}

#[test]
fn base_vertex_is_the_identity_lattice() {
    let tree = Tree::new(c3());
    assert_eq!(LatticeClass::BASE.depth(), 0);
    assert_eq!(tree.neighbors(&LatticeClass::BASE).unwrap().len(), 10);
}
