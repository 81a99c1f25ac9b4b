mod common;

use std::collections::BTreeSet;

use heptad::exactfield::{rat, DensePolynomial, Field, FieldElement, NumberFieldTower, PrimeSpec, RootChoice};
use heptad::heptagon::{adjoint_formula, random_rational_heptagon, residual};
use heptad::klein::{build_context, generate_group};
use heptad::projgeom::{act_line, act_point, join, meet, ProjPoint, ProjTransform};
use heptad::tautring::{reduce_product, TautMonomial, TautRing};
use heptad::walkgraph::IncidenceGraph;
use num_traits::One;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn kummer() -> NumberFieldTower {
    let t = NumberFieldTower::cyclotomic7();
    let mut m = vec![FieldElement::zero(); 8];
    m[0] = t.generator(1).add(&FieldElement::int(3)).neg();
    m[7] = FieldElement::one();
    t.extend(&DensePolynomial::new(m), "γ", RootChoice::MostReal).unwrap()
}

fn element(tower: &NumberFieldTower, c: &[i64]) -> FieldElement {
    let level1 = |k: usize| -> FieldElement {
        let coeffs = c[6 * k..6 * k + 6].iter().map(|&n| FieldElement::int(n)).collect();
        tower.element(1, coeffs).unwrap()
    };
    tower.element(2, (0..7).map(level1).collect()).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-4i64..=4, 42)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tower_ring_axioms(a in coeffs(), b in coeffs(), c in coeffs()) {
        let t = kummer();
        let (a, b, c) = (element(&t, &a), element(&t, &b), element(&t, &c));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn tower_inverse(a in coeffs()) {
        let t = kummer();
        let a = element(&t, &a);
        prop_assume!(!a.is_zero());
        prop_assert!(a.mul(&a.inv().unwrap()).is_one());
    }

    #[test]
    fn reduction_mod_p_is_a_homomorphism(a in coeffs(), b in coeffs()) {
        let t = kummer();
        let spec = PrimeSpec::search(&t, 1000).unwrap();
        let (a, b) = (element(&t, &a), element(&t, &b));
        let r = |x: &FieldElement| spec.reduce(x).unwrap();
        prop_assert_eq!(r(&a.mul(&b)), r(&a).mul(&r(&b)));
        prop_assert_eq!(r(&a.add(&b)), r(&a).add(&r(&b)));
    }
}

fn point(v: [i64; 3]) -> Option<ProjPoint<FieldElement>> {
    ProjPoint::new(v.map(FieldElement::int)).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn join_meet_incidence(p in prop::array::uniform3(-9i64..=9), q in prop::array::uniform3(-9i64..=9),
                           r in prop::array::uniform3(-9i64..=9), s in prop::array::uniform3(-9i64..=9)) {
        let (Some(p), Some(q), Some(r), Some(s)) = (point(p), point(q), point(r), point(s)) else { return Ok(()) };
        prop_assume!(p != q && r != s);
        let (l, m) = (join(&p, &q).unwrap(), join(&r, &s).unwrap());
        prop_assert!(l.contains(&p) && l.contains(&q));
        if l != m {
            let x = meet(&l, &m).unwrap();
            prop_assert!(l.contains(&x) && m.contains(&x));
        }
    }

    #[test]
    fn transforms_preserve_incidence(m in prop::array::uniform3(prop::array::uniform3(-5i64..=5)),
                                     p in prop::array::uniform3(-9i64..=9), q in prop::array::uniform3(-9i64..=9)) {
        let Ok(t) = ProjTransform::new(m.map(|r| r.map(FieldElement::int))) else { return Ok(()) };
        let (Some(p), Some(q)) = (point(p), point(q)) else { return Ok(()) };
        prop_assume!(p != q);
        let l = join(&p, &q).unwrap();
        let tl = act_line(&t, &l);
        prop_assert!(tl.contains(&act_point(&t, &p)) && tl.contains(&act_point(&t, &q)));
    }
}

/// Rewrites applied in random order until none applies.
fn random_order_reduction(points: &[usize], edges: &[(usize, usize)], g: u32, rng: &mut ChaCha8Rng) -> Option<(i64, TautMonomial)> {
    let mut pts: Vec<usize> = points.to_vec();
    let mut eds: Vec<(usize, usize)> = edges.to_vec();
    let mut coeff = 1i64;
    loop {
        let mut moves: Vec<u8> = Vec::new();
        let dup_point = (0..pts.len()).any(|a| (a + 1..pts.len()).any(|b| pts[a] == pts[b]));
        if dup_point {
            return None;
        }
        let touching: Vec<usize> = (0..eds.len()).filter(|&k| pts.contains(&eds[k].0) || pts.contains(&eds[k].1)).collect();
        let dup_edges: Vec<(usize, usize)> = (0..eds.len())
            .flat_map(|a| (a + 1..eds.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| eds[a] == eds[b])
            .collect();
        if !touching.is_empty() {
            moves.push(0);
        }
        if !dup_edges.is_empty() {
            moves.push(1);
        }
        let Some(&mv) = moves.choose(rng) else { break };
        if mv == 0 {
            let k = *touching.choose(rng).unwrap();
            let (i, j) = eds.remove(k);
            pts.push(if pts.contains(&i) { j } else { i });
        } else {
            let (a, b) = *dup_edges.choose(rng).unwrap();
            let (i, j) = eds[a];
            eds.remove(b);
            eds.remove(a);
            pts.extend([i, j]);
            coeff *= 2 - 2 * g as i64;
        }
    }
    let ring_points: Vec<usize> = pts.clone();
    let (c, m) = reduce_product(&ring_points, &eds, g)?;
    // what is left has no rewrite available, so it must already be canonical
    assert!(c.is_one());
    Some((coeff, m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reduction_is_confluent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let g = rng.gen_range(0..=3);
        let points: Vec<usize> = (0..rng.gen_range(0..=3)).map(|_| rng.gen_range(1..=n)).collect();
        let edges: Vec<(usize, usize)> = (0..rng.gen_range(0..=5))
            .map(|_| {
                let i = rng.gen_range(1..n);
                (i, rng.gen_range(i + 1..=n))
            })
            .collect();
        let library = reduce_product(&points, &edges, g);
        let mut shuffled = (points.clone(), edges.clone());
        shuffled.0.shuffle(&mut rng);
        shuffled.1.shuffle(&mut rng);
        prop_assert_eq!(&reduce_product(&shuffled.0, &shuffled.1, g), &library);
        let other = random_order_reduction(&points, &edges, g, &mut rng);
        prop_assert_eq!(other.map(|(c, m)| (rat(c), m)), library);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn products_match_restriction_oracle(seed in any::<u64>()) {
        if let OracleCase::Compared { library, oracle, associations_agree } = oracle_case(seed) {
            prop_assert!(associations_agree);
            prop_assert_eq!(library, rat(oracle));
        }
    }

    #[test]
    fn ring_commutes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let ring = TautRing::new(n, 3);
        let a = random_factor(&mut rng, n).class(ring);
        let b = random_factor(&mut rng, n).class(ring);
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
    }
}

#[test]
fn cycle_of_diagonals() {
    for n in 3..=8 {
        for g in 0..=3u32 {
            let ring = TautRing::new(n, g);
            let mut acc = ring.diagonal(1, n).unwrap();
            for i in 1..n {
                acc = acc.mul(&ring.diagonal(i, i + 1).unwrap()).unwrap();
            }
            assert_eq!(acc.degree().unwrap(), rat(2 - 2 * g as i64), "n={n} g={g}");
        }
    }
}

#[test]
fn disjoint_cycles_multiply() {
    for (a, b) in [(2, 2), (3, 2), (3, 4)] {
        let ring = TautRing::new(a + b, 3);
        let cycle = |start: usize, len: usize| {
            let mut acc = ring.diagonal(start, start + len - 1).unwrap();
            if len > 2 {
                for i in start..start + len - 1 {
                    acc = acc.mul(&ring.diagonal(i, i + 1).unwrap()).unwrap();
                }
            } else {
                acc = acc.mul(&acc).unwrap();
            }
            acc
        };
        let total = cycle(1, a).mul(&cycle(a + 1, b)).unwrap();
        // a 2-cycle is a doubled diagonal: Δ² = (2-2g)·x x, degree (2-2g) as well
        assert_eq!(total.degree().unwrap(), rat(16), "cycles of length {a} and {b}");
    }
}

#[test]
fn walks_match_depth_first_enumeration() {
    let g = IncidenceGraph::new();
    for k in 0..=7 {
        assert_eq!(g.closed_walks(k), dfs_closed_walks(g.adjacency(), k).into(), "k={k}");
    }
}

#[test]
fn walks_invariant_under_triple_relabeling() {
    let g = IncidenceGraph::new();
    for perm in [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
        let h = IncidenceGraph::from_adjacency(permute_triples(g.adjacency(), perm));
        assert_eq!(h.edge_count(), 12);
        for k in [2, 5, 7] {
            assert_eq!(h.closed_walks(k), g.closed_walks(k));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adjoint_is_multilinear(seed in any::<u64>(), k in 0usize..7, a in -5i64..=5, b in -5i64..=5) {
        check_multilinearity(seed, k, a, b).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn adjoint_is_dihedrally_covariant(seed in any::<u64>(), which in 0usize..14) {
        check_dihedral(seed, which).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn adjoint_is_projectively_equivariant(seed in any::<u64>(), m in prop::array::uniform3(prop::array::uniform3(-4i64..=4))) {
        check_equivariance(seed, m).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn inner_points_recover_the_heptagon(seed in any::<u64>()) {
        check_round_trip(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn adjoint_through_residual_points(seed in any::<u64>()) {
        let h = random_rational_heptagon(seed, 20);
        let q = adjoint_formula(&h);
        prop_assert!(residual(&h).points().values().all(|p| q.eval(p).is_zero()));
    }
}

#[test]
fn klein_group_is_closed() {
    let ctx = build_context(RootChoice::MostReal).unwrap();
    let (group, _) = generate_group(&ctx, 2000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let keys: BTreeSet<usize> = (0..group.order()).collect();
    for _ in 0..300 {
        let (a, b) = (rng.gen_range(0..group.order()), rng.gen_range(0..group.order()));
        let prod = group.elements[a].compose(&group.elements[b]);
        let idx = group.index_of(&prod).expect("product lies in the group");
        assert!(keys.contains(&idx));
    }
}
