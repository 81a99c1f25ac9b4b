//! Oracles and property checks shared by the property suite and the
//! acceptance target. Oracles are written independently of the library code
//! they check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use heptad::exactfield::{Field, FieldElement, Rational};
use heptad::heptagon::{
    adjoint_formula, adjoint_formula_raw, dihedral_relabelings, heptagon_from_inner, inner_map,
    random_rational_heptagon, Heptagon,
};
use heptad::projgeom::{act_line, act_quartic, ProjTransform};
use heptad::tautring::{TautClass, TautError, TautRing};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- walks

/// Closed walks of length `k`, by explicit depth-first enumeration.
pub fn dfs_closed_walks(adj: &[Vec<u8>], k: u32) -> u64 {
    fn go(adj: &[Vec<u8>], start: usize, at: usize, left: u32) -> u64 {
        if left == 0 {
            return (at == start) as u64;
        }
        (0..adj.len()).filter(|&v| adj[at][v] != 0).map(|v| go(adj, start, v, left - 1)).sum()
    }
    (0..adj.len()).map(|s| go(adj, s, s, k)).sum()
}

/// Relabel the vertex triples `(pᵢ, qᵢ, aᵢ, bᵢ)` by `perm`.
pub fn permute_triples(adj: &[Vec<u8>], perm: [usize; 3]) -> Vec<Vec<u8>> {
    // vertex order p1 p2 p3 q1 q2 q3 a1 b1 a2 b2 a3 b3
    let image = |v: usize| match v {
        0..=2 => perm[v],
        3..=5 => 3 + perm[v - 3],
        _ => {
            let (i, side) = ((v - 6) / 2, (v - 6) % 2);
            6 + 2 * perm[i] + side
        }
    };
    let mut out = vec![vec![0u8; 12]; 12];
    for i in 0..12 {
        for j in 0..12 {
            out[image(i)][image(j)] = adj[i][j];
        }
    }
    out
}

// ---------------------------------------------------------------- ring

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    X(usize),
    D(usize, usize),
}

/// A generator of the ring as the sum of atoms it stands for.
#[derive(Clone, Copy, Debug)]
pub enum Factor {
    X(usize),
    D(usize, usize),
    S(usize, usize),
}

impl Factor {
    pub fn terms(self) -> Vec<(i64, Atom)> {
        match self {
            Factor::X(i) => vec![(1, Atom::X(i))],
            Factor::D(i, j) => vec![(1, Atom::D(i, j))],
            Factor::S(i, j) => vec![(2, Atom::X(i)), (2, Atom::X(j)), (1, Atom::D(i, j))],
        }
    }

    pub fn class(self, ring: TautRing) -> TautClass {
        match self {
            Factor::X(i) => ring.point(i),
            Factor::D(i, j) => ring.diagonal(i, j),
            Factor::S(i, j) => ring.scorza(i, j),
        }
        .expect("indices in range")
    }
}

/// Degree of a product of atoms on `C^|alive|` by restriction: a point class
/// fixes its factor, a diagonal identifies two factors, and a repeated
/// diagonal restricts to the self-intersection `(2 - 2g)` times a point.
pub fn restriction_degree(atoms: &[Atom], alive: &BTreeSet<usize>, g: i64) -> i64 {
    let Some((&first, rest)) = atoms.split_first() else {
        return alive.is_empty() as i64;
    };
    let mut alive = alive.clone();
    let mut coeff = 1;
    let mut next = Vec::with_capacity(rest.len());
    match first {
        Atom::X(i) => {
            alive.remove(&i);
            for &a in rest {
                match a {
                    Atom::X(k) if k == i => return 0,
                    Atom::D(a, b) if a == i || b == i => next.push(Atom::X(if a == i { b } else { a })),
                    other => next.push(other),
                }
            }
        }
        Atom::D(i, j) => {
            alive.remove(&j);
            let to_i = |k: usize| if k == j { i } else { k };
            for &a in rest {
                match a {
                    Atom::X(k) => next.push(Atom::X(to_i(k))),
                    Atom::D(a, b) => {
                        let (a, b) = (to_i(a), to_i(b));
                        if a == b {
                            coeff *= 2 - 2 * g;
                            next.push(Atom::X(a));
                        } else {
                            next.push(Atom::D(a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
    }
    coeff * restriction_degree(&next, &alive, g)
}

/// Degree of `∏ factors` on `Cⁿ`, expanding every sum.
pub fn oracle_degree(factors: &[Factor], n: usize, g: i64) -> i64 {
    let alive: BTreeSet<usize> = (1..=n).collect();
    let mut expansions: Vec<(i64, Vec<Atom>)> = vec![(1, Vec::new())];
    for f in factors {
        let mut next = Vec::new();
        for (c, atoms) in &expansions {
            for (d, a) in f.terms() {
                let mut v = atoms.clone();
                v.push(a);
                next.push((c * d, v));
            }
        }
        expansions = next;
    }
    expansions.iter().map(|(c, atoms)| c * restriction_degree(atoms, &alive, g)).sum()
}

/// Every bracketing of the product, each evaluated with the library.
pub fn all_associations(classes: &[TautClass]) -> Vec<TautClass> {
    if classes.len() == 1 {
        return vec![classes[0].clone()];
    }
    let mut out = Vec::new();
    for split in 1..classes.len() {
        for l in all_associations(&classes[..split]) {
            for r in all_associations(&classes[split..]) {
                out.push(l.mul(&r).expect("same ring"));
            }
        }
    }
    out
}

pub fn random_factor(rng: &mut ChaCha8Rng, n: usize) -> Factor {
    let i = rng.gen_range(1..=n);
    let mut j = rng.gen_range(1..=n);
    while j == i {
        j = rng.gen_range(1..=n);
    }
    let (i, j) = (i.min(j), i.max(j));
    match rng.gen_range(0..4) {
        0 => Factor::X(i),
        1 => Factor::D(i, j),
        _ => Factor::S(i, j),
    }
}

/// Outcome of one oracle comparison.
pub enum OracleCase {
    /// The library refuses the class as not top-degree; the oracle value is attached.
    Rejected(i64),
    Compared { library: Rational, oracle: i64, associations_agree: bool },
}

pub fn oracle_case(seed: u64) -> OracleCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=5);
    let g = rng.gen_range(0..=4u32);
    let factors: Vec<Factor> = (0..n).map(|_| random_factor(&mut rng, n)).collect();
    let ring = TautRing::new(n, g);
    let mut classes: Vec<TautClass> = factors.iter().map(|f| f.class(ring)).collect();
    classes.shuffle(&mut rng);
    let oracle = oracle_degree(&factors, n, g as i64);
    let products = all_associations(&classes);
    let degrees: Vec<Result<Rational, TautError>> = products.iter().map(TautClass::degree).collect();
    match &degrees[0] {
        Err(TautError::DimensionMismatch(_)) => OracleCase::Rejected(oracle),
        Err(e) => panic!("unexpected ring error {e}"),
        Ok(d) => OracleCase::Compared {
            library: d.clone(),
            oracle,
            associations_agree: products.iter().all(|p| *p == products[0]),
        },
    }
}

/// `2·3ⁿ − 6`, the closed value the expanded Scorza cycle is compared against.
pub fn closed_form_scorza(n: u32) -> BigInt {
    BigInt::from(2) * BigInt::from(3).pow(n) - 6
}

pub fn to_i64(q: &Rational) -> Option<i64> {
    if q.is_integer() {
        q.to_integer().to_i64()
    } else {
        None
    }
}

// ---------------------------------------------------------------- heptagons

fn fe(n: i64) -> FieldElement {
    FieldElement::int(n)
}

/// Replacing line `k` by `a·u + b·v` gives `a·adj(u) + b·adj(v)`.
pub fn check_multilinearity(seed: u64, k: usize, a: i64, b: i64) -> Result<(), String> {
    let h = random_rational_heptagon(seed, 9);
    let u = random_rational_heptagon(seed ^ 0x9e37_79b9, 9);
    let base: [[FieldElement; 3]; 7] = std::array::from_fn(|i| h.lines()[i].coeffs().clone());
    let v = u.lines()[k].coeffs().clone();
    let with = |line: [FieldElement; 3]| {
        let mut l = base.clone();
        l[k] = line;
        adjoint_formula_raw(&l)
    };
    let combo: [FieldElement; 3] = std::array::from_fn(|c| fe(a).mul(&base[k][c]).add(&fe(b).mul(&v[c])));
    let lhs = with(combo);
    let (qa, qb) = (with(base[k].clone()), with(v));
    let rhs: Vec<FieldElement> =
        qa.coeffs().iter().zip(qb.coeffs()).map(|(x, y)| fe(a).mul(x).add(&fe(b).mul(y))).collect();
    if lhs.coeffs().to_vec() == rhs {
        Ok(())
    } else {
        Err(format!("adjoint is not linear in line {} (seed {seed})", k + 1))
    }
}

/// Relabeling by a dihedral symmetry leaves the adjoint unchanged up to scalar.
pub fn check_dihedral(seed: u64, which: usize) -> Result<(), String> {
    let h = random_rational_heptagon(seed, 9);
    let perm = dihedral_relabelings()[which % 14];
    let q = adjoint_formula(&h);
    let r = adjoint_formula(&h.relabel(&perm));
    if q.proportional_to(&r) {
        Ok(())
    } else {
        Err(format!("relabeling {perm:?} changes the adjoint (seed {seed})"))
    }
}

/// `adj(T·H) ∝ T·adj(H)` for invertible `T`.
pub fn check_equivariance(seed: u64, m: [[i64; 3]; 3]) -> Result<(), String> {
    let Ok(t) = ProjTransform::new(m.map(|r| r.map(fe))) else {
        return Ok(());
    };
    let h = random_rational_heptagon(seed, 9);
    let moved: Heptagon<FieldElement> = h.map_lines(|l| act_line(&t, l));
    let lhs = adjoint_formula(&moved);
    let rhs = act_quartic(&t, &adjoint_formula(&h));
    if lhs.proportional_to(&rhs) {
        Ok(())
    } else {
        Err(format!("equivariance fails for {m:?} (seed {seed})"))
    }
}

/// Joining the inner residual points recovers the heptagon.
pub fn check_round_trip(seed: u64) -> Result<(), String> {
    let h = random_rational_heptagon(seed, 9);
    match heptagon_from_inner(&inner_map(&h)) {
        Ok(back) if back == h => Ok(()),
        Ok(_) => Err(format!("J∘I changed the heptagon (seed {seed})")),
        Err(e) => Err(format!("J∘I failed: {e} (seed {seed})")),
    }
}
