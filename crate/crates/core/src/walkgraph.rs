//! The 12-vertex incidence graph of biscribed-triangle degenerations and the
//! counting ledger built on it.
//!
//! Vertices, in matrix order: `p1 p2 p3 q1 q2 q3 a1 b1 a2 b2 a3 b3`. Edges:
//! the triangle `p1 p2 p3`, the spokes `pᵢ qᵢ`, and the pairs `qᵢ aᵢ`, `qᵢ bᵢ`.
//! There is no `aᵢ bᵢ` edge.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exactfield::Rational;
use crate::tautring::{scorza_cycle_product, TautError};

pub const VERTEX_LABELS: [&str; 12] = ["p1", "p2", "p3", "q1", "q2", "q3", "a1", "b1", "a2", "b2", "a3", "b3"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("{numerator} is not divisible by {divisor}")]
    NotDivisible { numerator: BigInt, divisor: BigInt },
    #[error("ring value {0} is not an integer")]
    NonInteger(String),
    #[error(transparent)]
    Ring(#[from] TautError),
}

/// Symmetric 0/1 adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceGraph {
    adjacency: Vec<Vec<u8>>,
}

impl IncidenceGraph {
    pub fn new() -> Self {
        let idx = |name: &str| VERTEX_LABELS.iter().position(|v| *v == name).expect("known vertex");
        let mut edges = vec![("p1", "p2"), ("p2", "p3"), ("p1", "p3")];
        let spokes = [("p1", "q1", "a1", "b1"), ("p2", "q2", "a2", "b2"), ("p3", "q3", "a3", "b3")];
        for (p, q, a, b) in spokes {
            edges.extend([(p, q), (q, a), (q, b)]);
        }
        let mut adjacency = vec![vec![0u8; 12]; 12];
        for (u, v) in edges {
            let (i, j) = (idx(u), idx(v));
            adjacency[i][j] = 1;
            adjacency[j][i] = 1;
        }
        IncidenceGraph { adjacency }
    }

    pub fn from_adjacency(adjacency: Vec<Vec<u8>>) -> Self {
        IncidenceGraph { adjacency }
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adjacency
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|&&a| a != 0).count() / 2
    }

    /// `trace(Aᵏ)`.
    pub fn closed_walks(&self, k: u32) -> BigInt {
        let n = self.adjacency.len();
        let a: Vec<Vec<BigInt>> =
            self.adjacency.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        let mut p: Vec<Vec<BigInt>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
        for _ in 0..k {
            p = (0..n)
                .map(|i| (0..n).map(|j| (0..n).map(|m| &p[i][m] * &a[m][j]).sum()).collect())
                .collect();
        }
        (0..n).map(|i| p[i][i].clone()).sum()
    }
}

impl Default for IncidenceGraph {
    fn default() -> Self {
        Self::new()
    }
}

/// `triangles · walks / 6`, failing on a remainder.
pub fn excluded_from(triangles: &BigInt, walks: &BigInt) -> Result<BigInt, WalkError> {
    let numerator = triangles * walks;
    let six = BigInt::from(6);
    let (q, r) = numerator.div_rem(&six);
    if !r.is_zero() {
        return Err(WalkError::NotDivisible { numerator, divisor: six });
    }
    Ok(q)
}

fn integral(q: Rational) -> Result<BigInt, WalkError> {
    if q.is_integer() {
        Ok(q.to_integer())
    } else {
        Err(WalkError::NonInteger(q.to_string()))
    }
}

/// Closed walks of length 7 on the incidence graph.
pub fn closed_walks(k: u32) -> BigInt {
    IncidenceGraph::new().closed_walks(k)
}

/// Biscribed-triangle count times closed 7-walks, over the 6 orderings.
pub fn excluded_configurations() -> Result<BigInt, WalkError> {
    let triangles = integral(scorza_cycle_product(3, 3)?)?;
    excluded_from(&triangles, &closed_walks(7))
}

/// Scorza 7-cycle degree minus the excluded configurations.
pub fn heptagon_upper_bound() -> Result<BigInt, WalkError> {
    Ok(integral(scorza_cycle_product(7, 3)?)? - excluded_configurations()?)
}

/// Every number in the upper-bound argument, recomputed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundLedger {
    pub genus: u32,
    pub biscribed_triangles: String,
    pub closed_walks_7: String,
    pub excluded_configurations: String,
    pub scorza_cycle_degree: String,
    pub upper_bound: String,
    pub dihedral_relabelings: u32,
    pub per_theta_characteristic: String,
    pub even_theta_characteristics: String,
    pub per_quartic: String,
    /// `even_thetas · 14 · triangles / 6`, a second route to the excluded count.
    pub excluded_alternative: String,
}

pub fn bound_ledger() -> Result<BoundLedger, WalkError> {
    let g = 3u32;
    let triangles = integral(scorza_cycle_product(3, g)?)?;
    let walks = closed_walks(7);
    let excluded = excluded_from(&triangles, &walks)?;
    let cycle = integral(scorza_cycle_product(7, g)?)?;
    let bound = &cycle - &excluded;
    // 7 rotations times 2 reflections
    let dihedral: u32 = 7 * 2;
    let d = BigInt::from(dihedral);
    let (per_theta, r) = bound.div_rem(&d);
    if !r.is_zero() {
        return Err(WalkError::NotDivisible { numerator: bound, divisor: d });
    }
    // even theta characteristics on a genus-g curve: 2^(g-1) (2^g + 1)
    let evens = BigInt::from(2u32.pow(g - 1) * (2u32.pow(g) + 1));
    let alternative = excluded_from(&(&evens * &d * &triangles), &BigInt::one())?;
    Ok(BoundLedger {
        genus: g,
        biscribed_triangles: triangles.to_string(),
        closed_walks_7: walks.to_string(),
        excluded_configurations: excluded.to_string(),
        scorza_cycle_degree: cycle.to_string(),
        upper_bound: bound.to_string(),
        dihedral_relabelings: dihedral,
        per_quartic: (&per_theta * &evens).to_string(),
        per_theta_characteristic: per_theta.to_string(),
        even_theta_characteristics: evens.to_string(),
        excluded_alternative: alternative.to_string(),
    })
}
