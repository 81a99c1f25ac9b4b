//! Exact computations around adjoint quartics of plane heptagons: the
//! tautological ring of `Cⁿ`, the closed-walk count of biscribed-triangle
//! configurations, and the explicit fiber of the adjoint map over the Klein
//! quartic.

pub mod exactfield;
pub mod heptagon;
pub mod klein;
pub mod linalg;
pub mod projgeom;
pub mod tautring;
pub mod walkgraph;
