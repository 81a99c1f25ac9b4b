//! Exact arithmetic: rationals, the `Q(ζ₇)(α)` number-field tower,
//! specialization to prime fields and complex embeddings.

mod embed;
mod field;
mod intpath;
mod modular;
mod poly;
mod rational;
mod tower;

use thiserror::Error;

pub use embed::{embed_complex, embed_unchecked, Approx, Embedded};
pub use field::{proportional, proportionality_scalar, Field};
pub use modular::{fp, is_prime, roots_mod_p, Fp, PrimeSpec};
pub use poly::DensePolynomial;
pub use rational::{format_rational, parse_rational, rat, ratio, Rational};
pub use tower::{AlgebraicElement, FieldElement, NumberFieldTower, RootChoice, RootEmbedding, TowerLevel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    /// The gcd with the level modulus has positive degree: the modulus is reducible.
    #[error("zero divisor at tower level {level}: common factor of degree {factor_degree} with the modulus")]
    ZeroDivisor { level: usize, factor_degree: usize },
    #[error("elements belong to different towers")]
    TowerMismatch,
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("bad prime {p}: {reason}")]
    BadPrime { p: u64, reason: String },
    #[error("complex embedding reached {achieved:.1} bits, {requested} requested")]
    PrecisionExhausted { requested: u32, achieved: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}
