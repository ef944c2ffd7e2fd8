//! Polynomial factorization over finite fields with a distinct-degree stage
//! driven by the order of the Frobenius automorphism.
//!
//! The order oracle is a classical simulation of quantum phase estimation;
//! an exact backend is available for testing.

pub mod arith;
pub mod ddf;
pub mod error;
pub mod experiments;
pub mod factor;
pub mod field;
pub mod order;
pub mod poly;
pub mod smooth;
mod text;

pub use ddf::{ddf, recursion_audit, DdfOptions, DdfResult, RoundRecord};
pub use error::{Error, Result};
pub use factor::{brute_factor, edf, factor, is_irreducible, sff, FactorResult};
pub use field::{field_new, ExtensionField, FieldCtx, FiniteField, PrimeField};
pub use order::{
    estimate_order, Backend, MeasurementMode, OracleConfig, OrderEstimate, OrderOracle,
    OrderStatus, PhaseParams,
};
pub use poly::{CounterSnapshot, Endo, Poly, PolyRing};
pub use smooth::{smooth_factor, SmoothFactorization};
