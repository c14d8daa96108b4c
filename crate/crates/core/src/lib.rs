//! Verification toolkit for primitive completely normal (PCN) elements of
//! finite field extensions `F_{q^n} / F_q`.
//!
//! The crate bundles:
//!
//! * exact integer number theory ([`number_theory`]): factorization of
//!   `q^n - 1` through its cyclotomic split, multiplicative orders, divisor
//!   sums and Robin's bound;
//! * the cyclotomic structure of `X^{n/l} - 1` over every intermediate field
//!   ([`extension_profile`]);
//! * concrete `F_{p^k}` arithmetic with Frobenius-based normality tests
//!   ([`finite_field`]) and exhaustive counting on top of it ([`oracle`]);
//! * closed-form lower bounds on completely normal counts and the character
//!   sum existence criterion ([`bounds`]);
//! * the prime sieve certificate ([`sieve`]) and the staged elimination of
//!   exceptional pairs ([`pipeline`]).

pub mod bounds;
pub mod error;
pub mod extension_profile;
pub mod finite_field;
pub mod number_theory;
pub mod oracle;
pub mod pipeline;
pub mod rational;
pub mod sieve;

pub use num_bigint::BigUint;
pub use bounds::{BoundVariant, CnLowerBound, CriterionLevel, CriterionOutcome, DivisorCountConstant};
pub use error::{Error, Result};
pub use extension_profile::{ExtensionProfile, ProfileBundle, ProfileCache, ProfileProduct};
pub use finite_field::{FieldContext, FieldElement};
pub use number_theory::factor::{FactorCache, Factorizer};
pub use number_theory::{FactoredInteger, PairContext, PrimePowerQ};
pub use oracle::{OracleConfig, OracleCounts};
pub use pipeline::{Parity, PipelineConfig, PipelineReport, Resolution, StageRecord};
pub use sieve::SievingSet;
