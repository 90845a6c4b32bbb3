//! Exact linear algebra on the countably-infinite coordinate space `V = ⊕_{n∈ℕ} F`
//! and decompositions of its endomorphisms into sums of quadratic operators.
//!
//! Operators are lazy column-finite maps: a column rule `index -> finitely
//! supported vector` with a memo cache. Everything is exact (arbitrary-precision
//! rationals or a prime field); there is no floating point anywhere.
//!
//! The main pipeline turns an arbitrary column-finite operator into a sum of
//! four quadratic operators with prescribed split annihilating polynomials
//! (presets: four idempotents, four square-zero operators), via
//!
//! 1. a greedy *stratification* of the operator's module structure
//!    ([`stratify`]),
//! 2. a *connector* that rewires stratum tops so the remainder becomes
//!    elementary, i.e. has a free module structure ([`connect`]),
//! 3. an explicit model pair of quadratic operators transported through the
//!    free structure ([`decompose`]).
//!
//! Identities are verified exactly on column windows ([`verify`]), and
//! impossibility certificates (trace obstruction, scalar three-idempotent
//! obstruction) come with brute-force finite-dimensional oracles.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod config;
pub mod connect;
pub mod decompose;
pub mod operator;
pub mod poly;
pub mod scalar;
pub mod span;
pub mod stratify;
pub mod vector;
pub mod verify;

pub use config::{Config, Mode};
pub use operator::{Endomorphism, OperatorSpec, StructureCertificate};
pub use poly::QuadraticPoly;
pub use scalar::{FieldSpec, Scalar};
pub use vector::FinVector;
