//! Exact construction of strata algebras of the moduli spaces of stable
//! curves and of the parity-twisted Faber-Zagier relations inside them.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] - coefficient fields (exact rationals, word-size prime fields);
//! * [`fzseries`] - the hypergeometric series `A`, `B`, their parity twists
//!   and the node factor;
//! * [`kappaop`] - the `κ` and parity-aware `κ̂` operators;
//! * [`dualgraph`] - stable dual graphs, canonical forms, automorphisms;
//! * [`strata`] - decorated strata, products, gluing and forgetful maps;
//! * [`pixton`] - assembly of the relation vectors;
//! * [`ideal`] - spanning sets of the relation ideal in a fixed degree;
//! * [`exactla`] - sparse ranks over prime fields and over `Q`;
//! * [`io`] - JSON and MatrixMarket serialisation;
//! * [`checks`] - self-checks with optional fault injection.

// Index loops over parallel per-vertex and per-slot tables read better than
// zipped iterators here.
#![allow(clippy::needless_range_loop)]

pub mod checks;
pub mod dualgraph;
pub mod error;
pub mod exactla;
pub mod field;
pub mod fzseries;
pub mod ideal;
pub mod io;
pub mod kappaop;
pub mod pixton;
pub mod strata;

pub use error::{Error, Result};
pub use num_rational::BigRational;
