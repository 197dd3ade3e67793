//! Experimental-mathematics toolkit for the zero-field square-lattice Ising
//! model: brute-force and transfer-operator partition functions, Ising
//! polynomials, the duality change of variable, closed-form guessing and
//! integer-relation search.

pub mod duality;
pub mod error;
pub mod exactmath;
pub mod guess;
pub mod isingcore;
pub mod isingpoly;
pub mod relation;
pub mod transfer;

pub use error::{Error, Result};
