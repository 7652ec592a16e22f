//! Exact computation of weighted hermitian representation densities and
//! related local quantities over an unramified quadratic extension.

pub mod beta;
pub mod cache;
pub mod cdens;
pub mod cli;
pub mod config;
pub mod error;
pub mod locint;
pub mod reps;
pub mod residue;
pub mod symb;
pub mod tree;
pub mod verify;
pub mod whit;

pub use error::{Error, Result};
pub use symb::{Rat, SignedLaurent, SignedRational};
