//! Twin-Fock-state interferometry toolkit.
//!
//! Sends a twin Fock state |N,N⟩ through a 50:50 beam splitter, applies a
//! phase shift and measures the projection back onto the unshifted state,
//! the scheme whose phase uncertainty approaches the Heisenberg limit.
//! The crate provides the exact state machinery ([`fock`]), the
//! projection probability computed two independent ways ([`projection`]),
//! error-propagation phase uncertainty with SQL/HL reference lines
//! ([`metrology`]), and count-level models with Poisson synthesis and
//! least-squares fitting ([`experiment`]).

pub mod error;
pub mod experiment;
pub mod fock;
pub mod metrology;
pub mod projection;

pub use error::{Error, Result};
