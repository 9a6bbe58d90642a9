//! Jet-based pointwise verification of curvature identities, Ricci soliton
//! equations and self-duality conditions.

pub mod jet;
pub mod expr;
pub mod geometry;
pub mod duality;
pub mod soliton;
pub mod constructions;
pub mod cli;
