//! Exact number types: arbitrary-precision rationals, rational multiples
//! of powers of pi, and rigorous pi enclosures for order comparisons.

mod bigrat;
mod pi;
mod symreal;

pub use bigrat::BigRat;
pub use pi::{pi_enclosure, PRECISION_LADDER};
pub use symreal::{ball_volume, PiExpr, SymReal};
