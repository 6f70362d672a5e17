//! orbitkit: exact periodic-orbit statistics for S-integer dynamical systems
//! over the rationals and for integer toral automorphisms.
//!
//! The crate is organized around five pieces:
//!
//! * [`arith`] — exact rational arithmetic, p-adic valuations and the
//!   lifting-the-exponent valuation law;
//! * [`sinteger`] — the dynamical system itself: fixed-point and orbit
//!   counts, the normalized counter Π, the unit-place detector group and
//!   the tail predictor;
//! * [`mertens`] — dynamical Mertens sums and the exact rational leading
//!   coefficient, computed by two independent routes plus an ergodic-average
//!   oracle;
//! * [`seqlimits`] — the limit-point machinery for the doubling map with
//!   inverted 3: certified interval enclosures for the c-series, its
//!   liminf/limsup targets and the two-sided Lipschitz bounds;
//! * [`toral`] — integer toral automorphisms, including quasi-hyperbolic
//!   ones, with rotation-detector subsequences from continued fractions.
//!
//! All counting is exact (arbitrary-precision integers and rationals);
//! floating point appears only where explicitly requested (log-domain
//! tables, ergodic averages, eigenvalue data).

pub mod arith;
pub mod mertens;
pub mod seqlimits;
pub mod sinteger;
pub mod toral;

pub use arith::{Int, Rational};
pub use sinteger::SIntegerMap;
