//! Exact arithmetic for piecewise-linear circle homeomorphisms over
//! Thompson-Stein groups `T_{r,(n_i)}`.
//!
//! Every coordinate, slope and circumference is an arbitrary-precision
//! rational, so group operations, rotation-number comparisons and jump
//! bookkeeping are exact. Irrational quantities (logarithms, the exponential
//! linearization `h_sigma`) are only ever produced as certified rational
//! enclosures.
//!
//! The crate is `no_std` with `alloc`; the `std` feature (on by default)
//! only forwards to the standard library.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod arith;
pub mod conjugacy;
pub mod constructions;
pub mod interval;
pub mod plmap;
pub mod rotnum;

pub use arith::{ExponentVector, GroupContext, Rational};
pub use conjugacy::{DVerdict, OrbitClass, OrbitPartition, PartitionStatus};
pub use constructions::{BsWitness, FreeAbelianCertificate};
pub use interval::Interval;
pub use plmap::{Jump, PlCircleMap, PlError};
pub use rotnum::{LogRatio, MadicProfile, RotationNumber};
