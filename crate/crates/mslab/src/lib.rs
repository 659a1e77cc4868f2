//! Exact-arithmetic machinery for monodromy systems: weight filtrations,
//! Deligne splittings and their invariants `spl_W` / `delta_W`, polyhedral
//! cone face lattices, ratio-space charts, symbolic asymptotic expansions
//! over the rational function field, and Tate-curve local height pairings.
//!
//! Everything is computed over exact fields (arbitrary-precision rationals
//! and univariate rational functions); there is no floating point anywhere.

pub mod kernel;
pub mod filtration;
pub mod deligne;
pub mod cones;
pub mod ratio;
pub mod sl2orbit;
pub mod heights;
pub mod eigen;
pub mod cli;
pub mod gen;
