//! Exact scalar fields and generic linear algebra used by every other module.
//!
//! The field interface is deliberately generic: all higher modules run the
//! same algorithms over `Rational` and over `RationalFunction`, so the
//! one-variable expansion theorems can be computed by running the plain
//! splitting algorithms over the function field and Laurent-expanding the
//! result.
//!
//! # Example
//!
//! ```
//! use mslab::kernel::{Field, Matrix, Rational};
//!
//! let a: Rational = "3/4".parse().unwrap();
//! let b = Rational::new(1, 4);
//! assert_eq!(Field::add(&a, &b), Rational::from(1));
//!
//! let m = Matrix::from_rows(vec![
//!     vec![Rational::from(1), Rational::from(2)],
//!     vec![Rational::from(2), Rational::from(4)],
//! ]);
//! assert_eq!(m.rank(), 1);
//! assert_eq!(m.kernel_basis().len(), 1);
//! ```

mod rational;
mod poly;
mod ratfun;
mod laurent;
mod matrix;
mod multitaylor;

pub use rational::Rational;
pub use poly::Poly;
pub use ratfun::RationalFunction;
pub use laurent::{laurent_expand, LaurentSeriesAtInfinity};
pub use matrix::{solve_linear, LinearSolution, Matrix};
pub use multitaylor::MultiTaylor;

use std::fmt::Debug;

/// Exact field operations. Implemented by `Rational` and `RationalFunction`.
pub trait Field: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// None exactly when `self` is zero.
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool {
        *self == Self::one()
    }
    fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv().expect("division by zero"))
    }
}
