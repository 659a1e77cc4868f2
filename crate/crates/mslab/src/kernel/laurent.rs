use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Field, Poly, Rational, RationalFunction};

/// A truncated Laurent expansion at y = infinity: finitely many terms
/// c_k * y^k with k bounded above (lead order) and kept down to
/// k >= -truncation_order. The truncation order is always carried in the
/// value, never implicit.
///
/// Coefficients are generic so the same container holds scalar expansions
/// and matrix-valued ones.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentSeriesAtInfinity<T> {
    /// Nonzero terms keyed by the power of y.
    pub terms: BTreeMap<i64, T>,
    /// Terms with power < -truncation_order have been dropped.
    pub truncation_order: i64,
}

pub trait SeriesCoeff: Clone + PartialEq + fmt::Debug {
    fn coeff_is_zero(&self) -> bool;
    fn coeff_add(&self, other: &Self) -> Self;
}

impl SeriesCoeff for Rational {
    fn coeff_is_zero(&self) -> bool {
        Field::is_zero(self)
    }
    fn coeff_add(&self, other: &Self) -> Self {
        Field::add(self, other)
    }
}

impl<T: SeriesCoeff> LaurentSeriesAtInfinity<T> {
    pub fn new(truncation_order: i64) -> Self {
        LaurentSeriesAtInfinity { terms: BTreeMap::new(), truncation_order }
    }

    pub fn set(&mut self, power: i64, value: T) {
        if power < -self.truncation_order || value.coeff_is_zero() {
            self.terms.remove(&power);
        } else {
            self.terms.insert(power, value);
        }
    }

    /// Coefficient of y^power; None when the power is beyond the truncation.
    pub fn coeff(&self, power: i64) -> Option<&T> {
        if power < -self.truncation_order {
            None
        } else {
            self.terms.get(&power)
        }
    }

    /// Highest power with a nonzero coefficient, if any.
    pub fn lead_order(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let trunc = self.truncation_order.min(other.truncation_order);
        let mut out = LaurentSeriesAtInfinity::<T>::new(trunc);
        for (k, v) in self.terms.iter().chain(other.terms.iter()) {
            let merged = match out.terms.get(k) {
                Some(prev) => prev.coeff_add(v),
                None => v.clone(),
            };
            out.set(*k, merged);
        }
        out
    }

    pub fn map<U: SeriesCoeff>(&self, f: impl Fn(&T) -> U) -> LaurentSeriesAtInfinity<U> {
        let mut out = LaurentSeriesAtInfinity::new(self.truncation_order);
        for (k, v) in &self.terms {
            out.set(*k, f(v));
        }
        out
    }

    /// Powers present, descending.
    pub fn powers_desc(&self) -> Vec<i64> {
        self.terms.keys().rev().copied().collect()
    }
}

impl LaurentSeriesAtInfinity<Rational> {
    pub fn mul(&self, other: &Self) -> Self {
        // Truncation of a product: a term y^{a+b} is reliable as long as
        // a+b >= lead(other) - trunc(self) and symmetrically; use the
        // conservative common bound.
        let l1 = self.lead_order().unwrap_or(0);
        let l2 = other.lead_order().unwrap_or(0);
        let trunc = (self.truncation_order + l2).min(other.truncation_order + l1);
        let mut out = LaurentSeriesAtInfinity::new(trunc);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let k = a + b;
                let add = Field::mul(ca, cb);
                let merged = match out.terms.get(&k) {
                    Some(prev) => Field::add(prev, &add),
                    None => add,
                };
                out.set(k, merged);
            }
        }
        out
    }
}

impl<T: fmt::Display> fmt::Debug for LaurentSeriesAtInfinity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "O(y^-{})", self.truncation_order + 1)?;
            return Ok(());
        }
        let mut first = true;
        for (k, v) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{v}")?,
                1 => write!(f, "({v})*y")?,
                _ => write!(f, "({v})*y^{k}")?,
            }
        }
        write!(f, " + O(y^{})", -self.truncation_order - 1)
    }
}

/// Expand a rational function at y = infinity, keeping powers of y down to
/// y^{-order}. The expansion always exists: with t = 1/y the function is
/// y^{deg num - deg den} times a power series in t with invertible constant
/// term.
pub fn laurent_expand(f: &RationalFunction, order: i64) -> LaurentSeriesAtInfinity<Rational> {
    assert!(order >= 0, "order must be >= 0");
    let mut out = LaurentSeriesAtInfinity::new(order);
    if f.is_zero() {
        return out;
    }
    let dn = f.num().degree().unwrap() as i64;
    let dd = f.den().degree().unwrap() as i64;
    let shift = dn - dd; // lead order of f
    // Number of power-series coefficients of n~(t)/d~(t) needed so the last
    // kept power y^{shift - j} reaches y^{-order}.
    let k_max = order + shift;
    if k_max < 0 {
        return out;
    }
    let n_rev = f.num().reversed();
    let d_rev = f.den().reversed();
    let series = power_series_div(&n_rev, &d_rev, k_max as usize);
    for (j, c) in series.into_iter().enumerate() {
        out.set(shift - j as i64, c);
    }
    out
}

/// Coefficients c_0..c_k of num(t)/den(t) as a power series in t;
/// den(0) must be nonzero.
fn power_series_div(num: &Poly, den: &Poly, k: usize) -> Vec<Rational> {
    let d0_inv = den.coeff(0).inv().expect("denominator not a unit at t=0");
    let mut out = Vec::with_capacity(k + 1);
    for j in 0..=k {
        // c_j = (num_j - sum_{i=1..j} den_i * c_{j-i}) / den_0
        let mut acc = num.coeff(j);
        for (i, c) in out.iter().enumerate().take(j) {
            let di = den.coeff(j - i);
            acc = Field::sub(&acc, &Field::mul(&di, c));
        }
        out.push(Field::mul(&acc, &d0_inv));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        RationalFunction::new(
            Poly::new(num.iter().map(|&c| Rational::from(c)).collect()),
            Poly::new(den.iter().map(|&c| Rational::from(c)).collect()),
        )
    }

    #[test]
    fn geometric() {
        // y/(y+1) = 1 - y^-1 + y^-2 - y^-3 + ...
        let s = laurent_expand(&rf(&[0, 1], &[1, 1]), 3);
        assert_eq!(s.coeff(0), Some(&Rational::from(1)));
        assert_eq!(s.coeff(-1), Some(&Rational::from(-1)));
        assert_eq!(s.coeff(-2), Some(&Rational::from(1)));
        assert_eq!(s.coeff(-3), Some(&Rational::from(-1)));
        assert_eq!(s.coeff(1), None);
    }

    #[test]
    fn constant() {
        let s = laurent_expand(&rf(&[1], &[1]), 2);
        assert_eq!(s.powers_desc(), vec![0]);
        assert_eq!(s.coeff(0), Some(&Rational::from(1)));
    }

    #[test]
    fn mixed_orders() {
        // 3y - y^2/(2y+1) = (5/2)y + 1/4 - (1/8)y^-1 + (1/16)y^-2 - ...
        let f = Field::sub(&rf(&[0, 3], &[1]), &rf(&[0, 0, 1], &[1, 2]));
        let s = laurent_expand(&f, 2);
        assert_eq!(s.coeff(1), Some(&Rational::new(5, 2)));
        assert_eq!(s.coeff(0), Some(&Rational::new(1, 4)));
        assert_eq!(s.coeff(-1), Some(&Rational::new(-1, 8)));
        assert_eq!(s.coeff(-2), Some(&Rational::new(1, 16)));
    }

    #[test]
    fn deep_negative_lead() {
        // 1/y^3 to order 2 is entirely below truncation.
        let s = laurent_expand(&rf(&[1], &[0, 0, 0, 1]), 2);
        assert!(s.is_zero());
        let s = laurent_expand(&rf(&[1], &[0, 0, 0, 1]), 3);
        assert_eq!(s.coeff(-3), Some(&Rational::from(1)));
    }
}
