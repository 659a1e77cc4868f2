use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Field, Matrix, Rational};

/// Matrix-valued truncated Taylor data in finitely many named variables
/// (ratio variables s_j and shifted variables z_{j,k}). Only exponent
/// vectors of total degree <= truncation_degree are stored.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTaylor {
    pub variables: Vec<String>,
    pub rows: usize,
    pub cols: usize,
    /// Exponent vector (one entry per variable) -> nonzero matrix coefficient.
    pub coefficients: BTreeMap<Vec<u32>, Matrix<Rational>>,
    pub truncation_degree: u32,
}

impl MultiTaylor {
    pub fn zero(variables: Vec<String>, rows: usize, cols: usize, truncation_degree: u32) -> Self {
        MultiTaylor { variables, rows, cols, coefficients: BTreeMap::new(), truncation_degree }
    }

    pub fn constant(
        variables: Vec<String>,
        m: Matrix<Rational>,
        truncation_degree: u32,
    ) -> Self {
        let mut t = MultiTaylor::zero(variables, m.rows(), m.cols(), truncation_degree);
        t.set(vec![0; t.variables.len()], m);
        t
    }

    /// A single monomial term: coefficient times the product of variables
    /// with the given exponents.
    pub fn monomial(
        variables: Vec<String>,
        exps: Vec<u32>,
        m: Matrix<Rational>,
        truncation_degree: u32,
    ) -> Self {
        let mut t = MultiTaylor::zero(variables, m.rows(), m.cols(), truncation_degree);
        t.set(exps, m);
        t
    }

    fn total_degree(exps: &[u32]) -> u32 {
        exps.iter().sum()
    }

    pub fn set(&mut self, exps: Vec<u32>, m: Matrix<Rational>) {
        assert_eq!(exps.len(), self.variables.len());
        assert_eq!((m.rows(), m.cols()), (self.rows, self.cols));
        if Self::total_degree(&exps) > self.truncation_degree || m.is_zero() {
            self.coefficients.remove(&exps);
        } else {
            self.coefficients.insert(exps, m);
        }
    }

    pub fn coeff(&self, exps: &[u32]) -> Matrix<Rational> {
        self.coefficients
            .get(exps)
            .cloned()
            .unwrap_or_else(|| Matrix::zero(self.rows, self.cols))
    }

    fn assert_compatible(&self, other: &Self) {
        assert_eq!(self.variables, other.variables, "variable mismatch");
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_compatible(other);
        let trunc = self.truncation_degree.min(other.truncation_degree);
        let mut out = MultiTaylor::zero(self.variables.clone(), self.rows, self.cols, trunc);
        for (e, m) in self.coefficients.iter().chain(other.coefficients.iter()) {
            let merged = match out.coefficients.get(e) {
                Some(prev) => prev.add(m),
                None => m.clone(),
            };
            out.set(e.clone(), merged);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&Rational::from(-1)))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.clone();
        out.coefficients = self
            .coefficients
            .iter()
            .filter(|(_, m)| !c.is_zero() || m.is_zero())
            .map(|(e, m)| (e.clone(), m.scale(c)))
            .collect();
        if c.is_zero() {
            out.coefficients.clear();
        }
        out
    }

    /// Matrix product, truncated at the common truncation degree.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.variables, other.variables, "variable mismatch");
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let trunc = self.truncation_degree.min(other.truncation_degree);
        let mut out = MultiTaylor::zero(self.variables.clone(), self.rows, other.cols, trunc);
        for (ea, ma) in &self.coefficients {
            for (eb, mb) in &other.coefficients {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if Self::total_degree(&e) > trunc {
                    continue;
                }
                let term = ma.mul(mb);
                let merged = match out.coefficients.get(&e) {
                    Some(prev) => prev.add(&term),
                    None => term,
                };
                out.set(e, merged);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Evaluate at a rational point (one value per variable), summing all
    /// stored terms exactly.
    pub fn eval(&self, point: &[Rational]) -> Matrix<Rational> {
        assert_eq!(point.len(), self.variables.len());
        let mut acc = Matrix::zero(self.rows, self.cols);
        for (e, m) in &self.coefficients {
            let mut c = Rational::one();
            for (exp, v) in e.iter().zip(point) {
                for _ in 0..*exp {
                    c = Field::mul(&c, v);
                }
            }
            acc = acc.add(&m.scale(&c));
        }
        acc
    }
}

impl fmt::Debug for MultiTaylor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "MultiTaylor in {:?}, {} terms, truncation {}",
            self.variables,
            self.coefficients.len(),
            self.truncation_degree
        )?;
        for (e, m) in &self.coefficients {
            writeln!(f, "  {e:?}:")?;
            write!(f, "{m}")?;
        }
        Ok(())
    }
}
