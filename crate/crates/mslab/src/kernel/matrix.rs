use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::laurent::{LaurentSeriesAtInfinity, SeriesCoeff};
use super::{laurent_expand, Field, Rational, RationalFunction};

/// Dense rectangular matrix over an exact field, row-major storage.
/// All arithmetic is exact; shapes are asserted.
#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Column vector from entries.
    pub fn column(entries: Vec<F>) -> Self {
        let rows = entries.len();
        Matrix { rows, cols: 1, data: entries }
    }

    /// Standard basis column e_i (0-based) in dimension n.
    pub fn basis_column(n: usize, i: usize) -> Self {
        let mut m = Matrix::zero(n, 1);
        m.set(i, 0, F::one());
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.neg()).collect() }
    }

    pub fn scale(&self, c: &F) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul(c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Matrix::<F>::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j).add(&a.mul(other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn trace(&self) -> F {
        assert!(self.is_square());
        let mut t = F::zero();
        for i in 0..self.rows {
            t = t.add(self.get(i, i));
        }
        t
    }

    pub fn pow(&self, mut e: usize) -> Self {
        assert!(self.is_square());
        let mut acc = Matrix::identity(self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn is_nilpotent(&self) -> bool {
        assert!(self.is_square());
        self.pow(self.rows).is_zero()
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn column_at(&self, j: usize) -> Self {
        Matrix::from_fn(self.rows, 1, |i, _| self.get(i, j).clone())
    }

    pub fn columns(&self) -> Vec<Self> {
        (0..self.cols).map(|j| self.column_at(j)).collect()
    }

    pub fn from_columns(cols: &[Self]) -> Self {
        assert!(!cols.is_empty(), "need at least one column");
        let rows = cols[0].rows;
        assert!(cols.iter().all(|c| c.rows == rows && c.cols == 1));
        Matrix::from_fn(rows, cols.len(), |i, j| cols[j].get(i, 0).clone())
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// In-place reduced row echelon form; returns pivot column indices.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r >= self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    let a = self.get(r, j).clone();
                    let b = self.get(p, j).clone();
                    self.set(r, j, b);
                    self.set(p, j, a);
                }
            }
            let inv = self.get(r, c).inv().unwrap();
            for j in 0..self.cols {
                let v = self.get(r, j).mul(&inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i != r && !self.get(i, c).is_zero() {
                    let factor = self.get(i, c).clone();
                    for j in 0..self.cols {
                        let v = self.get(i, j).sub(&factor.mul(self.get(r, j)));
                        self.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place().len()
    }

    /// Canonical form of the row space: rref with zero rows dropped.
    /// Two matrices have equal row spaces iff their canonical forms agree.
    pub fn row_space_canonical(&self) -> Self {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let r = pivots.len();
        Matrix::from_fn(r, self.cols, |i, j| m.get(i, j).clone())
    }

    /// Basis of the null space {x : self * x = 0}, as column vectors.
    pub fn kernel_basis(&self) -> Vec<Self> {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = Matrix::zero(self.cols, 1);
            v.set(free, 0, F::one());
            for (r, &p) in pivots.iter().enumerate() {
                v.set(p, 0, m.get(r, free).neg());
            }
            basis.push(v);
        }
        basis
    }

    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut aug = self.hstack(&Matrix::identity(n));
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(Matrix::from_fn(n, n, |i, j| aug.get(i, j + n).clone()))
    }

    /// Canonical basis of the column space, as a dim x rank matrix.
    /// Two matrices span the same column space iff the canonical forms agree.
    pub fn column_space_canonical(&self) -> Self {
        self.transpose().row_space_canonical().transpose()
    }

    /// Basis of the intersection of the column spaces of self and other.
    pub fn column_space_intersection(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        if self.cols == 0 || other.cols == 0 {
            return Matrix::zero(self.rows, 0);
        }
        // x in both spans iff x = A u = B v; kernel of [A | -B] gives (u, v).
        let aug = self.hstack(&other.neg());
        let mut cols = Vec::new();
        for k in aug.kernel_basis() {
            let u = Matrix::from_fn(self.cols, 1, |i, _| k.get(i, 0).clone());
            cols.push(self.mul(&u));
        }
        if cols.is_empty() {
            Matrix::zero(self.rows, 0)
        } else {
            Matrix::from_columns(&cols).column_space_canonical()
        }
    }

    /// Basis of the sum of the column spaces.
    pub fn column_space_sum(&self, other: &Self) -> Self {
        self.hstack(other).column_space_canonical()
    }

    /// Whether the column vector v lies in the column span of self.
    pub fn column_space_contains(&self, v: &Self) -> bool {
        assert_eq!(v.cols, 1);
        assert_eq!(v.rows, self.rows);
        if self.cols == 0 {
            return v.is_zero();
        }
        self.rank() == self.hstack(v).rank()
    }
}

/// Outcome of an exact linear solve A x = b.
#[derive(Clone, Debug)]
pub enum LinearSolution<F> {
    /// Unique solution.
    Unique(Matrix<F>),
    /// particular + span(kernel); kernel nonempty.
    Parametrized { particular: Matrix<F>, kernel: Vec<Matrix<F>> },
    /// No solution.
    Empty,
}

impl<F: Field> LinearSolution<F> {
    pub fn particular(&self) -> Option<&Matrix<F>> {
        match self {
            LinearSolution::Unique(x) => Some(x),
            LinearSolution::Parametrized { particular, .. } => Some(particular),
            LinearSolution::Empty => None,
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, LinearSolution::Unique(_))
    }
}

/// Exact solve of A x = b for a single right-hand-side column (or a matrix
/// of stacked right-hand sides solved jointly: x has b.cols() columns, and
/// the kernel describes the per-column ambiguity).
pub fn solve_linear<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> LinearSolution<F> {
    assert_eq!(a.rows(), b.rows(), "shape mismatch");
    let mut aug = a.hstack(b);
    let pivots = aug.rref_in_place();
    // Any pivot in the b-block means some column of b is outside im(A).
    if pivots.iter().any(|&p| p >= a.cols()) {
        return LinearSolution::Empty;
    }
    let mut particular = Matrix::zero(a.cols(), b.cols());
    for (r, &p) in pivots.iter().enumerate() {
        for j in 0..b.cols() {
            particular.set(p, j, aug.get(r, a.cols() + j).clone());
        }
    }
    let kernel = a.kernel_basis();
    if kernel.is_empty() {
        LinearSolution::Unique(particular)
    } else {
        LinearSolution::Parametrized { particular, kernel }
    }
}

impl Matrix<RationalFunction> {
    /// Entrywise Laurent expansion at y = infinity.
    pub fn expand_at_infinity(&self, order: i64) -> LaurentSeriesAtInfinity<Matrix<Rational>> {
        let mut out = LaurentSeriesAtInfinity::new(order);
        let entry_series: Vec<LaurentSeriesAtInfinity<Rational>> =
            self.data.iter().map(|f| laurent_expand(f, order)).collect();
        let mut powers: Vec<i64> = entry_series
            .iter()
            .flat_map(|s| s.terms.keys().copied())
            .filter(|&k| k >= -order)
            .collect();
        powers.sort_unstable();
        powers.dedup();
        for k in powers {
            let m = Matrix {
                rows: self.rows,
                cols: self.cols,
                data: entry_series
                    .iter()
                    .map(|s| s.coeff(k).cloned().unwrap_or_else(Rational::zero))
                    .collect(),
            };
            out.set(k, m);
        }
        out
    }

    /// Entrywise evaluation at a rational point; None at a pole.
    pub fn eval(&self, x: &Rational) -> Option<Matrix<Rational>> {
        let mut data = Vec::with_capacity(self.data.len());
        for f in &self.data {
            data.push(f.eval(x)?);
        }
        Some(Matrix { rows: self.rows, cols: self.cols, data })
    }
}

impl SeriesCoeff for Matrix<Rational> {
    fn coeff_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn coeff_add(&self, other: &Self) -> Self {
        self.add(other)
    }
}

impl<F: fmt::Display> fmt::Display for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl<F: fmt::Debug> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl<F: Serialize> Serialize for Matrix<F> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[F]> = self.data.chunks(self.cols.max(1)).collect();
        rows.serialize(serializer)
    }
}

impl<'de, F: Deserialize<'de>> Deserialize<'de> for Matrix<F> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<F>> = Vec::deserialize(deserializer)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(de::Error::custom("ragged matrix rows"));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }
}
