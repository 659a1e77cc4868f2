//! Finite increasing filtrations, splittings-as-endomorphisms, graded
//! pieces, and the filtrations they induce on endomorphism spaces.
//!
//! # Example
//!
//! ```
//! use std::collections::BTreeMap;
//! use mslab::filtration::{Filtration, Splitting};
//! use mslab::kernel::{Matrix, Rational};
//!
//! let mut steps = BTreeMap::new();
//! steps.insert(-1, Matrix::basis_column(2, 0));
//! steps.insert(0, Matrix::<Rational>::identity(2));
//! let w = Filtration::new(2, steps).unwrap();
//! assert_eq!(w.jump_weights(), vec![-1, 0]);
//! assert_eq!(w.graded_dim(-1), 1);
//!
//! // A grading that splits W: basis vector i has weight `weights[i]`.
//! let y = Splitting::diagonal(&[-1, 0]);
//! assert!(mslab::deligne::filtrations_equal(&y.induced_filtration(), &w));
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::kernel::{solve_linear, Field, LinearSolution, Matrix};

/// A finite increasing filtration W on F^dim. Each stored step is a
/// canonical basis matrix (columns span W_w); weights below the range give
/// 0, weights at or above the top give the whole space.
#[derive(Clone, PartialEq)]
pub struct Filtration<F> {
    dim: usize,
    /// Weight -> canonical column-space basis. Only weights in the
    /// inhabited range are stored (dims strictly between 0 and full may
    /// repeat; jump-free weights are stored too when given explicitly).
    steps: BTreeMap<i64, Matrix<F>>,
}

impl<F: Field> Filtration<F> {
    /// Build from explicit subspaces; checks nesting and exhaustiveness
    /// (the largest given weight must carry the full space).
    pub fn new(dim: usize, given: BTreeMap<i64, Matrix<F>>) -> Result<Self, String> {
        let mut steps: BTreeMap<i64, Matrix<F>> = BTreeMap::new();
        for (w, m) in given {
            if m.rows() != dim {
                return Err(format!("step {w}: expected {dim} rows, got {}", m.rows()));
            }
            steps.insert(w, m.column_space_canonical());
        }
        let Some((&top, top_m)) = steps.iter().next_back() else {
            return Err("empty filtration".into());
        };
        if top_m.cols() != dim {
            return Err(format!("top step {top} has rank {} < {dim}", top_m.cols()));
        }
        let mut prev: Option<(i64, &Matrix<F>)> = None;
        for (w, m) in &steps {
            if let Some((pw, pm)) = prev {
                if pm.column_space_sum(m) != *m {
                    return Err(format!("W_{pw} is not contained in W_{w}"));
                }
            }
            prev = Some((*w, m));
        }
        Ok(Filtration { dim, steps })
    }

    /// The pure filtration concentrated in a single weight.
    pub fn pure(dim: usize, w: i64) -> Self {
        let mut steps = BTreeMap::new();
        steps.insert(w, Matrix::identity(dim));
        Filtration { dim, steps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest weight whose step is nonzero.
    pub fn lowest_weight(&self) -> i64 {
        *self
            .steps
            .iter()
            .find(|(_, m)| m.cols() > 0)
            .map(|(w, _)| w)
            .expect("filtration has a nonzero step")
    }

    /// Smallest weight whose step is the full space.
    pub fn highest_weight(&self) -> i64 {
        *self
            .steps
            .iter()
            .find(|(_, m)| m.cols() == self.dim)
            .map(|(w, _)| w)
            .unwrap()
    }

    /// Canonical basis matrix of W_w (dim x dim_at(w)).
    pub fn basis_at(&self, w: i64) -> Matrix<F> {
        match self.steps.range(..=w).next_back() {
            Some((_, m)) => m.clone(),
            None => Matrix::zero(self.dim, 0),
        }
    }

    pub fn dim_at(&self, w: i64) -> usize {
        self.basis_at(w).cols()
    }

    pub fn graded_dim(&self, w: i64) -> usize {
        self.dim_at(w) - self.dim_at(w - 1)
    }

    /// Weights where the graded piece is nonzero, ascending.
    pub fn jump_weights(&self) -> Vec<i64> {
        let lo = self.lowest_weight();
        let hi = self.highest_weight();
        (lo..=hi).filter(|&w| self.graded_dim(w) > 0).collect()
    }

    pub fn contains(&self, w: i64, v: &Matrix<F>) -> bool {
        self.basis_at(w).column_space_contains(v)
    }

    /// Columns of W_w completing a basis of W_{w-1} to one of W_w; their
    /// classes form the canonical basis of gr_w used everywhere.
    pub fn graded_lift(&self, w: i64) -> Matrix<F> {
        let below = self.basis_at(w - 1);
        let here = self.basis_at(w);
        let mut acc = below.clone();
        let mut lifts = Vec::new();
        for c in here.columns() {
            if !acc.column_space_contains(&c) {
                lifts.push(c.clone());
                acc = acc.hstack(&c);
            }
        }
        if lifts.is_empty() {
            Matrix::zero(self.dim, 0)
        } else {
            Matrix::from_columns(&lifts)
        }
    }

    /// Coordinates of the class of v (a vector of W_w) in the canonical
    /// basis of gr_w. Panics if v is not in W_w.
    pub fn quotient_coords(&self, w: i64, v: &Matrix<F>) -> Matrix<F> {
        let lifts = self.graded_lift(w);
        let gdim = lifts.cols();
        if gdim == 0 {
            assert!(self.contains(w - 1, v), "vector not in W_{w}");
            return Matrix::zero(0, 1);
        }
        let below = self.basis_at(w - 1);
        let basis = if below.cols() > 0 { lifts.hstack(&below) } else { lifts };
        match solve_linear(&basis, v) {
            LinearSolution::Unique(x) => Matrix::from_fn(gdim, 1, |i, _| x.get(i, 0).clone()),
            _ => panic!("vector not expressible in W_w basis"),
        }
    }

    /// Whether an endomorphism f satisfies f(W_w) ⊆ W_{w+k} for all w.
    pub fn endo_member(&self, f: &Matrix<F>, k: i64) -> bool {
        assert_eq!(f.rows(), self.dim);
        assert_eq!(f.cols(), self.dim);
        for w in self.jump_weights() {
            let image = f.mul(&self.basis_at(w));
            let target = self.basis_at(w + k);
            for c in image.columns() {
                if !target.column_space_contains(&c) {
                    return false;
                }
            }
        }
        true
    }

    /// Smallest k with f in W_k End(V); None for f = 0.
    pub fn endo_weight(&self, f: &Matrix<F>) -> Option<i64> {
        if f.is_zero() {
            return None;
        }
        let span = self.highest_weight() - self.lowest_weight();
        let mut k = span;
        assert!(self.endo_member(f, k), "nonzero endomorphism outside the full range");
        while k > -span && self.endo_member(f, k - 1) {
            k -= 1;
        }
        Some(k)
    }

    /// The induced filtration W_k End(V) = {f : f W_w ⊆ W_{w+k}}, as a
    /// filtration on the dim^2-dimensional endomorphism space
    /// (column-major vectorization).
    pub fn induced_endo_filtration(&self) -> Filtration<F> {
        let d = self.dim;
        let span = self.highest_weight() - self.lowest_weight();
        let mut steps = BTreeMap::new();
        for k in -span..=span {
            steps.insert(k, self.endo_level_basis(k));
        }
        Filtration::new(d * d, steps).expect("induced filtration is well formed")
    }

    /// Basis (as vectorized endomorphisms) of W_k End(V).
    fn endo_level_basis(&self, k: i64) -> Matrix<F> {
        let d = self.dim;
        // Constraints: for each jump weight w and basis column v of W_w,
        // annihilator(W_{w+k}) * f * v = 0. Rows of the constraint matrix
        // are indexed by (w, v, annihilator row); unknowns are the d^2
        // entries of f, column-major.
        let mut rows: Vec<Vec<F>> = Vec::new();
        for w in self.jump_weights() {
            let target = self.basis_at(w + k);
            let ann = left_annihilator(&target);
            if ann.rows() == 0 {
                continue;
            }
            for v in self.basis_at(w).columns() {
                for r in 0..ann.rows() {
                    // constraint: sum_{i,j} ann[r,i] * f[i,j] * v[j] = 0
                    let mut row = vec![F::zero(); d * d];
                    for j in 0..d {
                        let vj = v.get(j, 0);
                        if vj.is_zero() {
                            continue;
                        }
                        for i in 0..d {
                            row[j * d + i] = ann.get(r, i).mul(vj);
                        }
                    }
                    rows.push(row);
                }
            }
        }
        if rows.is_empty() {
            return Matrix::identity(d * d);
        }
        let constraint = Matrix::from_rows(rows);
        let kernel = constraint.kernel_basis();
        if kernel.is_empty() {
            Matrix::zero(d * d, 0)
        } else {
            Matrix::from_columns(&kernel).column_space_canonical()
        }
    }

    /// The filtration induced by `self` on the graded piece gr_w of
    /// another filtration `of`, in the canonical gr_w coordinates:
    /// level k is (self_k ∩ of_w + of_{w-1}) / of_{w-1}.
    pub fn induced_on_graded(&self, of: &Filtration<F>, w: i64) -> Filtration<F> {
        assert_eq!(self.dim, of.dim);
        let gdim = of.graded_dim(w);
        let wlevel = of.basis_at(w);
        let mut steps = BTreeMap::new();
        for k in self.lowest_weight()..=self.highest_weight() {
            let inter = self.basis_at(k).column_space_intersection(&wlevel);
            let mut cols = Vec::new();
            for c in inter.columns() {
                cols.push(of.quotient_coords(w, &c));
            }
            let m = if cols.is_empty() || gdim == 0 {
                Matrix::zero(gdim, 0)
            } else {
                Matrix::from_columns(&cols).column_space_canonical()
            };
            steps.insert(k, m);
        }
        if gdim == 0 {
            // Degenerate but well-formed: the zero space, pure anywhere.
            let top = self.highest_weight();
            let mut s = BTreeMap::new();
            s.insert(top, Matrix::zero(0, 0));
            return Filtration { dim: 0, steps: s };
        }
        Filtration::new(gdim, steps).expect("induced graded filtration is well formed")
    }

    /// Image filtration g(W) for invertible g.
    pub fn transform(&self, g: &Matrix<F>) -> Filtration<F> {
        let steps = self
            .steps
            .iter()
            .map(|(w, m)| (*w, g.mul(m).column_space_canonical()))
            .collect();
        Filtration::new(self.dim, steps).expect("transform of a filtration is a filtration")
    }
}

/// Rows spanning {x : x * m = 0} (the annihilator of the column space).
pub fn left_annihilator<F: Field>(m: &Matrix<F>) -> Matrix<F> {
    let kernel = m.transpose().kernel_basis();
    if kernel.is_empty() {
        Matrix::zero(0, m.rows())
    } else {
        Matrix::from_columns(&kernel).transpose()
    }
}

impl<F: Field + fmt::Debug> fmt::Debug for Filtration<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Filtration on dim {}:", self.dim)?;
        for (w, m) in &self.steps {
            writeln!(f, "  W_{w}: dim {}", m.cols())?;
        }
        Ok(())
    }
}

/// A splitting of a filtration: a semisimple endomorphism Y with integer
/// eigenvalues such that W_w = ⊕_{w' <= w} Ker(Y - w').
#[derive(Clone, PartialEq)]
pub struct Splitting<F> {
    y: Matrix<F>,
    /// The integer spectrum (weights with nonzero eigenspace), ascending.
    weights: Vec<i64>,
}

impl<F: Field> Splitting<F> {
    /// Verify Y against the filtration it is claimed to split.
    pub fn new(y: Matrix<F>, w: &Filtration<F>) -> Result<Self, String> {
        assert!(y.is_square());
        assert_eq!(y.rows(), w.dim());
        let weights = w.jump_weights();
        let s = Splitting { y, weights: weights.clone() };
        // Semisimplicity with the expected spectrum: prod (Y - w) = 0.
        let mut prod = Matrix::identity(s.y.rows());
        for &wt in &weights {
            prod = prod.mul(&s.shifted(wt));
        }
        if !prod.is_zero() {
            return Err("Y is not semisimple with the filtration's integer spectrum".into());
        }
        // Each W_w must be the sum of eigenspaces of weight <= w.
        for &wt in &weights {
            let mut span = Matrix::zero(s.y.rows(), 0);
            for &w2 in weights.iter().filter(|&&w2| w2 <= wt) {
                let proj = s.eigenprojection(w2);
                span = span.column_space_sum(&proj);
            }
            if span != w.basis_at(wt) {
                return Err(format!("eigenspaces of weight <= {wt} do not match W_{wt}"));
            }
        }
        Ok(s)
    }

    /// Y acting with weight w_i on the i-th basis vector (diagonal case).
    pub fn diagonal(weights_per_basis: &[i64]) -> Self {
        let n = weights_per_basis.len();
        let y = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                F::from_i64(weights_per_basis[i])
            } else {
                F::zero()
            }
        });
        let mut ws: Vec<i64> = weights_per_basis.to_vec();
        ws.sort_unstable();
        ws.dedup();
        Splitting { y, weights: ws }
    }

    /// Construct from a known-good matrix and spectrum without checks.
    /// Used internally where the defining identities were just solved for.
    pub fn from_parts_unchecked(y: Matrix<F>, mut weights: Vec<i64>) -> Self {
        weights.sort_unstable();
        weights.dedup();
        Splitting { y, weights }
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.y.rows()
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    fn shifted(&self, w: i64) -> Matrix<F> {
        let n = self.y.rows();
        self.y.sub(&Matrix::identity(n).scale(&F::from_i64(w)))
    }

    /// Projection onto Ker(Y - w) along the other eigenspaces, by Lagrange
    /// interpolation on the integer spectrum.
    pub fn eigenprojection(&self, w: i64) -> Matrix<F> {
        if !self.weights.contains(&w) {
            return Matrix::zero(self.y.rows(), self.y.cols());
        }
        let mut p = Matrix::identity(self.y.rows());
        for &w2 in self.weights.iter().filter(|&&w2| w2 != w) {
            let denom = F::from_i64(w - w2).inv().unwrap();
            p = p.mul(&self.shifted(w2).scale(&denom));
        }
        p
    }

    /// The filtration this splitting defines: W_w = ⊕_{w' <= w} Ker(Y - w').
    pub fn induced_filtration(&self) -> Filtration<F> {
        let n = self.y.rows();
        let mut steps = BTreeMap::new();
        let mut span = Matrix::zero(n, 0);
        for &w in &self.weights {
            span = span.column_space_sum(&self.eigenprojection(w));
            steps.insert(w, span.clone());
        }
        Filtration::new(n, steps).expect("splitting induces a filtration")
    }

    /// Component of X of Ad(Y)-weight a: the sum of P_{w+a} X P_w.
    pub fn weight_component(&self, x: &Matrix<F>, a: i64) -> Matrix<F> {
        let mut out = Matrix::zero(x.rows(), x.cols());
        for &w in &self.weights {
            if !self.weights.contains(&(w + a)) {
                continue;
            }
            out = out.add(&self.eigenprojection(w + a).mul(x).mul(&self.eigenprojection(w)));
        }
        out
    }

    /// Ad(Y)-weights a with a nonzero component of X.
    pub fn weight_support(&self, x: &Matrix<F>) -> Vec<i64> {
        let lo = self.weights.first().copied().unwrap_or(0);
        let hi = self.weights.last().copied().unwrap_or(0);
        (lo - hi..=hi - lo)
            .filter(|&a| !self.weight_component(x, a).is_zero())
            .collect()
    }

    /// Whether [Y, X] = a X.
    pub fn has_pure_weight(&self, x: &Matrix<F>, a: i64) -> bool {
        self.y.commutator(x) == x.scale(&F::from_i64(a))
    }

    pub fn commutes_with(&self, x: &Matrix<F>) -> bool {
        self.y.commutator(x).is_zero()
    }

    pub fn conjugate(&self, g: &Matrix<F>) -> Splitting<F> {
        let gi = g.inverse().expect("conjugator must be invertible");
        Splitting { y: g.mul(&self.y).mul(&gi), weights: self.weights.clone() }
    }
}

impl<F: Field + fmt::Debug> fmt::Debug for Splitting<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Splitting with weights {:?}:\n{:?}", self.weights, self.y)
    }
}

/// The unique u with Y' = u Y u^{-1} and u - 1 in W_{-1}End(V), for two
/// splittings Y, Y' of the same filtration W: u = sum_w P'_w P_w.
pub fn splitting_conjugator<F: Field>(
    w: &Filtration<F>,
    y: &Splitting<F>,
    y2: &Splitting<F>,
) -> Result<Matrix<F>, String> {
    let n = w.dim();
    let mut u = Matrix::zero(n, n);
    for &wt in y.weights() {
        u = u.add(&y2.eigenprojection(wt).mul(&y.eigenprojection(wt)));
    }
    let ui = u.inverse().ok_or("conjugator is singular (inputs are not splittings of W)")?;
    if u.mul(y.matrix()).mul(&ui) != *y2.matrix() {
        return Err("conjugator does not intertwine the splittings".into());
    }
    if !w.endo_member(&u.sub(&Matrix::identity(n)), -1) {
        return Err("conjugator is not unipotent along W".into());
    }
    Ok(u)
}

/// A map between graded pieces of a filtration, stored blockwise in the
/// canonical gr bases: (source weight, target weight) -> block matrix.
/// Zero blocks are omitted. Houses delta_W values in gr^W End(V).
#[derive(Clone, PartialEq)]
pub struct GradedMap<F> {
    /// Weight -> graded dimension of the underlying filtration.
    pub graded_dims: BTreeMap<i64, usize>,
    pub components: BTreeMap<(i64, i64), Matrix<F>>,
}

impl<F: Field> GradedMap<F> {
    pub fn zero(w: &Filtration<F>) -> Self {
        let graded_dims = w.jump_weights().iter().map(|&wt| (wt, w.graded_dim(wt))).collect();
        GradedMap { graded_dims, components: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn set(&mut self, src: i64, dst: i64, m: Matrix<F>) {
        assert_eq!(m.cols(), *self.graded_dims.get(&src).unwrap_or(&0));
        assert_eq!(m.rows(), *self.graded_dims.get(&dst).unwrap_or(&0));
        if m.is_zero() {
            self.components.remove(&(src, dst));
        } else {
            self.components.insert((src, dst), m);
        }
    }

    pub fn component(&self, src: i64, dst: i64) -> Option<&Matrix<F>> {
        self.components.get(&(src, dst))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.graded_dims, other.graded_dims);
        let mut out = self.clone();
        for ((s, d), m) in &other.components {
            let merged = match out.components.get(&(*s, *d)) {
                Some(prev) => prev.add(m),
                None => m.clone(),
            };
            out.set(*s, *d, merged);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.graded_dims, other.graded_dims);
        let mut out = self.clone();
        for ((s, d), m) in &other.components {
            let merged = match out.components.get(&(*s, *d)) {
                Some(prev) => prev.sub(m),
                None => m.neg(),
            };
            out.set(*s, *d, merged);
        }
        out
    }

    /// Largest k such that every component shifts weight by at most k
    /// (i.e. membership in W_k gr End); None when zero.
    pub fn max_shift(&self) -> Option<i64> {
        self.components.keys().map(|(s, d)| d - s).max()
    }

    /// Build from an endomorphism f and a splitting Y0 of W: the blocks of
    /// f with respect to the Y0-eigenspace decomposition, transported to
    /// the canonical gr bases via the eigenspace ≅ gr isomorphisms.
    pub fn from_endo(w: &Filtration<F>, y0: &Splitting<F>, f: &Matrix<F>) -> Self {
        let mut out = GradedMap::zero(w);
        let weights = w.jump_weights();
        // Section of gr_w: classes of P_w * (graded lift of w) form a basis
        // of Ker(Y0 - w) whose classes are the canonical gr_w basis.
        let mut sections = BTreeMap::new();
        for &wt in &weights {
            let lift = w.graded_lift(wt);
            if lift.cols() > 0 {
                sections.insert(wt, y0.eigenprojection(wt).mul(&lift));
            }
        }
        for &src in &weights {
            let Some(sec) = sections.get(&src) else { continue };
            let image = f.mul(sec);
            for &dst in &weights {
                let pd = y0.eigenprojection(dst).mul(&image);
                if pd.is_zero() {
                    continue;
                }
                let mut cols = Vec::new();
                for c in pd.columns() {
                    cols.push(w.quotient_coords(dst, &c));
                }
                out.set(src, dst, Matrix::from_columns(&cols));
            }
        }
        out
    }

    /// Transport back to an endomorphism of V through the splitting Y0.
    pub fn to_endo(&self, w: &Filtration<F>, y0: &Splitting<F>) -> Matrix<F> {
        let n = w.dim();
        // Basis of V adapted to Y0: columns P_w * lift_w, blocks by weight.
        let mut basis_cols: Vec<Matrix<F>> = Vec::new();
        let mut block_of: Vec<(i64, usize)> = Vec::new(); // (weight, index in block)
        for &wt in &w.jump_weights() {
            let sec = y0.eigenprojection(wt).mul(&w.graded_lift(wt));
            for (i, c) in sec.columns().into_iter().enumerate() {
                basis_cols.push(c);
                block_of.push((wt, i));
            }
        }
        let c = Matrix::from_columns(&basis_cols);
        let cinv = c.inverse().expect("adapted basis is invertible");
        // Images of the adapted basis vectors.
        let mut images: Vec<Matrix<F>> = Vec::new();
        for &(src, idx) in &block_of {
            let mut img = Matrix::zero(n, 1);
            for ((s, d), m) in &self.components {
                if *s != src {
                    continue;
                }
                let dsec = y0.eigenprojection(*d).mul(&w.graded_lift(*d));
                // img += dsec * m[:, idx]
                let col = Matrix::from_fn(m.rows(), 1, |r, _| m.get(r, idx).clone());
                img = img.add(&dsec.mul(&col));
            }
            images.push(img);
        }
        Matrix::from_columns(&images).mul(&cinv)
    }

    /// Apply gr(g) conjugation for an automorphism g preserving W: the
    /// graded components of g act on each gr_w.
    pub fn conjugate_by_graded(&self, w: &Filtration<F>, g: &Matrix<F>) -> Self {
        // gr_w(g): class of g * lift_w in gr_w coordinates.
        let mut grg = BTreeMap::new();
        for (&wt, &gd) in &self.graded_dims {
            if gd == 0 {
                continue;
            }
            let img = g.mul(&w.graded_lift(wt));
            let mut cols = Vec::new();
            for c in img.columns() {
                cols.push(w.quotient_coords(wt, &c));
            }
            grg.insert(wt, Matrix::from_columns(&cols));
        }
        let mut out = GradedMap { graded_dims: self.graded_dims.clone(), components: BTreeMap::new() };
        for ((s, d), m) in &self.components {
            let gs = grg.get(s).expect("source block");
            let gd = grg.get(d).expect("target block");
            let gsi = gs.inverse().expect("gr(g) invertible");
            out.set(*s, *d, gd.mul(m).mul(&gsi));
        }
        out
    }
}

impl<F: Field + fmt::Debug> fmt::Debug for GradedMap<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "GradedMap 0");
        }
        for ((s, d), m) in &self.components {
            writeln!(f, "gr_{s} -> gr_{d}:")?;
            write!(f, "{m:?}")?;
        }
        Ok(())
    }
}

/// Free-function form of the weight component extraction.
pub fn weight_component<F: Field>(x: &Matrix<F>, y: &Splitting<F>, a: i64) -> Matrix<F> {
    y.weight_component(x, a)
}
