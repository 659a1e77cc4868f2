//! Seeded instance generators for the randomized property suites and
//! the command-line self-test.
//!
//! Three families are produced: split systems assembled from tensor
//! products of standard sl(2) representations with scalar weight
//! twists, the rank-4 height-pairing family over random integer
//! parameters, and conjugates of either by random unipotent maps that
//! strictly lower the weight filtration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deligne::{DeligneSystemData, NilpotentOp};
use crate::filtration::{Filtration, Splitting};
use crate::heights::{HeightFamilyParams, TateHeightInput};
use crate::kernel::{Field, Matrix, Rational};
use crate::sl2orbit::OneVarSystem;

/// Deterministic generator stream for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The irreducible sl(2) representation of highest weight `m`:
/// diagonal weights, lowering operator, raising operator.
pub struct SymBlock {
    pub weights: Vec<i64>,
    pub lowering: Matrix<Rational>,
    pub raising: Matrix<Rational>,
}

pub fn sym_block(m: usize) -> SymBlock {
    let dim = m + 1;
    let weights: Vec<i64> = (0..dim).map(|i| m as i64 - 2 * i as i64).collect();
    let mut lowering = Matrix::zero(dim, dim);
    let mut raising = Matrix::zero(dim, dim);
    for i in 0..m {
        lowering = lowering.add(
            &Matrix::from_fn(dim, dim, |r, c| {
                if r == i + 1 && c == i {
                    Rational::from(1)
                } else {
                    Rational::from(0)
                }
            }),
        );
        let coeff = Rational::from(((i + 1) * (m - i)) as i64);
        raising = raising.add(&Matrix::from_fn(dim, dim, |r, c| {
            if r == i && c == i + 1 {
                coeff.clone()
            } else {
                Rational::from(0)
            }
        }));
    }
    SymBlock { weights, lowering, raising }
}

/// Kronecker product, row-major block convention.
pub fn kron(a: &Matrix<Rational>, b: &Matrix<Rational>) -> Matrix<Rational> {
    Matrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |r, c| {
        Field::mul(
            a.get(r / b.rows(), c / b.cols()),
            b.get(r % b.rows(), c % b.cols()),
        )
    })
}

/// Direct sum of square blocks.
pub fn block_diag(blocks: &[Matrix<Rational>]) -> Matrix<Rational> {
    let dim: usize = blocks.iter().map(|b| b.rows()).sum();
    let mut out = Matrix::zero(dim, dim);
    let mut off = 0;
    for b in blocks {
        out = out.add(&Matrix::from_fn(dim, dim, |r, c| {
            if r >= off && r < off + b.rows() && c >= off && c < off + b.cols() {
                b.get(r - off, c - off).clone()
            } else {
                Rational::from(0)
            }
        }));
        off += b.rows();
    }
    out
}

/// One irreducible summand: a highest weight per sl(2) factor, plus a
/// scalar weight twist.
#[derive(Clone, Debug)]
pub struct SplitSummand {
    pub degrees: Vec<usize>,
    pub twist: i64,
}

#[derive(Clone, Debug)]
pub struct SplitSpec {
    pub summands: Vec<SplitSummand>,
}

impl SplitSpec {
    pub fn levels(&self) -> usize {
        self.summands.first().map_or(0, |s| s.degrees.len())
    }

    pub fn dim(&self) -> usize {
        self.summands
            .iter()
            .map(|s| s.degrees.iter().map(|&m| m + 1).product::<usize>())
            .sum()
    }
}

/// A split system together with its level gradings and the weight
/// labels of the adapted basis at the top level.
pub struct SplitSystem {
    pub data: DeligneSystemData<Rational>,
    pub gradings: Vec<Splitting<Rational>>,
    pub top_weights: Vec<i64>,
}

/// Build the block-diagonal system of a split spec: level-j grading
/// weight of a tensor basis vector is the twist plus the factor weights
/// of the first j factors, and the level-j operator is the lowering
/// operator of factor j.
pub fn split_system(spec: &SplitSpec) -> Result<SplitSystem, String> {
    let n = spec.levels();
    if spec.summands.iter().any(|s| s.degrees.len() != n) {
        return Err("summands disagree on the number of levels".into());
    }
    let dim = spec.dim();
    if dim == 0 {
        return Err("empty spec".into());
    }

    // Per-summand data assembled by Kronecker products.
    let mut level_weights: Vec<Vec<i64>> = vec![Vec::new(); n + 1];
    let mut operators: Vec<Vec<Matrix<Rational>>> = vec![Vec::new(); n];
    for s in &spec.summands {
        let blocks: Vec<SymBlock> = s.degrees.iter().map(|&m| sym_block(m)).collect();
        let sdim: usize = s.degrees.iter().map(|&m| m + 1).product();
        // Weight of tensor index i at level j.
        let factor_weight = |i: usize, f: usize| {
            let mut idx = i;
            for b in blocks.iter().skip(f + 1) {
                idx /= b.weights.len();
            }
            blocks[f].weights[idx % blocks[f].weights.len()]
        };
        for (j, weights) in level_weights.iter_mut().enumerate() {
            for i in 0..sdim {
                let w: i64 = s.twist + (0..j).map(|f| factor_weight(i, f)).sum::<i64>();
                weights.push(w);
            }
        }
        for (j, ops) in operators.iter_mut().enumerate() {
            let mut op = Matrix::identity(1);
            for (f, b) in blocks.iter().enumerate() {
                let factor = if f == j {
                    b.lowering.clone()
                } else {
                    Matrix::identity(b.weights.len())
                };
                op = kron(&op, &factor);
            }
            ops.push(op);
        }
    }

    let gradings: Vec<Splitting<Rational>> = level_weights
        .iter()
        .map(|w| Splitting::diagonal(w))
        .collect();
    let filtrations: Vec<Filtration<Rational>> =
        gradings.iter().map(|g| g.induced_filtration()).collect();
    let ops: Vec<NilpotentOp<Rational>> = operators
        .iter()
        .map(|blocks| NilpotentOp::new(block_diag(blocks)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let y = gradings[n].clone();
    let top_weights = level_weights[n].clone();
    Ok(SplitSystem {
        data: DeligneSystemData { filtrations, operators: ops, y },
        gradings,
        top_weights,
    })
}

/// Random spec with `n` levels and total dimension at most `max_dim`.
pub fn random_split_spec<R: Rng>(r: &mut R, n: usize, max_dim: usize) -> SplitSpec {
    loop {
        let count = r.gen_range(1..=3usize);
        let summands: Vec<SplitSummand> = (0..count)
            .map(|_| SplitSummand {
                degrees: (0..n).map(|_| r.gen_range(0..=2usize)).collect(),
                twist: r.gen_range(-2..=2i64),
            })
            .collect();
        let spec = SplitSpec { summands };
        let nonzero_levels =
            (0..n).all(|j| spec.summands.iter().any(|s| s.degrees[j] > 0));
        if spec.dim() <= max_dim && spec.dim() > 0 && nonzero_levels {
            return spec;
        }
    }
}

fn random_rational<R: Rng>(r: &mut R, max_num: i64, max_den: i64) -> Rational {
    Rational::new(r.gen_range(-max_num..=max_num), r.gen_range(1..=max_den))
}

/// Random unipotent map that strictly lowers the given basis weights:
/// identity plus entries sending weight-w vectors into lower weights.
pub fn random_unipotent<R: Rng>(r: &mut R, weights: &[i64]) -> Matrix<Rational> {
    let dim = weights.len();
    Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Rational::from(1)
        } else if weights[i] < weights[j] {
            random_rational(r, 2, 2)
        } else {
            Rational::from(0)
        }
    })
}

/// Transport a whole system through an invertible map g.
pub fn conjugate_system(
    d: &DeligneSystemData<Rational>,
    g: &Matrix<Rational>,
) -> Result<DeligneSystemData<Rational>, String> {
    let ginv = g.inverse().ok_or("conjugator is singular")?;
    let filtrations = d.filtrations.iter().map(|w| w.transform(g)).collect();
    let operators = d
        .operators
        .iter()
        .map(|op| {
            NilpotentOp::new(g.mul(op.matrix()).mul(&ginv)).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok(DeligneSystemData { filtrations, operators, y: d.y.conjugate(g) })
}

/// Transport a one-variable system through an invertible map g.
pub fn conjugate_one_var(
    s: &OneVarSystem,
    g: &Matrix<Rational>,
) -> Result<OneVarSystem, String> {
    let ginv = g.inverse().ok_or("conjugator is singular")?;
    OneVarSystem::new(
        s.w.transform(g),
        g.mul(&s.n1).mul(&ginv),
        g.mul(&s.n2).mul(&ginv),
        s.y.conjugate(g),
    )
    .map_err(|e| e.to_string())
}

/// Random valid system with `n` levels, optionally conjugated by a
/// random unipotent map.
pub fn random_system<R: Rng>(
    r: &mut R,
    n: usize,
    max_dim: usize,
    conjugate: bool,
) -> Result<DeligneSystemData<Rational>, String> {
    let split = split_system(&random_split_spec(r, n, max_dim))?;
    if conjugate {
        let g = random_unipotent(r, &split.top_weights);
        conjugate_system(&split.data, &g)
    } else {
        Ok(split.data)
    }
}

/// Random one-variable system: the bottom two levels of a random split
/// system, optionally conjugated.
pub fn random_one_var<R: Rng>(
    r: &mut R,
    max_dim: usize,
    conjugate: bool,
) -> Result<OneVarSystem, String> {
    let split = split_system(&random_split_spec(r, 2, max_dim))?;
    let d = &split.data;
    let sys = OneVarSystem::new(
        d.filtrations[0].clone(),
        d.operators[0].matrix().clone(),
        d.operators[1].matrix().clone(),
        d.y.clone(),
    )
    .map_err(|e| e.to_string())?;
    if conjugate {
        let g = random_unipotent(r, &split.top_weights);
        conjugate_one_var(&sys, &g)
    } else {
        Ok(sys)
    }
}

/// Random generic height input: degree-zero integer weights bounded by
/// 3, valuations with denominators at most 6, retried until every
/// theta argument avoids the lattice of v(q).
pub fn random_tate_input<R: Rng>(r: &mut R) -> TateHeightInput {
    loop {
        let half = |r: &mut R| {
            let k = r.gen_range(1..=3i64);
            vec![k, -k]
        };
        let inp = TateHeightInput {
            vq: Rational::new(r.gen_range(1..=6), r.gen_range(1..=6)),
            m: half(r),
            n: half(r),
            va: (0..2).map(|_| random_rational(r, 6, 6)).collect(),
            vb: (0..2).map(|_| random_rational(r, 6, 6)).collect(),
        };
        if inp.validate().is_ok() && inp.d().is_ok() {
            return inp;
        }
    }
}

/// Random height family: c, c' in [1, 5], other integer data in
/// [-5, 5], degree-zero divisors of two points each.
pub fn random_height_family<R: Rng>(r: &mut R) -> HeightFamilyParams {
    let half = |r: &mut R| {
        let k = r.gen_range(1..=3i64);
        vec![k, -k]
    };
    let pair = |r: &mut R| vec![r.gen_range(-5..=5i64), r.gen_range(-5..=5i64)];
    let grid = |r: &mut R| {
        vec![
            vec![r.gen_range(-5..=5i64), r.gen_range(-5..=5i64)],
            vec![r.gen_range(-5..=5i64), r.gen_range(-5..=5i64)],
        ]
    };
    let p = HeightFamilyParams {
        c: r.gen_range(1..=5),
        c_prime: r.gen_range(1..=5),
        m: half(r),
        n: half(r),
        a: pair(r),
        a_prime: pair(r),
        b: pair(r),
        b_prime: pair(r),
        d: grid(r),
        d_prime: grid(r),
    };
    debug_assert!(p.validate().is_ok());
    p
}

/// Random rank-one square-zero matrix u v^T with v . u = 0.
pub fn random_square_zero<R: Rng>(r: &mut R, dim: usize) -> Matrix<Rational> {
    loop {
        let u: Vec<Rational> = (0..dim).map(|_| random_rational(r, 2, 1)).collect();
        let mut v: Vec<Rational> = (0..dim).map(|_| random_rational(r, 2, 1)).collect();
        // Orthogonalize v against u at the last nonzero slot of u.
        let Some(p) = (0..dim).rev().find(|&i| !u[i].is_zero()) else {
            continue;
        };
        let dot = u
            .iter()
            .zip(&v)
            .fold(Rational::from(0), |acc, (x, y)| Field::add(&acc, &Field::mul(x, y)));
        v[p] = Field::sub(&v[p], &Field::div(&dot, &u[p]));
        let m = Matrix::from_fn(dim, dim, |i, j| Field::mul(&u[i], &v[j]));
        if !m.is_zero() {
            return m;
        }
    }
}

/// Random invertible map: a product of unit triangular factors.
pub fn random_invertible<R: Rng>(r: &mut R, dim: usize) -> Matrix<Rational> {
    let lower = Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Rational::from(1)
        } else if i > j {
            random_rational(r, 2, 1)
        } else {
            Rational::from(0)
        }
    });
    let upper = Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Rational::from(1)
        } else if i < j {
            random_rational(r, 2, 1)
        } else {
            Rational::from(0)
        }
    });
    lower.mul(&upper)
}

/// Random instance of the first eigenvector case: A = B + N with
/// N^2 = 0 and [B, N] = 0, bound by A^2 - 2AB + B^2 = 0.
pub fn random_case_one<R: Rng>(r: &mut R, dim: usize) -> crate::eigen::QuadraticRelation {
    let n = random_square_zero(r, dim);
    let b = Matrix::identity(dim)
        .scale(&random_rational(r, 3, 1))
        .add(&n.scale(&random_rational(r, 2, 1)));
    crate::eigen::QuadraticRelation {
        a: Rational::from(1),
        b: Rational::from(-2),
        c: Rational::from(0),
        d: Rational::from(1),
        op_a: b.add(&n),
        op_b: b,
    }
}

/// Random instance of the singular-operator cases: block-diagonal
/// A, B with complementary supports, bound by AB + BA = 0, conjugated
/// by a random invertible map. `swap` selects the case with B singular.
pub fn random_case_kernel<R: Rng>(
    r: &mut R,
    dim: usize,
    swap: bool,
) -> crate::eigen::QuadraticRelation {
    let k = r.gen_range(1..dim);
    // A supported on the last dim - k coordinates, B on the first k,
    // with rational eigenvalues by triangularity.
    let a = Matrix::from_fn(dim, dim, |i, j| {
        if i >= k && j >= k && i <= j {
            if i == j {
                Rational::from(r.gen_range(1..=3i64))
            } else {
                random_rational(r, 2, 1)
            }
        } else {
            Rational::from(0)
        }
    });
    let b = Matrix::from_fn(dim, dim, |i, j| {
        if i < k && j < k && i <= j {
            random_rational(r, 3, 1)
        } else {
            Rational::from(0)
        }
    });
    let g = random_invertible(r, dim);
    let ginv = g.inverse().expect("unit triangular product is invertible");
    let (op_a, op_b) = if swap {
        (g.mul(&b).mul(&ginv), g.mul(&a).mul(&ginv))
    } else {
        (g.mul(&a).mul(&ginv), g.mul(&b).mul(&ginv))
    };
    crate::eigen::QuadraticRelation {
        a: Rational::from(0),
        b: Rational::from(1),
        c: Rational::from(1),
        d: Rational::from(0),
        op_a,
        op_b,
    }
}
