//! Non-archimedean local height pairing on a Tate curve, the associated
//! rank-4 monodromy systems, and the asymptotic behavior of the pairing
//! along a degenerating family.
//!
//! # Example
//!
//! ```
//! use mslab::heights::{local_height, pairing_via_delta, TateHeightInput};
//! use mslab::kernel::Rational;
//!
//! let inp = TateHeightInput {
//!     vq: Rational::from(2),
//!     m: vec![1, -1],
//!     n: vec![1, -1],
//!     va: vec!["1/2".parse().unwrap(), "5/2".parse().unwrap()],
//!     vb: vec![Rational::from(0), Rational::from(1)],
//! };
//! let h = local_height(&inp).unwrap();
//! // The pairing agrees with the defect of the associated rank-4 system.
//! assert_eq!(h, pairing_via_delta(&inp).unwrap());
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use crate::deligne::{deligne_splitting, DeligneError, NilpotentOp};
use crate::filtration::{Filtration, Splitting};
use crate::kernel::{Field, Matrix, Poly, Rational, RationalFunction};
use crate::sl2orbit::{one_var_expansion, ExpansionReport, OneVarSystem, Sl2Error};

#[derive(Debug, Error)]
pub enum HeightsError {
    #[error("genericity violated: v(u) = {vu} lies in {vq} Z{}", pair.map(|(j, h)| format!(" (divisor pair {j},{h})")).unwrap_or_default())]
    GenericityViolation {
        vq: Rational,
        vu: Rational,
        pair: Option<(usize, usize)>,
    },
    #[error("invalid height input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sl2(#[from] Sl2Error),
    #[error(transparent)]
    Deligne(#[from] DeligneError),
}

/// Valuation of the theta kernel: v(theta_q(u)) for v(q) = vq > 0 and
/// v(u) = vu, as the finite sum
/// sum_{n>=0} min(0, n vq + vu) + sum_{n>=1} min(0, n vq - vu).
pub fn theta_valuation(vq: &Rational, vu: &Rational) -> Result<Rational, HeightsError> {
    if !vq.is_positive() {
        return Err(HeightsError::Invalid("v(q) must be positive".into()));
    }
    let ratio = Field::div(vu, vq);
    if ratio.is_integer() {
        return Err(HeightsError::GenericityViolation {
            vq: vq.clone(),
            vu: vu.clone(),
            pair: None,
        });
    }
    let mut total = Rational::from(0);
    for sign in [1i64, -1] {
        let vu_signed = if sign == 1 { vu.clone() } else { Field::neg(vu) };
        let start = if sign == 1 { 0i64 } else { 1 };
        // The terms increase with n, so the negative ones form an
        // initial block.
        let mut n = start;
        loop {
            let term = Field::add(&Field::mul(&Rational::from(n), vq), &vu_signed);
            if !term.is_negative() {
                break;
            }
            total = Field::add(&total, &term);
            n += 1;
        }
    }
    Ok(total)
}

/// A pair of degree-zero divisors on a Tate curve, recorded through the
/// valuations of their coordinates.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct TateHeightInput {
    pub vq: Rational,
    pub m: Vec<i64>,
    pub n: Vec<i64>,
    pub va: Vec<Rational>,
    pub vb: Vec<Rational>,
}

impl TateHeightInput {
    pub fn validate(&self) -> Result<(), HeightsError> {
        if !self.vq.is_positive() {
            return Err(HeightsError::Invalid("v(q) must be positive".into()));
        }
        if self.m.len() != self.va.len() || self.n.len() != self.vb.len() {
            return Err(HeightsError::Invalid(
                "weights and valuations have mismatched lengths".into(),
            ));
        }
        if self.m.iter().sum::<i64>() != 0 || self.n.iter().sum::<i64>() != 0 {
            return Err(HeightsError::Invalid(
                "divisors must have degree zero".into(),
            ));
        }
        Ok(())
    }

    /// a = sum_j m(j) v(alpha_j).
    pub fn a(&self) -> Rational {
        weighted_sum(&self.m, &self.va)
    }

    /// b = sum_j n(j) v(beta_j).
    pub fn b(&self) -> Rational {
        weighted_sum(&self.n, &self.vb)
    }

    /// d = sum_{j,h} m(j) n(h) v(theta_q(alpha_j / beta_h)).
    pub fn d(&self) -> Result<Rational, HeightsError> {
        let mut total = Rational::from(0);
        for (j, &mj) in self.m.iter().enumerate() {
            for (h, &nh) in self.n.iter().enumerate() {
                let vu = Field::sub(&self.va[j], &self.vb[h]);
                let v = theta_valuation(&self.vq, &vu).map_err(|e| match e {
                    HeightsError::GenericityViolation { vq, vu, .. } => {
                        HeightsError::GenericityViolation { vq, vu, pair: Some((j, h)) }
                    }
                    other => other,
                })?;
                total = Field::add(&total, &Field::mul(&Rational::from(mj * nh), &v));
            }
        }
        Ok(total)
    }
}

fn weighted_sum(weights: &[i64], vals: &[Rational]) -> Rational {
    weights
        .iter()
        .zip(vals)
        .fold(Rational::from(0), |acc, (&w, v)| {
            Field::add(&acc, &Field::mul(&Rational::from(w), v))
        })
}

/// <A, B> = sum m(j) n(h) v(theta_q(alpha_j/beta_h))
///          - (sum m(j) v(alpha_j)) (sum n(j) v(beta_j)) / v(q).
pub fn local_height(inp: &TateHeightInput) -> Result<Rational, HeightsError> {
    inp.validate()?;
    let d = inp.d()?;
    let correction = Field::div(&Field::mul(&inp.a(), &inp.b()), &inp.vq);
    Ok(Field::sub(&d, &correction))
}

/// The rank-4 weight filtration: W_{-3} = 0, W_{-2} = <e1>,
/// W_{-1} = <e1,e2,e3>, W_0 = V.
pub fn height_weight_filtration() -> Filtration<Rational> {
    let mut steps = BTreeMap::new();
    steps.insert(-2, Matrix::from_columns(&[Matrix::basis_column(4, 0)]));
    steps.insert(
        -1,
        Matrix::from_columns(&[
            Matrix::basis_column(4, 0),
            Matrix::basis_column(4, 1),
            Matrix::basis_column(4, 2),
        ]),
    );
    steps.insert(0, Matrix::identity(4));
    Filtration::new(4, steps).expect("height weight filtration")
}

/// Y e4 = Y e3 = 0, Y e2 = -2 e2, Y e1 = -2 e1.
pub fn height_grading() -> Splitting<Rational> {
    Splitting::diagonal(&[-2, -2, 0, 0])
}

/// N e3 = c e2 + b e1, N e4 = a e2 + d e1, N e2 = N e1 = 0.
pub fn height_operator(a: &Rational, b: &Rational, c: &Rational, d: &Rational) -> Matrix<Rational> {
    let zero = Rational::from(0);
    Matrix::from_rows(vec![
        vec![zero.clone(), zero.clone(), b.clone(), d.clone()],
        vec![zero.clone(), zero.clone(), c.clone(), a.clone()],
        vec![zero.clone(), zero.clone(), zero.clone(), zero.clone()],
        vec![zero.clone(), zero.clone(), zero.clone(), zero],
    ])
}

/// delta_W of the rank-4 system with a single operator; requires c != 0
/// so that the relative weight filtration exists.
pub fn single_operator_delta(
    a: &Rational,
    b: &Rational,
    c: &Rational,
    d: &Rational,
) -> Result<Rational, HeightsError> {
    let w = height_weight_filtration();
    let n = NilpotentOp::new(height_operator(a, b, c, d))?;
    let sd = deligne_splitting(&w, &n, &height_grading())?;
    let endo = sd.delta.to_endo(&w, &sd.y0);
    Ok(endo.get(0, 3).clone())
}

/// The pairing through the monodromy system: <A, B> = delta_W(H_{A,B}).
pub fn pairing_via_delta(inp: &TateHeightInput) -> Result<Rational, HeightsError> {
    inp.validate()?;
    single_operator_delta(&inp.a(), &inp.b(), &inp.vq, &inp.d()?)
}

/// Integer parameters of a degenerating family of height inputs: the
/// valuations grow linearly, v = y * (t-part) + (pi-part).
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct HeightFamilyParams {
    pub c: i64,
    pub c_prime: i64,
    pub m: Vec<i64>,
    pub n: Vec<i64>,
    pub a: Vec<i64>,
    pub a_prime: Vec<i64>,
    pub b: Vec<i64>,
    pub b_prime: Vec<i64>,
    pub d: Vec<Vec<i64>>,
    pub d_prime: Vec<Vec<i64>>,
}

impl HeightFamilyParams {
    pub fn validate(&self) -> Result<(), HeightsError> {
        if self.c <= 0 || self.c_prime <= 0 {
            return Err(HeightsError::Invalid("c and c' must be positive".into()));
        }
        if self.m.iter().sum::<i64>() != 0 || self.n.iter().sum::<i64>() != 0 {
            return Err(HeightsError::Invalid("divisors must have degree zero".into()));
        }
        let (jm, hn) = (self.m.len(), self.n.len());
        if self.a.len() != jm
            || self.a_prime.len() != jm
            || self.b.len() != hn
            || self.b_prime.len() != hn
            || self.d.len() != jm
            || self.d_prime.len() != jm
            || self.d.iter().any(|r| r.len() != hn)
            || self.d_prime.iter().any(|r| r.len() != hn)
        {
            return Err(HeightsError::Invalid("parameter arrays have mismatched lengths".into()));
        }
        Ok(())
    }

    fn agg(&self, per: &[i64], weights: &[i64]) -> Rational {
        Rational::from(weights.iter().zip(per).map(|(&w, &x)| w * x).sum::<i64>())
    }

    fn agg2(&self, per: &[Vec<i64>]) -> Rational {
        let mut total = 0i64;
        for (j, &mj) in self.m.iter().enumerate() {
            for (h, &nh) in self.n.iter().enumerate() {
                total += mj * nh * per[j][h];
            }
        }
        Rational::from(total)
    }

    /// Aggregates (a, b, c, d) of the divergent operator.
    pub fn leading(&self) -> (Rational, Rational, Rational, Rational) {
        (
            self.agg(&self.a, &self.m),
            self.agg(&self.b, &self.n),
            Rational::from(self.c),
            self.agg2(&self.d),
        )
    }

    /// Aggregates (a', b', c', d') of the bounded operator.
    pub fn bounded(&self) -> (Rational, Rational, Rational, Rational) {
        (
            self.agg(&self.a_prime, &self.m),
            self.agg(&self.b_prime, &self.n),
            Rational::from(self.c_prime),
            self.agg2(&self.d_prime),
        )
    }

    /// The height input of the family member at parameter y.
    pub fn specialize(&self, y: &Rational) -> TateHeightInput {
        let lin = |t: i64, p: i64| {
            Field::add(&Field::mul(&Rational::from(t), y), &Rational::from(p))
        };
        TateHeightInput {
            vq: lin(self.c, self.c_prime),
            m: self.m.clone(),
            n: self.n.clone(),
            va: self
                .a
                .iter()
                .zip(&self.a_prime)
                .map(|(&t, &p)| lin(t, p))
                .collect(),
            vb: self
                .b
                .iter()
                .zip(&self.b_prime)
                .map(|(&t, &p)| lin(t, p))
                .collect(),
        }
    }
}

/// The rank-4 two-operator monodromy system of a degenerating family.
#[derive(Clone, Debug)]
pub struct HeightSystem {
    pub system: OneVarSystem,
    pub leading: (Rational, Rational, Rational, Rational),
    pub bounded: (Rational, Rational, Rational, Rational),
}

pub fn build_height_system(p: &HeightFamilyParams) -> Result<HeightSystem, HeightsError> {
    p.validate()?;
    let leading = p.leading();
    let bounded = p.bounded();
    let n1 = height_operator(&leading.0, &leading.1, &leading.2, &leading.3);
    let n2 = height_operator(&bounded.0, &bounded.1, &bounded.2, &bounded.3);
    let system = OneVarSystem::new(height_weight_filtration(), n1, n2, height_grading())?;
    Ok(HeightSystem { system, leading, bounded })
}

/// The closed form (yd + d') - (ya + a')(yb + b')/(yc + c').
pub fn delta_closed_form(sys: &HeightSystem) -> RationalFunction {
    let lin = |t: &Rational, p: &Rational| {
        RationalFunction::new(Poly::new(vec![p.clone(), t.clone()]), Poly::constant(Rational::from(1)))
    };
    let (a, b, c, d) = &sys.leading;
    let (ap, bp, cp, dp) = &sys.bounded;
    let num = Field::mul(&lin(a, ap), &lin(b, bp));
    Field::sub(&lin(d, dp), &Field::div(&num, &lin(c, cp)))
}

/// Asymptotic expansion of the pairing along the family: delta_W of
/// y N_1 + N_2, with the closed-form cross-check and the slope identity
/// (the y-coefficient is d - ab/c).
pub fn height_asymptotics(
    p: &HeightFamilyParams,
    order: i64,
) -> Result<ExpansionReport, HeightsError> {
    let sys = build_height_system(p)?;
    let mut report = one_var_expansion(&sys.system, order)?;
    report.theorem = "height pairing asymptotics".into();

    let oracle = delta_closed_form(&sys);
    let oracle_series = Matrix::from_rows(vec![vec![oracle]]).expand_at_infinity(order);
    let mut mismatch = Vec::new();
    for power in oracle_series.powers_desc() {
        let expect = oracle_series
            .coeff(power)
            .map(|m| m.get(0, 0).clone())
            .unwrap_or_else(|| Rational::from(0));
        let got = report
            .delta_series
            .get(&-power)
            .map(|m| m.get(0, 3).clone())
            .unwrap_or_else(|| Rational::from(0));
        if expect != got {
            mismatch.push(power);
        }
    }
    report.checks.push(if mismatch.is_empty() {
        crate::deligne::PropCheck::ok("delta-closed-form")
    } else {
        crate::deligne::PropCheck::fail(
            "delta-closed-form",
            format!("coefficients differ at powers {mismatch:?}"),
        )
    });

    let (a, b, c, d) = &sys.leading;
    let slope = Field::sub(d, &Field::div(&Field::mul(a, b), c));
    let got_slope = report
        .delta_series
        .get(&-1)
        .map(|m| m.get(0, 3).clone())
        .unwrap_or_else(|| Rational::from(0));
    report.checks.push(if slope == got_slope {
        crate::deligne::PropCheck::ok("slope-d-minus-ab-over-c")
    } else {
        crate::deligne::PropCheck::fail(
            "slope-d-minus-ab-over-c",
            format!("expected {slope}, found {got_slope}"),
        )
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    /// Valuation of the truncated theta product, factor by factor: each
    /// factor 1 - x with v(x) != 0 has valuation min(0, v(x)).
    fn theta_oracle(vq: &Rational, vu: &Rational) -> Rational {
        let mut total = Rational::from(0);
        for n in 0..200i64 {
            let first = Field::add(&Field::mul(&Rational::from(n), vq), vu);
            if first.is_negative() {
                total = Field::add(&total, &first);
            }
            let second = Field::sub(&Field::mul(&Rational::from(n + 1), vq), vu);
            if second.is_negative() {
                total = Field::add(&total, &second);
            }
        }
        total
    }

    #[test]
    fn theta_valuation_examples() {
        assert_eq!(theta_valuation(&q(2, 1), &q(1, 2)).unwrap(), q(0, 1));
        assert_eq!(theta_valuation(&q(2, 1), &q(-3, 1)).unwrap(), q(-4, 1));
        assert!(matches!(
            theta_valuation(&q(2, 1), &q(4, 1)),
            Err(HeightsError::GenericityViolation { .. })
        ));
        assert!(matches!(
            theta_valuation(&q(2, 1), &q(0, 1)),
            Err(HeightsError::GenericityViolation { .. })
        ));
    }

    #[test]
    fn theta_valuation_matches_truncated_product() {
        for (nq, du, num) in [(2i64, 3i64, 1i64), (3, 2, -7), (1, 4, 13), (5, 3, -22)] {
            let vq = Rational::from(nq);
            let vu = q(num, du);
            assert_eq!(
                theta_valuation(&vq, &vu).unwrap(),
                theta_oracle(&vq, &vu),
                "vq={nq}, vu={num}/{du}"
            );
        }
    }

    #[test]
    fn theta_functional_equation_and_inversion() {
        // v(theta)(vu + vq) = v(theta)(vu) - vu, and
        // v(theta)(-vu) = v(theta)(vu) - vu.
        for (nq, num, du) in [(2i64, 1i64, 2i64), (3, -5, 2), (1, 7, 3), (4, -13, 6)] {
            let vq = Rational::from(nq);
            let vu = q(num, du);
            let base = theta_valuation(&vq, &vu).unwrap();
            let shifted = theta_valuation(&vq, &Field::add(&vu, &vq)).unwrap();
            assert_eq!(shifted, Field::sub(&base, &vu));
            let inverted = theta_valuation(&vq, &Field::neg(&vu)).unwrap();
            assert_eq!(inverted, Field::sub(&base, &vu));
        }
    }

    fn sample_input() -> TateHeightInput {
        TateHeightInput {
            vq: q(2, 1),
            m: vec![1, -1],
            n: vec![1, -1],
            va: vec![q(1, 2), q(5, 2)],
            vb: vec![q(0, 1), q(1, 1)],
        }
    }

    #[test]
    fn local_height_example() {
        // Frozen: theta terms 0, -1/2, -1/2, 0 give 1; correction
        // (-2)(-1)/2 = 1.
        assert_eq!(local_height(&sample_input()).unwrap(), q(0, 1));
    }

    #[test]
    fn local_height_second_term_vanishes_for_equal_valuations() {
        let inp = TateHeightInput {
            vq: q(3, 1),
            m: vec![2, -2],
            n: vec![1, -1],
            va: vec![q(1, 2), q(1, 2)],
            vb: vec![q(4, 3), q(7, 3)],
        };
        assert_eq!(inp.a(), q(0, 1));
        assert_eq!(local_height(&inp).unwrap(), inp.d().unwrap());
    }

    #[test]
    fn local_height_is_symmetric_and_bilinear() {
        let inp = sample_input();
        let swapped = TateHeightInput {
            vq: inp.vq.clone(),
            m: inp.n.clone(),
            n: inp.m.clone(),
            va: inp.vb.clone(),
            vb: inp.va.clone(),
        };
        assert_eq!(local_height(&inp).unwrap(), local_height(&swapped).unwrap());
        let doubled = TateHeightInput { m: vec![2, -2], ..inp.clone() };
        assert_eq!(
            local_height(&doubled).unwrap(),
            Field::mul(&Rational::from(2), &local_height(&inp).unwrap())
        );
    }

    #[test]
    fn pairing_agrees_with_delta_of_the_built_system() {
        let inp = sample_input();
        assert_eq!(
            pairing_via_delta(&inp).unwrap(),
            local_height(&inp).unwrap()
        );
        // A second instance with a nonzero pairing.
        let inp2 = TateHeightInput {
            vq: q(3, 1),
            m: vec![1, -1],
            n: vec![1, -1],
            va: vec![q(1, 2), q(7, 2)],
            vb: vec![q(1, 3), q(5, 3)],
        };
        let h = local_height(&inp2).unwrap();
        assert_eq!(pairing_via_delta(&inp2).unwrap(), h);
    }

    fn family_1123() -> HeightFamilyParams {
        HeightFamilyParams {
            c: 2,
            c_prime: 1,
            m: vec![1, -1],
            n: vec![1, -1],
            a: vec![1, 0],
            a_prime: vec![0, 0],
            b: vec![1, 0],
            b_prime: vec![0, 0],
            d: vec![vec![3, 0], vec![0, 0]],
            d_prime: vec![vec![0, 0], vec![0, 0]],
        }
    }

    #[test]
    fn build_height_system_matches_parameter_formulas() {
        let sys = build_height_system(&family_1123()).unwrap();
        assert_eq!(
            sys.leading,
            (q(1, 1), q(1, 1), q(2, 1), q(3, 1))
        );
        // N_1 e_3 = 2 e_2 + e_1, N_1 e_4 = e_2 + 3 e_1.
        assert_eq!(sys.system.n1.get(1, 2), &q(2, 1));
        assert_eq!(sys.system.n1.get(0, 2), &q(1, 1));
        assert_eq!(sys.system.n1.get(1, 3), &q(1, 1));
        assert_eq!(sys.system.n1.get(0, 3), &q(3, 1));
        let bad = HeightFamilyParams { m: vec![1, 1], ..family_1123() };
        assert!(matches!(
            build_height_system(&bad),
            Err(HeightsError::Invalid(_))
        ));
        let nonpos = HeightFamilyParams { c: 0, ..family_1123() };
        assert!(matches!(
            build_height_system(&nonpos),
            Err(HeightsError::Invalid(_))
        ));
    }

    #[test]
    fn asymptotics_of_generic_family() {
        let report = height_asymptotics(&family_1123(), 6).unwrap();
        assert!(report.all_pass(), "{:?}", report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert_eq!(report.delta_series.get(&-1).unwrap().get(0, 3), &q(5, 2));
    }

    #[test]
    fn asymptotics_of_split_trivial_family() {
        let p = HeightFamilyParams {
            c: 1,
            c_prime: 1,
            m: vec![1, -1],
            n: vec![1, -1],
            a: vec![0, 0],
            a_prime: vec![0, 0],
            b: vec![0, 0],
            b_prime: vec![0, 0],
            d: vec![vec![0, 0], vec![0, 0]],
            d_prime: vec![vec![0, 0], vec![0, 0]],
        };
        let report = height_asymptotics(&p, 6).unwrap();
        assert!(report.all_pass());
        assert!(report.delta_series.is_empty());
    }

    #[test]
    fn family_evaluation_matches_local_height() {
        // Consistent family: d(j,h), d'(j,h) chosen so that the theta
        // valuations of the specialized members are linear in y.
        let p = HeightFamilyParams {
            c: 1,
            c_prime: 1,
            m: vec![1, -1],
            n: vec![1, -1],
            a: vec![1, 0],
            a_prime: vec![0, 1],
            b: vec![0, 0],
            b_prime: vec![0, 3],
            d: vec![vec![0, 0], vec![0, 0]],
            d_prime: vec![vec![0, 0], vec![0, -2]],
        };
        let sys = build_height_system(&p).unwrap();
        let closed = delta_closed_form(&sys);
        for y in [7i64, 11, 20] {
            let yq = Rational::from(y);
            let lhs = closed.eval(&yq).unwrap();
            let rhs = local_height(&p.specialize(&yq)).unwrap();
            assert_eq!(lhs, rhs, "at y = {y}");
        }
        assert_eq!(closed.eval(&Rational::from(7)).unwrap(), q(1, 4));
    }
}
