//! Ratio spaces attached to sharp cones: points as flag classes,
//! evaluation of ratios, chart coordinates along a base of faces,
//! encasement, the embedding into sigma x R_{>=0}, and functoriality
//! along cone homomorphisms.
//!
//! # Example
//!
//! ```
//! use mslab::cones::Cone;
//! use mslab::kernel::Rational;
//! use mslab::ratio::{ratio_eval, RatioPoint, RatioValue};
//!
//! let quadrant = Cone::nonneg_orthant(2);
//! let p = RatioPoint::from_interior(
//!     quadrant,
//!     vec![Rational::from(3), Rational::from(2)],
//! )
//! .unwrap();
//! let f = vec![Rational::from(1), Rational::from(0)];
//! let g = vec![Rational::from(0), Rational::from(1)];
//! assert_eq!(
//!     ratio_eval(&p, &f, &g).unwrap(),
//!     RatioValue::Finite(Rational::new(3, 2)),
//! );
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{face_lattice, smallest_face_containing, Cone, ConesError};
use crate::filtration::left_annihilator;
use crate::kernel::{solve_linear, Field, LinearSolution, Matrix, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatioError {
    #[error("both functionals vanish on the cone")]
    BothZero,
    #[error("functional is not in the dual cone")]
    NotInDual,
    #[error("invalid ratio point: {0}")]
    InvalidPoint(String),
    #[error("element is not in the chart domain")]
    NotInChart,
    #[error("homomorphism is not supported (neither case applies)")]
    Unsupported,
    #[error("element is not interior in the quotient cone")]
    NotInterior,
    #[error(transparent)]
    Cones(#[from] ConesError),
}

/// A value in [0, infinity], exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RatioValue {
    Zero,
    Finite(Rational),
    Infinity,
}

impl RatioValue {
    pub fn invert(&self) -> RatioValue {
        match self {
            RatioValue::Zero => RatioValue::Infinity,
            RatioValue::Infinity => RatioValue::Zero,
            RatioValue::Finite(q) => RatioValue::Finite(q.inv().unwrap()),
        }
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::from(0), |acc, (x, y)| Field::add(&acc, &Field::mul(x, y)))
}

fn kills(f: &[Rational], cone: &Cone) -> bool {
    cone.generators.iter().all(|g| Field::is_zero(&dot(f, g)))
}

fn in_dual(f: &[Rational], cone: &Cone) -> bool {
    cone.generators.iter().all(|g| dot(f, g) >= Rational::from(0))
}

/// Coordinates of v in the span of `basis` modulo the span of `modulo`,
/// when the classes of `basis` are linearly independent there.
fn solve_mod(
    v: &[Rational],
    basis: &[Vec<Rational>],
    modulo: &Cone,
) -> Option<Vec<Rational>> {
    let dim = v.len();
    let ann = left_annihilator(&modulo.span_basis());
    // Rows of ann are the functionals vanishing on the modulus.
    let a = if ann.rows() == 0 {
        Matrix::identity(dim)
    } else {
        ann
    };
    let b = Matrix::from_fn(dim, basis.len(), |i, j| basis[j][i].clone());
    let lhs = a.mul(&b);
    let rhs = a.mul(&Matrix::from_fn(dim, 1, |i, _| v[i].clone()));
    match solve_linear(&lhs, &rhs) {
        LinearSolution::Unique(c) => {
            Some((0..basis.len()).map(|i| c.get(i, 0).clone()).collect())
        }
        _ => None,
    }
}

/// Whether the class of v is interior in face/modulo (both faces of an
/// ambient cone, modulo a face of face): the smallest face of `face`
/// containing v together with `modulo` is `face` itself.
fn interior_mod(v: &[Rational], face: &Cone, modulo: &Cone) -> Result<bool, ConesError> {
    let mut elems: Vec<Vec<Rational>> = vec![v.to_vec()];
    elems.extend(modulo.generators.iter().cloned());
    let f = smallest_face_containing(face, &elems)?;
    Ok(f.cone.same_cone_as(face))
}

fn zero_cone(ambient: usize) -> Cone {
    Cone { ambient, generators: vec![] }
}

/// A point of the ratio space of a sharp cone: the class of a flag of
/// faces {0} = sigma_0 < sigma_1 < ... < sigma_n = sigma together with
/// representatives N_j in sigma_j whose classes are interior in
/// sigma_j/sigma_{j-1}. sigma_0 is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub sigma: Cone,
    pub flag: Vec<Cone>,
    pub reps: Vec<Vec<Rational>>,
}

impl RatioPoint {
    pub fn new(
        sigma: Cone,
        flag: Vec<Cone>,
        reps: Vec<Vec<Rational>>,
    ) -> Result<Self, RatioError> {
        if !sigma.is_sharp() {
            return Err(RatioError::InvalidPoint("cone is not sharp".into()));
        }
        if flag.len() != reps.len() {
            return Err(RatioError::InvalidPoint("flag/representative mismatch".into()));
        }
        if sigma.span_dim() == 0 {
            if !flag.is_empty() {
                return Err(RatioError::InvalidPoint(
                    "the zero cone has the empty flag only".into(),
                ));
            }
            return Ok(RatioPoint { sigma, flag, reps });
        }
        if flag.is_empty() {
            return Err(RatioError::InvalidPoint("flag must end at the cone".into()));
        }
        if !flag.last().unwrap().same_cone_as(&sigma) {
            return Err(RatioError::InvalidPoint("flag must end at the cone".into()));
        }
        let faces = face_lattice(&sigma)?;
        let mut prev = zero_cone(sigma.ambient);
        for (j, face) in flag.iter().enumerate() {
            if !faces.iter().any(|f| f.cone.same_cone_as(face)) {
                return Err(RatioError::InvalidPoint(format!(
                    "flag entry {j} is not a face of the cone"
                )));
            }
            if face.span_dim() <= prev.span_dim()
                || !prev.generators.iter().all(|g| face.contains(g))
            {
                return Err(RatioError::InvalidPoint(format!(
                    "flag is not strictly increasing at entry {j}"
                )));
            }
            if !face.contains(&reps[j]) {
                return Err(RatioError::InvalidPoint(format!(
                    "representative {j} is not in its face"
                )));
            }
            if !interior_mod(&reps[j], face, &prev)? {
                return Err(RatioError::InvalidPoint(format!(
                    "representative {j} is not interior modulo the previous face"
                )));
            }
            prev = face.clone();
        }
        Ok(RatioPoint { sigma, flag, reps })
    }

    /// The n = 1 point of an interior element.
    pub fn from_interior(sigma: Cone, n: Vec<Rational>) -> Result<Self, RatioError> {
        let flag = vec![sigma.clone()];
        RatioPoint::new(sigma, flag, vec![n])
    }

    pub fn depth(&self) -> usize {
        self.flag.len()
    }

    /// Same class: equal flags and proportional representatives modulo
    /// the previous face, with positive constants.
    pub fn equivalent(&self, other: &RatioPoint) -> bool {
        if self.depth() != other.depth() || !self.sigma.same_cone_as(&other.sigma) {
            return false;
        }
        let mut prev = zero_cone(self.sigma.ambient);
        for j in 0..self.depth() {
            if !self.flag[j].same_cone_as(&other.flag[j]) {
                return false;
            }
            // other.reps[j] = c * self.reps[j] mod prev, c > 0.
            match solve_mod(&other.reps[j], &[self.reps[j].clone()], &prev) {
                Some(c) if c[0] > Rational::from(0) => {}
                _ => return false,
            }
            prev = self.flag[j].clone();
        }
        true
    }
}

/// r(f, g) for f, g in the dual cone: with j the smallest index such that
/// f or g does not kill sigma_j, the value is f(N_j)/g(N_j).
pub fn ratio_eval(
    p: &RatioPoint,
    f: &[Rational],
    g: &[Rational],
) -> Result<RatioValue, RatioError> {
    if !in_dual(f, &p.sigma) || !in_dual(g, &p.sigma) {
        return Err(RatioError::NotInDual);
    }
    for j in 0..p.depth() {
        let fk = kills(f, &p.flag[j]);
        let gk = kills(g, &p.flag[j]);
        if fk && gk {
            continue;
        }
        let fv = dot(f, &p.reps[j]);
        let gv = dot(g, &p.reps[j]);
        return Ok(if Field::is_zero(&fv) {
            RatioValue::Zero
        } else if Field::is_zero(&gv) {
            RatioValue::Infinity
        } else {
            RatioValue::Finite(Field::div(&fv, &gv))
        });
    }
    Err(RatioError::BothZero)
}

/// A base along faces: a flag plus elements N_{j,k} whose classes form a
/// basis of each sigma_j/sigma_{j-1} with interior images.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceBase {
    pub sigma: Cone,
    pub flag: Vec<Cone>,
    /// elements[j-1][k-1] = N_{j,k}
    pub elements: Vec<Vec<Vec<Rational>>>,
}

impl FaceBase {
    pub fn new(
        sigma: Cone,
        flag: Vec<Cone>,
        elements: Vec<Vec<Vec<Rational>>>,
    ) -> Result<Self, RatioError> {
        if flag.len() != elements.len() || flag.is_empty() {
            return Err(RatioError::InvalidPoint("flag/element group mismatch".into()));
        }
        if !flag.last().unwrap().same_cone_as(&sigma) {
            return Err(RatioError::InvalidPoint("flag must end at the cone".into()));
        }
        let faces = face_lattice(&sigma)?;
        let mut prev = zero_cone(sigma.ambient);
        for (j, face) in flag.iter().enumerate() {
            if !faces.iter().any(|f| f.cone.same_cone_as(face)) {
                return Err(RatioError::InvalidPoint(format!(
                    "flag entry {j} is not a face"
                )));
            }
            let r = face.span_dim() - prev.span_dim();
            if elements[j].len() != r {
                return Err(RatioError::InvalidPoint(format!(
                    "level {j} must have {r} elements"
                )));
            }
            for n in &elements[j] {
                if !face.contains(n) {
                    return Err(RatioError::InvalidPoint(format!(
                        "element at level {j} is not in its face"
                    )));
                }
                if !interior_mod(n, face, &prev)? {
                    return Err(RatioError::InvalidPoint(format!(
                        "element at level {j} is not interior modulo the previous face"
                    )));
                }
            }
            // Classes form a basis of the quotient: solve_mod of each
            // against the full group must be unique (checked by solving
            // the identity pattern).
            for (k, n) in elements[j].iter().enumerate() {
                match solve_mod(n, &elements[j], &prev) {
                    Some(c) => {
                        for (i, ci) in c.iter().enumerate() {
                            let expect = Rational::from((i == k) as i64);
                            if *ci != expect {
                                return Err(RatioError::InvalidPoint(format!(
                                    "classes at level {j} are not independent"
                                )));
                            }
                        }
                    }
                    None => {
                        return Err(RatioError::InvalidPoint(format!(
                            "classes at level {j} do not form a basis"
                        )))
                    }
                }
            }
            prev = face.clone();
        }
        Ok(FaceBase { sigma, flag, elements })
    }

    pub fn levels(&self) -> usize {
        self.flag.len()
    }

    /// All N_{j,k} in lexicographic (j,k) order; a basis of the span.
    pub fn all_elements(&self) -> Vec<Vec<Rational>> {
        self.elements.iter().flatten().cloned().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    /// Boundary coordinates are square roots of the level ratios; the
    /// ratio is stored exactly and the root is deferred.
    Standard,
    /// Boundary coordinates are the level ratios themselves.
    Narrower,
}

/// One boundary coordinate: zero on the encased directions, otherwise the
/// exact ratio y_{j+1,1}/y_{j,1} (under Standard flavor the chart value is
/// its square root, kept symbolic).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCoord {
    Zero,
    RatioOf(Rational),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartCoords {
    pub boundary: Vec<BoundaryCoord>,
    /// ((j, k), y_{j,k}/y_{j,1}) for k >= 2, 1-based indices.
    pub ratio: Vec<((usize, usize), Rational)>,
    pub flavor: Flavor,
}

/// Chart input: an interior element of the cone or a ratio point.
#[derive(Clone, Debug)]
pub enum ChartInput {
    Interior(Vec<Rational>),
    Point(RatioPoint),
}

/// The chart coordinates of q in the chart of the base Psi.
pub fn chart_coords(
    psi: &FaceBase,
    q: &ChartInput,
    flavor: Flavor,
) -> Result<ChartCoords, RatioError> {
    match q {
        ChartInput::Interior(v) => {
            let all = psi.all_elements();
            let y = solve_mod(v, &all, &zero_cone(psi.sigma.ambient))
                .ok_or(RatioError::NotInChart)?;
            if y.iter().any(|c| *c <= Rational::from(0)) {
                return Err(RatioError::NotInChart);
            }
            // Per-level split of the coefficient vector.
            let mut per_level: Vec<Vec<Rational>> = Vec::new();
            let mut idx = 0;
            for group in &psi.elements {
                per_level.push(y[idx..idx + group.len()].to_vec());
                idx += group.len();
            }
            let mut boundary = Vec::new();
            for j in 0..psi.levels() - 1 {
                boundary.push(BoundaryCoord::RatioOf(Field::div(
                    &per_level[j + 1][0],
                    &per_level[j][0],
                )));
            }
            let mut ratio = Vec::new();
            for (j, level) in per_level.iter().enumerate() {
                for k in 1..level.len() {
                    ratio.push(((j + 1, k + 1), Field::div(&level[k], &level[0])));
                }
            }
            Ok(ChartCoords { boundary, ratio, flavor })
        }
        ChartInput::Point(p) => {
            // The flag must be a subsequence of Psi's flag ending at sigma;
            // each representative decomposes over the merged levels.
            let mut phi: Vec<usize> = Vec::new(); // Psi level index per p level
            let mut pos = 0;
            for face in &p.flag {
                let found = (pos..psi.levels())
                    .find(|&i| psi.flag[i].same_cone_as(face))
                    .ok_or(RatioError::NotInChart)?;
                phi.push(found);
                pos = found + 1;
            }
            if phi.last() != Some(&(psi.levels() - 1)) {
                return Err(RatioError::NotInChart);
            }
            let mut per_level: Vec<Option<Vec<Rational>>> = vec![None; psi.levels()];
            let mut prev_level: i64 = -1;
            for (i, rep) in p.reps.iter().enumerate() {
                let lo = (prev_level + 1) as usize;
                let hi = phi[i];
                let modulo = if lo == 0 {
                    zero_cone(psi.sigma.ambient)
                } else {
                    psi.flag[lo - 1].clone()
                };
                let group: Vec<Vec<Rational>> =
                    psi.elements[lo..=hi].iter().flatten().cloned().collect();
                let y = solve_mod(rep, &group, &modulo).ok_or(RatioError::NotInChart)?;
                if y.iter().any(|c| *c <= Rational::from(0)) {
                    return Err(RatioError::NotInChart);
                }
                let mut idx = 0;
                for j in lo..=hi {
                    let len = psi.elements[j].len();
                    per_level[j] = Some(y[idx..idx + len].to_vec());
                    idx += len;
                }
                prev_level = hi as i64;
            }
            let per_level: Vec<Vec<Rational>> =
                per_level.into_iter().map(|o| o.unwrap()).collect();
            let mut boundary = Vec::new();
            for j in 0..psi.levels() - 1 {
                if phi.contains(&j) {
                    boundary.push(BoundaryCoord::Zero);
                } else {
                    boundary.push(BoundaryCoord::RatioOf(Field::div(
                        &per_level[j + 1][0],
                        &per_level[j][0],
                    )));
                }
            }
            let mut ratio = Vec::new();
            for (j, level) in per_level.iter().enumerate() {
                for k in 1..level.len() {
                    ratio.push(((j + 1, k + 1), Field::div(&level[k], &level[0])));
                }
            }
            Ok(ChartCoords { boundary, ratio, flavor })
        }
    }
}

/// Rebuild the ratio point (or interior class) from chart coordinates.
pub fn chart_reconstruct(
    psi: &FaceBase,
    coords: &ChartCoords,
) -> Result<RatioPoint, RatioError> {
    let n = psi.levels();
    if coords.boundary.len() != n - 1 {
        return Err(RatioError::NotInChart);
    }
    // y_{j,1} within a run of nonzero boundary coordinates; runs are split
    // at Zero entries.
    let mut y1 = vec![Rational::from(1); n];
    for j in 0..n - 1 {
        match &coords.boundary[j] {
            BoundaryCoord::Zero => y1[j + 1] = Rational::from(1),
            BoundaryCoord::RatioOf(q) => {
                if *q <= Rational::from(0) {
                    return Err(RatioError::NotInChart);
                }
                y1[j + 1] = Field::mul(&y1[j], q);
            }
        }
    }
    let mut levels: Vec<Vec<usize>> = vec![vec![0]];
    for j in 0..n - 1 {
        match &coords.boundary[j] {
            BoundaryCoord::Zero => levels.push(vec![j + 1]),
            BoundaryCoord::RatioOf(_) => levels.last_mut().unwrap().push(j + 1),
        }
    }
    let mut flag = Vec::new();
    let mut reps = Vec::new();
    for run in &levels {
        let top = *run.last().unwrap();
        flag.push(psi.flag[top].clone());
        let mut rep = vec![Rational::from(0); psi.sigma.ambient];
        for &j in run {
            let level = &psi.elements[j];
            for (k, nvec) in level.iter().enumerate() {
                let coeff = if k == 0 {
                    y1[j].clone()
                } else {
                    let c = coords
                        .ratio
                        .iter()
                        .find(|((jj, kk), _)| *jj == j + 1 && *kk == k + 1)
                        .map(|(_, v)| v.clone())
                        .ok_or(RatioError::NotInChart)?;
                    Field::mul(&y1[j], &c)
                };
                for (i, x) in nvec.iter().enumerate() {
                    rep[i] = Field::add(&rep[i], &Field::mul(&coeff, x));
                }
            }
        }
        reps.push(rep);
    }
    RatioPoint::new(psi.sigma.clone(), flag, reps)
}

/// Some(c_{j,k}) iff p's flag equals Psi's and each representative is a
/// positive combination of the level elements; normalized with c_{j,1}=1.
pub fn encased_in(p: &RatioPoint, psi: &FaceBase) -> Option<Vec<Vec<Rational>>> {
    if p.depth() != psi.levels() {
        return None;
    }
    for j in 0..p.depth() {
        if !p.flag[j].same_cone_as(&psi.flag[j]) {
            return None;
        }
    }
    let mut out = Vec::new();
    let mut prev = zero_cone(p.sigma.ambient);
    for j in 0..p.depth() {
        let c = solve_mod(&p.reps[j], &psi.elements[j], &prev)?;
        if c.iter().any(|x| *x <= Rational::from(0)) {
            return None;
        }
        let c1 = c[0].inv().unwrap();
        out.push(c.iter().map(|x| Field::mul(x, &c1)).collect());
        prev = psi.flag[j].clone();
    }
    Some(out)
}

/// sigma' = sigma x R_{>=0}.
pub fn sigma_prime(sigma: &Cone) -> Cone {
    let mut gens: Vec<Vec<Rational>> = sigma
        .generators
        .iter()
        .map(|g| {
            let mut v = g.clone();
            v.push(Rational::from(0));
            v
        })
        .collect();
    let mut last = vec![Rational::from(0); sigma.ambient];
    last.push(Rational::from(1));
    gens.push(last);
    Cone { ambient: sigma.ambient + 1, generators: gens }
}

fn pad(v: &[Rational], extra: Rational) -> Vec<Rational> {
    let mut out = v.to_vec();
    out.push(extra);
    out
}

fn pad_cone(c: &Cone) -> Cone {
    Cone {
        ambient: c.ambient + 1,
        generators: c
            .generators
            .iter()
            .map(|g| pad(g, Rational::from(0)))
            .collect(),
    }
}

/// The image of a ratio point under sigma_[:] -> (sigma x R_{>=0})_[:]:
/// extend the flag by sigma' with final representative (0, 1).
pub fn embed_point(p: &RatioPoint) -> Result<RatioPoint, RatioError> {
    let sp = sigma_prime(&p.sigma);
    let mut flag: Vec<Cone> = p.flag.iter().map(pad_cone).collect();
    let mut reps: Vec<Vec<Rational>> =
        p.reps.iter().map(|r| pad(r, Rational::from(0))).collect();
    flag.push(sp.clone());
    let mut last = vec![Rational::from(0); p.sigma.ambient];
    last.push(Rational::from(1));
    reps.push(last);
    RatioPoint::new(sp, flag, reps)
}

/// The class of (N, 1) in the interior of sigma' for an interior N.
pub fn embed_interior(sigma: &Cone, n: &[Rational]) -> Result<RatioPoint, RatioError> {
    if !crate::cones::is_interior(sigma, n)? {
        return Err(RatioError::NotInterior);
    }
    let sp = sigma_prime(sigma);
    RatioPoint::from_interior(sp, pad(n, Rational::from(1)))
}

/// The canonical map along a cone homomorphism h: sigma -> sigma', in the
/// two supported cases: (i) the image of h contains an inner point of
/// sigma'; (ii) the cokernel of the span map has dimension <= 1.
pub fn map_along_hom(
    h: &Matrix<Rational>,
    sigma: &Cone,
    sigma_target: &Cone,
    p: &RatioPoint,
) -> Result<RatioPoint, RatioError> {
    let apply = |v: &[Rational]| -> Vec<Rational> {
        let col = Matrix::from_fn(v.len(), 1, |i, _| v[i].clone());
        let img = h.mul(&col);
        (0..img.rows()).map(|i| img.get(i, 0).clone()).collect()
    };
    for g in &sigma.generators {
        if !sigma_target.contains(&apply(g)) {
            return Err(RatioError::Cones(ConesError::NotAConeHom));
        }
    }
    let gen_images: Vec<Vec<Rational>> =
        sigma.generators.iter().map(|g| apply(g)).collect();
    let top_image = smallest_face_containing(sigma_target, &gen_images)?;
    let case_i = top_image.cone.same_cone_as(sigma_target);
    // Span of the image of sigma_R inside the target.
    let image_span = Matrix::from_fn(sigma_target.ambient, gen_images.len(), |i, j| {
        gen_images[j][i].clone()
    })
    .column_space_canonical();
    let coker_dim = sigma_target.span_dim().saturating_sub(
        image_span
            .column_space_intersection(&sigma_target.span_basis())
            .cols(),
    );
    if !case_i && coker_dim > 1 {
        return Err(RatioError::Unsupported);
    }
    // Transported flag: smallest faces containing the images, deduped.
    let mut flag: Vec<Cone> = Vec::new();
    let mut reps: Vec<Vec<Rational>> = Vec::new();
    let mut prev_dim = 0usize;
    for j in 0..p.depth() {
        let imgs: Vec<Vec<Rational>> =
            p.flag[j].generators.iter().map(|g| apply(g)).collect();
        let tau = smallest_face_containing(sigma_target, &imgs)?.cone;
        if tau.span_dim() > prev_dim {
            prev_dim = tau.span_dim();
            flag.push(tau);
            reps.push(apply(&p.reps[j]));
        }
    }
    if case_i {
        return RatioPoint::new(sigma_target.clone(), flag, reps);
    }
    // Case (ii): extend by sigma_target with an interior element outside
    // the image span.
    let outside_interior = || -> Option<Vec<Rational>> {
        let sum: Vec<Rational> = (0..sigma_target.ambient)
            .map(|i| {
                sigma_target
                    .generators
                    .iter()
                    .fold(Rational::from(0), |acc, g| Field::add(&acc, &g[i]))
            })
            .collect();
        let in_span = |v: &[Rational]| -> bool {
            let col = Matrix::from_fn(v.len(), 1, |i, _| v[i].clone());
            image_span.column_space_contains(&col)
        };
        if !in_span(&sum) {
            return Some(sum);
        }
        for g in &sigma_target.generators {
            let cand: Vec<Rational> = sum
                .iter()
                .zip(g)
                .map(|(a, b)| Field::add(a, &Field::add(b, b)))
                .collect();
            if !in_span(&cand) {
                return Some(cand);
            }
        }
        None
    };
    let n = outside_interior().ok_or(RatioError::Unsupported)?;
    flag.push(sigma_target.clone());
    reps.push(n);
    RatioPoint::new(sigma_target.clone(), flag, reps)
}

/// A boundary point of toric type: a face tau of sigma, an element N of
/// sigma whose class is interior in sigma/tau, and a ratio point a over
/// tau. The result is the corresponding point of (sigma')_[:], whose flag
/// starts with faces of sigma (the "<1" region).
pub fn toric_to_ratio(
    sigma: &Cone,
    tau: &Cone,
    n: &[Rational],
    a: &RatioPoint,
) -> Result<RatioPoint, RatioError> {
    if !sigma.contains(n) {
        return Err(RatioError::Cones(ConesError::NotInCone));
    }
    if !interior_mod(n, sigma, tau)? {
        return Err(RatioError::NotInterior);
    }
    if !a.sigma.same_cone_as(tau) {
        return Err(RatioError::InvalidPoint(
            "the ratio point must live over tau".into(),
        ));
    }
    let sp = sigma_prime(sigma);
    let mut flag: Vec<Cone> = a
        .flag
        .iter()
        .map(|c| pad_cone(&Cone { ambient: sigma.ambient, generators: c.generators.clone() }))
        .collect();
    let mut reps: Vec<Vec<Rational>> =
        a.reps.iter().map(|r| pad(r, Rational::from(0))).collect();
    flag.push(sp.clone());
    reps.push(pad(n, Rational::from(1)));
    RatioPoint::new(sp, flag, reps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Field::div(&Rational::from(n), &Rational::from(d))
    }

    fn qv(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from(x)).collect()
    }

    fn quadrant() -> Cone {
        Cone::nonneg_orthant(2)
    }

    fn ray1() -> Cone {
        Cone::new(2, vec![qv(&[1, 0])]).unwrap()
    }

    fn fin(n: i64, d: i64) -> RatioValue {
        RatioValue::Finite(q(n, d))
    }

    #[test]
    fn interior_point_ratio() {
        let p = RatioPoint::from_interior(quadrant(), qv(&[2, 1])).unwrap();
        let t1 = qv(&[1, 0]);
        let t2 = qv(&[0, 1]);
        assert_eq!(ratio_eval(&p, &t1, &t2).unwrap(), fin(2, 1));
        assert_eq!(ratio_eval(&p, &t2, &t1).unwrap(), fin(1, 2));
        assert_eq!(ratio_eval(&p, &t1, &t1).unwrap(), fin(1, 1));
    }

    #[test]
    fn boundary_flag_ratio() {
        let p = RatioPoint::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![qv(&[1, 0]), qv(&[0, 1])],
        )
        .unwrap();
        let t1 = qv(&[1, 0]);
        let t2 = qv(&[0, 1]);
        assert_eq!(ratio_eval(&p, &t1, &t2).unwrap(), RatioValue::Infinity);
        assert_eq!(ratio_eval(&p, &t2, &t1).unwrap(), RatioValue::Zero);
        // f = g nonzero gives 1 even at the boundary.
        assert_eq!(ratio_eval(&p, &t2, &t2).unwrap(), fin(1, 1));
        // Both zero on the whole cone is an error.
        let z = qv(&[0, 0]);
        assert_eq!(ratio_eval(&p, &z, &z), Err(RatioError::BothZero));
        // Functionals must be in the dual cone.
        assert_eq!(
            ratio_eval(&p, &qv(&[-1, 0]), &t2),
            Err(RatioError::NotInDual)
        );
    }

    #[test]
    fn ratio_axioms_on_samples() {
        // Axioms checked on a depth-2 flag over the 3-dimensional orthant.
        let sigma = Cone::nonneg_orthant(3);
        let face12 = Cone::new(3, vec![qv(&[1, 0, 0]), qv(&[0, 1, 0])]).unwrap();
        let p = RatioPoint::new(
            sigma,
            vec![face12.clone(), Cone::nonneg_orthant(3)],
            vec![qv(&[3, 2, 0]), qv(&[1, 1, 5])],
        )
        .unwrap();
        let fs = [qv(&[1, 0, 0]), qv(&[0, 1, 0]), qv(&[1, 2, 0]), qv(&[0, 0, 1]), qv(&[2, 1, 3])];
        // (i) r(f, g) = r(g, f)^{-1}.
        for f in &fs {
            for g in &fs {
                let fg = ratio_eval(&p, f, g).unwrap();
                let gf = ratio_eval(&p, g, f).unwrap();
                assert_eq!(fg, gf.invert());
            }
        }
        // (ii) cocycle r(f,g) r(g,h) = r(f,h) when no {0, infinity} pair.
        for f in &fs {
            for g in &fs {
                for h in &fs {
                    let (a, b, c) = (
                        ratio_eval(&p, f, g).unwrap(),
                        ratio_eval(&p, g, h).unwrap(),
                        ratio_eval(&p, f, h).unwrap(),
                    );
                    if let (RatioValue::Finite(x), RatioValue::Finite(y)) = (&a, &b) {
                        assert_eq!(c, RatioValue::Finite(Field::mul(x, y)));
                    }
                }
            }
        }
        // (iii) additivity in the first argument, same leading level.
        let f1 = qv(&[1, 1, 0]);
        let f2 = qv(&[2, 1, 0]);
        let g = qv(&[0, 1, 0]);
        let sum = qv(&[3, 2, 0]);
        if let (RatioValue::Finite(a), RatioValue::Finite(b), RatioValue::Finite(s)) = (
            ratio_eval(&p, &f1, &g).unwrap(),
            ratio_eval(&p, &f2, &g).unwrap(),
            ratio_eval(&p, &sum, &g).unwrap(),
        ) {
            assert_eq!(s, Field::add(&a, &b));
        } else {
            panic!("expected finite values");
        }
        // (iv) homogeneity: r(c f, g) = c r(f, g) for c > 0.
        let cf = qv(&[5, 5, 0]);
        assert_eq!(
            ratio_eval(&p, &cf, &g).unwrap(),
            match ratio_eval(&p, &f1, &g).unwrap() {
                RatioValue::Finite(x) => RatioValue::Finite(Field::mul(&x, &Rational::from(5))),
                other => other,
            }
        );
    }

    #[test]
    fn quadrant_classes_biject_with_extended_halfline() {
        // Over the quadrant, classes are: interior classes (one per finite
        // positive ratio), and the two boundary flags giving 0 and infinity.
        let t1 = qv(&[1, 0]);
        let t2 = qv(&[0, 1]);
        for (a, b) in [(1i64, 1i64), (2, 1), (1, 3), (7, 5)] {
            let p = RatioPoint::from_interior(quadrant(), vec![q(a, 1), q(b, 1)]).unwrap();
            assert_eq!(ratio_eval(&p, &t1, &t2).unwrap(), fin(a, b));
        }
        let ray2 = Cone::new(2, vec![qv(&[0, 1])]).unwrap();
        let p_inf = RatioPoint::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![qv(&[2, 0]), qv(&[1, 1])],
        )
        .unwrap();
        let p_zero = RatioPoint::new(
            quadrant(),
            vec![ray2, quadrant()],
            vec![qv(&[0, 2]), qv(&[1, 1])],
        )
        .unwrap();
        assert_eq!(ratio_eval(&p_inf, &t1, &t2).unwrap(), RatioValue::Infinity);
        assert_eq!(ratio_eval(&p_zero, &t1, &t2).unwrap(), RatioValue::Zero);
        // Equivalence is exactly equality of the ratio value.
        let p1 = RatioPoint::from_interior(quadrant(), qv(&[2, 1])).unwrap();
        let p2 = RatioPoint::from_interior(quadrant(), qv(&[6, 3])).unwrap();
        let p3 = RatioPoint::from_interior(quadrant(), qv(&[3, 1])).unwrap();
        assert!(p1.equivalent(&p2));
        assert!(!p1.equivalent(&p3));
        assert!(!p1.equivalent(&p_inf));
    }

    fn quadrant_base() -> FaceBase {
        FaceBase::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![vec![qv(&[1, 0])], vec![qv(&[0, 1])]],
        )
        .unwrap()
    }

    #[test]
    fn chart_of_interior_element() {
        let psi = quadrant_base();
        let coords =
            chart_coords(&psi, &ChartInput::Interior(qv(&[4, 1])), Flavor::Narrower).unwrap();
        assert_eq!(coords.boundary, vec![BoundaryCoord::RatioOf(q(1, 4))]);
        assert!(coords.ratio.is_empty());
        // Standard flavor keeps the same exact ratio; the square root is
        // deferred to presentation.
        let std = chart_coords(&psi, &ChartInput::Interior(qv(&[4, 1])), Flavor::Standard).unwrap();
        assert_eq!(std.boundary, coords.boundary);
        assert_eq!(std.flavor, Flavor::Standard);
        // Outside the open cone: not in the chart.
        assert_eq!(
            chart_coords(&psi, &ChartInput::Interior(qv(&[1, 0])), Flavor::Narrower),
            Err(RatioError::NotInChart)
        );
    }

    #[test]
    fn chart_of_boundary_point_and_reconstruction() {
        let psi = quadrant_base();
        let p = RatioPoint::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![qv(&[3, 0]), qv(&[1, 2])],
        )
        .unwrap();
        let coords = chart_coords(&psi, &ChartInput::Point(p.clone()), Flavor::Narrower).unwrap();
        assert_eq!(coords.boundary, vec![BoundaryCoord::Zero]);
        let back = chart_reconstruct(&psi, &coords).unwrap();
        assert!(back.equivalent(&p));
        // An interior class through the same chart.
        let p_int = RatioPoint::from_interior(quadrant(), qv(&[5, 2])).unwrap();
        let ci = chart_coords(&psi, &ChartInput::Point(p_int.clone()), Flavor::Narrower).unwrap();
        assert_eq!(ci.boundary, vec![BoundaryCoord::RatioOf(q(2, 5))]);
        let back_int = chart_reconstruct(&psi, &ci).unwrap();
        assert!(back_int.equivalent(&p_int));
    }

    #[test]
    fn chart_with_ratio_coordinates() {
        // A level of rank 2 produces ratio coordinates.
        let sigma = Cone::nonneg_orthant(3);
        let face12 = Cone::new(3, vec![qv(&[1, 0, 0]), qv(&[0, 1, 0])]).unwrap();
        let psi = FaceBase::new(
            sigma.clone(),
            vec![face12.clone(), sigma.clone()],
            vec![vec![qv(&[1, 1, 0]), qv(&[1, 2, 0])], vec![qv(&[0, 0, 1])]],
        )
        .unwrap();
        // v = 2 (1,1,0) + 6 (1,2,0) + 1 (0,0,1).
        let coords =
            chart_coords(&psi, &ChartInput::Interior(qv(&[8, 14, 1])), Flavor::Narrower).unwrap();
        assert_eq!(coords.boundary, vec![BoundaryCoord::RatioOf(q(1, 2))]);
        assert_eq!(coords.ratio, vec![((1, 2), q(3, 1))]);
        // Boundary point encased in the flag with the same ratio data:
        // rep = 1 (1,1,0) + 3 (1,2,0).
        let p = RatioPoint::new(
            sigma,
            vec![face12, Cone::nonneg_orthant(3)],
            vec![qv(&[4, 7, 0]), qv(&[2, 2, 4])],
        )
        .unwrap();
        let c = chart_coords(&psi, &ChartInput::Point(p.clone()), Flavor::Narrower).unwrap();
        assert_eq!(c.boundary, vec![BoundaryCoord::Zero]);
        assert_eq!(c.ratio, vec![((1, 2), q(3, 1))]);
        let back = chart_reconstruct(&psi, &c).unwrap();
        assert!(back.equivalent(&p));
    }

    #[test]
    fn encasement() {
        let sigma = quadrant();
        let psi = FaceBase::new(
            sigma.clone(),
            vec![sigma.clone()],
            vec![vec![qv(&[1, 1]), qv(&[1, 2])]],
        )
        .unwrap();
        // N = 1 (1,1) + 3 (1,2).
        let p = RatioPoint::from_interior(sigma.clone(), qv(&[4, 7])).unwrap();
        let c = encased_in(&p, &psi).unwrap();
        assert_eq!(c, vec![vec![q(1, 1), q(3, 1)]]);
        // Scale invariance of the normalized coefficients.
        let p2 = RatioPoint::from_interior(sigma, qv(&[8, 14])).unwrap();
        assert_eq!(encased_in(&p2, &psi).unwrap(), c);
        // A flag mismatch is not encased.
        let p3 = RatioPoint::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![qv(&[1, 0]), qv(&[0, 1])],
        )
        .unwrap();
        assert!(encased_in(&p3, &psi).is_none());
        // A boundary-of-quadrant direction is not a positive combination.
        let psi2 = quadrant_base();
        assert!(encased_in(&p3, &psi2).is_some());
    }

    #[test]
    fn embedding_into_sigma_prime() {
        let p = RatioPoint::from_interior(quadrant(), qv(&[3, 2])).unwrap();
        let e = embed_point(&p).unwrap();
        assert_eq!(e.depth(), 2);
        assert_eq!(e.sigma.ambient, 3);
        // The embedded point evaluates like p on pulled-back functionals.
        let t1 = qv(&[1, 0, 0]);
        let t2 = qv(&[0, 1, 0]);
        assert_eq!(ratio_eval(&e, &t1, &t2).unwrap(), fin(3, 2));
        // The last coordinate functional is infinitely larger.
        let s = qv(&[0, 0, 1]);
        assert_eq!(ratio_eval(&e, &s, &t1).unwrap(), RatioValue::Zero);
        // embed_interior gives the interior class of (N, 1).
        let ei = embed_interior(&quadrant(), &qv(&[3, 2])).unwrap();
        assert_eq!(ei.depth(), 1);
        assert_eq!(ratio_eval(&ei, &t1, &s).unwrap(), fin(3, 1));
        assert_eq!(embed_interior(&quadrant(), &qv(&[1, 0])), Err(RatioError::NotInterior));
    }

    #[test]
    fn chart_diagram_commutes_with_embedding() {
        // The chart of the extended base on an embedded point restricts to
        // the chart of the original base, with a zero appended.
        let psi = quadrant_base();
        let sp = sigma_prime(&quadrant());
        let psi_ext = FaceBase::new(
            sp.clone(),
            vec![
                Cone::new(3, vec![qv(&[1, 0, 0])]).unwrap(),
                Cone::new(3, vec![qv(&[1, 0, 0]), qv(&[0, 1, 0])]).unwrap(),
                sp,
            ],
            vec![vec![qv(&[1, 0, 0])], vec![qv(&[0, 1, 0])], vec![qv(&[0, 0, 1])]],
        )
        .unwrap();
        let p = RatioPoint::from_interior(quadrant(), qv(&[3, 2])).unwrap();
        let e = embed_point(&p).unwrap();
        let base = chart_coords(&psi, &ChartInput::Point(p), Flavor::Narrower).unwrap();
        let ext = chart_coords(&psi_ext, &ChartInput::Point(e), Flavor::Narrower).unwrap();
        assert_eq!(ext.boundary.len(), 2);
        assert_eq!(ext.boundary[0], base.boundary[0]);
        assert_eq!(ext.boundary[1], BoundaryCoord::Zero);
        assert_eq!(ext.ratio, base.ratio);
    }

    #[test]
    fn map_along_surjective_hom() {
        // Case (i): the identity and a positive diagonal map.
        let p = RatioPoint::from_interior(quadrant(), qv(&[2, 1])).unwrap();
        let id = Matrix::identity(2);
        let img = map_along_hom(&id, &quadrant(), &quadrant(), &p).unwrap();
        assert!(img.equivalent(&p));
        let diag = Matrix::from_rows(vec![qv(&[1, 0]), qv(&[0, 2])]);
        let img2 = map_along_hom(&diag, &quadrant(), &quadrant(), &p).unwrap();
        // r'(f, g) = r(f o h, g o h): t2 o h = 2 t2.
        let t1 = qv(&[1, 0]);
        let t2 = qv(&[0, 1]);
        assert_eq!(ratio_eval(&img2, &t1, &t2).unwrap(), fin(1, 1));
        // A boundary point maps level by level.
        let pb = RatioPoint::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![qv(&[1, 0]), qv(&[1, 1])],
        )
        .unwrap();
        let imgb = map_along_hom(&diag, &quadrant(), &quadrant(), &pb).unwrap();
        assert_eq!(imgb.depth(), 2);
        assert_eq!(ratio_eval(&imgb, &t1, &t2).unwrap(), RatioValue::Infinity);
    }

    #[test]
    fn map_along_small_cokernel_hom() {
        // Case (ii): the first-axis inclusion of a ray into the quadrant.
        let ray = Cone::new(1, vec![vec![Rational::from(1)]]).unwrap();
        let h = Matrix::from_rows(vec![vec![Rational::from(1)], vec![Rational::from(0)]]);
        let p = RatioPoint::from_interior(ray.clone(), vec![Rational::from(2)]).unwrap();
        let img = map_along_hom(&h, &ray, &quadrant(), &p).unwrap();
        assert_eq!(img.depth(), 2);
        assert!(img.flag[0].same_cone_as(&ray1()));
        // Pulled-back nonzero pair uses the transported level.
        let t1 = qv(&[1, 0]);
        let t2 = qv(&[0, 1]);
        assert_eq!(ratio_eval(&img, &t1, &t2).unwrap(), RatioValue::Infinity);
        // Both pullbacks zero: the value comes from the added top level and
        // does not depend on the choice of element outside the image.
        let sum12 = qv(&[0, 1]);
        assert_eq!(ratio_eval(&img, &sum12, &sum12).unwrap(), fin(1, 1));
        // Cokernel of dimension two is unsupported.
        let h3 = Matrix::from_rows(vec![
            vec![Rational::from(1)],
            vec![Rational::from(0)],
            vec![Rational::from(0)],
        ]);
        assert_eq!(
            map_along_hom(&h3, &ray, &Cone::nonneg_orthant(3), &p),
            Err(RatioError::Unsupported)
        );
    }

    #[test]
    fn case_two_value_independent_of_choice() {
        // r'(f, g) = f(N)/g(N) must agree for two different interior
        // elements outside the image span.
        let ray = Cone::new(1, vec![vec![Rational::from(1)]]).unwrap();
        let h = Matrix::from_rows(vec![vec![Rational::from(1)], vec![Rational::from(0)]]);
        let p = RatioPoint::from_interior(ray.clone(), vec![Rational::from(2)]).unwrap();
        let img = map_along_hom(&h, &ray, &quadrant(), &p).unwrap();
        for n in [qv(&[1, 1]), qv(&[2, 5])] {
            let alt = RatioPoint::new(
                quadrant(),
                vec![ray1(), quadrant()],
                vec![qv(&[2, 0]), n],
            )
            .unwrap();
            // Functionals killing the transported flag see the same value
            // for any interior top representative: such f, g vanish on
            // ray1, so f(N)/g(N) depends only on the second coordinate.
            let f = qv(&[0, 3]);
            let g = qv(&[0, 7]);
            assert_eq!(
                ratio_eval(&alt, &f, &g).unwrap(),
                ratio_eval(&img, &f, &g).unwrap()
            );
        }
    }

    #[test]
    fn toric_boundary_points() {
        // tau = ray1, N with interior class in sigma/tau, a over tau.
        let a = RatioPoint::from_interior(ray1(), qv(&[3, 0])).unwrap();
        let t = toric_to_ratio(&quadrant(), &ray1(), &qv(&[0, 1]), &a).unwrap();
        assert_eq!(t.depth(), 2);
        assert_eq!(t.sigma.ambient, 3);
        let t1 = qv(&[1, 0, 0]);
        let t2 = qv(&[0, 1, 0]);
        let s = qv(&[0, 0, 1]);
        assert_eq!(ratio_eval(&t, &t1, &t2).unwrap(), RatioValue::Infinity);
        assert_eq!(ratio_eval(&t, &t2, &s).unwrap(), fin(1, 1));
        // tau = {0}: the triple degenerates to the interior embedding.
        let trivial = RatioPoint::new(zero_cone(2), vec![], vec![]).unwrap();
        let t0 = toric_to_ratio(&quadrant(), &zero_cone(2), &qv(&[3, 2]), &trivial).unwrap();
        let e = embed_interior(&quadrant(), &qv(&[3, 2])).unwrap();
        assert!(t0.equivalent(&e));
        // N must be interior modulo tau.
        assert!(matches!(
            toric_to_ratio(&quadrant(), &ray1(), &qv(&[1, 0]), &a),
            Err(RatioError::NotInterior)
        ));
    }

    #[test]
    fn invalid_points_rejected() {
        // Flag not ending at the cone.
        assert!(RatioPoint::new(quadrant(), vec![ray1()], vec![qv(&[1, 0])]).is_err());
        // Representative not interior modulo the previous face.
        assert!(RatioPoint::new(
            quadrant(),
            vec![ray1(), quadrant()],
            vec![qv(&[1, 0]), qv(&[1, 0])],
        )
        .is_err());
        // A non-face subcone.
        let diag = Cone::new(2, vec![qv(&[1, 1])]).unwrap();
        assert!(RatioPoint::new(
            quadrant(),
            vec![diag, quadrant()],
            vec![qv(&[1, 1]), qv(&[1, 0])],
        )
        .is_err());
    }
}
