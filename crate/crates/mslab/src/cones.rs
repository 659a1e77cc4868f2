//! Sharp finitely generated rational cones: face lattices, duals, cone
//! homomorphisms, and admissible cone actions (monodromy systems) with
//! their face weight filtrations.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deligne::{relative_monodromy_filtration, DeligneError, NilpotentOp, PropCheck};
use crate::filtration::{Filtration, Splitting};
use crate::kernel::{solve_linear, Field, LinearSolution, Matrix, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConesError {
    #[error("cone is not sharp")]
    NotSharp,
    #[error("element is not in the cone")]
    NotInCone,
    #[error("subset is not a face")]
    NotAFace,
    #[error("homomorphism does not map the cone into the target cone")]
    NotAConeHom,
    #[error("ill-formed action: {0}")]
    IllFormedAction(String),
    #[error(transparent)]
    Filtration(#[from] DeligneError),
    #[error("ambient dimension {0} exceeds the supported desk scale")]
    TooLarge(usize),
}

/// A finitely generated rational cone, given by generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub ambient: usize,
    pub generators: Vec<Vec<Rational>>,
}

/// Solve A x = b with x >= 0 exactly (phase-1 simplex, Bland's rule).
pub fn nonneg_solve(a: &Matrix<Rational>, b: &[Rational]) -> Option<Vec<Rational>> {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(b.len(), m);
    // Tableau: columns 0..n original, n..n+m artificial, last = rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i] < Rational::from(0);
        let mut row: Vec<Rational> = Vec::with_capacity(width);
        for j in 0..n {
            let v = a.get(i, j).clone();
            row.push(if flip { Field::neg(&v) } else { v });
        }
        for k in 0..m {
            row.push(Rational::from((k == i) as i64));
        }
        row.push(if flip { Field::neg(&b[i]) } else { b[i].clone() });
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced costs for minimizing the sum of artificials.
    let mut obj: Vec<Rational> = vec![Rational::from(0); width];
    for row in &t {
        for (j, v) in row.iter().enumerate() {
            obj[j] = Field::add(&obj[j], v);
        }
    }
    for k in n..n + m {
        obj[k] = Rational::from(0);
    }
    loop {
        // Bland: smallest improving column among non-basic.
        let enter = (0..n + m).find(|j| !basis.contains(j) && obj[*j] > Rational::from(0));
        let Some(enter) = enter else { break };
        // Ratio test, Bland tie-break on basis variable index.
        let mut pivot: Option<(usize, Rational)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[enter] <= Rational::from(0) {
                continue;
            }
            let ratio = Field::div(&row[width - 1], &row[enter]);
            let better = match &pivot {
                None => true,
                Some((pi, pr)) => {
                    ratio < *pr || (ratio == *pr && basis[i] < basis[*pi])
                }
            };
            if better {
                pivot = Some((i, ratio));
            }
        }
        let Some((pi, _)) = pivot else {
            // Unbounded phase-1 cannot happen (objective bounded below by 0).
            return None;
        };
        // Pivot on (pi, enter).
        let inv = t[pi][enter].inv().unwrap();
        for v in t[pi].iter_mut() {
            *v = Field::mul(v, &inv);
        }
        for i in 0..m {
            if i == pi || Field::is_zero(&t[i][enter]) {
                continue;
            }
            let factor = t[i][enter].clone();
            for j in 0..width {
                let delta = Field::mul(&factor, &t[pi][j]);
                t[i][j] = Field::sub(&t[i][j], &delta);
            }
        }
        let factor = obj[enter].clone();
        if !Field::is_zero(&factor) {
            for j in 0..width {
                let delta = Field::mul(&factor, &t[pi][j]);
                obj[j] = Field::sub(&obj[j], &delta);
            }
        }
        basis[pi] = enter;
    }
    // Feasible iff every artificial basic variable sits at zero.
    for (i, &bv) in basis.iter().enumerate() {
        if bv >= n && !Field::is_zero(&t[i][width - 1]) {
            return None;
        }
    }
    let mut x = vec![Rational::from(0); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1].clone();
        }
    }
    Some(x)
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::from(0), |acc, (x, y)| Field::add(&acc, &Field::mul(x, y)))
}

/// Scale a nonzero vector so its first nonzero entry is 1 or -1.
fn normalize_ray(v: &[Rational]) -> Vec<Rational> {
    match v.iter().find(|c| !Field::is_zero(*c)) {
        None => v.to_vec(),
        Some(first) => {
            let scale = if *first < Rational::from(0) {
                Field::neg(first).inv().unwrap()
            } else {
                first.inv().unwrap()
            };
            v.iter().map(|c| Field::mul(c, &scale)).collect()
        }
    }
}

impl Cone {
    pub fn new(ambient: usize, generators: Vec<Vec<Rational>>) -> Result<Self, ConesError> {
        if ambient > 6 {
            return Err(ConesError::TooLarge(ambient));
        }
        for g in &generators {
            if g.len() != ambient {
                return Err(ConesError::IllFormedAction(
                    "generator dimension mismatch".into(),
                ));
            }
        }
        Ok(Cone { ambient, generators })
    }

    pub fn nonneg_orthant(n: usize) -> Self {
        let gens = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Rational::from((i == j) as i64))
                    .collect::<Vec<_>>()
            })
            .collect();
        Cone::new(n, gens).unwrap()
    }

    pub fn generator_matrix(&self) -> Matrix<Rational> {
        Matrix::from_fn(self.ambient, self.generators.len(), |i, j| {
            self.generators[j][i].clone()
        })
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        assert_eq!(v.len(), self.ambient);
        if self.generators.is_empty() {
            return v.iter().all(Field::is_zero);
        }
        nonneg_solve(&self.generator_matrix(), v).is_some()
    }

    pub fn is_sharp(&self) -> bool {
        self.generators.iter().all(|g| {
            g.iter().all(Field::is_zero)
                || !self.contains(&g.iter().map(Field::neg).collect::<Vec<_>>())
        })
    }

    /// Canonical basis of the linear span of the cone.
    pub fn span_basis(&self) -> Matrix<Rational> {
        self.generator_matrix().column_space_canonical()
    }

    pub fn span_dim(&self) -> usize {
        self.span_basis().cols()
    }

    /// Same set of points (mutual containment of generators).
    pub fn same_cone_as(&self, other: &Cone) -> bool {
        self.ambient == other.ambient
            && self.generators.iter().all(|g| other.contains(g))
            && other.generators.iter().all(|g| self.contains(g))
    }
}

/// Generators of {x : a . x >= 0 for all a in normals} by the double
/// description method, starting from the whole space.
fn hrep_to_vrep(normals: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    let mut gens: Vec<Vec<Rational>> = Vec::new();
    for i in 0..dim {
        let mut e = vec![Rational::from(0); dim];
        e[i] = Rational::from(1);
        gens.push(e.clone());
        e[i] = Rational::from(-1);
        gens.push(e);
    }
    for a in normals {
        if a.iter().all(Field::is_zero) {
            continue;
        }
        let mut pos: Vec<Vec<Rational>> = Vec::new();
        let mut zero: Vec<Vec<Rational>> = Vec::new();
        let mut neg: Vec<Vec<Rational>> = Vec::new();
        for g in &gens {
            let v = dot(a, g);
            if v > Rational::from(0) {
                pos.push(g.clone());
            } else if Field::is_zero(&v) {
                zero.push(g.clone());
            } else {
                neg.push(g.clone());
            }
        }
        let mut next: Vec<Vec<Rational>> = Vec::new();
        let push_unique = |v: Vec<Rational>, next: &mut Vec<Vec<Rational>>| {
            if v.iter().all(Field::is_zero) {
                return;
            }
            let n = normalize_ray(&v);
            if !next.contains(&n) {
                next.push(n);
            }
        };
        for g in pos.iter().chain(zero.iter()) {
            push_unique(g.clone(), &mut next);
        }
        for p in &pos {
            let dp = dot(a, p);
            for q in &neg {
                let dq = dot(a, q);
                let comb: Vec<Rational> = p
                    .iter()
                    .zip(q)
                    .map(|(pc, qc)| {
                        Field::sub(&Field::mul(&dp, qc), &Field::mul(&dq, pc))
                    })
                    .collect();
                push_unique(comb, &mut next);
            }
        }
        gens = next;
    }
    // Prune generators that are nonnegative combinations of the others.
    let mut i = 0;
    while i < gens.len() {
        let rest: Vec<Vec<Rational>> = gens
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let redundant = if rest.is_empty() {
            false
        } else {
            let m = Matrix::from_fn(dim, rest.len(), |r, c| rest[c][r].clone());
            nonneg_solve(&m, &gens[i]).is_some()
        };
        if redundant {
            gens.remove(i);
        } else {
            i += 1;
        }
    }
    gens
}

/// The dual cone: all linear functionals nonnegative on the cone,
/// identified with vectors via the standard pairing.
pub fn dual_cone(sigma: &Cone) -> Cone {
    let gens = hrep_to_vrep(&sigma.generators, sigma.ambient);
    Cone { ambient: sigma.ambient, generators: gens }
}

/// A face of a cone: the subset of generators it contains plus a
/// supporting functional (zero on the face, positive on the rest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub generator_indices: Vec<usize>,
    pub supporting: Vec<Rational>,
    pub cone: Cone,
}

impl Face {
    pub fn is_zero_face(&self) -> bool {
        self.cone.span_dim() == 0
    }
}

/// All faces of a sharp cone, sorted by (span dimension, generator set).
/// Faces are intersection-closed zero sets of dual elements.
pub fn face_lattice(sigma: &Cone) -> Result<Vec<Face>, ConesError> {
    if !sigma.is_sharp() {
        return Err(ConesError::NotSharp);
    }
    let dual = dual_cone(sigma);
    let all: BTreeSet<usize> = (0..sigma.generators.len()).collect();
    let mut seen: BTreeMap<BTreeSet<usize>, Vec<Rational>> = BTreeMap::new();
    seen.insert(all.clone(), vec![Rational::from(0); sigma.ambient]);
    let mut queue: Vec<BTreeSet<usize>> = vec![all];
    while let Some(current) = queue.pop() {
        let f = seen.get(&current).unwrap().clone();
        for u in &dual.generators {
            let sub: BTreeSet<usize> = current
                .iter()
                .copied()
                .filter(|&i| Field::is_zero(&dot(u, &sigma.generators[i])))
                .collect();
            if !seen.contains_key(&sub) {
                let g: Vec<Rational> =
                    f.iter().zip(u).map(|(a, b)| Field::add(a, b)).collect();
                seen.insert(sub.clone(), g);
                queue.push(sub);
            }
        }
    }
    let mut faces: Vec<Face> = seen
        .into_iter()
        .map(|(idx, supporting)| {
            let gens = idx.iter().map(|&i| sigma.generators[i].clone()).collect();
            Face {
                generator_indices: idx.into_iter().collect(),
                supporting,
                cone: Cone { ambient: sigma.ambient, generators: gens },
            }
        })
        .collect();
    faces.sort_by_key(|f| (f.cone.span_dim(), f.generator_indices.clone()));
    Ok(faces)
}

/// The smallest face of sigma containing every element of `s`.
pub fn smallest_face_containing(sigma: &Cone, s: &[Vec<Rational>]) -> Result<Face, ConesError> {
    for v in s {
        if !sigma.contains(v) {
            return Err(ConesError::NotInCone);
        }
    }
    let faces = face_lattice(sigma)?;
    faces
        .into_iter()
        .find(|f| s.iter().all(|v| f.cone.contains(v)))
        .ok_or(ConesError::NotAFace)
}

/// Whether v lies in the topological interior of the cone inside its span:
/// the smallest face containing it is the cone itself.
pub fn is_interior(sigma: &Cone, v: &[Rational]) -> Result<bool, ConesError> {
    let f = smallest_face_containing(sigma, std::slice::from_ref(&v.to_vec()))?;
    Ok(f.generator_indices.len() == sigma.generators.len())
}

/// The two face-lattice maps induced by a cone homomorphism h: sigma ->
/// sigma': tau maps to the smallest face containing h(tau); tau' maps to
/// its preimage. Returned as index maps into the two lattices.
pub struct FaceMaps {
    pub source_faces: Vec<Face>,
    pub target_faces: Vec<Face>,
    /// source face index -> target face index
    pub image: Vec<usize>,
    /// target face index -> source face index
    pub preimage: Vec<usize>,
}

pub fn face_maps(
    h: &Matrix<Rational>,
    sigma: &Cone,
    sigma_prime: &Cone,
) -> Result<FaceMaps, ConesError> {
    let apply = |v: &[Rational]| -> Vec<Rational> {
        let col = Matrix::from_fn(v.len(), 1, |i, _| v[i].clone());
        let img = h.mul(&col);
        (0..img.rows()).map(|i| img.get(i, 0).clone()).collect()
    };
    for g in &sigma.generators {
        if !sigma_prime.contains(&apply(g)) {
            return Err(ConesError::NotAConeHom);
        }
    }
    let source_faces = face_lattice(sigma)?;
    let target_faces = face_lattice(sigma_prime)?;
    let mut image = Vec::new();
    for f in &source_faces {
        let imgs: Vec<Vec<Rational>> = f.cone.generators.iter().map(|g| apply(g)).collect();
        let target = target_faces
            .iter()
            .position(|tf| imgs.iter().all(|v| tf.cone.contains(v)))
            .ok_or(ConesError::NotAFace)?;
        image.push(target);
    }
    let mut preimage = Vec::new();
    for tf in &target_faces {
        let idx: Vec<usize> = (0..sigma.generators.len())
            .filter(|&i| tf.cone.contains(&apply(&sigma.generators[i])))
            .collect();
        let source = source_faces
            .iter()
            .position(|sf| sf.generator_indices == idx)
            .ok_or(ConesError::NotAFace)?;
        preimage.push(source);
    }
    Ok(FaceMaps { source_faces, target_faces, image, preimage })
}

/// A cone acting on a filtered space: one endomorphism per generator,
/// extended linearly, together with the filtration W and the splitting Y
/// of W(sigma).
#[derive(Clone, Debug)]
pub struct ConeAction {
    pub cone: Cone,
    pub images: Vec<Matrix<Rational>>,
    pub w: Filtration<Rational>,
    pub y: Splitting<Rational>,
}

impl ConeAction {
    /// The endomorphism attached to an element of the span of the cone.
    pub fn act(&self, v: &[Rational]) -> Result<Matrix<Rational>, ConesError> {
        let g = self.cone.generator_matrix();
        let target = Matrix::from_fn(v.len(), 1, |i, _| v[i].clone());
        let coeffs = match solve_linear(&g, &target) {
            LinearSolution::Unique(c) => c,
            LinearSolution::Parametrized { particular, .. } => particular,
            LinearSolution::Empty => {
                return Err(ConesError::IllFormedAction(
                    "element outside the span of the cone".into(),
                ))
            }
        };
        let dim = self.w.dim();
        let mut out = Matrix::zero(dim, dim);
        for (i, img) in self.images.iter().enumerate() {
            out = out.add(&img.scale(&coeffs.get(i, 0).clone()));
        }
        Ok(out)
    }

    /// Linearity check: every linear relation among generators maps to the
    /// zero endomorphism.
    fn well_defined(&self) -> Result<(), ConesError> {
        let g = self.cone.generator_matrix();
        for k in g.kernel_basis() {
            let dim = self.w.dim();
            let mut out = Matrix::zero(dim, dim);
            for (i, img) in self.images.iter().enumerate() {
                out = out.add(&img.scale(&k.get(i, 0).clone()));
            }
            if !out.is_zero() {
                return Err(ConesError::IllFormedAction(
                    "images are inconsistent with generator relations".into(),
                ));
            }
        }
        Ok(())
    }

    /// Deterministic interior samples of a face: the generator sum plus
    /// seeded positive combinations.
    fn interior_samples(&self, face: &Face, extra: usize) -> Vec<Vec<Rational>> {
        let gens = &face.cone.generators;
        let ambient = self.cone.ambient;
        let mut out = Vec::new();
        let sum = (0..ambient)
            .map(|i| {
                gens.iter()
                    .fold(Rational::from(0), |acc, g| Field::add(&acc, &g[i]))
            })
            .collect::<Vec<_>>();
        out.push(sum);
        let mut rng = ChaCha8Rng::seed_from_u64(0x636f_6e65);
        for _ in 0..extra {
            let coeffs: Vec<Rational> = gens
                .iter()
                .map(|_| Rational::from(rng.gen_range(1..8) as i64))
                .collect();
            let v = (0..ambient)
                .map(|i| {
                    gens.iter().zip(&coeffs).fold(Rational::from(0), |acc, (g, c)| {
                        Field::add(&acc, &Field::mul(c, &g[i]))
                    })
                })
                .collect::<Vec<_>>();
            out.push(v);
        }
        out
    }
}

/// The weight filtration W(tau) of a face: the relative monodromy
/// filtration of any interior element's action with respect to W;
/// independence of the sample is checked.
pub fn face_weight_filtration(
    a: &ConeAction,
    tau: &Face,
) -> Result<Filtration<Rational>, ConesError> {
    if tau.is_zero_face() {
        return Ok(a.w.clone());
    }
    let samples = a.interior_samples(tau, 2);
    let mut result: Option<Filtration<Rational>> = None;
    for s in samples {
        let op = NilpotentOp::new(a.act(&s)?)?;
        let m = relative_monodromy_filtration(&op, &a.w)?;
        match &result {
            None => result = Some(m),
            Some(prev) => {
                if !crate::deligne::filtrations_equal(prev, &m) {
                    return Err(ConesError::IllFormedAction(
                        "face weight filtration depends on the interior sample".into(),
                    ));
                }
            }
        }
    }
    Ok(result.unwrap())
}

/// Operational admissibility report for a cone action (proxy: sampled
/// interior independence plus the chain recursion over every maximal
/// chain of faces, then the splitting conditions on Y).
pub fn validate_monodromy_system(a: &ConeAction) -> Vec<PropCheck> {
    let mut out = Vec::new();

    if a.cone.is_sharp() {
        out.push(PropCheck::ok("sharp"));
    } else {
        out.push(PropCheck::fail("sharp", "cone has a nonzero lineality element".into()));
        return out;
    }

    match a.well_defined() {
        Ok(()) => out.push(PropCheck::ok("action-linear")),
        Err(e) => {
            out.push(PropCheck::fail("action-linear", e.to_string()));
            return out;
        }
    }

    let mut basic_ok = true;
    for (i, img) in a.images.iter().enumerate() {
        if !img.is_nilpotent() {
            out.push(PropCheck::fail(
                "generators-nilpotent",
                format!("image of generator {i} is not nilpotent"),
            ));
            basic_ok = false;
            break;
        }
        if !a.w.endo_member(img, 0) {
            out.push(PropCheck::fail(
                "generators-preserve-w",
                format!("image of generator {i} does not preserve W"),
            ));
            basic_ok = false;
            break;
        }
    }
    for i in 0..a.images.len() {
        for j in (i + 1)..a.images.len() {
            if !a.images[i].commutator(&a.images[j]).is_zero() {
                out.push(PropCheck::fail(
                    "generators-commute",
                    format!("images of generators {i} and {j} do not commute"),
                ));
                basic_ok = false;
            }
        }
    }
    if !basic_ok {
        return out;
    }
    out.push(PropCheck::ok("generators-nilpotent"));
    out.push(PropCheck::ok("generators-preserve-w"));
    out.push(PropCheck::ok("generators-commute"));

    let faces = match face_lattice(&a.cone) {
        Ok(f) => f,
        Err(e) => {
            out.push(PropCheck::fail("face-lattice", e.to_string()));
            return out;
        }
    };

    // Direct face filtrations (also checks interior-sample independence).
    let mut face_w: Vec<Option<Filtration<Rational>>> = Vec::new();
    let mut chains_ok = true;
    for f in &faces {
        match face_weight_filtration(a, f) {
            Ok(m) => face_w.push(Some(m)),
            Err(e) => {
                out.push(PropCheck::fail(
                    "face-filtrations",
                    format!("W(tau) fails for face {:?}: {e}", f.generator_indices),
                ));
                face_w.push(None);
                chains_ok = false;
            }
        }
    }
    if !chains_ok {
        return out;
    }
    out.push(PropCheck::ok("face-filtrations"));

    // Chain recursion over maximal chains: W(tau_j) = M(N_j, W(tau_{j-1})).
    let chains = maximal_chains(&faces);
    let mut witness = String::new();
    let mut rec_ok = true;
    'chains: for chain in &chains {
        let mut wcur = a.w.clone();
        for &fi in &chain[1..] {
            let face = &faces[fi];
            for s in a.interior_samples(face, 2) {
                let step = NilpotentOp::new(a.act(&s).unwrap())
                    .map_err(ConesError::from)
                    .and_then(|op| {
                        relative_monodromy_filtration(&op, &wcur).map_err(ConesError::from)
                    });
                match step {
                    Ok(m) => {
                        if !crate::deligne::filtrations_equal(
                            &m,
                            face_w[fi].as_ref().unwrap(),
                        ) {
                            rec_ok = false;
                            witness = format!(
                                "chain recursion disagrees with W(tau) at face {:?}",
                                face.generator_indices
                            );
                            break 'chains;
                        }
                        wcur = m;
                    }
                    Err(e) => {
                        rec_ok = false;
                        witness = format!(
                            "chain recursion fails at face {:?}: {e}",
                            face.generator_indices
                        );
                        break 'chains;
                    }
                }
            }
        }
    }
    out.push(if rec_ok {
        PropCheck::ok("chain-recursion")
    } else {
        PropCheck::fail("chain-recursion", witness)
    });
    if !rec_ok {
        return out;
    }

    // Y splits W(sigma), compatibly with W, with generators of weight -2.
    let w_sigma = face_w.last().unwrap().as_ref().unwrap();
    match Splitting::new(a.y.matrix().clone(), w_sigma) {
        Ok(_) => out.push(PropCheck::ok("y-splits-w-sigma")),
        Err(e) => out.push(PropCheck::fail("y-splits-w-sigma", e)),
    }
    if a.w.endo_member(a.y.matrix(), 0) {
        out.push(PropCheck::ok("y-compatible-with-w"));
    } else {
        out.push(PropCheck::fail(
            "y-compatible-with-w",
            "Y does not preserve every W step".into(),
        ));
    }
    let bad = a
        .images
        .iter()
        .position(|img| !img.is_zero() && !a.y.has_pure_weight(img, -2));
    match bad {
        None => out.push(PropCheck::ok("generators-weight-minus-2")),
        Some(i) => out.push(PropCheck::fail(
            "generators-weight-minus-2",
            format!("image of generator {i} is not of Y-weight -2"),
        )),
    }

    out
}

/// All maximal chains of faces {0} = tau_0 < ... < tau_n = sigma, as index
/// lists into the lattice.
pub fn maximal_chains(faces: &[Face]) -> Vec<Vec<usize>> {
    let n = faces.len();
    let contains = |a: usize, b: usize| -> bool {
        // faces[b] strictly inside faces[a]
        let sa: BTreeSet<usize> = faces[a].generator_indices.iter().copied().collect();
        let sb: BTreeSet<usize> = faces[b].generator_indices.iter().copied().collect();
        sb.is_subset(&sa) && sa != sb
    };
    let top = (0..n)
        .max_by_key(|&i| faces[i].generator_indices.len())
        .expect("nonempty lattice");
    let bottom = (0..n)
        .find(|&i| faces[i].is_zero_face())
        .expect("zero face present");
    // Cover relation: b < a with nothing strictly between.
    let covers = |a: usize, b: usize| -> bool {
        contains(a, b) && !(0..n).any(|c| contains(a, c) && contains(c, b))
    };
    let mut out = Vec::new();
    let mut stack = vec![vec![bottom]];
    while let Some(chain) = stack.pop() {
        let last = *chain.last().unwrap();
        if last == top {
            out.push(chain);
            continue;
        }
        for next in 0..n {
            if covers(next, last) {
                let mut c = chain.clone();
                c.push(next);
                stack.push(c);
            }
        }
    }
    out
}
