//! Scenario-driven batch driver: parse JSON scenario files, dispatch
//! the requested computations, and emit exact, byte-deterministic
//! reports.
//!
//! Exit codes: 0 all tasks pass; 1 a validation or theorem check
//! fails; 2 a mathematical nonexistence error (no relative monodromy
//! filtration, or a genericity violation); 3 a parse or schema error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cones::Cone;
use crate::deligne::{
    deligne_splitting, descend_splittings, relative_monodromy_filtration, verify_deligne_props,
    DeligneError, DeligneSystemData, NilpotentOp, PropCheck,
};
use crate::eigen::{
    common_eigenvector, eigenvalue_on, validate_triple, EigenCase, EigenError, MonodromyTriple,
    QuadraticRelation,
};
use crate::filtration::{Filtration, Splitting};
use crate::gen;
use crate::heights::{
    height_asymptotics, local_height, pairing_via_delta, HeightFamilyParams, HeightsError,
    TateHeightInput,
};
use crate::kernel::{Matrix, Rational};
use crate::ratio::{
    chart_coords, chart_reconstruct, embed_point, encased_in, ChartInput, FaceBase, Flavor,
    RatioPoint,
};
use crate::sl2orbit::{one_var_expansion, verify_prop_5_3, OneVarSystem, Sl2Error};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_ORDER: i64 = 8;
const SELFTEST_SEED: u64 = 1;

// ---------------------------------------------------------------------------
// Scenario schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiltrationSpec {
    pub dim: usize,
    /// Weight -> list of basis vectors spanning that step.
    pub steps: BTreeMap<String, Vec<Vec<Rational>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplittingSpec {
    pub weights: Vec<i64>,
    /// Eigenbasis as columns; identity (diagonal splitting) if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Matrix<Rational>>,
}

/// A filtered nilpotent operator, optionally with a splitting of the
/// relative monodromy filtration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairSpec {
    pub w: String,
    pub n: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OneVarSpec {
    pub w: String,
    pub n1: String,
    pub n2: String,
    pub y: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeligneSpec {
    pub filtrations: Vec<String>,
    pub operators: Vec<String>,
    pub y: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeSpec {
    pub ambient: usize,
    pub generators: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioPointSpec {
    pub cone: String,
    /// Flag of faces, each given by its generators.
    pub flag: Vec<Vec<Vec<Rational>>>,
    pub reps: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceBaseSpec {
    pub cone: String,
    pub flag: Vec<Vec<Vec<Rational>>>,
    /// elements[j][k] is the k-th base element at flag level j+1.
    pub elements: Vec<Vec<Vec<Rational>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationSpec {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
    pub op_a: String,
    pub op_b: String,
    pub case: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripleSpec {
    pub n0: String,
    pub n1: String,
    pub n2: String,
    pub f: String,
    pub q: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Validate,
    Split,
    Delta,
    Descend,
    Expand,
    Heights,
    Ratio,
    Eigen,
    Selftest,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavor: Option<String>,
    /// Base along faces for ratio chart tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub field: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub filtrations: BTreeMap<String, FiltrationSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub splittings: BTreeMap<String, SplittingSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub operators: BTreeMap<String, Matrix<Rational>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pairs: BTreeMap<String, PairSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: BTreeMap<String, OneVarSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub deligne: BTreeMap<String, DeligneSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cones: BTreeMap<String, ConeSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ratio_points: BTreeMap<String, RatioPointSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub face_bases: BTreeMap<String, FaceBaseSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub height_inputs: BTreeMap<String, TateHeightInput>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub height_families: BTreeMap<String, HeightFamilyParams>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, RelationSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub triples: BTreeMap<String, TripleSpec>,
    pub tasks: Vec<TaskSpec>,
}

// ---------------------------------------------------------------------------
// Task evaluation
// ---------------------------------------------------------------------------

/// A task failure with the exit severity it maps to.
#[derive(Debug)]
pub struct TaskError {
    pub severity: i32,
    pub message: String,
}

impl TaskError {
    fn schema(msg: impl Into<String>) -> Self {
        TaskError { severity: 3, message: msg.into() }
    }

    fn check(msg: impl Into<String>) -> Self {
        TaskError { severity: 1, message: msg.into() }
    }
}

fn sev_deligne(e: DeligneError) -> TaskError {
    let severity = if e == DeligneError::NotExists { 2 } else { 1 };
    TaskError { severity, message: e.to_string() }
}

fn sev_sl2(e: Sl2Error) -> TaskError {
    let severity = match &e {
        Sl2Error::Deligne(DeligneError::NotExists) => 2,
        _ => 1,
    };
    TaskError { severity, message: e.to_string() }
}

fn sev_heights(e: HeightsError) -> TaskError {
    let severity = match &e {
        HeightsError::GenericityViolation { .. } => 2,
        HeightsError::Deligne(DeligneError::NotExists) => 2,
        HeightsError::Sl2(Sl2Error::Deligne(DeligneError::NotExists)) => 2,
        _ => 1,
    };
    TaskError { severity, message: e.to_string() }
}

fn sev_eigen(e: EigenError) -> TaskError {
    let severity = match &e {
        EigenError::SplittingField(_) => 2,
        _ => 1,
    };
    TaskError { severity, message: e.to_string() }
}

struct Resolver<'a> {
    sc: &'a Scenario,
}

impl<'a> Resolver<'a> {
    fn operator(&self, name: &str) -> Result<Matrix<Rational>, TaskError> {
        self.sc
            .operators
            .get(name)
            .cloned()
            .ok_or_else(|| TaskError::schema(format!("operator {name:?} is not defined")))
    }

    fn filtration(&self, name: &str) -> Result<Filtration<Rational>, TaskError> {
        let spec = self
            .sc
            .filtrations
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("filtration {name:?} is not defined")))?;
        let mut steps = BTreeMap::new();
        for (w, cols) in &spec.steps {
            let weight: i64 = w
                .parse()
                .map_err(|_| TaskError::schema(format!("bad weight key {w:?}")))?;
            let columns: Vec<Matrix<Rational>> = cols
                .iter()
                .map(|v| {
                    if v.len() != spec.dim {
                        return Err(TaskError::schema(format!(
                            "vector length {} in filtration {name:?} differs from dim {}",
                            v.len(),
                            spec.dim
                        )));
                    }
                    Ok(Matrix::from_rows(v.iter().map(|c| vec![c.clone()]).collect()))
                })
                .collect::<Result<_, _>>()?;
            let m = if columns.is_empty() {
                Matrix::zero(spec.dim, 0)
            } else {
                Matrix::from_columns(&columns)
            };
            steps.insert(weight, m);
        }
        Filtration::new(spec.dim, steps).map_err(TaskError::schema)
    }

    fn splitting(&self, name: &str) -> Result<Splitting<Rational>, TaskError> {
        let spec = self
            .sc
            .splittings
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("splitting {name:?} is not defined")))?;
        match &spec.basis {
            None => Ok(Splitting::diagonal(&spec.weights)),
            Some(basis) => {
                let diag = Splitting::diagonal(&spec.weights);
                let inv = basis
                    .inverse()
                    .ok_or_else(|| TaskError::schema(format!("basis of {name:?} is singular")))?;
                Ok(Splitting::from_parts_unchecked(
                    basis.mul(diag.matrix()).mul(&inv),
                    spec.weights.clone(),
                ))
            }
        }
    }

    fn pair(
        &self,
        name: &str,
    ) -> Result<(Filtration<Rational>, NilpotentOp<Rational>, Option<Splitting<Rational>>), TaskError>
    {
        let spec = self
            .sc
            .pairs
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("pair {name:?} is not defined")))?;
        let w = self.filtration(&spec.w)?;
        let n = NilpotentOp::new(self.operator(&spec.n)?).map_err(sev_deligne)?;
        let y = spec.y.as_deref().map(|y| self.splitting(y)).transpose()?;
        Ok((w, n, y))
    }

    fn system(&self, name: &str) -> Result<OneVarSystem, TaskError> {
        let spec = self
            .sc
            .systems
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("system {name:?} is not defined")))?;
        OneVarSystem::new(
            self.filtration(&spec.w)?,
            self.operator(&spec.n1)?,
            self.operator(&spec.n2)?,
            self.splitting(&spec.y)?,
        )
        .map_err(sev_sl2)
    }

    fn deligne_system(&self, name: &str) -> Result<DeligneSystemData<Rational>, TaskError> {
        let spec = self
            .sc
            .deligne
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("deligne system {name:?} is not defined")))?;
        Ok(DeligneSystemData {
            filtrations: spec
                .filtrations
                .iter()
                .map(|f| self.filtration(f))
                .collect::<Result<_, _>>()?,
            operators: spec
                .operators
                .iter()
                .map(|n| {
                    NilpotentOp::new(self.operator(n)?).map_err(sev_deligne)
                })
                .collect::<Result<_, _>>()?,
            y: self.splitting(&spec.y)?,
        })
    }

    fn cone(&self, name: &str) -> Result<Cone, TaskError> {
        let spec = self
            .sc
            .cones
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("cone {name:?} is not defined")))?;
        Cone::new(spec.ambient, spec.generators.clone())
            .map_err(|e| TaskError::check(e.to_string()))
    }

    fn flag(&self, ambient: usize, flag: &[Vec<Vec<Rational>>]) -> Result<Vec<Cone>, TaskError> {
        flag.iter()
            .map(|gens| {
                Cone::new(ambient, gens.clone()).map_err(|e| TaskError::check(e.to_string()))
            })
            .collect()
    }

    fn ratio_point(&self, name: &str) -> Result<RatioPoint, TaskError> {
        let spec = self
            .sc
            .ratio_points
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("ratio point {name:?} is not defined")))?;
        let sigma = self.cone(&spec.cone)?;
        let flag = self.flag(sigma.ambient, &spec.flag)?;
        RatioPoint::new(sigma, flag, spec.reps.clone())
            .map_err(|e| TaskError::check(e.to_string()))
    }

    fn face_base(&self, name: &str) -> Result<FaceBase, TaskError> {
        let spec = self
            .sc
            .face_bases
            .get(name)
            .ok_or_else(|| TaskError::schema(format!("face base {name:?} is not defined")))?;
        let sigma = self.cone(&spec.cone)?;
        let flag = self.flag(sigma.ambient, &spec.flag)?;
        FaceBase::new(sigma, flag, spec.elements.clone())
            .map_err(|e| TaskError::check(e.to_string()))
    }
}

fn splitting_json(y: &Splitting<Rational>) -> Value {
    json!({ "weights": y.weights(), "matrix": y.matrix() })
}

fn checks_json(checks: &[PropCheck]) -> Value {
    serde_json::to_value(checks).expect("checks serialize")
}

fn checks_pass(checks: &[PropCheck]) -> Result<(), TaskError> {
    match checks.iter().find(|c| !c.pass) {
        None => Ok(()),
        Some(c) => Err(TaskError::check(format!(
            "check {} failed: {}",
            c.name,
            c.witness
        ))),
    }
}

fn series_json(series: &BTreeMap<i64, Matrix<Rational>>, half: bool) -> Value {
    let mut out = serde_json::Map::new();
    for (k, m) in series {
        let key = if half {
            if k % 2 == 0 {
                format!("{}", k / 2)
            } else {
                format!("{k}/2")
            }
        } else {
            format!("{k}")
        };
        out.insert(key, serde_json::to_value(m).expect("matrix"));
    }
    Value::Object(out)
}

fn delta_components_json(
    w: &Filtration<Rational>,
    y0: &Splitting<Rational>,
    delta_endo: &Matrix<Rational>,
) -> Value {
    // Record the graded components of the defect in the Y0 eigenbasis:
    // the block sending weight w to weight w' for each pair of jumps.
    let mut comps = Vec::new();
    for &src in &w.jump_weights() {
        for &dst in &w.jump_weights() {
            if dst >= src {
                continue;
            }
            let p_dst = y0.eigenprojection(dst);
            let p_src = y0.eigenprojection(src);
            let block = p_dst.mul(delta_endo).mul(&p_src);
            if !block.is_zero() {
                comps.push(json!({ "from": src, "to": dst, "matrix": block }));
            }
        }
    }
    Value::Array(comps)
}

fn run_task(
    rz: &Resolver,
    t: &TaskSpec,
    opts: &RunOptions,
) -> Result<Value, TaskError> {
    let order = t.order.unwrap_or(opts.order);
    let need_target = || {
        t.target
            .as_deref()
            .ok_or_else(|| TaskError::schema("task requires a target"))
    };
    match t.task {
        TaskKind::Validate => {
            let name = need_target()?;
            if rz.sc.pairs.contains_key(name) {
                let (w, n, _) = rz.pair(name)?;
                let m = relative_monodromy_filtration(&n, &w).map_err(sev_deligne)?;
                let weights: Vec<Value> = m
                    .jump_weights()
                    .iter()
                    .map(|&w| json!({ "weight": w, "dim": m.dim_at(w) }))
                    .collect();
                Ok(json!({ "relative_monodromy": weights }))
            } else if rz.sc.deligne.contains_key(name) {
                let d = rz.deligne_system(name)?;
                d.validate().map_err(sev_deligne)?;
                let checks = verify_deligne_props(&d);
                let value = checks_json(&checks);
                checks_pass(&checks)?;
                Ok(json!({ "checks": value }))
            } else if rz.sc.systems.contains_key(name) {
                let sys = rz.system(name)?;
                let d = sys.deligne_data().map_err(sev_sl2)?;
                d.validate().map_err(sev_deligne)?;
                Ok(json!({ "levels": d.n(), "dim": d.dim() }))
            } else if rz.sc.height_families.contains_key(name) {
                let p = &rz.sc.height_families[name];
                crate::heights::build_height_system(p).map_err(sev_heights)?;
                Ok(json!({ "family": "valid" }))
            } else if rz.sc.height_inputs.contains_key(name) {
                let inp = &rz.sc.height_inputs[name];
                inp.validate().map_err(sev_heights)?;
                inp.d().map_err(sev_heights)?;
                Ok(json!({ "input": "valid" }))
            } else if rz.sc.triples.contains_key(name) {
                let spec = &rz.sc.triples[name];
                let t = MonodromyTriple {
                    n0: rz.operator(&spec.n0)?,
                    n1: rz.operator(&spec.n1)?,
                    n2: rz.operator(&spec.n2)?,
                    f: rz.operator(&spec.f)?,
                    q: spec.q.clone(),
                };
                let rep = validate_triple(&t);
                let value = json!({
                    "checks": checks_json(&rep.checks),
                    "normalized": rep.normalized,
                });
                checks_pass(&rep.checks)?;
                Ok(value)
            } else {
                Err(TaskError::schema(format!("target {name:?} is not defined")))
            }
        }
        TaskKind::Split | TaskKind::Delta => {
            let name = need_target()?;
            let (w, n, y) = rz.pair(name)?;
            let y = y.ok_or_else(|| {
                TaskError::schema(format!("pair {name:?} has no splitting for this task"))
            })?;
            let sd = deligne_splitting(&w, &n, &y).map_err(sev_deligne)?;
            if t.task == TaskKind::Split {
                Ok(json!({ "y0": splitting_json(&sd.y0) }))
            } else {
                let endo = sd.delta.to_endo(&w, &sd.y0);
                Ok(json!({ "delta": delta_components_json(&w, &sd.y0, &endo) }))
            }
        }
        TaskKind::Descend => {
            let name = need_target()?;
            let d = rz.deligne_system(name)?;
            let chain = descend_splittings(&d).map_err(sev_deligne)?;
            // Returned highest level first.
            let out: Vec<Value> = chain
                .iter()
                .rev()
                .enumerate()
                .map(|(j, y)| json!({ "level": j, "splitting": splitting_json(y) }))
                .collect();
            Ok(json!({ "splittings": out }))
        }
        TaskKind::Expand => {
            let name = need_target()?;
            let sys = rz.system(name)?;
            let mut report = one_var_expansion(&sys, order).map_err(sev_sl2)?;
            let bounds = verify_prop_5_3(&report);
            report.checks.extend(bounds);
            let value = json!({
                "order": report.order,
                "u_series": series_json(&report.u_series, false),
                "delta_series": series_json(&report.delta_series, false),
                "u_natural": series_json(&report.u_natural, true),
                "delta_natural": series_json(&report.delta_natural, true),
                "checks": checks_json(&report.checks),
            });
            checks_pass(&report.checks)?;
            Ok(value)
        }
        TaskKind::Heights => {
            let name = need_target()?;
            if rz.sc.height_inputs.contains_key(name) {
                let inp = &rz.sc.height_inputs[name];
                let h = local_height(inp).map_err(sev_heights)?;
                let via = pairing_via_delta(inp).map_err(sev_heights)?;
                if h != via {
                    return Err(TaskError::check(format!(
                        "height {h} disagrees with the system defect {via}"
                    )));
                }
                Ok(json!({ "height": h }))
            } else if rz.sc.height_families.contains_key(name) {
                let p = &rz.sc.height_families[name];
                let report = height_asymptotics(p, order).map_err(sev_heights)?;
                let value = json!({
                    "order": report.order,
                    "delta_series": series_json(&report.delta_series, false),
                    "checks": checks_json(&report.checks),
                });
                checks_pass(&report.checks)?;
                Ok(value)
            } else {
                Err(TaskError::schema(format!("target {name:?} is not defined")))
            }
        }
        TaskKind::Ratio => {
            let name = need_target()?;
            let p = rz.ratio_point(name)?;
            let flavor = match t.flavor.as_deref().or(opts.flavor.as_deref()) {
                None | Some("standard") => Flavor::Standard,
                Some("narrower") => Flavor::Narrower,
                Some(other) => {
                    return Err(TaskError::schema(format!("unknown flavor {other:?}")))
                }
            };
            let mut out = serde_json::Map::new();
            out.insert("depth".into(), json!(p.flag.len()));
            if let Some(base) = &t.base {
                let psi = rz.face_base(base)?;
                let coords = chart_coords(&psi, &ChartInput::Point(p.clone()), flavor)
                    .map_err(|e| TaskError::check(e.to_string()))?;
                let back = chart_reconstruct(&psi, &coords)
                    .map_err(|e| TaskError::check(e.to_string()))?;
                if !back.equivalent(&p) {
                    return Err(TaskError::check("chart round trip is not the identity"));
                }
                out.insert(
                    "encased".into(),
                    json!(encased_in(&p, &psi).is_some()),
                );
                out.insert("chart".into(), serde_json::to_value(&coords).expect("coords"));
                out.insert("round_trip".into(), json!("exact"));
            } else {
                let emb = embed_point(&p).map_err(|e| TaskError::check(e.to_string()))?;
                out.insert("embedded_depth".into(), json!(emb.flag.len()));
            }
            Ok(Value::Object(out))
        }
        TaskKind::Eigen => {
            let name = need_target()?;
            if rz.sc.relations.contains_key(name) {
                let spec = &rz.sc.relations[name];
                let rel = QuadraticRelation {
                    a: spec.a.clone(),
                    b: spec.b.clone(),
                    c: spec.c.clone(),
                    d: spec.d.clone(),
                    op_a: rz.operator(&spec.op_a)?,
                    op_b: rz.operator(&spec.op_b)?,
                };
                let case = match spec.case.as_str() {
                    "I" => EigenCase::I,
                    "II" => EigenCase::II,
                    "III" => EigenCase::III,
                    other => {
                        return Err(TaskError::schema(format!("unknown case {other:?}")))
                    }
                };
                let v = common_eigenvector(&rel, case).map_err(sev_eigen)?;
                let la = eigenvalue_on(&rel.op_a, &v)
                    .ok_or_else(|| TaskError::check("output is not an eigenvector of A"))?;
                let lb = eigenvalue_on(&rel.op_b, &v)
                    .ok_or_else(|| TaskError::check("output is not an eigenvector of B"))?;
                Ok(json!({ "eigenvector": v, "eigenvalue_a": la, "eigenvalue_b": lb }))
            } else if rz.sc.triples.contains_key(name) {
                let spec = &rz.sc.triples[name];
                let trip = MonodromyTriple {
                    n0: rz.operator(&spec.n0)?,
                    n1: rz.operator(&spec.n1)?,
                    n2: rz.operator(&spec.n2)?,
                    f: rz.operator(&spec.f)?,
                    q: spec.q.clone(),
                };
                let rep = validate_triple(&trip);
                let value = json!({
                    "checks": checks_json(&rep.checks),
                    "normalized": rep.normalized,
                });
                checks_pass(&rep.checks)?;
                Ok(value)
            } else {
                Err(TaskError::schema(format!("target {name:?} is not defined")))
            }
        }
        TaskKind::Selftest => Ok(selftest(order, opts.seed)),
    }
}

// ---------------------------------------------------------------------------
// Self-test battery
// ---------------------------------------------------------------------------

/// Generator-driven property suites at the given truncation order with
/// a fixed seed; failures are report content, never panics.
pub fn selftest(order: i64, seed: u64) -> Value {
    let mut r = gen::rng(seed);
    let mut suites = Vec::new();
    let vacuous = order < 3;

    // Deligne systems: structural propositions.
    let mut checks: Vec<PropCheck> = Vec::new();
    for i in 0..4 {
        match gen::random_system(&mut r, 2, 9, i % 2 == 1) {
            Ok(d) => {
                if let Err(e) = d.validate() {
                    checks.push(PropCheck::fail("system-valid", e.to_string()));
                } else {
                    checks.extend(verify_deligne_props(&d));
                }
            }
            Err(e) => checks.push(PropCheck::fail("system-build", e)),
        }
    }
    suites.push(("deligne", checks));

    // One-variable expansions with the weight-bound propositions.
    let mut checks: Vec<PropCheck> = Vec::new();
    for i in 0..3 {
        match gen::random_one_var(&mut r, 8, i == 2) {
            Ok(sys) => match one_var_expansion(&sys, order.min(4)) {
                Ok(report) => {
                    checks.extend(report.checks.iter().cloned());
                    let bounds = verify_prop_5_3(&report);
                    if vacuous {
                        checks.extend(bounds.into_iter().map(|c| PropCheck {
                            name: format!("vacuous: {}", c.name),
                            pass: true,
                            witness: String::new(),
                        }));
                    } else {
                        checks.extend(bounds);
                    }
                }
                Err(e) => checks.push(PropCheck::fail("expansion", e.to_string())),
            },
            Err(e) => checks.push(PropCheck::fail("system-build", e)),
        }
    }
    suites.push(("sl2orbit", checks));

    // Heights: identity with the local pairing, and family asymptotics.
    let mut checks: Vec<PropCheck> = Vec::new();
    for _ in 0..8 {
        let inp = gen::random_tate_input(&mut r);
        match (local_height(&inp), pairing_via_delta(&inp)) {
            (Ok(h), Ok(v)) if h == v => checks.push(PropCheck::ok("height-identity")),
            (h, v) => checks.push(PropCheck::fail(
                "height-identity",
                format!("height {h:?} vs defect {v:?}"),
            )),
        }
    }
    for _ in 0..4 {
        let p = gen::random_height_family(&mut r);
        match height_asymptotics(&p, order) {
            Ok(report) => checks.extend(report.checks),
            Err(e) => checks.push(PropCheck::fail("asymptotics", e.to_string())),
        }
    }
    suites.push(("heights", checks));

    // Eigenvector cases.
    let mut checks: Vec<PropCheck> = Vec::new();
    for i in 0..6 {
        let (rel, case) = match i % 3 {
            0 => (gen::random_case_one(&mut r, 4), EigenCase::I),
            1 => (gen::random_case_kernel(&mut r, 4, false), EigenCase::II),
            _ => (gen::random_case_kernel(&mut r, 4, true), EigenCase::III),
        };
        let name = match case {
            EigenCase::I => "case-one",
            EigenCase::II => "case-two",
            EigenCase::III => "case-three",
        };
        match common_eigenvector(&rel, case) {
            Ok(v) => {
                let ok = eigenvalue_on(&rel.op_a, &v).is_some()
                    && eigenvalue_on(&rel.op_b, &v).is_some();
                checks.push(if ok {
                    PropCheck::ok(name)
                } else {
                    PropCheck::fail(name, "output is not a common eigenvector".into())
                });
            }
            Err(e) => checks.push(PropCheck::fail(name, e.to_string())),
        }
    }
    suites.push(("eigen", checks));

    let all_pass = suites.iter().all(|(_, cs)| cs.iter().all(|c| c.pass));
    json!({
        "order": order,
        "seed": seed,
        "pass": all_pass,
        "suites": suites
            .iter()
            .map(|(name, cs)| json!({ "suite": name, "checks": checks_json(cs) }))
            .collect::<Vec<_>>(),
    })
}

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub order: i64,
    pub flavor: Option<String>,
    pub seed: u64,
    /// Run only tasks of this kind; `None` runs the whole task list.
    pub only: Option<TaskKind>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { order: DEFAULT_ORDER, flavor: None, seed: SELFTEST_SEED, only: None }
    }
}

/// Run one scenario from raw bytes; returns the report value and the
/// exit severity.
pub fn run_scenario_bytes(label: &str, bytes: &[u8], opts: &RunOptions) -> (Value, i32) {
    let digest = hex_digest(bytes);
    let sc: Scenario = match serde_json::from_slice(bytes) {
        Ok(sc) => sc,
        Err(e) => {
            return (
                json!({
                    "input": label,
                    "digest": digest,
                    "status": "parse-error",
                    "error": e.to_string(),
                }),
                3,
            )
        }
    };
    if sc.field != "Q" {
        return (
            json!({
                "input": label,
                "digest": digest,
                "status": "parse-error",
                "error": format!("unsupported field tag {:?} (scenario files are over \"Q\")", sc.field),
            }),
            3,
        );
    }
    let rz = Resolver { sc: &sc };
    let mut tasks = Vec::new();
    let mut severity = 0;
    for t in &sc.tasks {
        if let Some(only) = opts.only {
            if t.task != only {
                continue;
            }
        }
        let mut entry = serde_json::Map::new();
        entry.insert("task".into(), serde_json::to_value(t.task).expect("kind"));
        if let Some(target) = &t.target {
            entry.insert("target".into(), json!(target));
        }
        match run_task(&rz, t, opts) {
            Ok(v) => {
                entry.insert("outcome".into(), json!("pass"));
                entry.insert("result".into(), v);
            }
            Err(e) => {
                entry.insert(
                    "outcome".into(),
                    json!(match e.severity {
                        2 => "not-exists",
                        3 => "schema-error",
                        _ => "fail",
                    }),
                );
                entry.insert("error".into(), json!(e.message));
                severity = severity.max(e.severity);
                tasks.push(Value::Object(entry));
                // First hard error aborts the remaining tasks of this
                // scenario.
                break;
            }
        }
        tasks.push(Value::Object(entry));
    }
    let status = match severity {
        0 => "pass",
        2 => "not-exists",
        3 => "schema-error",
        _ => "fail",
    };
    (
        json!({
            "input": label,
            "digest": digest,
            "status": status,
            "tasks": tasks,
        }),
        severity,
    )
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

/// Run a scenario file or every `.json` file of a directory, in name
/// order. Returns the merged report and the maximum severity.
pub fn run_path(path: &Path, opts: &RunOptions) -> (Value, i32) {
    let mut inputs: Vec<(String, PathBuf)> = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = match std::fs::read_dir(path) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect(),
            Err(e) => {
                return (
                    json!({ "error": format!("cannot read directory: {e}") }),
                    3,
                )
            }
        };
        entries.sort();
        for p in entries {
            let label = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            inputs.push((label, p));
        }
    } else {
        let label = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        inputs.push((label, path.to_path_buf()));
    }

    let mut scenarios = Vec::new();
    let mut severity = 0;
    for (label, p) in inputs {
        match std::fs::read(&p) {
            Ok(bytes) => {
                let (v, s) = run_scenario_bytes(&label, &bytes, opts);
                scenarios.push(v);
                severity = severity.max(s);
            }
            Err(e) => {
                scenarios.push(json!({
                    "input": label,
                    "status": "parse-error",
                    "error": format!("cannot read file: {e}"),
                }));
                severity = severity.max(3);
            }
        }
    }
    (
        json!({
            "tool": format!("mslab {TOOL_VERSION}"),
            "schema": SCHEMA_VERSION,
            "scenarios": scenarios,
        }),
        severity,
    )
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Standard,
    Narrower,
}

#[derive(Clone, Debug, clap::Args)]
pub struct CommonArgs {
    /// Scenario file or directory of scenario files.
    #[arg(long)]
    pub input: PathBuf,
    /// Series truncation order (MSLAB_ORDER overrides the default 8).
    #[arg(long)]
    pub order: Option<i64>,
    /// Chart flavor for ratio tasks.
    #[arg(long, value_enum)]
    pub flavor: Option<FlavorArg>,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Generator seed for seeded tasks.
    #[arg(long, default_value_t = SELFTEST_SEED)]
    pub seed: u64,
}

#[derive(Clone, Debug, clap::Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub order: Option<i64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[arg(long, default_value_t = SELFTEST_SEED)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full task list of the scenario(s).
    Run(CommonArgs),
    /// Run the validation tasks of the scenario(s).
    Validate(CommonArgs),
    /// Run the splitting tasks of the scenario(s).
    Split(CommonArgs),
    /// Run the defect tasks of the scenario(s).
    Delta(CommonArgs),
    /// Run the splitting-chain tasks of the scenario(s).
    Descend(CommonArgs),
    /// Run the series-expansion tasks of the scenario(s).
    Expand(CommonArgs),
    /// Run the height-pairing tasks of the scenario(s).
    Heights(CommonArgs),
    /// Run the ratio-space tasks of the scenario(s).
    Ratio(CommonArgs),
    /// Run the eigenvector tasks of the scenario(s).
    Eigen(CommonArgs),
    /// Run the built-in generator-driven property suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Parser)]
#[command(name = "mslab", version, about = "Exact computations with weight filtrations, splittings, and height pairings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn default_order() -> i64 {
    std::env::var("MSLAB_ORDER")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ORDER)
}

fn render(report: &Value, format: FormatArg) -> String {
    match format {
        FormatArg::Json => {
            serde_json::to_string_pretty(report).expect("report serializes")
        }
        FormatArg::Text => {
            let mut out = String::new();
            render_text(report, 0, &mut out);
            out
        }
    }
}

fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_text(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {val}\n")),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {item}\n")),
                }
            }
        }
        _ => out.push_str(&format!("{pad}{v}\n")),
    }
}

/// Write the report, tolerating a closed pipe on the read side.
fn print_report(text: &str) {
    use std::io::Write;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let _ = writeln!(lock, "{text}");
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };

    let (common, only): (&CommonArgs, Option<TaskKind>) = match &cli.command {
        Command::Run(a) => (a, None),
        Command::Validate(a) => (a, Some(TaskKind::Validate)),
        Command::Split(a) => (a, Some(TaskKind::Split)),
        Command::Delta(a) => (a, Some(TaskKind::Delta)),
        Command::Descend(a) => (a, Some(TaskKind::Descend)),
        Command::Expand(a) => (a, Some(TaskKind::Expand)),
        Command::Heights(a) => (a, Some(TaskKind::Heights)),
        Command::Ratio(a) => (a, Some(TaskKind::Ratio)),
        Command::Eigen(a) => (a, Some(TaskKind::Eigen)),
        Command::Selftest(a) => {
            let order = a.order.unwrap_or_else(default_order);
            let report = selftest(order, a.seed);
            let pass = report.get("pass").and_then(Value::as_bool).unwrap_or(false);
            let wrapped = json!({
                "tool": format!("mslab {TOOL_VERSION}"),
                "schema": SCHEMA_VERSION,
                "selftest": report,
            });
            print_report(&render(&wrapped, a.format));
            return if pass { 0 } else { 1 };
        }
    };

    let opts = RunOptions {
        order: common.order.unwrap_or_else(default_order),
        flavor: common.flavor.map(|f| {
            match f {
                FlavorArg::Standard => "standard",
                FlavorArg::Narrower => "narrower",
            }
            .to_string()
        }),
        seed: common.seed,
        only,
    };
    let (report, severity) = run_path(&common.input, &opts);
    print_report(&render(&report, common.format));
    severity
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(name: &str) -> Vec<u8> {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name);
        std::fs::read(path).expect("corpus file")
    }

    #[test]
    fn bundled_ht2_scenario_passes_with_exact_defect() {
        let bytes = corpus("ht2.json");
        let (report, severity) = run_scenario_bytes("ht2.json", &bytes, &RunOptions::default());
        assert_eq!(severity, 0, "{report}");
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("5/2"), "defect value missing: {text}");
    }

    #[test]
    fn nonexistent_filtration_exits_with_code_two() {
        let bytes = corpus("notexists.json");
        let (report, severity) =
            run_scenario_bytes("notexists.json", &bytes, &RunOptions::default());
        assert_eq!(severity, 2);
        assert_eq!(report["status"], "not-exists");
        assert!(report["tasks"][0]["error"].as_str().unwrap().contains("does not exist"));
    }

    #[test]
    fn malformed_file_exits_with_code_three() {
        let bytes = corpus("malformed.json");
        let (_, severity) =
            run_scenario_bytes("malformed.json", &bytes, &RunOptions::default());
        assert_eq!(severity, 3);
    }

    #[test]
    fn reports_are_byte_deterministic() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
        let opts = RunOptions::default();
        let (a, sa) = run_path(&dir, &opts);
        let (b, sb) = run_path(&dir, &opts);
        assert_eq!(sa, sb);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn scenario_serialization_is_idempotent() {
        let bytes = corpus("ht2.json");
        let sc: Scenario = serde_json::from_slice(&bytes).unwrap();
        let once = serde_json::to_string(&sc).unwrap();
        let again: Scenario = serde_json::from_str(&once).unwrap();
        assert_eq!(once, serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn selftest_passes_at_default_order() {
        let report = selftest(DEFAULT_ORDER, SELFTEST_SEED);
        assert_eq!(report["pass"], true, "{report}");
    }

    #[test]
    fn selftest_flags_vacuous_bound_checks_at_low_order() {
        let report = selftest(2, SELFTEST_SEED);
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("vacuous:"), "{text}");
    }

    #[test]
    fn subcommand_filter_runs_only_matching_tasks() {
        let bytes = corpus("ht2.json");
        let opts = RunOptions { only: Some(TaskKind::Delta), ..RunOptions::default() };
        let (report, severity) = run_scenario_bytes("ht2.json", &bytes, &opts);
        assert_eq!(severity, 0);
        assert_eq!(report["tasks"].as_array().unwrap().len(), 1);
        assert_eq!(report["tasks"][0]["task"], "delta");
    }
}
