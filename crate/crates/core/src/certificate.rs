//! Barrier-like certificates: candidate functions, pointwise checking of the
//! six conditions, and construction from solved value fields.
//!
//! Every condition is a finite list of clauses `lhs <= rhs` evaluated at
//! classified points; the slack of a clause is `rhs - lhs`. A report passes
//! when no slack is below `-tolerance`. Results are only as strong as the
//! point set: they are validated on the supplied points, not proved on `R^n`.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dp::{self, Assumption1Report, DpError, Grid, Objective, Solution, TransitionKernel, ValueField};
use crate::model::{ModelError, SystemModel};
use crate::regions::{BoxRegion, RegionError, RegionSpec, StateClass};

/// Default absolute slack tolerance for clause checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
const MAX_WITNESSES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("certificate value is not finite at {0:?}")]
    NonFinite(Vec<f64>),
    #[error("invalid certificate: {0}")]
    Invalid(String),
    #[error("invalid condition: {0}")]
    Condition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error("missing solved field: {0}")]
    MissingField(&'static str),
    #[error(
        "Assumption 1 fails (sup stay probability {sup_stay_prob}); refusing the undiscounted lower-bound certificate"
    )]
    Assumption1Violated { sup_stay_prob: f64 },
    #[error("certificate violates {violations} structural clause instance(s); no threshold")]
    NotCertified {
        violations: usize,
        report: Box<CheckReport>,
    },
    #[error("no discount factor up to {max_gamma} reaches the threshold {threshold} (best value {best})")]
    DiscountNotFound { threshold: f64, max_gamma: f64, best: f64 },
    #[error("certificate text line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Polynomial `Σ_k c_k Π_i x_i^{e_ki}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    exponents: Vec<Vec<u32>>,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(n: usize, exponents: Vec<Vec<u32>>, coeffs: Vec<f64>) -> Result<Self, CertError> {
        if exponents.len() != coeffs.len() {
            return Err(CertError::Invalid(format!(
                "{} monomials but {} coefficients",
                exponents.len(),
                coeffs.len()
            )));
        }
        if let Some(e) = exponents.iter().find(|e| e.len() != n) {
            return Err(CertError::Invalid(format!("exponent {e:?} does not have {n} entries")));
        }
        let mut seen = HashSet::new();
        if let Some(e) = exponents.iter().find(|e| !seen.insert(*e)) {
            return Err(CertError::Invalid(format!("duplicate monomial {e:?}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CertError::Invalid("non-finite coefficient".into()));
        }
        Ok(Polynomial { n, exponents, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| c * monomial(e, x))
            .sum()
    }

    /// Every exponent vector over `n` variables with total degree `<= degree`,
    /// constant monomial first, then by increasing degree.
    pub fn monomials_up_to(n: usize, degree: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for total in 0..=degree {
            let mut current = vec![0u32; n];
            push_compositions(total, 0, &mut current, &mut out);
        }
        out
    }
}

fn push_compositions(remaining: u32, dim: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if dim + 1 == current.len() {
        current[dim] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[dim] = k;
        push_compositions(remaining - k, dim + 1, current, out);
    }
    current[dim] = 0;
}

pub fn monomial(exponents: &[u32], x: &[f64]) -> f64 {
    exponents
        .iter()
        .zip(x)
        .map(|(&e, &v)| if e == 0 { 1.0 } else { v.powi(e as i32) })
        .product()
}

/// Candidate function `v` (or the auxiliary `w`).
#[derive(Debug, Clone, PartialEq)]
pub enum CertFunction {
    Grid(ValueField),
    Polynomial(Polynomial),
    Constant(f64),
}

impl CertFunction {
    pub fn eval(&self, x: &[f64]) -> Result<f64, CertError> {
        let v = match self {
            CertFunction::Grid(f) => f.eval(x),
            CertFunction::Polynomial(p) => p.eval(x),
            CertFunction::Constant(c) => *c,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CertError::NonFinite(x.to_vec()))
        }
    }

    /// `scale * self`.
    pub fn scaled(&self, scale: f64) -> CertFunction {
        match self {
            CertFunction::Grid(f) => CertFunction::Grid(f.affine(scale, 0.0)),
            CertFunction::Polynomial(p) => CertFunction::Polynomial(Polynomial {
                n: p.n,
                exponents: p.exponents.clone(),
                coeffs: p.coeffs.iter().map(|c| c * scale).collect(),
            }),
            CertFunction::Constant(c) => CertFunction::Constant(c * scale),
        }
    }
}

/// Condition names, as used on the command line and in certificate files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionTag {
    SafetyLower,
    UnsafeReachUpper,
    RaLowerA1,
    RaLowerDiscounted,
    LivenessUpperDiscounted,
    RaLowerPair,
}

impl ConditionTag {
    pub const ALL: [ConditionTag; 6] = [
        ConditionTag::SafetyLower,
        ConditionTag::UnsafeReachUpper,
        ConditionTag::RaLowerA1,
        ConditionTag::RaLowerDiscounted,
        ConditionTag::LivenessUpperDiscounted,
        ConditionTag::RaLowerPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionTag::SafetyLower => "safety-lower",
            ConditionTag::UnsafeReachUpper => "unsafe-reach-upper",
            ConditionTag::RaLowerA1 => "ra-lower-a1",
            ConditionTag::RaLowerDiscounted => "ra-lower-discounted",
            ConditionTag::LivenessUpperDiscounted => "liveness-upper-discounted",
            ConditionTag::RaLowerPair => "ra-lower-pair",
        }
    }

    /// True when the x0 clause bounds `v(x0)` from above.
    pub fn x0_upper(self) -> bool {
        matches!(self, ConditionTag::SafetyLower | ConditionTag::UnsafeReachUpper)
    }

    /// True for the conditions whose `v` is an exit-type function
    /// (value one outside `X`).
    pub fn exit_type(self) -> bool {
        matches!(self, ConditionTag::SafetyLower | ConditionTag::LivenessUpperDiscounted)
    }

    /// Whether the drift clause applies at a point of class `class`:
    /// all of `X` for exit-type kinds, `X \ X_r` otherwise.
    pub fn drift_applies(self, class: StateClass) -> bool {
        if self.exit_type() {
            class.in_safe()
        } else {
            class == StateClass::SafeNonTarget
        }
    }
}

impl fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionTag {
    type Err = CertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConditionTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| CertError::Condition(format!("unknown condition `{s}`")))
    }
}

/// One barrier-like condition with its parameters.
///
/// | kind | x0 clause | on `X\X_r` (or `X`) | on `X_r` | off `X` |
/// |---|---|---|---|---|
/// | SafetyLower | `v <= 1-ε1` | `v >= E[v∘f]` on `X` | | `v >= 1`; `v >= 0` everywhere |
/// | UnsafeReachUpper | `v <= ε1'` | `v >= E[v∘f]` | `v >= 1` | `v >= 0` |
/// | RaLowerA1 | `v >= ε2` | `v <= E[v∘f]` | `v <= 1` | `v <= 0` |
/// | RaLowerDiscounted | `v >= ε2` | `v <= γ E[v∘f]` | `v <= 1` | `v <= 0` |
/// | LivenessUpperDiscounted | `v >= ε1` | `v <= γ E[v∘f]` on `X` | | `v <= 1` |
/// | RaLowerPair | `v >= ε2` | `v <= E[v∘f]`, `v <= E[w∘f] - w` | `v <= 1` | `v <= 0` on `Ω\X` |
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionKind {
    SafetyLower {
        eps1: f64,
    },
    UnsafeReachUpper {
        eps1: f64,
    },
    RaLowerA1 {
        eps2: f64,
    },
    RaLowerDiscounted {
        eps2: f64,
        gamma: f64,
    },
    LivenessUpperDiscounted {
        eps1: f64,
        gamma: f64,
    },
    RaLowerPair {
        eps2: f64,
        omega: BoxRegion,
        w: CertFunction,
    },
}

impl ConditionKind {
    pub fn tag(&self) -> ConditionTag {
        match self {
            ConditionKind::SafetyLower { .. } => ConditionTag::SafetyLower,
            ConditionKind::UnsafeReachUpper { .. } => ConditionTag::UnsafeReachUpper,
            ConditionKind::RaLowerA1 { .. } => ConditionTag::RaLowerA1,
            ConditionKind::RaLowerDiscounted { .. } => ConditionTag::RaLowerDiscounted,
            ConditionKind::LivenessUpperDiscounted { .. } => ConditionTag::LivenessUpperDiscounted,
            ConditionKind::RaLowerPair { .. } => ConditionTag::RaLowerPair,
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            ConditionKind::SafetyLower { eps1 }
            | ConditionKind::UnsafeReachUpper { eps1 }
            | ConditionKind::LivenessUpperDiscounted { eps1, .. } => *eps1,
            ConditionKind::RaLowerA1 { eps2 }
            | ConditionKind::RaLowerDiscounted { eps2, .. }
            | ConditionKind::RaLowerPair { eps2, .. } => *eps2,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            ConditionKind::RaLowerDiscounted { gamma, .. } | ConditionKind::LivenessUpperDiscounted { gamma, .. } => {
                Some(*gamma)
            }
            _ => None,
        }
    }

    pub fn with_threshold(&self, eps: f64) -> ConditionKind {
        let mut out = self.clone();
        match &mut out {
            ConditionKind::SafetyLower { eps1 }
            | ConditionKind::UnsafeReachUpper { eps1 }
            | ConditionKind::LivenessUpperDiscounted { eps1, .. } => *eps1 = eps,
            ConditionKind::RaLowerA1 { eps2 }
            | ConditionKind::RaLowerDiscounted { eps2, .. }
            | ConditionKind::RaLowerPair { eps2, .. } => *eps2 = eps,
        }
        out
    }

    pub fn validate(&self) -> Result<(), CertError> {
        let eps = self.threshold();
        if !(0.0..=1.0).contains(&eps) {
            return Err(CertError::Condition(format!("threshold {eps} outside [0, 1]")));
        }
        if let Some(g) = self.gamma() {
            if !(g > 0.0 && g < 1.0) {
                return Err(CertError::Condition(format!("gamma {g} outside (0, 1)")));
            }
        }
        Ok(())
    }

    /// Drift factor applied to `E[v∘f]`.
    fn drift_gamma(&self) -> f64 {
        self.gamma().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Clause {
    /// Threshold clause at an initial state.
    InitialState,
    /// `v` against `E[v∘f]` (possibly discounted).
    Drift,
    /// `v <= E[w∘f] - w`.
    PairDrift,
    /// Bound on `X_r`.
    Target,
    /// Bound off `X` (or on `Ω \ X`).
    Outside,
    /// `v >= 0` everywhere.
    NonNegative,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::InitialState => "initial-state",
            Clause::Drift => "drift",
            Clause::PairDrift => "pair-drift",
            Clause::Target => "target",
            Clause::Outside => "outside",
            Clause::NonNegative => "non-negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedPoint {
    pub x: Vec<f64>,
    pub class: StateClass,
}

/// Finite classified point set on which clauses are checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    points: Vec<ClassifiedPoint>,
}

impl PointSet {
    pub fn classify(regions: &RegionSpec, points: &[Vec<f64>]) -> Result<PointSet, CertError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(points.len());
        for x in points {
            if seen.insert(bits(x)) {
                out.push(ClassifiedPoint {
                    x: x.clone(),
                    class: regions.classify(x)?,
                });
            }
        }
        Ok(PointSet { points: out })
    }

    /// `points` plus the one-step images of those lying in `X`, so that
    /// `Ω \ X` is represented by the states the dynamics actually reach.
    pub fn with_images(model: &SystemModel, regions: &RegionSpec, points: &[Vec<f64>]) -> Result<PointSet, CertError> {
        let mut all = points.to_vec();
        for x in points {
            if regions.is_safe(x)? {
                all.extend(model.images(x)?.into_iter().map(|(_, y)| y));
            }
        }
        PointSet::classify(regions, &all)
    }

    /// Check and synthesis points for `tag`: grid nodes and `extra` points
    /// inside `X`, plus the one-step images of those where the drift clause
    /// applies. Exit-type kinds also get the off-`X` nodes and the halo,
    /// where `v >= 1` is imposed. States outside `X` that the process cannot
    /// reach before absorption play no role in the conditions and are left
    /// out.
    pub fn for_condition(
        model: &SystemModel,
        regions: &RegionSpec,
        tag: ConditionTag,
        grid: Option<&Grid>,
        extra: &[Vec<f64>],
    ) -> Result<PointSet, CertError> {
        let mut candidates = extra.to_vec();
        if let Some(g) = grid {
            candidates.extend(g.nodes());
            candidates.extend(g.halo());
        }
        let mut inside = Vec::new();
        let mut off = Vec::new();
        for x in candidates {
            if regions.is_safe(&x)? {
                inside.push(x);
            } else {
                off.push(x);
            }
        }
        let base = PointSet::classify(regions, &inside)?;
        let mut all = inside;
        for p in base.points() {
            if tag.drift_applies(p.class) {
                all.extend(model.images(&p.x)?.into_iter().map(|(_, y)| y));
            }
        }
        if tag.exit_type() {
            all.extend(off);
        }
        PointSet::classify(regions, &all)
    }

    pub fn points(&self) -> &[ClassifiedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, class: StateClass) -> usize {
        self.points.iter().filter(|p| p.class == class).count()
    }
}

fn bits(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub point: Vec<f64>,
    pub clause: Clause,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseSummary {
    pub clause: Clause,
    /// Smallest slack over the points where the clause applies.
    pub worst_slack: f64,
    pub worst_point: Vec<f64>,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub condition: ConditionTag,
    pub threshold: f64,
    pub passed: bool,
    pub tolerance: f64,
    pub clauses: Vec<ClauseSummary>,
    /// Worst violations first, capped.
    pub witnesses: Vec<Violation>,
    pub violation_count: usize,
    pub points_checked: usize,
    pub points_target: usize,
    pub points_safe_non_target: usize,
    pub points_unsafe: usize,
    /// Points outside `Ω` ignored by the pair condition.
    pub points_skipped: usize,
}

impl CheckReport {
    pub fn clause(&self, clause: Clause) -> Option<&ClauseSummary> {
        self.clauses.iter().find(|c| c.clause == clause)
    }

    pub fn min_slack(&self) -> f64 {
        self.clauses.iter().map(|c| c.worst_slack).fold(f64::INFINITY, f64::min)
    }

    /// Whether every clause other than the threshold clause holds.
    pub fn structural_passed(&self) -> bool {
        self.clauses
            .iter()
            .filter(|c| c.clause != Clause::InitialState)
            .all(|c| c.worst_slack >= -self.tolerance)
    }
}

struct Eval {
    clause: Clause,
    lhs: f64,
    rhs: f64,
    error: Option<String>,
}

impl Eval {
    fn le(clause: Clause, lhs: f64, rhs: f64) -> Eval {
        Eval {
            clause,
            lhs,
            rhs,
            error: None,
        }
    }

    fn failed(clause: Clause, e: CertError) -> Eval {
        Eval {
            clause,
            lhs: f64::NAN,
            rhs: f64::NAN,
            error: Some(e.to_string()),
        }
    }

    fn slack(&self) -> f64 {
        if self.error.is_some() {
            f64::NEG_INFINITY
        } else {
            self.rhs - self.lhs
        }
    }
}

fn expect_cert(model: &SystemModel, f: &CertFunction, x: &[f64]) -> Result<f64, CertError> {
    let mut acc = 0.0;
    for (th, p) in model.dist().iter() {
        let y = model.step(x, th)?;
        acc += p * f.eval(&y)?;
    }
    Ok(acc)
}

fn x0_clause(kind: &ConditionKind, cert: &CertFunction, x0: &[f64]) -> Eval {
    let v = match cert.eval(x0) {
        Ok(v) => v,
        Err(e) => return Eval::failed(Clause::InitialState, e),
    };
    let eps = kind.threshold();
    match kind.tag() {
        ConditionTag::SafetyLower => Eval::le(Clause::InitialState, v, 1.0 - eps),
        ConditionTag::UnsafeReachUpper => Eval::le(Clause::InitialState, v, eps),
        _ => Eval::le(Clause::InitialState, eps, v),
    }
}

fn point_clauses(model: &SystemModel, kind: &ConditionKind, cert: &CertFunction, p: &ClassifiedPoint) -> Vec<Eval> {
    let mut out = Vec::new();
    let tag = kind.tag();
    if let ConditionKind::RaLowerPair { omega, .. } = kind {
        if !omega.contains(&p.x) {
            return out;
        }
    }
    let v = match cert.eval(&p.x) {
        Ok(v) => v,
        Err(e) => {
            out.push(Eval::failed(Clause::Drift, e));
            return out;
        }
    };
    if tag.drift_applies(p.class) {
        match expect_cert(model, cert, &p.x) {
            Ok(e) => {
                let ge = kind.drift_gamma() * e;
                if tag.x0_upper() {
                    out.push(Eval::le(Clause::Drift, ge, v));
                } else {
                    out.push(Eval::le(Clause::Drift, v, ge));
                }
            }
            Err(e) => out.push(Eval::failed(Clause::Drift, e)),
        }
        if let ConditionKind::RaLowerPair { w, .. } = kind {
            let pair = w.eval(&p.x).and_then(|wx| Ok(expect_cert(model, w, &p.x)? - wx));
            match pair {
                Ok(rhs) => out.push(Eval::le(Clause::PairDrift, v, rhs)),
                Err(e) => out.push(Eval::failed(Clause::PairDrift, e)),
            }
        }
    }
    match (tag, p.class) {
        (ConditionTag::SafetyLower, StateClass::Unsafe) => out.push(Eval::le(Clause::Outside, 1.0, v)),
        (ConditionTag::UnsafeReachUpper, StateClass::Target) => out.push(Eval::le(Clause::Target, 1.0, v)),
        (ConditionTag::UnsafeReachUpper, StateClass::Unsafe) => out.push(Eval::le(Clause::Outside, 0.0, v)),
        (ConditionTag::LivenessUpperDiscounted, StateClass::Unsafe) => out.push(Eval::le(Clause::Outside, v, 1.0)),
        (ConditionTag::SafetyLower | ConditionTag::LivenessUpperDiscounted, _) => {}
        (_, StateClass::Target) => out.push(Eval::le(Clause::Target, v, 1.0)),
        (_, StateClass::Unsafe) => out.push(Eval::le(Clause::Outside, v, 0.0)),
        (_, StateClass::SafeNonTarget) => {}
    }
    if tag == ConditionTag::SafetyLower {
        out.push(Eval::le(Clause::NonNegative, 0.0, v));
    }
    out
}

/// Evaluates every clause of `kind` at every applicable point and at each
/// initial state in `x0s`.
pub fn check_condition(
    model: &SystemModel,
    cert: &CertFunction,
    kind: &ConditionKind,
    x0s: &[Vec<f64>],
    points: &PointSet,
    tolerance: f64,
) -> Result<CheckReport, CertError> {
    kind.validate()?;
    if x0s.is_empty() {
        return Err(CertError::Condition("at least one initial state is required".into()));
    }
    let per_point: Vec<Vec<Eval>> = points
        .points
        .par_iter()
        .map(|p| point_clauses(model, kind, cert, p))
        .collect();
    let mut evals: Vec<(Vec<f64>, Eval)> = x0s.iter().map(|x0| (x0.clone(), x0_clause(kind, cert, x0))).collect();
    let mut skipped = 0;
    for (p, es) in points.points.iter().zip(per_point) {
        if es.is_empty() {
            if matches!(kind, ConditionKind::RaLowerPair { omega, .. } if !omega.contains(&p.x)) {
                skipped += 1;
            }
            continue;
        }
        evals.extend(es.into_iter().map(|e| (p.x.clone(), e)));
    }

    let mut clauses: Vec<ClauseSummary> = Vec::new();
    let mut violations: Vec<Violation> = Vec::new();
    for (x, e) in &evals {
        let slack = e.slack();
        match clauses.iter_mut().find(|c| c.clause == e.clause) {
            Some(c) => {
                c.evaluated += 1;
                if slack < c.worst_slack {
                    c.worst_slack = slack;
                    c.worst_point = x.clone();
                }
            }
            None => clauses.push(ClauseSummary {
                clause: e.clause,
                worst_slack: slack,
                worst_point: x.clone(),
                evaluated: 1,
            }),
        }
        if slack < -tolerance {
            violations.push(Violation {
                point: x.clone(),
                clause: e.clause,
                lhs: e.lhs,
                rhs: e.rhs,
                slack,
                error: e.error.clone(),
            });
        }
    }
    clauses.sort_by_key(|c| c.clause);
    let violation_count = violations.len();
    violations.sort_by(|a, b| a.slack.total_cmp(&b.slack));
    violations.truncate(MAX_WITNESSES);
    Ok(CheckReport {
        condition: kind.tag(),
        threshold: kind.threshold(),
        passed: violation_count == 0,
        tolerance,
        clauses,
        witnesses: violations,
        violation_count,
        points_checked: points.len() - skipped,
        points_target: points.count(StateClass::Target),
        points_safe_non_target: points.count(StateClass::SafeNonTarget),
        points_unsafe: points.count(StateClass::Unsafe),
        points_skipped: skipped,
    })
}

/// The extremal threshold at which `cert` certifies `kind` at every `x0`:
/// `1 - max v(x0)` for SafetyLower, `max v(x0)` for UnsafeReachUpper and
/// `min v(x0)` for the lower-bound kinds, clamped to `[0, 1]`.
pub fn best_threshold(
    model: &SystemModel,
    cert: &CertFunction,
    kind: &ConditionKind,
    x0s: &[Vec<f64>],
    points: &PointSet,
    tolerance: f64,
) -> Result<f64, CertError> {
    let neutral = kind.with_threshold(if kind.tag() == ConditionTag::UnsafeReachUpper {
        1.0
    } else {
        0.0
    });
    let report = check_condition(model, cert, &neutral, x0s, points, tolerance)?;
    if !report.structural_passed() {
        let violations = report
            .witnesses
            .iter()
            .filter(|w| w.clause != Clause::InitialState)
            .count();
        return Err(CertError::NotCertified {
            violations,
            report: Box::new(report),
        });
    }
    let values = x0s.iter().map(|x| cert.eval(x)).collect::<Result<Vec<_>, _>>()?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = match kind.tag() {
        ConditionTag::SafetyLower => 1.0 - max,
        ConditionTag::UnsafeReachUpper => max,
        _ => min,
    };
    Ok(eps.clamp(0.0, 1.0))
}

/// Solved value fields available for certificate construction.
#[derive(Debug, Clone, Default)]
pub struct SolvedFields {
    /// Exit probability `V = 1 - P(S)`.
    pub exit: Option<ValueField>,
    /// Reach-avoid probability.
    pub reach: Option<ValueField>,
    /// Discounted reach-avoid value with its discount factor.
    pub discounted: Option<(f64, ValueField)>,
    /// Discounted exit value with its discount factor.
    pub discounted_exit: Option<(f64, ValueField)>,
    pub assumption1: Option<Assumption1Report>,
}

/// Certificate built from a value function.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub tag: ConditionTag,
    pub v: CertFunction,
    pub w: Option<CertFunction>,
    pub gamma: Option<f64>,
}

impl Extracted {
    /// The condition this certificate is meant for at threshold `eps`.
    /// The pair condition needs `omega`.
    pub fn condition(&self, eps: f64, omega: Option<BoxRegion>) -> Result<ConditionKind, CertError> {
        let gamma = || self.gamma.ok_or(CertError::Condition("missing discount factor".into()));
        Ok(match self.tag {
            ConditionTag::SafetyLower => ConditionKind::SafetyLower { eps1: eps },
            ConditionTag::UnsafeReachUpper => ConditionKind::UnsafeReachUpper { eps1: eps },
            ConditionTag::RaLowerA1 => ConditionKind::RaLowerA1 { eps2: eps },
            ConditionTag::RaLowerDiscounted => ConditionKind::RaLowerDiscounted {
                eps2: eps,
                gamma: gamma()?,
            },
            ConditionTag::LivenessUpperDiscounted => ConditionKind::LivenessUpperDiscounted {
                eps1: eps,
                gamma: gamma()?,
            },
            ConditionTag::RaLowerPair => ConditionKind::RaLowerPair {
                eps2: eps,
                omega: omega.ok_or(CertError::Condition("the pair condition needs an Ω box".into()))?,
                w: self.w.clone().ok_or(CertError::Condition("missing w".into()))?,
            },
        })
    }
}

/// `γ1 = γ0 / (1 - γ0)`, the smallest `γ1` with `γ1 / (1 + γ1) >= γ0`.
pub fn pair_gamma1(gamma0: f64) -> f64 {
    gamma0 / (1.0 - gamma0)
}

fn with_outside(field: &ValueField, outside: f64) -> Result<CertFunction, CertError> {
    Ok(CertFunction::Grid(ValueField::new(
        field.grid().clone(),
        field.values().to_vec(),
        outside,
    )?))
}

/// Builds the certificate whose existence the converse direction of each
/// condition guarantees, from the corresponding value function.
///
/// Exit-type certificates hold one outside the grid box, the others zero.
pub fn extract_certificate(fields: &SolvedFields, tag: ConditionTag) -> Result<Extracted, CertError> {
    let plain = |v: CertFunction| Extracted {
        tag,
        v,
        w: None,
        gamma: None,
    };
    match tag {
        ConditionTag::SafetyLower => {
            let f = fields.exit.as_ref().ok_or(CertError::MissingField("exit"))?;
            Ok(plain(with_outside(f, 1.0)?))
        }
        ConditionTag::UnsafeReachUpper => {
            let f = fields.reach.as_ref().ok_or(CertError::MissingField("reach"))?;
            Ok(plain(with_outside(f, 0.0)?))
        }
        ConditionTag::RaLowerA1 => {
            let report = fields
                .assumption1
                .as_ref()
                .ok_or(CertError::MissingField("assumption1"))?;
            if !report.holds {
                return Err(CertError::Assumption1Violated {
                    sup_stay_prob: report.sup_stay_prob,
                });
            }
            let f = fields.reach.as_ref().ok_or(CertError::MissingField("reach"))?;
            Ok(plain(with_outside(f, 0.0)?))
        }
        ConditionTag::RaLowerDiscounted => {
            let (g, f) = fields
                .discounted
                .as_ref()
                .ok_or(CertError::MissingField("discounted"))?;
            Ok(Extracted {
                tag,
                v: with_outside(f, 0.0)?,
                w: None,
                gamma: Some(*g),
            })
        }
        ConditionTag::LivenessUpperDiscounted => {
            let (g, f) = fields
                .discounted_exit
                .as_ref()
                .ok_or(CertError::MissingField("discounted_exit"))?;
            Ok(Extracted {
                tag,
                v: with_outside(f, 1.0)?,
                w: None,
                gamma: Some(*g),
            })
        }
        ConditionTag::RaLowerPair => {
            let (g0, f) = fields
                .discounted
                .as_ref()
                .ok_or(CertError::MissingField("discounted"))?;
            if !(*g0 > 0.0 && *g0 < 1.0) {
                return Err(CertError::Condition(format!("gamma0 {g0} outside (0, 1)")));
            }
            let v = with_outside(f, 0.0)?;
            let w = v.scaled(pair_gamma1(*g0));
            Ok(Extracted {
                tag,
                v,
                w: Some(w),
                gamma: Some(*g0),
            })
        }
    }
}

/// Discount factors tried by [`find_discount`], in increasing order.
pub fn discount_ladder() -> Vec<f64> {
    let mut out = vec![0.5, 0.75];
    out.extend((1..=9).flat_map(|k| {
        let s = 10f64.powi(-k);
        [1.0 - 5.0 * s, 1.0 - s]
    }));
    out.retain(|g| *g >= 0.5);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Smallest factor on [`discount_ladder`] whose discounted value (reach or
/// exit, per `exit`) reaches `threshold` at every initial state.
pub fn find_discount(
    kernel: &TransitionKernel,
    exit: bool,
    x0s: &[Vec<f64>],
    threshold: f64,
    tol: f64,
) -> Result<(f64, Solution), CertError> {
    let mut best = f64::NEG_INFINITY;
    let mut last = 0.0;
    for g in discount_ladder() {
        let objective = if exit {
            Objective::DiscountedExit(g)
        } else {
            Objective::Discounted(g)
        };
        let sol = dp::solve(kernel, objective, tol, dp::DEFAULT_MAX_ITER)?;
        let worst = x0s.iter().map(|x| sol.field.eval(x)).fold(f64::INFINITY, f64::min);
        best = best.max(worst);
        last = g;
        if worst >= threshold {
            return Ok((g, sol));
        }
    }
    Err(CertError::DiscountNotFound {
        threshold,
        max_gamma: last,
        best,
    })
}

/// Text form of a certificate together with the condition it targets.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateFile {
    pub condition: ConditionKind,
    pub v: CertFunction,
}

const MAGIC: &str = "barrierkit-certificate 1";

fn write_floats(out: &mut String, key: &str, xs: &[f64]) {
    out.push_str(key);
    for x in xs {
        let _ = write!(out, " {x:?}");
    }
    out.push('\n');
}

fn write_function(out: &mut String, name: &str, f: &CertFunction) {
    let _ = writeln!(out, "function {name}");
    match f {
        CertFunction::Constant(c) => {
            let _ = writeln!(out, "constant {c:?}");
        }
        CertFunction::Polynomial(p) => {
            let _ = writeln!(out, "polynomial {}", p.n);
            for (e, c) in p.exponents.iter().zip(&p.coeffs) {
                let _ = write!(out, "term {c:?}");
                for k in e {
                    let _ = write!(out, " {k}");
                }
                out.push('\n');
            }
        }
        CertFunction::Grid(field) => {
            let g = field.grid();
            out.push_str("grid\n");
            write_floats(out, "lower", g.lower());
            write_floats(out, "upper", g.upper());
            out.push_str("cells");
            for c in g.cells() {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
            let _ = writeln!(out, "outside {:?}", field.outside_default());
            write_floats(out, "values", field.values());
        }
    }
    out.push_str("end\n");
}

impl CertificateFile {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\n");
        let c = &self.condition;
        let _ = writeln!(out, "condition {}", c.tag());
        let _ = writeln!(out, "threshold {:?}", c.threshold());
        if let Some(g) = c.gamma() {
            let _ = writeln!(out, "gamma {g:?}");
        }
        if let ConditionKind::RaLowerPair { omega, .. } = c {
            write_floats(&mut out, "omega-lower", &omega.lower);
            write_floats(&mut out, "omega-upper", &omega.upper);
        }
        write_function(&mut out, "v", &self.v);
        if let ConditionKind::RaLowerPair { w, .. } = c {
            write_function(&mut out, "w", w);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<CertificateFile, CertError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();
        let err = |line: usize, message: String| CertError::Format { line, message };
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            Some((i, l)) => return Err(err(i, format!("expected `{MAGIC}`, found `{l}`"))),
            None => return Err(err(0, "empty certificate".into())),
        }
        let mut tag = None;
        let mut threshold = None;
        let mut gamma = None;
        let mut omega_lower = None;
        let mut omega_upper = None;
        let mut functions: Vec<(String, CertFunction)> = Vec::new();
        while let Some((i, line)) = lines.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "condition" => tag = Some(rest.trim().parse::<ConditionTag>().map_err(|e| err(i, e.to_string()))?),
                "threshold" => threshold = Some(parse_f64(rest, i)?),
                "gamma" => gamma = Some(parse_f64(rest, i)?),
                "omega-lower" => omega_lower = Some(parse_f64s(rest, i)?),
                "omega-upper" => omega_upper = Some(parse_f64s(rest, i)?),
                "function" => {
                    let name = rest.trim().to_string();
                    let f = parse_function(&mut lines, i)?;
                    functions.push((name, f));
                }
                other => return Err(err(i, format!("unknown key `{other}`"))),
            }
        }
        let tag = tag.ok_or_else(|| err(0, "missing `condition`".into()))?;
        let eps = threshold.ok_or_else(|| err(0, "missing `threshold`".into()))?;
        let take = |name: &str| functions.iter().find(|(n, _)| n == name).map(|(_, f)| f.clone());
        let v = take("v").ok_or_else(|| err(0, "missing `function v`".into()))?;
        let need_gamma = || gamma.ok_or_else(|| err(0, "missing `gamma`".into()));
        let condition = match tag {
            ConditionTag::SafetyLower => ConditionKind::SafetyLower { eps1: eps },
            ConditionTag::UnsafeReachUpper => ConditionKind::UnsafeReachUpper { eps1: eps },
            ConditionTag::RaLowerA1 => ConditionKind::RaLowerA1 { eps2: eps },
            ConditionTag::RaLowerDiscounted => ConditionKind::RaLowerDiscounted {
                eps2: eps,
                gamma: need_gamma()?,
            },
            ConditionTag::LivenessUpperDiscounted => ConditionKind::LivenessUpperDiscounted {
                eps1: eps,
                gamma: need_gamma()?,
            },
            ConditionTag::RaLowerPair => {
                let lower = omega_lower.ok_or_else(|| err(0, "missing `omega-lower`".into()))?;
                let upper = omega_upper.ok_or_else(|| err(0, "missing `omega-upper`".into()))?;
                ConditionKind::RaLowerPair {
                    eps2: eps,
                    omega: BoxRegion::new(lower, upper)?,
                    w: take("w").ok_or_else(|| err(0, "missing `function w`".into()))?,
                }
            }
        };
        Ok(CertificateFile { condition, v })
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64, CertError> {
    s.trim().parse::<f64>().map_err(|e| CertError::Format {
        line,
        message: format!("bad number `{}`: {e}", s.trim()),
    })
}

fn parse_f64s(s: &str, line: usize) -> Result<Vec<f64>, CertError> {
    s.split_whitespace().map(|t| parse_f64(t, line)).collect()
}

fn parse_function<'a, I>(lines: &mut std::iter::Peekable<I>, start: usize) -> Result<CertFunction, CertError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let err = |line: usize, message: String| CertError::Format { line, message };
    let (i, head) = lines.next().ok_or_else(|| err(start, "function body missing".into()))?;
    let (kind, rest) = head.split_once(' ').unwrap_or((head, ""));
    let f = match kind {
        "constant" => CertFunction::Constant(parse_f64(rest, i)?),
        "polynomial" => {
            let n: usize = rest.trim().parse().map_err(|_| err(i, "bad dimension".into()))?;
            let mut exps = Vec::new();
            let mut coeffs = Vec::new();
            while let Some((j, l)) = lines.peek().copied() {
                let Some(body) = l.strip_prefix("term ") else { break };
                lines.next();
                let mut parts = body.split_whitespace();
                coeffs.push(parse_f64(parts.next().unwrap_or(""), j)?);
                exps.push(
                    parts
                        .map(|t| t.parse::<u32>().map_err(|_| err(j, format!("bad exponent `{t}`"))))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            CertFunction::Polynomial(Polynomial::new(n, exps, coeffs)?)
        }
        "grid" => {
            let mut lower = None;
            let mut upper = None;
            let mut cells = None;
            let mut outside = None;
            let mut values = None;
            while let Some((j, l)) = lines.peek().copied() {
                let (key, rest) = l.split_once(' ').unwrap_or((l, ""));
                match key {
                    "lower" => lower = Some(parse_f64s(rest, j)?),
                    "upper" => upper = Some(parse_f64s(rest, j)?),
                    "cells" => {
                        cells = Some(
                            rest.split_whitespace()
                                .map(|t| t.parse::<usize>().map_err(|_| err(j, format!("bad cell count `{t}`"))))
                                .collect::<Result<Vec<_>, _>>()?,
                        )
                    }
                    "outside" => outside = Some(parse_f64(rest, j)?),
                    "values" => values = Some(parse_f64s(rest, j)?),
                    _ => break,
                }
                lines.next();
            }
            let missing = |k: &str| err(i, format!("grid function missing `{k}`"));
            let grid = Grid::new(
                lower.ok_or_else(|| missing("lower"))?,
                upper.ok_or_else(|| missing("upper"))?,
                cells.ok_or_else(|| missing("cells"))?,
            )?;
            CertFunction::Grid(ValueField::new(
                grid,
                values.ok_or_else(|| missing("values"))?,
                outside.ok_or_else(|| missing("outside"))?,
            )?)
        }
        other => return Err(err(i, format!("unknown function representation `{other}`"))),
    };
    match lines.next() {
        Some((_, "end")) => Ok(f),
        Some((j, l)) => Err(err(j, format!("expected `end`, found `{l}`"))),
        None => Err(err(i, "missing `end`".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{build_kernel, check_assumption1, solve_reach_avoid, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::model::DisturbanceDist;
    use proptest::prelude::*;

    fn walk() -> SystemModel {
        let dist = DisturbanceDist::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        SystemModel::parse(1, 1, &["x1 + th1"], dist).unwrap()
    }

    fn gambler_regions() -> RegionSpec {
        RegionSpec::parse("x1 > 0 && x1 < 11", "x1 >= 10 && x1 < 11", 1).unwrap()
    }

    fn lattice() -> Grid {
        Grid::new(vec![-0.5], vec![12.5], vec![13]).unwrap()
    }

    fn gambler_fields() -> (SolvedFields, PointSet) {
        let k = build_kernel(&walk(), &lattice(), &gambler_regions()).unwrap();
        let reach = solve_reach_avoid(&k, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().field;
        let fields = SolvedFields {
            reach: Some(reach),
            assumption1: Some(check_assumption1(&k, 1e-9, DEFAULT_MAX_ITER)),
            ..Default::default()
        };
        let pts = PointSet::for_condition(
            &walk(),
            &gambler_regions(),
            ConditionTag::RaLowerA1,
            Some(&lattice()),
            &[],
        )
        .unwrap();
        (fields, pts)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(CertFunction::Constant(0.0).eval(&[5.0]).unwrap(), 0.0);
        let p = Polynomial::new(1, vec![vec![2]], vec![1.0]).unwrap();
        assert_eq!(CertFunction::Polynomial(p).eval(&[3.0]).unwrap(), 9.0);
        let f = ValueField::new(lattice(), (0..13).map(|i| i as f64 / 20.0).collect(), 0.0).unwrap();
        assert_eq!(CertFunction::Grid(f).eval(&[4.0]).unwrap(), 0.2);
        assert!(CertFunction::Constant(f64::NAN).eval(&[0.0]).is_err());
    }

    #[test]
    fn polynomial_validation_and_monomials() {
        assert!(Polynomial::new(1, vec![vec![1], vec![1]], vec![1.0, 2.0]).is_err());
        assert!(Polynomial::new(2, vec![vec![1]], vec![1.0]).is_err());
        assert!(Polynomial::new(1, vec![vec![1]], vec![1.0, 2.0]).is_err());
        let m = Polynomial::monomials_up_to(2, 2);
        assert_eq!(
            m,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(Polynomial::monomials_up_to(1, 0), vec![vec![0]]);
    }

    #[test]
    fn reach_field_certifies_lower_bound() {
        let (fields, pts) = gambler_fields();
        let ex = extract_certificate(&fields, ConditionTag::RaLowerA1).unwrap();
        let kind = ex.condition(0.29, None).unwrap();
        let r = check_condition(&walk(), &ex.v, &kind, &[vec![3.0]], &pts, DEFAULT_TOLERANCE).unwrap();
        assert!(r.passed, "{r:?}");
        let x0 = r.clause(Clause::InitialState).unwrap();
        assert!((x0.worst_slack - 0.01).abs() < 1e-6);
    }

    #[test]
    fn perturbed_reach_field_fails_drift() {
        let (fields, pts) = gambler_fields();
        let reach = fields.reach.unwrap();
        let values: Vec<f64> = reach
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| if (1..10).contains(&i) { v + 0.05 } else { *v })
            .collect();
        let v = CertFunction::Grid(ValueField::new(lattice(), values, 0.0).unwrap());
        let r = check_condition(
            &walk(),
            &v,
            &ConditionKind::RaLowerA1 { eps2: 0.29 },
            &[vec![3.0]],
            &pts,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert!(!r.passed);
        let drift = r.clause(Clause::Drift).unwrap();
        assert!(drift.worst_slack < -0.02);
        // Interior nodes next to absorption carry the violation.
        assert!(r.witnesses.iter().all(|w| w.clause == Clause::Drift));
        assert!(r.witnesses.iter().any(|w| w.point == vec![1.0] || w.point == vec![9.0]));
    }

    #[test]
    fn threshold_clause_checked_at_every_initial_state() {
        let (fields, pts) = gambler_fields();
        let ex = extract_certificate(&fields, ConditionTag::RaLowerA1).unwrap();
        let kind = ConditionKind::RaLowerA1 { eps2: 0.25 };
        let r = check_condition(&walk(), &ex.v, &kind, &[vec![3.0], vec![2.0]], &pts, DEFAULT_TOLERANCE).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witnesses[0].clause, Clause::InitialState);
        assert_eq!(r.witnesses[0].point, vec![2.0]);
    }

    #[test]
    fn best_threshold_examples() {
        let (fields, pts) = gambler_fields();
        let ex = extract_certificate(&fields, ConditionTag::RaLowerA1).unwrap();
        let eps = best_threshold(
            &walk(),
            &ex.v,
            &ConditionKind::RaLowerA1 { eps2: 0.0 },
            &[vec![3.0]],
            &pts,
            1e-6,
        )
        .unwrap();
        assert!((eps - 0.3).abs() < 1e-7);
        let bad = CertFunction::Constant(0.5);
        let err = best_threshold(
            &walk(),
            &bad,
            &ConditionKind::RaLowerA1 { eps2: 0.0 },
            &[vec![3.0]],
            &pts,
            1e-6,
        );
        assert!(matches!(err, Err(CertError::NotCertified { .. })));
    }

    #[test]
    fn zero_certificate_passes_lower_bounds_at_zero() {
        let (_, pts) = gambler_fields();
        let zero = CertFunction::Constant(0.0);
        for kind in [
            ConditionKind::RaLowerA1 { eps2: 0.0 },
            ConditionKind::RaLowerDiscounted { eps2: 0.0, gamma: 0.9 },
            ConditionKind::LivenessUpperDiscounted { eps1: 0.0, gamma: 0.9 },
            ConditionKind::RaLowerPair {
                eps2: 0.0,
                omega: BoxRegion::new(vec![-2.0], vec![14.0]).unwrap(),
                w: CertFunction::Constant(0.0),
            },
        ] {
            let r = check_condition(&walk(), &zero, &kind, &[vec![3.0]], &pts, 0.0).unwrap();
            assert!(r.passed, "{:?}", kind.tag());
        }
    }

    #[test]
    fn assumption1_failure_refuses_extraction() {
        let id = SystemModel::parse(1, 1, &["x1"], DisturbanceDist::degenerate(1)).unwrap();
        let k = build_kernel(&id, &lattice(), &gambler_regions()).unwrap();
        let fields = SolvedFields {
            reach: Some(solve_reach_avoid(&k, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().field),
            assumption1: Some(check_assumption1(&k, 1e-9, DEFAULT_MAX_ITER)),
            ..Default::default()
        };
        let err = extract_certificate(&fields, ConditionTag::RaLowerA1).unwrap_err();
        assert_eq!(err, CertError::Assumption1Violated { sup_stay_prob: 1.0 });
        // The upper-bound kind needs no assumption.
        assert!(extract_certificate(&fields, ConditionTag::UnsafeReachUpper).is_ok());
    }

    #[test]
    fn pair_gamma_identity() {
        assert_eq!(pair_gamma1(0.5), 1.0);
        let g1 = pair_gamma1(0.5);
        assert!(g1 / (1.0 + g1) >= 0.5);
        for g0 in [0.1, 0.3, 0.9, 0.999] {
            let g1 = pair_gamma1(g0);
            assert!((g1 / (1.0 + g1) - g0).abs() < 1e-12);
        }
    }

    #[test]
    fn condition_validation() {
        assert!(ConditionKind::RaLowerA1 { eps2: 1.5 }.validate().is_err());
        assert!(ConditionKind::RaLowerDiscounted { eps2: 0.5, gamma: 1.0 }
            .validate()
            .is_err());
        assert!(ConditionKind::LivenessUpperDiscounted { eps1: 0.5, gamma: 0.0 }
            .validate()
            .is_err());
        assert_eq!(
            "ra-lower-pair".parse::<ConditionTag>().unwrap(),
            ConditionTag::RaLowerPair
        );
        assert!("nope".parse::<ConditionTag>().is_err());
    }

    #[test]
    fn point_sets_follow_the_condition() {
        let (m, r, g) = (walk(), gambler_regions(), lattice());
        let extra = [vec![3.5]];
        // Nodes 0..=10 (0 as the image of 1), 3.5 and its images 2.5, 4.5.
        let pts = PointSet::for_condition(&m, &r, ConditionTag::RaLowerA1, Some(&g), &extra).unwrap();
        assert_eq!(pts.len(), 14);
        assert_eq!(pts.count(StateClass::Target), 1);
        assert_eq!(pts.count(StateClass::Unsafe), 1);
        // Exit kinds add 11 (image of 10), 12 and the halo -1, 13.
        let pts = PointSet::for_condition(&m, &r, ConditionTag::SafetyLower, Some(&g), &extra).unwrap();
        assert_eq!(pts.len(), 18);
        assert_eq!(pts.count(StateClass::Unsafe), 5);
    }

    #[test]
    fn text_format_rejects_garbage() {
        assert!(CertificateFile::from_text("").is_err());
        assert!(CertificateFile::from_text("hello").is_err());
        let missing_end = format!("{MAGIC}\ncondition ra-lower-a1\nthreshold 0.1\nfunction v\nconstant 0\n");
        assert!(CertificateFile::from_text(&missing_end).is_err());
        let no_gamma = format!("{MAGIC}\ncondition ra-lower-discounted\nthreshold 0.1\nfunction v\nconstant 0\nend\n");
        assert!(CertificateFile::from_text(&no_gamma).is_err());
    }

    fn arb_function() -> impl Strategy<Value = CertFunction> {
        prop_oneof![
            (-1e3f64..1e3).prop_map(CertFunction::Constant),
            prop::collection::vec(-10.0f64..10.0, 1..5).prop_map(|coeffs| {
                let exps = (0..coeffs.len() as u32).map(|k| vec![k, 1]).collect();
                CertFunction::Polynomial(Polynomial::new(2, exps, coeffs).unwrap())
            }),
            (prop::collection::vec(0.0f64..1.0, 6), 0.0f64..1.0).prop_map(|(values, outside)| {
                let g = Grid::new(vec![0.0, -1.0], vec![3.0, 1.5], vec![3, 2]).unwrap();
                CertFunction::Grid(ValueField::new(g, values, outside).unwrap())
            }),
        ]
    }

    proptest! {
        #[test]
        fn certificate_text_round_trips(v in arb_function(), w in arb_function(), eps in 0.0f64..1.0, gamma in 0.01f64..0.99, which in 0usize..6) {
            let omega = BoxRegion::new(vec![-1.0, -2.0], vec![4.0, 3.0]).unwrap();
            let condition = match which {
                0 => ConditionKind::SafetyLower { eps1: eps },
                1 => ConditionKind::UnsafeReachUpper { eps1: eps },
                2 => ConditionKind::RaLowerA1 { eps2: eps },
                3 => ConditionKind::RaLowerDiscounted { eps2: eps, gamma },
                4 => ConditionKind::LivenessUpperDiscounted { eps1: eps, gamma },
                _ => ConditionKind::RaLowerPair { eps2: eps, omega, w },
            };
            let file = CertificateFile { condition, v };
            let back = CertificateFile::from_text(&file.to_text()).unwrap();
            prop_assert_eq!(back, file);
        }
    }
}
