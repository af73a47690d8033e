//! Template synthesis of polynomial certificates by linear programming.
//!
//! The clauses of a condition are linear in the coefficients of a fixed
//! monomial template (the expectation is a finite sum of evaluations), so
//! sampling the clauses at finitely many points gives an LP. The result is
//! re-checked on an independent point set before it is reported.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::certificate::{
    self, check_condition, monomial, CertError, CertFunction, CheckReport, ConditionKind, ConditionTag, PointSet,
    Polynomial,
};
use crate::mc::trial_rng;
use crate::model::{ModelError, SystemModel};
use crate::regions::{RegionError, RegionSpec, StateClass};

/// Pivot and reduced-cost tolerance.
pub const PIVOT_TOL: f64 = 1e-9;
/// Default coefficient bound `B`.
pub const DEFAULT_COEFF_BOUND: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid LP: {0}")]
    InvalidLp(String),
    #[error("simplex stalled after {iterations} iterations")]
    Stalled { iterations: usize },
    #[error("no certificate in this template at these samples")]
    Infeasible,
    #[error("LP unbounded")]
    Unbounded,
    #[error("synthesis does not support {0}")]
    Unsupported(ConditionTag),
    #[error("invalid template: {0}")]
    Template(String),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `max`/`min c·x` subject to rows and `lower <= x <= upper`.
/// Infinite bounds are allowed; a free direction may make the LP unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub maximize: bool,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only when optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new(n_vars: usize, maximize: bool) -> Self {
        LpProblem {
            objective: vec![0.0; n_vars],
            maximize,
            rows: Vec::new(),
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    /// Row-per-constraint text dump.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{}", if self.maximize { "maximize" } else { "minimize" });
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {c:?}*x{j}");
            }
        }
        out.push('\n');
        for j in 0..self.n_vars() {
            let _ = writeln!(out, "bound x{j} {:?} {:?}", self.lower[j], self.upper[j]);
        }
        for r in &self.rows {
            out.push_str("row");
            for (j, a) in &r.coeffs {
                let _ = write!(out, " {a:?}*x{j}");
            }
            let _ = writeln!(out, " {} {:?}", r.sense.symbol(), r.rhs);
        }
        out
    }

    fn validate(&self) -> Result<(), SynthError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SynthError::InvalidLp(
                "bound vectors do not match the variable count".into(),
            ));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(SynthError::InvalidLp(format!("bad bounds [{l}, {u}] on x{j}")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(SynthError::InvalidLp("non-finite objective coefficient".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() || r.coeffs.iter().any(|(j, a)| *j >= n || !a.is_finite()) {
                return Err(SynthError::InvalidLp(format!("row {i} is malformed")));
            }
        }
        Ok(())
    }
}

/// Standard-form column(s) of an original variable: `x = shift + pos - neg`.
struct VarMap {
    pos: usize,
    neg: Option<usize>,
    shift: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs; the last entry holds minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
    max_iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..=w {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for k in 0..=w {
                self.obj[k] -= f * pivot_row[k];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Minimizes with Bland's rule over the columns where `allowed` holds.
    fn run(&mut self, allowed: &[bool]) -> Result<Phase, SynthError> {
        loop {
            let Some(c) = (0..self.width).find(|&j| allowed[j] && self.obj[j] < -PIVOT_TOL) else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = row[self.width] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(SynthError::Stalled {
                    iterations: self.iterations,
                });
            }
            self.pivot(r, c);
        }
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.width;
        self.obj = costs.to_vec();
        self.obj.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for k in 0..=w {
                    self.obj[k] -= cb * self.rows[i][k];
                }
            }
        }
    }
}

/// Two-phase dense-tableau primal simplex with Bland's rule.
pub fn simplex_solve(problem: &LpProblem) -> Result<LpSolution, SynthError> {
    problem.validate()?;
    let n = problem.n_vars();

    // Standard form: y >= 0.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    for j in 0..n {
        let l = problem.lower[j];
        if l.is_finite() {
            maps.push(VarMap {
                pos: ncols,
                neg: None,
                shift: l,
            });
            ncols += 1;
        } else {
            maps.push(VarMap {
                pos: ncols,
                neg: Some(ncols + 1),
                shift: 0.0,
            });
            ncols += 2;
        }
    }
    let mut std_rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    let expand = |coeffs: &[(usize, f64)], rhs: f64| {
        let mut dense = vec![0.0; ncols];
        let mut b = rhs;
        for &(j, a) in coeffs {
            let m = &maps[j];
            dense[m.pos] += a;
            if let Some(neg) = m.neg {
                dense[neg] -= a;
            }
            b -= a * m.shift;
        }
        (dense, b)
    };
    for r in &problem.rows {
        let (dense, b) = expand(&r.coeffs, r.rhs);
        std_rows.push((dense, r.sense, b));
    }
    for j in 0..n {
        if problem.upper[j].is_finite() {
            let (dense, b) = expand(&[(j, 1.0)], problem.upper[j]);
            std_rows.push((dense, Sense::Le, b));
        }
    }
    let sign = if problem.maximize { -1.0 } else { 1.0 };
    let mut costs = vec![0.0; ncols];
    let mut constant = 0.0;
    for j in 0..n {
        let c = sign * problem.objective[j];
        let m = &maps[j];
        costs[m.pos] += c;
        if let Some(neg) = m.neg {
            costs[neg] -= c;
        }
        constant += c * m.shift;
    }

    // Slacks, surpluses and artificials.
    for row in &mut std_rows {
        if row.2 < 0.0 {
            for v in row.0.iter_mut() {
                *v = -*v;
            }
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = std_rows.iter().filter(|r| r.1 != Sense::Le).count();
    let width = ncols + n_slack + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut is_art = vec![false; width];
    let (mut s, mut a) = (ncols, ncols + n_slack);
    for (dense, sense, b) in std_rows {
        let mut row = dense;
        row.resize(width + 1, 0.0);
        row[width] = b;
        match sense {
            Sense::Le => {
                row[s] = 1.0;
                basis.push(s);
                s += 1;
            }
            Sense::Ge => {
                row[s] = -1.0;
                s += 1;
                row[a] = 1.0;
                is_art[a] = true;
                basis.push(a);
                a += 1;
            }
            Sense::Eq => {
                row[a] = 1.0;
                is_art[a] = true;
                basis.push(a);
                a += 1;
            }
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        obj: Vec::new(),
        basis,
        width,
        iterations: 0,
        max_iterations: 50 * (m + width) + 1000,
    };

    if n_art > 0 {
        let phase1: Vec<f64> = is_art.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect();
        t.set_costs(&phase1);
        let all = vec![true; width];
        t.run(&all)?;
        let infeasibility = -t.obj[width];
        let scale = 1.0 + t.rows.iter().map(|r| r[width].abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![f64::NAN; n],
                objective: f64::NAN,
                iterations: t.iterations,
            });
        }
        // Drive artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if is_art[t.basis[i]] {
                match (0..width).find(|&c| !is_art[c] && t.rows[i][c].abs() > PIVOT_TOL) {
                    Some(c) => t.pivot(i, c),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    let mut full_costs = costs;
    full_costs.resize(width, 0.0);
    t.set_costs(&full_costs);
    let allowed: Vec<bool> = is_art.iter().map(|&x| !x).collect();
    let phase = t.run(&allowed)?;
    if let Phase::Unbounded = phase {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            objective: if problem.maximize {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            iterations: t.iterations,
        });
    }
    let mut y = vec![0.0; width];
    for (i, &b) in t.basis.iter().enumerate() {
        y[b] = t.rows[i][width];
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| m.shift + y[m.pos] - m.neg.map_or(0.0, |k| y[k]))
        .collect();
    let objective = sign * (-t.obj[width] + constant);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: t.iterations,
    })
}

/// Monomial template with a coefficient box `[-bound, bound]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    n: usize,
    exponents: Vec<Vec<u32>>,
    bound: f64,
}

impl Template {
    /// All monomials over `n` variables of total degree `<= degree`.
    pub fn degree(n: usize, degree: u32, bound: f64) -> Result<Template, SynthError> {
        Template::new(n, Polynomial::monomials_up_to(n, degree), bound)
    }

    pub fn new(n: usize, exponents: Vec<Vec<u32>>, bound: f64) -> Result<Template, SynthError> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(SynthError::Template(format!(
                "coefficient bound {bound} must be finite and >= 0"
            )));
        }
        if !exponents.iter().any(|e| e.iter().all(|&k| k == 0)) {
            return Err(SynthError::Template("the constant monomial is required".into()));
        }
        // Reuses the duplicate and dimension checks.
        Polynomial::new(n, exponents.clone(), vec![0.0; exponents.len()])
            .map_err(|e| SynthError::Template(e.to_string()))?;
        Ok(Template { n, exponents, bound })
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    fn features(&self, x: &[f64]) -> Vec<f64> {
        self.exponents.iter().map(|e| monomial(e, x)).collect()
    }

    fn expected_features(&self, model: &SystemModel, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut acc = vec![0.0; self.len()];
        for (th, p) in model.dist().iter() {
            let y = model.step(x, th)?;
            for (a, e) in acc.iter_mut().zip(&self.exponents) {
                *a += p * monomial(e, &y);
            }
        }
        Ok(acc)
    }

    fn polynomial(&self, coeffs: Vec<f64>) -> Result<Polynomial, SynthError> {
        Ok(Polynomial::new(self.n, self.exponents.clone(), coeffs)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthStatus {
    /// Passed the independent re-validation.
    Validated,
    /// Feasible at the LP samples but rejected on the re-validation points.
    SampleOptimistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthResult {
    pub certificate: CertFunction,
    /// Condition at the achieved threshold.
    pub condition: ConditionKind,
    pub threshold: f64,
    pub status: SynthStatus,
    pub validation: CheckReport,
    pub lp: LpProblem,
    pub lp_iterations: usize,
    pub lp_samples: usize,
}

/// Independent re-validation points: states visited by `trajectories`
/// simulated runs from each `x0` (stopped at absorption or `horizon`), the
/// images of the visited states where the drift clause applies, and
/// `extra` points.
pub fn reachable_samples(
    model: &SystemModel,
    regions: &RegionSpec,
    tag: ConditionTag,
    x0s: &[Vec<f64>],
    trajectories: usize,
    horizon: usize,
    seed: u64,
    extra: &[Vec<f64>],
) -> Result<PointSet, SynthError> {
    let mut visited: Vec<Vec<f64>> = extra.to_vec();
    for (k, x0) in x0s.iter().enumerate() {
        for i in 0..trajectories {
            let mut rng = trial_rng(seed.wrapping_add(k as u64), i);
            let mut x = x0.clone();
            for _ in 0..horizon {
                let class = classify_for(regions, tag, &x)?;
                visited.push(x.clone());
                if !tag.drift_applies(class) {
                    break;
                }
                let th = model.dist().sample(&mut rng);
                x = model.step(&x, th)?;
            }
        }
    }
    let base = PointSet::classify(regions, &visited)?;
    let mut all = visited;
    for p in base.points() {
        if tag.drift_applies(p.class) {
            all.extend(model.images(&p.x)?.into_iter().map(|(_, y)| y));
        }
    }
    Ok(PointSet::classify(regions, &all)?)
}

/// Uniform random points in the box, for re-validation.
pub fn random_points(lower: &[f64], upper: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = trial_rng(seed, 0);
    (0..count)
        .map(|_| lower.iter().zip(upper).map(|(l, u)| rng.gen_range(*l..=*u)).collect())
        .collect()
}

fn classify_for(regions: &RegionSpec, tag: ConditionTag, x: &[f64]) -> Result<StateClass, RegionError> {
    if tag.exit_type() {
        Ok(if regions.is_safe(x)? {
            StateClass::SafeNonTarget
        } else {
            StateClass::Unsafe
        })
    } else {
        regions.classify(x)
    }
}

/// One clause as `Σ a_k c_k (sense) rhs`.
fn clause_rows(
    model: &SystemModel,
    template: &Template,
    kind: &ConditionKind,
    class: StateClass,
    x: &[f64],
) -> Result<Vec<(Vec<f64>, Sense, f64)>, ModelError> {
    let tag = kind.tag();
    let phi = template.features(x);
    let mut out = Vec::new();
    if tag.drift_applies(class) {
        let g = kind.gamma().unwrap_or(1.0);
        let e = template.expected_features(model, x)?;
        let a: Vec<f64> = phi.iter().zip(&e).map(|(p, q)| p - g * q).collect();
        // Lower kinds: v - γE ≤ 0; upper kinds: v - E ≥ 0.
        out.push((a, if tag.x0_upper() { Sense::Ge } else { Sense::Le }, 0.0));
    }
    let bound = |sense, rhs| (phi.clone(), sense, rhs);
    match (tag, class) {
        (ConditionTag::SafetyLower, StateClass::Unsafe) => out.push(bound(Sense::Ge, 1.0)),
        (ConditionTag::UnsafeReachUpper, StateClass::Target) => out.push(bound(Sense::Ge, 1.0)),
        (ConditionTag::UnsafeReachUpper, StateClass::Unsafe) => out.push(bound(Sense::Ge, 0.0)),
        (ConditionTag::LivenessUpperDiscounted, StateClass::Unsafe) => out.push(bound(Sense::Le, 1.0)),
        (ConditionTag::SafetyLower | ConditionTag::LivenessUpperDiscounted, _) => {}
        (_, StateClass::Target) => out.push(bound(Sense::Le, 1.0)),
        (_, StateClass::Unsafe) => out.push(bound(Sense::Le, 0.0)),
        (_, StateClass::SafeNonTarget) => {}
    }
    if tag == ConditionTag::SafetyLower {
        out.push(bound(Sense::Ge, 0.0));
    }
    Ok(out)
}

/// Options for [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Threshold the certificate must reach; `None` optimizes freely.
    pub required_threshold: Option<f64>,
    /// Slack tolerance of the re-validation check.
    pub tolerance: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            required_threshold: None,
            tolerance: certificate::DEFAULT_TOLERANCE,
        }
    }
}

/// Optimizes the template against the clauses of `kind` at `samples`, then
/// re-checks the result on `validation`.
///
/// Lower-bound kinds maximize `min v(x0)`; SafetyLower and UnsafeReachUpper
/// minimize `max v(x0)`. The threshold in `kind` is ignored. Clause rows
/// carry no margin: the re-validation tolerance absorbs LP round-off.
#[allow(clippy::too_many_arguments)]
pub fn synthesize(
    model: &SystemModel,
    kind: &ConditionKind,
    template: &Template,
    samples: &PointSet,
    validation: &PointSet,
    x0s: &[Vec<f64>],
    options: &SynthOptions,
) -> Result<SynthResult, SynthError> {
    let tag = kind.tag();
    if tag == ConditionTag::RaLowerPair {
        return Err(SynthError::Unsupported(tag));
    }
    if x0s.is_empty() {
        return Err(SynthError::Template("at least one initial state is required".into()));
    }
    if let Some(eps) = options.required_threshold {
        if !(0.0..=1.0).contains(&eps) {
            return Err(SynthError::Template(format!("required threshold {eps} outside [0, 1]")));
        }
    }
    let k = template.len();
    let t = k;
    // Variables: coefficients, then the free threshold variable t.
    let mut lp = LpProblem::new(k + 1, !tag.x0_upper());
    for j in 0..k {
        lp.lower[j] = -template.bound;
        lp.upper[j] = template.bound;
    }
    lp.lower[t] = f64::NEG_INFINITY;
    lp.objective[t] = 1.0;

    let rows: Vec<Vec<(Vec<f64>, Sense, f64)>> = samples
        .points()
        .par_iter()
        .map(|p| clause_rows(model, template, kind, p.class, &p.x))
        .collect::<Result<_, _>>()?;
    for (a, sense, rhs) in rows.into_iter().flatten() {
        let coeffs = a.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
        lp.add_row(coeffs, sense, rhs);
    }
    for x0 in x0s {
        // Lower kinds: t <= v(x0); upper kinds: t >= v(x0).
        let mut coeffs: Vec<(usize, f64)> = template.features(x0).into_iter().enumerate().collect();
        coeffs.push((t, -1.0));
        lp.add_row(coeffs, if tag.x0_upper() { Sense::Le } else { Sense::Ge }, 0.0);
    }
    if let Some(eps) = options.required_threshold {
        match tag {
            ConditionTag::SafetyLower => lp.add_row(vec![(t, 1.0)], Sense::Le, 1.0 - eps),
            ConditionTag::UnsafeReachUpper => lp.add_row(vec![(t, 1.0)], Sense::Le, eps),
            _ => lp.add_row(vec![(t, 1.0)], Sense::Ge, eps),
        }
    }

    let sol = simplex_solve(&lp)?;
    match sol.status {
        LpStatus::Infeasible => return Err(SynthError::Infeasible),
        LpStatus::Unbounded => return Err(SynthError::Unbounded),
        LpStatus::Optimal => {}
    }
    let coeffs: Vec<f64> = sol.x[..k]
        .iter()
        .map(|c| if c.abs() < 1e-14 { 0.0 } else { *c })
        .collect();
    let cert = CertFunction::Polynomial(template.polynomial(coeffs)?);
    let values = x0s.iter().map(|x| cert.eval(x)).collect::<Result<Vec<_>, _>>()?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let raw = match tag {
        ConditionTag::SafetyLower => 1.0 - max,
        ConditionTag::UnsafeReachUpper => max,
        _ => min,
    };
    let threshold = raw.clamp(0.0, 1.0);
    let condition = kind.with_threshold(threshold);
    let validation = check_condition(model, &cert, &condition, x0s, validation, options.tolerance)?;
    let status = if validation.passed {
        SynthStatus::Validated
    } else {
        SynthStatus::SampleOptimistic
    };
    Ok(SynthResult {
        certificate: cert,
        condition,
        threshold,
        status,
        validation,
        lp,
        lp_iterations: sol.iterations,
        lp_samples: samples.len(),
    })
}
