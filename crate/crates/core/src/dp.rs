//! Grid discretization, finite absorbing transition kernels, and the Bellman
//! fixed-point solvers for the exit, reach-avoid and discounted value functions.
//!
//! Every grid node is classified by the region predicates. Target and unsafe
//! nodes are absorbing with fixed values; each remaining (transient) node maps,
//! per disturbance atom, either to absorption (when the image is a target or
//! unsafe state) or to multilinear interpolation weights over the cell-centre
//! nodes surrounding the image.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, SystemModel};
use crate::regions::{BoxRegion, RegionError, RegionSpec, StateClass};

/// Default sup-norm stopping tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default sweep cap for the undiscounted iterations.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Largest transient node count accepted by the dense direct solver.
pub const EXACT_MAX_TRANSIENT: usize = 5000;
/// Below this residual the discounted iteration cannot make progress in f64.
pub const RESIDUAL_FLOOR: f64 = 1e-15;

const PARALLEL_MIN_NODES: usize = 2048;
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DpError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too small: node {node:?} maps to safe state {image:?} outside the grid box")]
    GridTooSmall { node: Vec<f64>, image: Vec<f64> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("discount factor {0} must lie in [0, 1)")]
    InvalidDiscount(f64),
    #[error("the exit objective needs a kernel built without a target set")]
    KernelHasTarget,
    #[error("{transient} transient nodes exceed the direct-solve limit of {limit}")]
    TooLarge { transient: usize, limit: usize },
    #[error("Assumption 1 (numerically) violated at gamma=1: singular linear system (pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("field values must match the grid: {0}")]
    FieldShape(String),
}

/// Regular grid of cell centres over an axis-aligned box.
///
/// Nodes are enumerated row-major: the last coordinate varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: Vec<usize>,
    width: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: Vec<usize>) -> Result<Grid, DpError> {
        let n = lower.len();
        if n == 0 || upper.len() != n || cells.len() != n {
            return Err(DpError::InvalidGrid(
                "lower, upper and cells must have the same nonzero length".into(),
            ));
        }
        for i in 0..n {
            if cells[i] == 0 {
                return Err(DpError::InvalidGrid(format!("cells[{i}] is zero")));
            }
            if !(upper[i] > lower[i]) || !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(DpError::InvalidGrid(format!(
                    "dimension {i}: upper {} must exceed lower {}",
                    upper[i], lower[i]
                )));
            }
        }
        let len = cells
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| DpError::InvalidGrid("node count overflows".into()))?;
        let width = (0..n).map(|i| (upper[i] - lower[i]) / cells[i] as f64).collect();
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cells[i + 1];
        }
        Ok(Grid {
            lower,
            upper,
            cells,
            width,
            strides,
            len,
        })
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn bbox(&self) -> BoxRegion {
        BoxRegion {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let k = index / s;
                index %= s;
                k
            })
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    fn coord(&self, dim: usize, k: f64) -> f64 {
        self.lower[dim] + (k + 0.5) * self.width[dim]
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .enumerate()
            .map(|(d, &k)| self.coord(d, k as f64))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len).map(|i| self.node(i)).collect()
    }

    /// Centres of the ring of virtual cells just outside the box.
    pub fn halo(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        let mut k: Vec<i64> = vec![-1; n];
        loop {
            let outside = k.iter().zip(&self.cells).any(|(&ki, &c)| ki < 0 || ki >= c as i64);
            if outside {
                out.push(k.iter().enumerate().map(|(d, &ki)| self.coord(d, ki as f64)).collect());
            }
            let mut d = n;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                if k[d] < self.cells[d] as i64 {
                    k[d] += 1;
                    break;
                }
                k[d] = -1;
            }
        }
    }

    /// Multilinear interpolation weights of `x` over the surrounding nodes,
    /// or `None` outside the box. Between the outermost node centre and the
    /// box face the nearest node value is held constant. Weights are
    /// non-negative and sum to one.
    pub fn weights(&self, x: &[f64]) -> Option<Vec<(usize, f64)>> {
        if !self.contains(x) {
            return None;
        }
        let n = self.dim();
        let mut base = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for d in 0..n {
            let top = (self.cells[d] - 1) as f64;
            let mut t = ((x[d] - self.lower[d]) / self.width[d] - 0.5).clamp(0.0, top);
            if (t - t.round()).abs() < SNAP {
                t = t.round();
            }
            let k = t.floor().min((top - 1.0).max(0.0));
            base.push(k as usize);
            frac.push(t - k);
        }
        let mut out: Vec<(usize, f64)> = vec![(self.flat_index(&base), 1.0)];
        for d in 0..n {
            if frac[d] == 0.0 {
                continue;
            }
            let f = frac[d];
            let stride = self.strides[d];
            let mut next = Vec::with_capacity(out.len() * 2);
            for &(idx, w) in &out {
                next.push((idx, w * (1.0 - f)));
                next.push((idx + stride, w * f));
            }
            out = next;
        }
        out.retain(|&(_, w)| w > 0.0);
        Some(out)
    }
}

/// Where one disturbance atom sends a transient node.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    AbsorbTarget,
    AbsorbUnsafe,
    Mix(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub prob: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Target,
    Unsafe,
    Transient(Vec<Branch>),
}

/// Aggregated one-step law of a transient node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub target: f64,
    pub unsafe_mass: f64,
    pub entries: Vec<(usize, f64)>,
}

impl Row {
    pub fn total(&self) -> f64 {
        self.target + self.unsafe_mass + self.entries.iter().map(|e| e.1).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct TransitionKernel {
    grid: Grid,
    nodes: Vec<NodeKind>,
    rows: Vec<Option<Row>>,
    has_target: bool,
}

impl TransitionKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn row(&self, i: usize) -> Option<&Row> {
        self.rows[i].as_ref()
    }

    pub fn class(&self, i: usize) -> StateClass {
        match self.nodes[i] {
            NodeKind::Target => StateClass::Target,
            NodeKind::Unsafe => StateClass::Unsafe,
            NodeKind::Transient(_) => StateClass::SafeNonTarget,
        }
    }

    pub fn has_target(&self) -> bool {
        self.has_target
    }

    pub fn transient(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.rows[i].is_some())
    }

    pub fn transient_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }
}

/// Builds the absorbing kernel of `model` restricted to `grid`.
///
/// Fails with [`DpError::GridTooSmall`] when a transient node has a safe image
/// outside the grid box.
pub fn build_kernel(model: &SystemModel, grid: &Grid, regions: &RegionSpec) -> Result<TransitionKernel, DpError> {
    let build = |i: usize| -> Result<NodeKind, DpError> {
        let x = grid.node(i);
        match regions.classify(&x)? {
            StateClass::Target => return Ok(NodeKind::Target),
            StateClass::Unsafe => return Ok(NodeKind::Unsafe),
            StateClass::SafeNonTarget => {}
        }
        let mut branches = Vec::with_capacity(model.dist().len());
        for (prob, y) in model.images(&x)? {
            let outcome = match regions.classify(&y)? {
                StateClass::Target => Outcome::AbsorbTarget,
                StateClass::Unsafe => Outcome::AbsorbUnsafe,
                StateClass::SafeNonTarget => match grid.weights(&y) {
                    Some(w) => Outcome::Mix(w),
                    None => return Err(DpError::GridTooSmall { node: x, image: y }),
                },
            };
            branches.push(Branch { prob, outcome });
        }
        Ok(NodeKind::Transient(branches))
    };
    let nodes: Vec<NodeKind> = if grid.len() >= PARALLEL_MIN_NODES {
        (0..grid.len()).into_par_iter().map(build).collect::<Result<_, _>>()?
    } else {
        (0..grid.len()).map(build).collect::<Result<_, _>>()?
    };
    let rows: Vec<Option<Row>> = nodes.iter().map(aggregate).collect();
    let has_target = nodes.iter().any(|k| match k {
        NodeKind::Target => true,
        NodeKind::Unsafe => false,
        NodeKind::Transient(b) => b.iter().any(|b| b.outcome == Outcome::AbsorbTarget),
    });
    Ok(TransitionKernel {
        grid: grid.clone(),
        nodes,
        rows,
        has_target,
    })
}

fn aggregate(kind: &NodeKind) -> Option<Row> {
    let NodeKind::Transient(branches) = kind else {
        return None;
    };
    let mut row = Row::default();
    for b in branches {
        match &b.outcome {
            Outcome::AbsorbTarget => row.target += b.prob,
            Outcome::AbsorbUnsafe => row.unsafe_mass += b.prob,
            Outcome::Mix(w) => row.entries.extend(w.iter().map(|&(j, wj)| (j, b.prob * wj))),
        }
    }
    row.entries.sort_unstable_by_key(|e| e.0);
    row.entries.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    Some(row)
}

/// Which Bellman equation to solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `W = 1_{X_r} + 1_{X\X_r} E[W∘f]`, least solution.
    ReachAvoid,
    /// `U = 1_{R^n\X} + 1_X E[U∘f]`, least solution; needs a target-free kernel.
    SafetyExit,
    /// `W = 1_{X_r} + γ 1_{X\X_r} E[W∘f]`.
    Discounted(f64),
    /// `U = 1_{R^n\X} + γ 1_X E[U∘f]`; needs a target-free kernel.
    DiscountedExit(f64),
}

impl Objective {
    fn gamma(self) -> f64 {
        match self {
            Objective::ReachAvoid | Objective::SafetyExit => 1.0,
            Objective::Discounted(g) | Objective::DiscountedExit(g) => g,
        }
    }

    fn is_exit(self) -> bool {
        matches!(self, Objective::SafetyExit | Objective::DiscountedExit(_))
    }

    /// Value held by absorbing target states.
    pub fn target_value(self) -> f64 {
        if self.is_exit() {
            0.0
        } else {
            1.0
        }
    }

    /// Value held by unsafe states, on or off the grid.
    pub fn unsafe_value(self) -> f64 {
        if self.is_exit() {
            1.0
        } else {
            0.0
        }
    }

    fn validate(self, kernel: &TransitionKernel) -> Result<(), DpError> {
        let g = self.gamma();
        if let Objective::Discounted(_) | Objective::DiscountedExit(_) = self {
            if !(0.0..1.0).contains(&g) {
                return Err(DpError::InvalidDiscount(g));
            }
        }
        if self.is_exit() && kernel.has_target() {
            return Err(DpError::KernelHasTarget);
        }
        Ok(())
    }
}

/// Node values with multilinear interpolation inside the grid box and a
/// constant outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    grid: Grid,
    values: Vec<f64>,
    outside_default: f64,
}

impl ValueField {
    pub fn new(grid: Grid, values: Vec<f64>, outside_default: f64) -> Result<Self, DpError> {
        if values.len() != grid.len() {
            return Err(DpError::FieldShape(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ValueField {
            grid,
            values,
            outside_default,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn outside_default(&self) -> f64 {
        self.outside_default
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.grid.weights(x) {
            Some(w) => w.iter().map(|&(j, wj)| wj * self.values[j]).sum(),
            None => self.outside_default,
        }
    }

    /// Pointwise `scale * self + shift` on node values and the outside default.
    pub fn affine(&self, scale: f64, shift: f64) -> ValueField {
        ValueField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| scale * v + shift).collect(),
            outside_default: scale * self.outside_default + shift,
        }
    }

    pub fn sup_distance(&self, other: &ValueField) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    /// `x1,..,xn,value` per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for d in 1..=self.grid.dim() {
            out.push_str(&format!("x{d},"));
        }
        out.push_str("value\n");
        for (i, v) in self.values.iter().enumerate() {
            for c in self.grid.node(i) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

/// Result of a fixed-point iteration. When `converged` is false the field is
/// the last iterate, which is a lower bound of the least fixed point.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ValueField,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn seed(kernel: &TransitionKernel, objective: Objective) -> Vec<f64> {
    kernel
        .nodes
        .iter()
        .map(|k| match k {
            NodeKind::Target => objective.target_value(),
            NodeKind::Unsafe => objective.unsafe_value(),
            NodeKind::Transient(_) => 0.0,
        })
        .collect()
}

fn sweep_node(kernel: &TransitionKernel, objective: Objective, values: &[f64], i: usize) -> f64 {
    match &kernel.rows[i] {
        None => match kernel.nodes[i] {
            NodeKind::Target => objective.target_value(),
            _ => objective.unsafe_value(),
        },
        Some(row) => {
            let mut acc = row.target * objective.target_value() + row.unsafe_mass * objective.unsafe_value();
            for &(j, w) in &row.entries {
                acc += w * values[j];
            }
            objective.gamma() * acc
        }
    }
}

fn sweep(kernel: &TransitionKernel, objective: Objective, values: &[f64], out: &mut [f64]) {
    if out.len() >= PARALLEL_MIN_NODES {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(i, o)| *o = sweep_node(kernel, objective, values, i));
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = sweep_node(kernel, objective, values, i);
        }
    }
}

/// One application of the Bellman operator of `objective` to node values.
/// Absorbing nodes take their fixed values.
pub fn apply_operator(kernel: &TransitionKernel, objective: Objective, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    sweep(kernel, objective, values, &mut out);
    out
}

fn field_from(kernel: &TransitionKernel, objective: Objective, values: Vec<f64>) -> ValueField {
    ValueField {
        grid: kernel.grid.clone(),
        values,
        outside_default: objective.unsafe_value(),
    }
}

/// Iterates the Bellman operator of `objective` from the indicator seed.
///
/// Iterates are pointwise non-decreasing and stay in `[0, 1]`; both are
/// asserted every sweep in debug builds. Undiscounted runs stop when the
/// sup-norm change drops below `tol`; discounted runs when it drops below
/// `tol * (1 - γ)` (floored at [`RESIDUAL_FLOOR`]).
pub fn solve(kernel: &TransitionKernel, objective: Objective, tol: f64, max_iter: usize) -> Result<Solution, DpError> {
    objective.validate(kernel)?;
    let gamma = objective.gamma();
    let threshold = if gamma < 1.0 {
        (tol * (1.0 - gamma)).max(RESIDUAL_FLOOR)
    } else {
        tol
    };
    let mut cur = seed(kernel, objective);
    let mut next = cur.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        sweep(kernel, objective, &cur, &mut next);
        residual = 0.0;
        for (a, b) in cur.iter().zip(&next) {
            debug_assert!(*b >= *a - 1e-15, "iterate decreased: {a} -> {b}");
            debug_assert!((-1e-15..=1.0 + 1e-12).contains(b), "iterate left [0,1]: {b}");
            residual = f64::max(residual, (b - a).abs());
        }
        std::mem::swap(&mut cur, &mut next);
        if residual < threshold {
            return Ok(Solution {
                field: field_from(kernel, objective, cur),
                iterations: it,
                residual,
                converged: true,
            });
        }
    }
    Ok(Solution {
        field: field_from(kernel, objective, cur),
        iterations: max_iter,
        residual,
        converged: false,
    })
}

/// Exit probability `V = 1 - P(stay in X forever)`; needs a kernel built
/// from [`RegionSpec::without_target`].
pub fn solve_safety_exit(kernel: &TransitionKernel, tol: f64, max_iter: usize) -> Result<Solution, DpError> {
    solve(kernel, Objective::SafetyExit, tol, max_iter)
}

pub fn solve_reach_avoid(kernel: &TransitionKernel, tol: f64, max_iter: usize) -> Result<Solution, DpError> {
    solve(kernel, Objective::ReachAvoid, tol, max_iter)
}

/// Discounted reach-avoid value; rejects `γ ∉ [0, 1)`.
pub fn solve_discounted(kernel: &TransitionKernel, gamma: f64, tol: f64) -> Result<Solution, DpError> {
    solve(kernel, Objective::Discounted(gamma), tol, DEFAULT_MAX_ITER)
}

pub fn solve_discounted_exit(kernel: &TransitionKernel, gamma: f64, tol: f64) -> Result<Solution, DpError> {
    solve(kernel, Objective::DiscountedExit(gamma), tol, DEFAULT_MAX_ITER)
}

/// Exactly `steps` Bellman sweeps from the indicator seed: the probability of
/// the event within `steps` transitions (reach objectives) or of exiting
/// within `steps` transitions (exit objectives).
pub fn finite_horizon(kernel: &TransitionKernel, objective: Objective, steps: usize) -> Result<ValueField, DpError> {
    objective.validate(kernel)?;
    let mut cur = seed(kernel, objective);
    let mut next = cur.clone();
    for _ in 0..steps {
        sweep(kernel, objective, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(field_from(kernel, objective, cur))
}

/// Probability of remaining in `X \ X_r` through `steps` transitions, per node.
pub fn stay_probability(kernel: &TransitionKernel, steps: usize) -> Vec<f64> {
    let mut cur: Vec<f64> = kernel
        .rows
        .iter()
        .map(|r| if r.is_some() { 1.0 } else { 0.0 })
        .collect();
    let mut next = cur.clone();
    for _ in 0..steps {
        stay_sweep(kernel, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

fn stay_sweep(kernel: &TransitionKernel, cur: &[f64], next: &mut [f64]) {
    for (i, o) in next.iter_mut().enumerate() {
        *o = match &kernel.rows[i] {
            None => 0.0,
            Some(row) => row.entries.iter().map(|&(j, w)| w * cur[j]).sum(),
        };
    }
}

/// Dense direct solve of `(I - γ P) v = b` over the transient nodes.
pub fn solve_exact_small(kernel: &TransitionKernel, objective: Objective) -> Result<ValueField, DpError> {
    objective.validate(kernel)?;
    let gamma = objective.gamma();
    let transient: Vec<usize> = kernel.transient().collect();
    let t = transient.len();
    if t > EXACT_MAX_TRANSIENT {
        return Err(DpError::TooLarge {
            transient: t,
            limit: EXACT_MAX_TRANSIENT,
        });
    }
    let mut values = seed(kernel, objective);
    if t == 0 {
        return Ok(field_from(kernel, objective, values));
    }
    let mut position = vec![usize::MAX; kernel.nodes.len()];
    for (k, &i) in transient.iter().enumerate() {
        position[i] = k;
    }
    let mut a = DMatrix::<f64>::identity(t, t);
    let mut b = DVector::<f64>::zeros(t);
    for (k, &i) in transient.iter().enumerate() {
        let row = kernel.rows[i].as_ref().expect("transient");
        let mut rhs = row.target * objective.target_value() + row.unsafe_mass * objective.unsafe_value();
        for &(j, w) in &row.entries {
            match position[j] {
                usize::MAX => rhs += w * values[j],
                col => a[(k, col)] -= gamma * w,
            }
        }
        b[k] = gamma * rhs;
    }
    let lu = a.lu();
    let pivot = lu.u().diagonal().iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    if !(pivot > 1e-12) {
        return Err(DpError::Singular { pivot });
    }
    let v = lu.solve(&b).ok_or(DpError::Singular { pivot })?;
    for (k, &i) in transient.iter().enumerate() {
        values[i] = v[k];
    }
    Ok(field_from(kernel, objective, values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption1Report {
    pub holds: bool,
    /// Largest probability over nodes of staying in `X \ X_r` forever (an
    /// upper bound when the iteration was cut off).
    pub sup_stay_prob: f64,
    /// Nodes that can never leave `X \ X_r`.
    pub trapped: Vec<usize>,
    pub iterations: usize,
}

/// Checks that the chain leaves `X \ X_r` in finite time almost surely from
/// every node.
///
/// Transient nodes that cannot reach any absorbing mass form closed classes
/// where the stay probability is exactly one; otherwise the decreasing
/// iteration `s_{k+1} = 1_{X\X_r} E[s_k∘f]` from `s_0 = 1_{X\X_r}` is run
/// until its sup drops below `tol`.
pub fn check_assumption1(kernel: &TransitionKernel, tol: f64, max_iter: usize) -> Assumption1Report {
    let n = kernel.nodes.len();
    // Reverse reachability from nodes that leak mass out of the transient set.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut leaks = vec![false; n];
    for i in kernel.transient() {
        let row = kernel.rows[i].as_ref().expect("transient");
        if row.target > 0.0 || row.unsafe_mass > 0.0 {
            leaks[i] = true;
        }
        for &(j, w) in &row.entries {
            if w <= 0.0 {
                continue;
            }
            if kernel.rows[j].is_none() {
                leaks[i] = true;
            } else {
                preds[j].push(i);
            }
        }
    }
    let mut escapes = leaks.clone();
    let mut stack: Vec<usize> = (0..n).filter(|&i| leaks[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &preds[j] {
            if !escapes[i] {
                escapes[i] = true;
                stack.push(i);
            }
        }
    }
    let trapped: Vec<usize> = kernel.transient().filter(|&i| !escapes[i]).collect();
    if !trapped.is_empty() {
        return Assumption1Report {
            holds: false,
            sup_stay_prob: 1.0,
            trapped,
            iterations: 0,
        };
    }
    let mut cur: Vec<f64> = kernel
        .rows
        .iter()
        .map(|r| if r.is_some() { 1.0 } else { 0.0 })
        .collect();
    let mut next = cur.clone();
    let mut sup = cur.iter().copied().fold(0.0, f64::max);
    let mut iterations = 0;
    while sup >= tol && iterations < max_iter {
        stay_sweep(kernel, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        sup = cur.iter().copied().fold(0.0, f64::max);
        iterations += 1;
    }
    Assumption1Report {
        holds: sup < tol,
        sup_stay_prob: sup,
        trapped,
        iterations,
    }
}
