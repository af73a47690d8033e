//! Command dispatch: each command turns a scenario into a [`Report`] and a
//! set of output files.

use std::fmt;
use std::str::FromStr;

use barrierkit::certificate::{
    best_threshold, check_condition, extract_certificate, find_discount, CertError, CertFunction, CertificateFile,
    ConditionKind, ConditionTag, PointSet, SolvedFields,
};
use barrierkit::dp::{
    self, build_kernel, check_assumption1, finite_horizon, stay_probability, DpError, Grid, Objective, Solution,
    TransitionKernel, ValueField, EXACT_MAX_TRANSIENT,
};
use barrierkit::mc::{estimate_liveness, estimate_reach_avoid, McError, McEstimate};
use barrierkit::regions::compute_omega;
use barrierkit::synth::{
    random_points, reachable_samples, synthesize, SynthError, SynthOptions, SynthStatus, Template,
};
use thiserror::Error;

use crate::report::{
    AgreementRow, Assumption1Entry, CheckEntry, EstimateEntry, Report, SynthEntry, TrajectoryEntry, ValueEntry,
};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Solve,
    Estimate,
    Verify,
    Extract,
    Synthesize,
    Assumption1,
    ReportAll,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Simulate,
        Command::Solve,
        Command::Estimate,
        Command::Verify,
        Command::Extract,
        Command::Synthesize,
        Command::Assumption1,
        Command::ReportAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Solve => "solve",
            Command::Estimate => "estimate",
            Command::Verify => "verify",
            Command::Extract => "extract",
            Command::Synthesize => "synthesize",
            Command::Assumption1 => "assumption1",
            Command::ReportAll => "report-all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<DpError> for CliError {
    fn from(e: DpError) -> Self {
        match e {
            DpError::InvalidGrid(_) | DpError::GridTooSmall { .. } | DpError::InvalidDiscount(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::Format { .. } | CertError::Condition(_) | CertError::Invalid(_) => {
                CliError::Validation(e.to_string())
            }
            CertError::Dp(d) => d.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::Params(_) => CliError::Validation(e.to_string()),
            McError::Simulation { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Template(_) | SynthError::Unsupported(_) => CliError::Validation(e.to_string()),
            SynthError::Cert(c) => c.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Certificate file contents for `verify`.
    pub certificate: Option<String>,
    pub condition: Option<ConditionTag>,
}

/// A file produced by a command, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
    /// Set when a certificate was rejected or could not be produced.
    pub verification_failed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verification_failed {
            3
        } else {
            0
        }
    }
}

struct Ctx<'a> {
    sc: &'a Scenario,
    report: Report,
    artifacts: Vec<Artifact>,
    failed: bool,
}

impl Ctx<'_> {
    fn emit(&mut self, name: String, contents: String) {
        self.report.files.push(name.clone());
        self.artifacts.push(Artifact { name, contents });
    }

    fn caveat(&mut self, c: impl Into<String>) {
        let c = c.into();
        if !self.report.caveats.contains(&c) {
            self.report.caveats.push(c);
        }
    }

    fn grid(&self) -> Result<&Grid, CliError> {
        self.sc
            .grid
            .as_ref()
            .ok_or_else(|| CliError::Validation("this command needs a [grid] block".into()))
    }
}

/// Kernels and solved fields shared by several commands.
struct Solved {
    reach_kernel: TransitionKernel,
    exit_kernel: TransitionKernel,
    reach: Solution,
    exit: Solution,
    discounted: Solution,
    discounted_exit: Solution,
}

pub fn run(command: Command, sc: &Scenario, options: &RunOptions) -> Result<Outcome, CliError> {
    let mut ctx = Ctx {
        sc,
        report: Report {
            scenario: sc.name.clone(),
            command: command.name().to_string(),
            ..Default::default()
        },
        artifacts: Vec::new(),
        failed: false,
    };
    match command {
        Command::Simulate => simulate(&mut ctx),
        Command::Solve => {
            solve(&mut ctx)?;
        }
        Command::Estimate => {
            estimate(&mut ctx)?;
        }
        Command::Verify => verify(&mut ctx, options)?,
        Command::Extract => {
            let solved = solve(&mut ctx)?;
            let a1 = assumption1(&mut ctx, &solved);
            extract(&mut ctx, &solved, a1, options.condition, options.condition.is_some())?;
        }
        Command::Synthesize => synth(&mut ctx, options.condition)?,
        Command::Assumption1 => {
            let kernel = build_kernel(&sc.model, ctx.grid()?, &sc.regions)?;
            assumption1_on(&mut ctx, &kernel);
        }
        Command::ReportAll => report_all(&mut ctx)?,
    }
    Ok(Outcome {
        report: ctx.report,
        artifacts: ctx.artifacts,
        verification_failed: ctx.failed,
    })
}

fn simulate(ctx: &mut Ctx) {
    let sc = ctx.sc;
    for (i, x0) in sc.initial_states.iter().enumerate() {
        let traj = sc.model.simulate(x0, sc.mc.horizon, sc.mc.seed.wrapping_add(i as u64));
        let file = format!("trajectory-{i}.csv");
        ctx.report.trajectories.push(TrajectoryEntry {
            x0: x0.clone(),
            steps: traj.states.len().saturating_sub(1),
            final_state: traj.states.last().cloned().unwrap_or_default(),
            error: traj.error.as_ref().map(|e| e.to_string()),
            file: file.clone(),
        });
        ctx.emit(file, traj.to_csv());
    }
}

fn value_entries(ctx: &mut Ctx, name: &str, sol: &Solution, exact: Option<&ValueField>) {
    for x0 in &ctx.sc.initial_states {
        ctx.report.values.push(ValueEntry {
            objective: name.to_string(),
            x0: x0.clone(),
            value: sol.field.eval(x0),
            method: "DP",
            iterations: sol.iterations,
            residual: sol.residual,
            converged: sol.converged,
            exact: exact.map(|f| f.eval(x0)),
        });
    }
}

fn solve(ctx: &mut Ctx) -> Result<Solved, CliError> {
    let sc = ctx.sc;
    let grid = ctx.grid()?.clone();
    let (tol, max_iter) = (sc.solver.tol, sc.solver.max_iter);
    let reach_kernel = build_kernel(&sc.model, &grid, &sc.regions)?;
    let exit_kernel = build_kernel(&sc.model, &grid, &sc.regions.without_target())?;
    let reach = dp::solve_reach_avoid(&reach_kernel, tol, max_iter)?;
    let exit = dp::solve_safety_exit(&exit_kernel, tol, max_iter)?;
    let discounted = dp::solve(&reach_kernel, Objective::Discounted(sc.gamma), tol, max_iter)?;
    let discounted_exit = dp::solve(&exit_kernel, Objective::DiscountedExit(sc.gamma), tol, max_iter)?;
    for (name, sol) in [
        ("reach-avoid", &reach),
        ("exit", &exit),
        ("discounted", &discounted),
        ("discounted-exit", &discounted_exit),
    ] {
        if !sol.converged {
            return Err(CliError::Numeric(format!(
                "{name} iteration did not converge in {} iterations (residual {:e})",
                sol.iterations, sol.residual
            )));
        }
    }
    let exact_reach = exact_solve(ctx, &reach_kernel, Objective::ReachAvoid)?;
    let exact_exit = exact_solve(ctx, &exit_kernel, Objective::SafetyExit)?;
    value_entries(ctx, "reach-avoid", &reach, exact_reach.as_ref());
    value_entries(ctx, "exit", &exit, exact_exit.as_ref());
    value_entries(ctx, &format!("discounted γ={}", sc.gamma), &discounted, None);
    value_entries(ctx, &format!("discounted-exit γ={}", sc.gamma), &discounted_exit, None);
    ctx.caveat(
        "DP values are computed on the grid kernel; they are exact only when the dynamics map nodes to nodes, \
         otherwise they carry an interpolation error",
    );
    ctx.emit("reach.csv".into(), reach.field.to_csv());
    ctx.emit("exit.csv".into(), exit.field.to_csv());
    ctx.emit("discounted.csv".into(), discounted.field.to_csv());
    ctx.emit("discounted-exit.csv".into(), discounted_exit.field.to_csv());
    Ok(Solved {
        reach_kernel,
        exit_kernel,
        reach,
        exit,
        discounted,
        discounted_exit,
    })
}

/// Direct linear solve for the cross-check column; skipped (with a caveat)
/// on large grids and on kernels whose system is singular.
fn exact_solve(ctx: &mut Ctx, kernel: &TransitionKernel, objective: Objective) -> Result<Option<ValueField>, CliError> {
    if kernel.transient_count() > EXACT_MAX_TRANSIENT {
        ctx.caveat("grid too large for the direct linear solve; exact cross-check skipped");
        return Ok(None);
    }
    match dp::solve_exact_small(kernel, objective) {
        Ok(f) => Ok(Some(f)),
        Err(DpError::Singular { .. }) => {
            ctx.caveat(
                "the direct linear solve is singular (some states never leave the transient set), so only the \
                 least fixed point from value iteration is reported",
            );
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn estimate_entry(quantity: &'static str, x0: &[f64], e: &McEstimate, seed: u64) -> EstimateEntry {
    let (lower, upper) = e.interval();
    EstimateEntry {
        quantity,
        x0: x0.to_vec(),
        p_hat: e.p_hat,
        half_width: e.half_width,
        lower,
        upper,
        trials: e.n_trials,
        horizon: e.horizon,
        delta: e.delta,
        seed,
        truncation_bias: if quantity == "liveness" {
            "over-estimates the infinite-horizon value"
        } else {
            "under-estimates the infinite-horizon value"
        },
        method: "MC",
    }
}

type Estimates = Vec<(Vec<f64>, McEstimate, McEstimate)>;

fn estimate(ctx: &mut Ctx) -> Result<Estimates, CliError> {
    let sc = ctx.sc;
    let mc = &sc.mc;
    let mut out = Vec::new();
    for (i, x0) in sc.initial_states.iter().enumerate() {
        let seed = mc.seed.wrapping_add(1000 * i as u64);
        let live = estimate_liveness(&sc.model, &sc.regions, x0, mc.horizon, mc.trials, mc.delta, seed)?;
        let reach = estimate_reach_avoid(&sc.model, &sc.regions, x0, mc.horizon, mc.trials, mc.delta, seed)?;
        ctx.report.estimates.push(estimate_entry("liveness", x0, &live, seed));
        ctx.report
            .estimates
            .push(estimate_entry("reach-avoid", x0, &reach, seed));
        out.push((x0.clone(), live, reach));
    }
    ctx.caveat(format!(
        "each MC interval holds with probability at least {} (Hoeffding); truncation at K={} steps biases liveness up and reach-avoid down",
        1.0 - mc.delta,
        mc.horizon
    ));
    Ok(out)
}

fn agreement(ctx: &mut Ctx, solved: &Solved, estimates: &Estimates) -> Result<(), CliError> {
    let k = ctx.sc.mc.horizon;
    let grid = solved.exit_kernel.grid().clone();
    let stay_k = ValueField::new(grid, stay_probability(&solved.exit_kernel, k), 0.0)?;
    let reach_k = finite_horizon(&solved.reach_kernel, Objective::ReachAvoid, k)?;
    for (x0, live, reach) in estimates {
        let p_live = 1.0 - solved.exit.field.eval(x0);
        let p_live_k = stay_k.eval(x0);
        let slack = (p_live_k - p_live).max(0.0);
        ctx.report.agreement.push(AgreementRow {
            quantity: "liveness",
            x0: x0.clone(),
            dp: p_live,
            mc: live.p_hat,
            half_width: live.half_width,
            truncation_slack: slack,
            agree: live.p_hat >= p_live - live.half_width - 1e-12
                && live.p_hat <= p_live + slack + live.half_width + 1e-12,
        });
        let v = solved.reach.field.eval(x0);
        let v_k = reach_k.eval(x0);
        let slack = (v - v_k).max(0.0);
        ctx.report.agreement.push(AgreementRow {
            quantity: "reach-avoid",
            x0: x0.clone(),
            dp: v,
            mc: reach.p_hat,
            half_width: reach.half_width,
            truncation_slack: slack,
            agree: reach.p_hat >= v - slack - reach.half_width - 1e-12 && reach.p_hat <= v + reach.half_width + 1e-12,
        });
    }
    if ctx.report.agreement.iter().any(|a| !a.agree) {
        ctx.caveat("some DP values fall outside the widened MC interval; see the agreement table");
    }
    Ok(())
}

fn assumption1_on(ctx: &mut Ctx, kernel: &TransitionKernel) -> dp::Assumption1Report {
    let sc = ctx.sc;
    let a1 = check_assumption1(kernel, sc.solver.tol, sc.solver.max_iter);
    ctx.report.assumption1 = Some(Assumption1Entry {
        holds: a1.holds,
        sup_stay_prob: a1.sup_stay_prob,
        trapped_nodes: a1.trapped.len(),
        iterations: a1.iterations,
        method: "DP graph check + stay-probability iteration",
    });
    a1
}

fn assumption1(ctx: &mut Ctx, solved: &Solved) -> dp::Assumption1Report {
    assumption1_on(ctx, &solved.reach_kernel)
}

fn extra_points(ctx: &Ctx) -> Vec<Vec<f64>> {
    let c = &ctx.sc.check;
    match (&ctx.sc.grid, c.extra_points) {
        (Some(g), n) if n > 0 => random_points(g.lower(), g.upper(), n, c.point_seed),
        _ => Vec::new(),
    }
}

fn check_points(ctx: &Ctx, tag: ConditionTag) -> Result<PointSet, CliError> {
    let extra = extra_points(ctx);
    Ok(PointSet::for_condition(
        &ctx.sc.model,
        &ctx.sc.regions,
        tag,
        ctx.sc.grid.as_ref(),
        &extra,
    )?)
}

fn omega(ctx: &Ctx) -> Result<barrierkit::regions::BoxRegion, CliError> {
    let grid = ctx.grid()?;
    let mut samples = grid.nodes();
    samples.extend(ctx.sc.initial_states.iter().cloned());
    compute_omega(&ctx.sc.model, &ctx.sc.regions, Some(&grid.bbox()), &samples)
        .map_err(|e| CliError::Numeric(e.to_string()))
}

fn extract(
    ctx: &mut Ctx,
    solved: &Solved,
    a1: dp::Assumption1Report,
    only: Option<ConditionTag>,
    strict: bool,
) -> Result<(), CliError> {
    let sc = ctx.sc;
    let x0s = sc.initial_states.clone();
    let tol = sc.check.tolerance;
    let tags: Vec<ConditionTag> = only.map_or(ConditionTag::ALL.to_vec(), |t| vec![t]);
    for tag in tags {
        let requested = sc.thresholds.for_tag(tag);
        let mut fields = SolvedFields {
            exit: Some(solved.exit.field.clone()),
            reach: Some(solved.reach.field.clone()),
            discounted: Some((sc.gamma, solved.discounted.field.clone())),
            discounted_exit: Some((sc.gamma, solved.discounted_exit.field.clone())),
            assumption1: Some(a1.clone()),
        };
        // Discounted kinds: raise γ when the scenario's factor falls short of
        // a requested threshold.
        if let Some(eps) = requested {
            let kernel_exit = match tag {
                ConditionTag::RaLowerDiscounted | ConditionTag::RaLowerPair => Some((false, &solved.reach_kernel)),
                ConditionTag::LivenessUpperDiscounted => Some((true, &solved.exit_kernel)),
                _ => None,
            };
            if let Some((exit, kernel)) = kernel_exit {
                let current = if exit {
                    &solved.discounted_exit
                } else {
                    &solved.discounted
                };
                let worst = x0s.iter().map(|x| current.field.eval(x)).fold(f64::INFINITY, f64::min);
                if worst < eps {
                    match find_discount(kernel, exit, &x0s, eps, sc.solver.tol) {
                        Ok((g, sol)) => {
                            if exit {
                                fields.discounted_exit = Some((g, sol.field));
                            } else {
                                fields.discounted = Some((g, sol.field));
                            }
                        }
                        Err(e) => {
                            ctx.report
                                .checks
                                .push(CheckEntry::refused(tag.name(), "extracted", e.to_string()));
                            ctx.failed |= strict;
                            continue;
                        }
                    }
                }
            }
        }
        let extracted = match extract_certificate(&fields, tag) {
            Ok(e) => e,
            Err(e @ CertError::Assumption1Violated { .. }) => {
                ctx.report
                    .checks
                    .push(CheckEntry::refused(tag.name(), "extracted", format!("refused: {e}")));
                ctx.failed |= strict;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let omega = if tag == ConditionTag::RaLowerPair {
            Some(omega(ctx)?)
        } else {
            None
        };
        let family = extracted.condition(0.0, omega)?;
        let points = check_points(ctx, tag)?;
        let eps = match requested {
            Some(e) => e,
            None => match best_threshold(&sc.model, &extracted.v, &family, &x0s, &points, tol) {
                Ok(e) => e,
                Err(CertError::NotCertified { report, .. }) => {
                    let mut entry = CheckEntry::from_report(&report, "extracted", extracted.gamma);
                    entry.note = Some("structural clauses fail; no threshold".into());
                    ctx.report.checks.push(entry);
                    ctx.failed = true;
                    continue;
                }
                Err(e) => return Err(e.into()),
            },
        };
        let kind = family.with_threshold(eps);
        let report = check_condition(&sc.model, &extracted.v, &kind, &x0s, &points, tol)?;
        ctx.failed |= !report.passed;
        ctx.report
            .checks
            .push(CheckEntry::from_report(&report, "extracted", extracted.gamma));
        let file = CertificateFile {
            condition: kind,
            v: extracted.v,
        };
        ctx.emit(format!("cert-{}.txt", tag.name()), file.to_text());
    }
    ctx.caveat(format!(
        "certificate checks are validated on a finite point set (grid nodes in X, their one-step images{}), \
         not proved on all of R^n",
        if sc.check.extra_points > 0 {
            ", random points"
        } else {
            ""
        }
    ));
    if sc.initial_states.len() > 1 {
        ctx.caveat(
            "with several initial states the discounted lower-bound condition may be unsatisfiable even when \
             every state has positive reach-avoid probability",
        );
    }
    Ok(())
}

/// Rebuilds `cond` as condition `tag`, keeping its threshold and parameters.
fn retarget(ctx: &Ctx, cond: &ConditionKind, tag: ConditionTag) -> Result<ConditionKind, CliError> {
    if cond.tag() == tag {
        return Ok(cond.clone());
    }
    let eps = cond.threshold();
    let gamma = cond.gamma().unwrap_or(ctx.sc.gamma);
    Ok(match tag {
        ConditionTag::SafetyLower => ConditionKind::SafetyLower { eps1: eps },
        ConditionTag::UnsafeReachUpper => ConditionKind::UnsafeReachUpper { eps1: eps },
        ConditionTag::RaLowerA1 => ConditionKind::RaLowerA1 { eps2: eps },
        ConditionTag::RaLowerDiscounted => ConditionKind::RaLowerDiscounted { eps2: eps, gamma },
        ConditionTag::LivenessUpperDiscounted => ConditionKind::LivenessUpperDiscounted { eps1: eps, gamma },
        ConditionTag::RaLowerPair => {
            return Err(CliError::Validation(
                "the pair condition needs w and Ω; use a certificate file written for ra-lower-pair".into(),
            ));
        }
    })
}

fn verify(ctx: &mut Ctx, options: &RunOptions) -> Result<(), CliError> {
    let text = options
        .certificate
        .as_ref()
        .ok_or_else(|| CliError::Validation("verify needs --certificate".into()))?;
    let file = CertificateFile::from_text(text)?;
    let kind = match options.condition {
        Some(tag) => retarget(ctx, &file.condition, tag)?,
        None => file.condition.clone(),
    };
    let points = check_points(ctx, kind.tag())?;
    if points.is_empty() {
        return Err(CliError::Validation(
            "no check points: add a [grid] block or check.extra_points".into(),
        ));
    }
    let sc = ctx.sc;
    let report = check_condition(
        &sc.model,
        &file.v,
        &kind,
        &sc.initial_states,
        &points,
        sc.check.tolerance,
    )?;
    ctx.failed |= !report.passed;
    ctx.report
        .checks
        .push(CheckEntry::from_report(&report, "file", kind.gamma()));
    ctx.caveat(format!(
        "validated on {} points (grid nodes in X and their one-step images); not a proof over R^n",
        report.points_checked
    ));
    Ok(())
}

fn synth(ctx: &mut Ctx, condition: Option<ConditionTag>) -> Result<(), CliError> {
    let sc = ctx.sc;
    let settings = sc
        .synth
        .clone()
        .ok_or_else(|| CliError::Validation("synthesize needs a [synth] block".into()))?;
    let tag = condition.unwrap_or(settings.condition);
    let family = match tag {
        ConditionTag::SafetyLower => ConditionKind::SafetyLower { eps1: 0.0 },
        ConditionTag::UnsafeReachUpper => ConditionKind::UnsafeReachUpper { eps1: 0.0 },
        ConditionTag::RaLowerA1 => ConditionKind::RaLowerA1 { eps2: 0.0 },
        ConditionTag::RaLowerDiscounted => ConditionKind::RaLowerDiscounted {
            eps2: 0.0,
            gamma: sc.gamma,
        },
        ConditionTag::LivenessUpperDiscounted => ConditionKind::LivenessUpperDiscounted {
            eps1: 0.0,
            gamma: sc.gamma,
        },
        ConditionTag::RaLowerPair => return Err(SynthError::Unsupported(tag).into()),
    };
    let template = Template::degree(sc.model.n(), settings.degree, settings.bound)?;
    let samples = check_points(ctx, tag)?;
    if samples.is_empty() {
        return Err(CliError::Validation(
            "no sample points: add a [grid] block or check.extra_points".into(),
        ));
    }
    let extra = match &sc.grid {
        Some(g) if sc.check.extra_points > 0 => random_points(
            g.lower(),
            g.upper(),
            sc.check.extra_points,
            sc.check.point_seed.wrapping_add(1),
        ),
        _ => Vec::new(),
    };
    let validation = reachable_samples(
        &sc.model,
        &sc.regions,
        tag,
        &sc.initial_states,
        sc.check.validation_trajectories,
        sc.mc.horizon,
        sc.check.point_seed.wrapping_add(2),
        &extra,
    )?;
    let options = SynthOptions {
        required_threshold: settings.threshold,
        tolerance: sc.check.tolerance,
    };
    let result = match synthesize(
        &sc.model,
        &family,
        &template,
        &samples,
        &validation,
        &sc.initial_states,
        &options,
    ) {
        Ok(r) => r,
        Err(SynthError::Infeasible) => {
            ctx.report.checks.push(CheckEntry::refused(
                tag.name(),
                "synthesized",
                SynthError::Infeasible.to_string(),
            ));
            ctx.failed = true;
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let CertFunction::Polynomial(poly) = &result.certificate else {
        unreachable!("synthesis returns polynomials")
    };
    ctx.report.synthesis = Some(SynthEntry {
        condition: tag.name().to_string(),
        degree: settings.degree,
        bound: settings.bound,
        status: match result.status {
            SynthStatus::Validated => "validated",
            SynthStatus::SampleOptimistic => "sample-optimistic",
        },
        threshold: result.threshold,
        monomials: poly.exponents().to_vec(),
        coefficients: poly.coeffs().to_vec(),
        lp_rows: result.lp.rows.len(),
        lp_iterations: result.lp_iterations,
        lp_samples: result.lp_samples,
        method: "LP on sampled clauses, re-checked on simulated reachable states",
    });
    ctx.report.checks.push(CheckEntry::from_report(
        &result.validation,
        "synthesized",
        result.condition.gamma(),
    ));
    ctx.failed |= result.status != SynthStatus::Validated;
    ctx.emit("lp.txt".into(), result.lp.to_text());
    let file = CertificateFile {
        condition: result.condition.clone(),
        v: result.certificate.clone(),
    };
    ctx.emit(format!("cert-synth-{}.txt", tag.name()), file.to_text());
    ctx.caveat(format!(
        "the synthesized certificate was re-validated on {} states visited by simulated runs and their images; \
         sampled constraints can miss violations elsewhere",
        result.validation.points_checked
    ));
    Ok(())
}

fn report_all(ctx: &mut Ctx) -> Result<(), CliError> {
    let solved = solve(ctx)?;
    let a1 = assumption1(ctx, &solved);
    let estimates = estimate(ctx)?;
    agreement(ctx, &solved, &estimates)?;
    extract(ctx, &solved, a1, None, false)?;
    if ctx.sc.synth.is_some() {
        synth(ctx, None)?;
    }
    Ok(())
}
