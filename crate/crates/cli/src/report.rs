//! Structured command results and their text rendering.

use std::fmt::Write as _;

use barrierkit::certificate::CheckReport;
use serde::Serialize;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub scenario: String,
    pub command: String,
    pub values: Vec<ValueEntry>,
    pub estimates: Vec<EstimateEntry>,
    pub agreement: Vec<AgreementRow>,
    pub assumption1: Option<Assumption1Entry>,
    pub checks: Vec<CheckEntry>,
    pub synthesis: Option<SynthEntry>,
    pub trajectories: Vec<TrajectoryEntry>,
    pub caveats: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueEntry {
    pub objective: String,
    pub x0: Vec<f64>,
    pub value: f64,
    pub method: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Direct linear solve on the same kernel, when small enough.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateEntry {
    pub quantity: &'static str,
    pub x0: Vec<f64>,
    pub p_hat: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub trials: usize,
    pub horizon: usize,
    pub delta: f64,
    pub seed: u64,
    pub truncation_bias: &'static str,
    pub method: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementRow {
    pub quantity: &'static str,
    pub x0: Vec<f64>,
    pub dp: f64,
    pub mc: f64,
    pub half_width: f64,
    /// `|P(within K steps) - P(infinite horizon)|` on the kernel.
    pub truncation_slack: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assumption1Entry {
    pub holds: bool,
    pub sup_stay_prob: f64,
    pub trapped_nodes: usize,
    pub iterations: usize,
    pub method: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClauseEntry {
    pub clause: &'static str,
    pub worst_slack: f64,
    pub worst_point: Vec<f64>,
    pub evaluated: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessEntry {
    pub clause: &'static str,
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub condition: String,
    pub source: String,
    pub threshold: f64,
    pub gamma: Option<f64>,
    pub passed: bool,
    pub tolerance: f64,
    pub min_slack: f64,
    pub clauses: Vec<ClauseEntry>,
    pub witnesses: Vec<WitnessEntry>,
    pub violation_count: usize,
    pub points_checked: usize,
    pub points_target: usize,
    pub points_safe_non_target: usize,
    pub points_unsafe: usize,
    pub method: &'static str,
    pub note: Option<String>,
}

impl CheckEntry {
    pub fn from_report(r: &CheckReport, source: &str, gamma: Option<f64>) -> CheckEntry {
        CheckEntry {
            condition: r.condition.to_string(),
            source: source.to_string(),
            threshold: r.threshold,
            gamma,
            passed: r.passed,
            tolerance: r.tolerance,
            min_slack: r.min_slack(),
            clauses: r
                .clauses
                .iter()
                .map(|c| ClauseEntry {
                    clause: c.clause.name(),
                    worst_slack: c.worst_slack,
                    worst_point: c.worst_point.clone(),
                    evaluated: c.evaluated,
                })
                .collect(),
            witnesses: r
                .witnesses
                .iter()
                .map(|w| WitnessEntry {
                    clause: w.clause.name(),
                    point: w.point.clone(),
                    lhs: w.lhs,
                    rhs: w.rhs,
                    slack: w.slack,
                    error: w.error.clone(),
                })
                .collect(),
            violation_count: r.violation_count,
            points_checked: r.points_checked,
            points_target: r.points_target,
            points_safe_non_target: r.points_safe_non_target,
            points_unsafe: r.points_unsafe,
            method: "pointwise-check",
            note: None,
        }
    }

    /// Entry for a certificate that could not be produced.
    pub fn refused(condition: &str, source: &str, reason: String) -> CheckEntry {
        CheckEntry {
            condition: condition.to_string(),
            source: source.to_string(),
            threshold: 0.0,
            gamma: None,
            passed: false,
            tolerance: 0.0,
            min_slack: f64::NAN,
            clauses: Vec::new(),
            witnesses: Vec::new(),
            violation_count: 0,
            points_checked: 0,
            points_target: 0,
            points_safe_non_target: 0,
            points_unsafe: 0,
            method: "pointwise-check",
            note: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthEntry {
    pub condition: String,
    pub degree: u32,
    pub bound: f64,
    pub status: &'static str,
    pub threshold: f64,
    pub monomials: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
    pub lp_rows: usize,
    pub lp_iterations: usize,
    pub lp_samples: usize,
    pub method: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryEntry {
    pub x0: Vec<f64>,
    pub steps: usize,
    pub final_state: Vec<f64>,
    pub error: Option<String>,
    pub file: String,
}

fn pt(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "scenario: {}", self.scenario);
        let _ = writeln!(o, "command:  {}", self.command);
        if !self.values.is_empty() {
            let _ = writeln!(o, "\nvalue functions [DP]");
            for v in &self.values {
                let exact = v.exact.map(|e| format!("  exact {e:.9}")).unwrap_or_default();
                let _ = writeln!(
                    o,
                    "  {:<24} x0={:<10} {:.9}  ({} iterations, residual {:.1e}{}){}",
                    v.objective,
                    pt(&v.x0),
                    v.value,
                    v.iterations,
                    v.residual,
                    if v.converged { "" } else { ", NOT converged" },
                    exact
                );
            }
        }
        if !self.estimates.is_empty() {
            let _ = writeln!(o, "\nestimates [MC]");
            for e in &self.estimates {
                let _ = writeln!(
                    o,
                    "  {:<12} x0={:<10} {:.4} ± {:.4}  [{:.4}, {:.4}]  n={} K={} δ={} ({})",
                    e.quantity,
                    pt(&e.x0),
                    e.p_hat,
                    e.half_width,
                    e.lower,
                    e.upper,
                    e.trials,
                    e.horizon,
                    e.delta,
                    e.truncation_bias
                );
            }
        }
        if !self.agreement.is_empty() {
            let _ = writeln!(o, "\nDP vs MC agreement");
            let _ = writeln!(
                o,
                "  {:<12} {:<10} {:>10} {:>10} {:>10} {:>10}  ok",
                "quantity", "x0", "DP", "MC", "half-w", "trunc"
            );
            for a in &self.agreement {
                let _ = writeln!(
                    o,
                    "  {:<12} {:<10} {:>10.6} {:>10.6} {:>10.6} {:>10.2e}  {}",
                    a.quantity,
                    pt(&a.x0),
                    a.dp,
                    a.mc,
                    a.half_width,
                    a.truncation_slack,
                    if a.agree { "yes" } else { "NO" }
                );
            }
        }
        if let Some(a) = &self.assumption1 {
            let _ = writeln!(
                o,
                "\nassumption 1: {} (sup stay probability {:.3e}, {} trapped nodes) [{}]",
                if a.holds { "holds" } else { "fails" },
                a.sup_stay_prob,
                a.trapped_nodes,
                a.method
            );
        }
        if !self.checks.is_empty() {
            let _ = writeln!(o, "\ncertificate checks [pointwise-check]");
            for c in &self.checks {
                if let Some(note) = &c.note {
                    let _ = writeln!(o, "  {:<26} {:<11} {}", c.condition, c.source, note);
                    continue;
                }
                let gamma = c.gamma.map(|g| format!(" γ={g}")).unwrap_or_default();
                let _ = writeln!(
                    o,
                    "  {:<26} {:<11} ε={:.6}{}  {}  min slack {:.3e}  ({} points)",
                    c.condition,
                    c.source,
                    c.threshold,
                    gamma,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.min_slack,
                    c.points_checked
                );
                for w in c.witnesses.iter().take(5) {
                    let _ = writeln!(
                        o,
                        "      violated {} at {}: lhs {:.6} rhs {:.6} slack {:.3e}{}",
                        w.clause,
                        pt(&w.point),
                        w.lhs,
                        w.rhs,
                        w.slack,
                        w.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
                    );
                }
            }
        }
        if let Some(s) = &self.synthesis {
            let _ = writeln!(
                o,
                "\nsynthesis [LP + pointwise-check]: {} degree {} → {} at ε={:.6} ({} LP rows, {} pivots)",
                s.condition, s.degree, s.status, s.threshold, s.lp_rows, s.lp_iterations
            );
            for (e, c) in s.monomials.iter().zip(&s.coefficients) {
                let _ = writeln!(o, "    {c:+.9} · x^{e:?}");
            }
        }
        for t in &self.trajectories {
            let _ = writeln!(
                o,
                "trajectory from {}: {} steps, final {}{} → {}",
                pt(&t.x0),
                t.steps,
                pt(&t.final_state),
                t.error.as_ref().map(|e| format!(" (stopped: {e})")).unwrap_or_default(),
                t.file
            );
        }
        if !self.caveats.is_empty() {
            let _ = writeln!(o, "\ncaveats");
            for c in &self.caveats {
                let _ = writeln!(o, "  - {c}");
            }
        }
        o
    }
}
