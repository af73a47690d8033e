//! Scenario files: TOML documents describing a system, its regions and the
//! analysis settings. See `scenarios/README.md` for the schema.

use std::fmt;
use std::path::Path;

use barrierkit::certificate::{ConditionTag, DEFAULT_TOLERANCE};
use barrierkit::dp::{Grid, DEFAULT_MAX_ITER, DEFAULT_TOL};
use barrierkit::model::{quantize, DisturbanceDist, Quantization, SystemModel};
use barrierkit::regions::{BoxRegion, RegionSpec};
use barrierkit::synth::DEFAULT_COEFF_BOUND;
use serde::Deserialize;

/// Samples drawn when checking region nesting and grid coverage.
const VALIDATION_SAMPLES: usize = 4000;
const VALIDATION_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioErrors(pub Vec<String>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    description: Option<String>,
    initial_states: Vec<Vec<f64>>,
    gamma: Option<f64>,
    system: SystemBlock,
    regions: RegionsBlock,
    #[serde(default)]
    thresholds: Thresholds,
    grid: Option<GridBlock>,
    #[serde(default)]
    solver: SolverBlock,
    #[serde(default)]
    mc: McBlock,
    #[serde(default)]
    check: CheckBlock,
    synth: Option<SynthBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemBlock {
    n: usize,
    m: usize,
    dynamics: Vec<String>,
    disturbance: DisturbanceBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DisturbanceBlock {
    None,
    Finite {
        atoms: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
    Uniform {
        lo: Vec<f64>,
        hi: Vec<f64>,
        atoms: usize,
    },
    Gaussian {
        mean: Vec<f64>,
        std: Vec<f64>,
        atoms: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionsBlock {
    safe: String,
    #[serde(default = "no_target")]
    target: String,
}

fn no_target() -> String {
    "false".into()
}

/// Optional thresholds per condition; absent ones are computed.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Lower bound on the liveness probability (safety-lower).
    pub epsilon1: Option<f64>,
    /// Lower bound on the reach-avoid probability (all reach-avoid lower kinds).
    pub epsilon2: Option<f64>,
    /// Upper bound on the reach-avoid probability (unsafe-reach-upper).
    pub epsilon1_prime: Option<f64>,
    /// Lower bound on the exit probability (liveness-upper-discounted).
    pub liveness_epsilon1: Option<f64>,
}

impl Thresholds {
    pub fn for_tag(&self, tag: ConditionTag) -> Option<f64> {
        match tag {
            ConditionTag::SafetyLower => self.epsilon1,
            ConditionTag::UnsafeReachUpper => self.epsilon1_prime,
            ConditionTag::LivenessUpperDiscounted => self.liveness_epsilon1,
            ConditionTag::RaLowerA1 | ConditionTag::RaLowerDiscounted | ConditionTag::RaLowerPair => self.epsilon2,
        }
    }

    fn all(&self) -> [(&'static str, Option<f64>); 4] {
        [
            ("epsilon1", self.epsilon1),
            ("epsilon2", self.epsilon2),
            ("epsilon1_prime", self.epsilon1_prime),
            ("liveness_epsilon1", self.liveness_epsilon1),
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridBlock {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McBlock {
    pub horizon: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for McBlock {
    fn default() -> Self {
        McBlock {
            horizon: 1000,
            trials: 10_000,
            delta: 0.05,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckBlock {
    pub tolerance: f64,
    /// Uniform random points added to the check set, drawn in the grid box.
    pub extra_points: usize,
    pub point_seed: u64,
    /// Simulated runs whose visited states re-validate synthesized certificates.
    pub validation_trajectories: usize,
}

impl Default for CheckBlock {
    fn default() -> Self {
        CheckBlock {
            tolerance: DEFAULT_TOLERANCE,
            extra_points: 0,
            point_seed: 7,
            validation_trajectories: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthBlock {
    pub condition: String,
    pub degree: u32,
    #[serde(default = "default_bound")]
    pub bound: f64,
    /// Threshold the certificate must reach.
    pub threshold: Option<f64>,
}

fn default_bound() -> f64 {
    DEFAULT_COEFF_BOUND
}

#[derive(Debug, Clone)]
pub struct SynthSettings {
    pub condition: ConditionTag,
    pub degree: u32,
    pub bound: f64,
    pub threshold: Option<f64>,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub model: SystemModel,
    pub regions: RegionSpec,
    pub initial_states: Vec<Vec<f64>>,
    pub gamma: f64,
    pub thresholds: Thresholds,
    pub grid: Option<Grid>,
    pub solver: SolverBlock,
    pub mc: McBlock,
    pub check: CheckBlock,
    pub synth: Option<SynthSettings>,
}

/// Discount factor used when a scenario does not set one.
pub const DEFAULT_GAMMA: f64 = 0.999;

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioErrors(vec![format!("{}: {e}", path.display())]))?;
    let fallback = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    parse_scenario(&text, fallback.as_deref().unwrap_or("scenario"))
}

/// Parses and cross-validates a scenario, collecting every error found.
pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<Scenario, ScenarioErrors> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioErrors(vec![format!("parse error: {e}")]))?;
    let mut errors = Vec::new();
    let sys = &file.system;

    let dist = match build_disturbance(&sys.disturbance, sys.m) {
        Ok(d) => Some(d),
        Err(e) => {
            errors.push(format!("system.disturbance: {e}"));
            None
        }
    };
    if sys.dynamics.len() != sys.n {
        errors.push(format!(
            "system.dynamics: {} expressions given for n = {}",
            sys.dynamics.len(),
            sys.n
        ));
    }
    let model = dist.and_then(|d| match SystemModel::parse(sys.n, sys.m, &sys.dynamics, d) {
        Ok(m) => Some(m),
        Err(e) => {
            errors.push(format!("system.dynamics: {e}"));
            None
        }
    });
    let regions = match RegionSpec::parse(&file.regions.safe, &file.regions.target, sys.n) {
        Ok(r) => Some(r),
        Err(e) => {
            errors.push(format!("regions: {e}"));
            None
        }
    };

    if file.initial_states.is_empty() {
        errors.push("initial_states: at least one state is required".into());
    }
    for (i, x0) in file.initial_states.iter().enumerate() {
        if x0.len() != sys.n {
            errors.push(format!("initial_states[{i}]: dimension {} but n = {}", x0.len(), sys.n));
        } else if x0.iter().any(|v| !v.is_finite()) {
            errors.push(format!("initial_states[{i}]: non-finite coordinate"));
        }
    }
    let gamma = file.gamma.unwrap_or(DEFAULT_GAMMA);
    if !(gamma > 0.0 && gamma < 1.0) {
        errors.push(format!("gamma: {gamma} must lie in (0, 1)"));
    }
    for (name, eps) in file.thresholds.all() {
        if let Some(e) = eps {
            if !(0.0..=1.0).contains(&e) {
                errors.push(format!("thresholds.{name}: {e} must lie in [0, 1]"));
            }
        }
    }
    let grid = file.grid.as_ref().and_then(|g| {
        if g.lower.len() != sys.n {
            errors.push(format!("grid: dimension {} but n = {}", g.lower.len(), sys.n));
            return None;
        }
        match Grid::new(g.lower.clone(), g.upper.clone(), g.cells.clone()) {
            Ok(grid) => Some(grid),
            Err(e) => {
                errors.push(format!("grid: {e}"));
                None
            }
        }
    });
    if !(file.solver.tol > 0.0) || file.solver.max_iter == 0 {
        errors.push("solver: tol must be positive and max_iter at least 1".into());
    }
    let mc = &file.mc;
    if mc.horizon == 0 || mc.trials == 0 || !(mc.delta > 0.0 && mc.delta < 1.0) {
        errors.push("mc: horizon and trials must be positive and delta must lie in (0, 1)".into());
    }
    if !(file.check.tolerance >= 0.0) {
        errors.push("check.tolerance must be non-negative".into());
    }
    let synth = file.synth.as_ref().and_then(|s| {
        let tag = match s.condition.parse::<ConditionTag>() {
            Ok(t) => t,
            Err(e) => {
                errors.push(format!("synth.condition: {e}"));
                return None;
            }
        };
        if tag == ConditionTag::RaLowerPair {
            errors.push("synth.condition: the pair condition is not synthesized; use extraction".into());
        }
        if !(s.bound >= 0.0 && s.bound.is_finite()) {
            errors.push(format!("synth.bound: {} must be finite and non-negative", s.bound));
        }
        if let Some(t) = s.threshold {
            if !(0.0..=1.0).contains(&t) {
                errors.push(format!("synth.threshold: {t} must lie in [0, 1]"));
            }
        }
        Some(SynthSettings {
            condition: tag,
            degree: s.degree,
            bound: s.bound,
            threshold: s.threshold,
        })
    });

    if let (Some(regions), true) = (&regions, errors.is_empty()) {
        cross_validate(regions, grid.as_ref(), &file.initial_states, &mut errors);
    }

    match (model, regions, errors.is_empty()) {
        (Some(model), Some(regions), true) => Ok(Scenario {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            description: file.description,
            model,
            regions,
            initial_states: file.initial_states,
            gamma,
            thresholds: file.thresholds,
            grid,
            solver: file.solver,
            mc: file.mc,
            check: file.check,
            synth,
        }),
        _ => Err(ScenarioErrors(errors)),
    }
}

fn build_disturbance(block: &DisturbanceBlock, m: usize) -> Result<DisturbanceDist, String> {
    let per_coord = |name: &str, a: &[f64], b: &[f64]| -> Result<(), String> {
        if a.len() != m || b.len() != m {
            Err(format!("{name} needs {m} entries per parameter"))
        } else {
            Ok(())
        }
    };
    match block {
        DisturbanceBlock::None => Ok(DisturbanceDist::degenerate(m)),
        DisturbanceBlock::Finite { atoms, probs } => {
            if let Some(a) = atoms.iter().find(|a| a.len() != m) {
                return Err(format!("atom {a:?} does not have m = {m} entries"));
            }
            DisturbanceDist::new(atoms.clone(), probs.clone()).map_err(|e| e.to_string())
        }
        DisturbanceBlock::Uniform { lo, hi, atoms } => {
            per_coord("uniform", lo, hi)?;
            let factors = lo
                .iter()
                .zip(hi)
                .map(|(&lo, &hi)| quantize(Quantization::Uniform { lo, hi }, *atoms))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            DisturbanceDist::product(&factors).map_err(|e| e.to_string())
        }
        DisturbanceBlock::Gaussian { mean, std, atoms } => {
            per_coord("gaussian", mean, std)?;
            let factors = mean
                .iter()
                .zip(std)
                .map(|(&mean, &std)| quantize(Quantization::Gaussian { mean, std }, *atoms))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            DisturbanceDist::product(&factors).map_err(|e| e.to_string())
        }
    }
}

/// Sampling checks of `X_r ⊆ X` and of `X` lying inside the grid box.
fn cross_validate(regions: &RegionSpec, grid: Option<&Grid>, x0s: &[Vec<f64>], errors: &mut Vec<String>) {
    let mut samples: Vec<Vec<f64>> = x0s.to_vec();
    if let Some(g) = grid {
        samples.extend(g.nodes());
        samples.extend(g.halo());
        let wide = g.bbox().padded(0.5);
        samples.extend(wide.sample_uniform(VALIDATION_SAMPLES, VALIDATION_SEED));
        let bbox = g.bbox();
        for x in &samples {
            if !bbox.contains(x) && matches!(regions.is_safe(x), Ok(true)) {
                errors.push(format!("grid: safe set extends outside the grid box, e.g. at {x:?}"));
                break;
            }
        }
    } else if let Some(b) = BoxRegion::bounding(x0s.iter().map(Vec::as_slice)) {
        samples.extend(b.padded(1.0).sample_uniform(VALIDATION_SAMPLES, VALIDATION_SEED));
    }
    let report = regions.validate_nesting(&samples);
    if let Some(w) = report.witnesses.first() {
        errors.push(format!("regions: target is not inside the safe set, e.g. at {w:?}"));
    }
    if let Some(e) = report.errors.first() {
        errors.push(format!("regions: predicate evaluation failed: {e}"));
    }
}
