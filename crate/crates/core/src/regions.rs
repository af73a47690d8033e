//! Safe set `X`, target set `X_r ⊆ X`, and the sampled one-step reachable box.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{EvalError, ParseError, Predicate};
use crate::model::{ModelError, SystemModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("{set} predicate: {source}")]
    Parse { set: &'static str, source: ParseError },
    #[error("evaluating {set} predicate at {x:?}: {source}")]
    Eval {
        set: &'static str,
        x: Vec<f64>,
        source: EvalError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite image point {0:?}")]
    NonFinite(Vec<f64>),
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateClass {
    Target,
    SafeNonTarget,
    Unsafe,
}

impl StateClass {
    pub fn in_safe(self) -> bool {
        !matches!(self, StateClass::Unsafe)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub safe: Predicate,
    pub target: Predicate,
}

impl RegionSpec {
    pub fn new(safe: Predicate, target: Predicate) -> Self {
        RegionSpec { safe, target }
    }

    pub fn parse(safe: &str, target: &str, n: usize) -> Result<Self, RegionError> {
        Ok(RegionSpec {
            safe: Predicate::parse(safe, n).map_err(|source| RegionError::Parse { set: "safe", source })?,
            target: Predicate::parse(target, n).map_err(|source| RegionError::Parse { set: "target", source })?,
        })
    }

    /// Same safe set with an empty target, as used by the safety (exit) problem.
    pub fn without_target(&self) -> Self {
        RegionSpec {
            safe: self.safe.clone(),
            target: Predicate::Const(false),
        }
    }

    pub fn is_safe(&self, x: &[f64]) -> Result<bool, RegionError> {
        self.safe.eval(x).map_err(|source| RegionError::Eval {
            set: "safe",
            x: x.to_vec(),
            source,
        })
    }

    pub fn is_target(&self, x: &[f64]) -> Result<bool, RegionError> {
        self.target.eval(x).map_err(|source| RegionError::Eval {
            set: "target",
            x: x.to_vec(),
            source,
        })
    }

    pub fn classify(&self, x: &[f64]) -> Result<StateClass, RegionError> {
        Ok(if self.is_target(x)? {
            StateClass::Target
        } else if self.is_safe(x)? {
            StateClass::SafeNonTarget
        } else {
            StateClass::Unsafe
        })
    }

    /// Points that lie in `X_r` but not in `X`.
    pub fn validate_nesting(&self, samples: &[Vec<f64>]) -> NestingReport {
        let mut report = NestingReport::default();
        for x in samples {
            match (self.is_target(x), self.is_safe(x)) {
                (Ok(true), Ok(false)) => {
                    report.target_hits += 1;
                    report.witnesses.push(x.clone());
                }
                (Ok(true), Ok(true)) => report.target_hits += 1,
                (Ok(false), _) => {}
                (Err(e), _) | (_, Err(e)) => report.errors.push(e.to_string()),
            }
        }
        report.samples = samples.len();
        report
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NestingReport {
    pub samples: usize,
    pub target_hits: usize,
    pub witnesses: Vec<Vec<f64>>,
    pub errors: Vec<String>,
}

impl NestingReport {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty() && self.errors.is_empty()
    }

    /// No sample hit the target, so the check holds vacuously.
    pub fn vacuous(&self) -> bool {
        self.target_hits == 0
    }
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, RegionError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(RegionError::InvalidBox("bound dimensions differ or are empty".into()));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return Err(RegionError::InvalidBox(format!("{lower:?} .. {upper:?}")));
        }
        Ok(BoxRegion { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Smallest box containing every point; `None` for an empty set.
    pub fn bounding<'a, I: IntoIterator<Item = &'a [f64]>>(points: I) -> Option<BoxRegion> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut lower = first.to_vec();
        let mut upper = first.to_vec();
        for p in it {
            for i in 0..lower.len() {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        Some(BoxRegion { lower, upper })
    }

    /// Uniform random points in the box.
    pub fn sample_uniform(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.lower
                    .iter()
                    .zip(&self.upper)
                    .map(|(l, u)| if u > l { rng.gen_range(*l..=*u) } else { *l })
                    .collect()
            })
            .collect()
    }

    pub fn padded(&self, fraction: f64) -> BoxRegion {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let side = u - l;
                let pad = if side > 0.0 { fraction * side } else { fraction };
                (l - pad, u + pad)
            })
            .unzip();
        BoxRegion { lower, upper }
    }
}

/// Fraction of each side length added around the sampled reachable box.
pub const OMEGA_PADDING: f64 = 0.01;

/// Axis-aligned box containing `X ∪ f(X, Θ)` as seen from the samples.
///
/// Only samples inside `X` contribute (with their images). The result also
/// contains `region`, which is typically the grid box; pass the grid box so
/// that grid nodes lie inside the returned set.
pub fn compute_omega(
    model: &SystemModel,
    regions: &RegionSpec,
    region: Option<&BoxRegion>,
    samples: &[Vec<f64>],
) -> Result<BoxRegion, RegionError> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    if let Some(b) = region {
        points.push(b.lower.clone());
        points.push(b.upper.clone());
    }
    for x in samples {
        if !regions.is_safe(x)? {
            continue;
        }
        points.push(x.clone());
        for (_, y) in model.images(x)? {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(RegionError::NonFinite(y));
            }
            points.push(y);
        }
    }
    let bbox = BoxRegion::bounding(points.iter().map(Vec::as_slice))
        .ok_or_else(|| RegionError::InvalidBox("no samples inside the safe set".into()))?;
    Ok(bbox.padded(OMEGA_PADDING))
}
