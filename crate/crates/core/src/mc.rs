//! Truncated-horizon Monte Carlo estimates of liveness and reach-avoid
//! probabilities with Hoeffding confidence half-widths.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so estimates
//! do not depend on the number of worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, SystemModel};
use crate::regions::{RegionError, RegionSpec, StateClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo parameters: {0}")]
    Params(String),
    #[error("trial {trial} failed after {completed} completed trials ({successes} successes): {message}")]
    Simulation {
        trial: usize,
        completed: usize,
        successes: usize,
        message: String,
    },
}

/// Which way finite-horizon truncation biases the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `P(stay through K) >= P(stay forever)`.
    UpperBiasedForLiveness,
    /// `P(reach within K) <= P(reach eventually)`.
    LowerBiasedForReachAvoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub successes: usize,
    pub n_trials: usize,
    pub horizon: usize,
    pub delta: f64,
    pub half_width: f64,
    pub direction: Direction,
}

impl McEstimate {
    pub fn interval(&self) -> (f64, f64) {
        (
            (self.p_hat - self.half_width).max(0.0),
            (self.p_hat + self.half_width).min(1.0),
        )
    }

    /// Whether `p` lies within `p_hat ± (half_width + slack)`.
    pub fn covers(&self, p: f64, slack: f64) -> bool {
        (p - self.p_hat).abs() <= self.half_width + slack
    }
}

/// `sqrt(ln(2/δ) / (2n))`.
pub fn hoeffding_half_width(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Reached(usize),
    Exited(usize),
    Survived,
}

/// Per-trial generator for trial `trial` of a run keyed by `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs one trajectory for at most `horizon` steps and stops at the first
/// absorbing event. With `use_target == false` only exits from `X` count.
pub fn run_trial(
    model: &SystemModel,
    regions: &RegionSpec,
    x0: &[f64],
    horizon: usize,
    use_target: bool,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome, String> {
    let classify = |x: &[f64]| -> Result<StateClass, RegionError> {
        if use_target {
            regions.classify(x)
        } else if regions.is_safe(x)? {
            Ok(StateClass::SafeNonTarget)
        } else {
            Ok(StateClass::Unsafe)
        }
    };
    let mut x = x0.to_vec();
    for k in 0..=horizon {
        match classify(&x).map_err(|e| e.to_string())? {
            StateClass::Target => return Ok(TrialOutcome::Reached(k)),
            StateClass::Unsafe => return Ok(TrialOutcome::Exited(k)),
            StateClass::SafeNonTarget => {}
        }
        if k == horizon {
            break;
        }
        let th = model.dist().sample(rng);
        x = model.step(&x, th).map_err(|e: ModelError| e.to_string())?;
    }
    Ok(TrialOutcome::Survived)
}

fn validate(horizon: usize, n: usize, delta: f64, x0: &[f64], model: &SystemModel) -> Result<(), McError> {
    if horizon == 0 {
        return Err(McError::Params("horizon must be at least 1".into()));
    }
    if n == 0 {
        return Err(McError::Params("need at least one trial".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(McError::Params(format!("delta {delta} must lie in (0, 1)")));
    }
    if x0.len() != model.n() {
        return Err(McError::Params(format!(
            "x0 has dimension {}, expected {}",
            x0.len(),
            model.n()
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    model: &SystemModel,
    regions: &RegionSpec,
    x0: &[f64],
    horizon: usize,
    n: usize,
    delta: f64,
    seed: u64,
    use_target: bool,
) -> Result<McEstimate, McError> {
    validate(horizon, n, delta, x0, model)?;
    let outcomes: Vec<Result<TrialOutcome, String>> = (0..n)
        .into_par_iter()
        .map(|i| run_trial(model, regions, x0, horizon, use_target, &mut trial_rng(seed, i)))
        .collect();
    let success = |o: &TrialOutcome| match o {
        TrialOutcome::Reached(_) => use_target,
        TrialOutcome::Survived => !use_target,
        TrialOutcome::Exited(_) => false,
    };
    let mut successes = 0;
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            Ok(o) => successes += usize::from(success(o)),
            Err(message) => {
                return Err(McError::Simulation {
                    trial: i,
                    completed: i,
                    successes,
                    message: message.clone(),
                })
            }
        }
    }
    Ok(McEstimate {
        p_hat: successes as f64 / n as f64,
        successes,
        n_trials: n,
        horizon,
        delta,
        half_width: hoeffding_half_width(n, delta),
        direction: if use_target {
            Direction::LowerBiasedForReachAvoid
        } else {
            Direction::UpperBiasedForLiveness
        },
    })
}

/// Fraction of trials that stay in `X` at steps `0..=horizon`.
pub fn estimate_liveness(
    model: &SystemModel,
    regions: &RegionSpec,
    x0: &[f64],
    horizon: usize,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<McEstimate, McError> {
    estimate(model, regions, x0, horizon, n, delta, seed, false)
}

/// Fraction of trials that hit `X_r` at some step `k <= horizon` while
/// staying in `X` at steps `0..=k`.
pub fn estimate_reach_avoid(
    model: &SystemModel,
    regions: &RegionSpec,
    x0: &[f64],
    horizon: usize,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<McEstimate, McError> {
    estimate(model, regions, x0, horizon, n, delta, seed, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DisturbanceDist;

    fn walk() -> SystemModel {
        let dist = DisturbanceDist::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        SystemModel::parse(1, 1, &["x1 + th1"], dist).unwrap()
    }

    fn gambler_regions() -> RegionSpec {
        RegionSpec::parse("x1 > 0 && x1 < 11", "x1 >= 10 && x1 < 11", 1).unwrap()
    }

    #[test]
    fn hoeffding_formula() {
        let h = hoeffding_half_width(100, 0.05);
        assert!((h - ((2.0f64 / 0.05).ln() / 200.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn start_outside_safe_set() {
        let e = estimate_liveness(&walk(), &gambler_regions(), &[0.0], 10, 100, 0.05, 1).unwrap();
        assert_eq!(e.p_hat, 0.0);
        let e = estimate_reach_avoid(&walk(), &gambler_regions(), &[-3.0], 10, 100, 0.05, 1).unwrap();
        assert_eq!(e.p_hat, 0.0);
    }

    #[test]
    fn start_in_target() {
        let e = estimate_reach_avoid(&walk(), &gambler_regions(), &[10.0], 10, 100, 0.05, 1).unwrap();
        assert_eq!(e.p_hat, 1.0);
    }

    #[test]
    fn invariant_contraction_always_stays() {
        let m = SystemModel::parse(1, 1, &["0.5*x1"], DisturbanceDist::degenerate(1)).unwrap();
        let r = RegionSpec::parse("x1 >= -1 && x1 <= 1", "false", 1).unwrap();
        let e = estimate_liveness(&m, &r, &[0.7], 200, 500, 0.05, 4).unwrap();
        assert_eq!(e.p_hat, 1.0);
        assert_eq!(e.direction, Direction::UpperBiasedForLiveness);
    }

    #[test]
    fn parameter_validation() {
        assert!(estimate_liveness(&walk(), &gambler_regions(), &[3.0], 0, 10, 0.05, 1).is_err());
        assert!(estimate_liveness(&walk(), &gambler_regions(), &[3.0], 5, 0, 0.05, 1).is_err());
        assert!(estimate_liveness(&walk(), &gambler_regions(), &[3.0], 5, 10, 1.5, 1).is_err());
        assert!(estimate_liveness(&walk(), &gambler_regions(), &[3.0, 1.0], 5, 10, 0.5, 1).is_err());
    }

    #[test]
    fn simulation_errors_are_reported() {
        let m = SystemModel::parse(1, 0, &["1/(x1 - 1)"], DisturbanceDist::degenerate(0)).unwrap();
        let r = RegionSpec::parse("x1 > -100 && x1 < 100", "false", 1).unwrap();
        let err = estimate_liveness(&m, &r, &[2.0], 5, 10, 0.05, 1).unwrap_err();
        assert!(matches!(err, McError::Simulation { trial: 0, .. }));
    }

    #[test]
    fn deterministic_per_seed_and_independent_of_threads() {
        let a = estimate_reach_avoid(&walk(), &gambler_regions(), &[3.0], 1000, 2000, 0.05, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b =
            pool.install(|| estimate_reach_avoid(&walk(), &gambler_regions(), &[3.0], 1000, 2000, 0.05, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn monotone_in_horizon() {
        let mut last_live = 1.0;
        let mut last_reach = 0.0;
        for k in [1, 2, 5, 10, 20, 50, 100, 1000] {
            let l = estimate_liveness(&walk(), &gambler_regions(), &[3.0], k, 3000, 0.05, 17).unwrap();
            let r = estimate_reach_avoid(&walk(), &gambler_regions(), &[3.0], k, 3000, 0.05, 17).unwrap();
            assert!(l.p_hat <= last_live);
            assert!(r.p_hat >= last_reach);
            last_live = l.p_hat;
            last_reach = r.p_hat;
        }
    }

    #[test]
    fn trial_classification_is_consistent() {
        let m = walk();
        let r = gambler_regions();
        for i in 0..500 {
            let live = run_trial(&m, &r.without_target(), &[3.0], 400, false, &mut trial_rng(5, i)).unwrap();
            let reach = run_trial(&m, &r, &[3.0], 400, true, &mut trial_rng(5, i)).unwrap();
            // Same stream: a trial that reached X_r at step k was inside X up to k,
            // so the liveness run cannot have exited before k.
            if let TrialOutcome::Reached(k) = reach {
                assert!(!matches!(live, TrialOutcome::Exited(j) if j <= k));
            }
            // A trial that stayed in X \ X_r throughout cannot count as reached.
            if let TrialOutcome::Survived = reach {
                assert_eq!(live, TrialOutcome::Survived);
            }
        }
    }
}
