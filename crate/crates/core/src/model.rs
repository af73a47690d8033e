//! Stochastic difference equations `x' = f(x, θ)` with i.i.d. finite-support
//! disturbances.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid disturbance distribution: {0}")]
    Distribution(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("dynamics for x{coord}: {source}")]
    Parse { coord: usize, source: ParseError },
    #[error("evaluating dynamics for x{coord} at {x:?}, th={th:?}: {source}")]
    Eval {
        coord: usize,
        x: Vec<f64>,
        th: Vec<f64>,
        source: EvalError,
    },
    #[error("function evaluation failed at {x:?}: {message}")]
    Function { x: Vec<f64>, message: String },
}

/// Finite-support distribution of the disturbance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceDist {
    atoms: Vec<Vec<f64>>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DisturbanceDist {
    pub fn new(atoms: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self, ModelError> {
        let bad = |m: String| Err(ModelError::Distribution(m));
        if atoms.is_empty() {
            return bad("no atoms".into());
        }
        if atoms.len() != probs.len() {
            return bad(format!("{} atoms but {} probabilities", atoms.len(), probs.len()));
        }
        let m = atoms[0].len();
        if let Some(a) = atoms.iter().find(|a| a.len() != m) {
            return bad(format!("atom {a:?} has dimension {}, expected {m}", a.len()));
        }
        if let Some(a) = atoms.iter().find(|a| a.iter().any(|v| !v.is_finite())) {
            return bad(format!("atom {a:?} is not finite"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return bad(format!("probability {p} outside (0, 1]"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("probabilities sum to {total}, expected 1"));
        }
        for i in 0..atoms.len() {
            for j in 0..i {
                if atoms[i] == atoms[j] {
                    return bad(format!("duplicate atom {:?}", atoms[i]));
                }
            }
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(DisturbanceDist {
            atoms,
            probs,
            cumulative,
        })
    }

    /// Single atom at the origin of `R^m`.
    pub fn degenerate(m: usize) -> Self {
        DisturbanceDist::new(vec![vec![0.0; m]], vec![1.0]).expect("valid point mass")
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.atoms.iter().map(Vec::as_slice).zip(self.probs.iter().copied())
    }

    /// Draws an atom with probability `probs[k]`.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, rng: &mut R) -> &'a [f64] {
        let u: f64 = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        &self.atoms[k]
    }

    /// Independent coordinates: the atoms are the Cartesian product of the
    /// factors' atoms and probabilities multiply.
    pub fn product(factors: &[DisturbanceDist]) -> Result<Self, ModelError> {
        let mut atoms = vec![Vec::new()];
        let mut probs = vec![1.0];
        for f in factors {
            let mut next_atoms = Vec::with_capacity(atoms.len() * f.len());
            let mut next_probs = Vec::with_capacity(atoms.len() * f.len());
            for (a, p) in atoms.iter().zip(&probs) {
                for (b, q) in f.iter() {
                    let mut v = a.clone();
                    v.extend_from_slice(b);
                    next_atoms.push(v);
                    next_probs.push(p * q);
                }
            }
            atoms = next_atoms;
            probs = next_probs;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        DisturbanceDist::new(atoms, probs)
    }
}

/// One-dimensional continuous law to be replaced by a finite quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantization {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
}

/// Gaussian quantization covers `mean ± GAUSSIAN_TAIL * std`.
pub const GAUSSIAN_TAIL: f64 = 4.0;

/// Cell-midpoint quantization of a one-dimensional law into `atoms` points.
///
/// Uniform laws get equal-probability midpoints. Gaussian laws are truncated
/// to `mean ± 4 std`, split into equal cells and each midpoint carries its
/// cell mass, renormalized to sum to one.
pub fn quantize(kind: Quantization, atoms: usize) -> Result<DisturbanceDist, ModelError> {
    if atoms == 0 {
        return Err(ModelError::Distribution("need at least one atom".into()));
    }
    let (lo, hi) = match kind {
        Quantization::Uniform { lo, hi } => {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(ModelError::Distribution(format!(
                    "uniform bounds [{lo}, {hi}] are invalid"
                )));
            }
            (lo, hi)
        }
        Quantization::Gaussian { mean, std } => {
            if !(std > 0.0) || !std.is_finite() || !mean.is_finite() {
                return Err(ModelError::Distribution(format!("gaussian std {std} must be positive")));
            }
            (mean - GAUSSIAN_TAIL * std, mean + GAUSSIAN_TAIL * std)
        }
    };
    let width = (hi - lo) / atoms as f64;
    let points: Vec<Vec<f64>> = (0..atoms).map(|i| vec![lo + (i as f64 + 0.5) * width]).collect();
    let mut probs: Vec<f64> = match kind {
        Quantization::Uniform { .. } => vec![1.0; atoms],
        Quantization::Gaussian { mean, std } => {
            let normal = Normal::new(mean, std).map_err(|e| ModelError::Distribution(e.to_string()))?;
            let edge = |i: usize| lo + i as f64 * width;
            (0..atoms)
                .map(|i| {
                    // Mirror the upper half so the masses are exactly symmetric.
                    let j = atoms - 1 - i;
                    let (a, b) = if i <= j { (i, i + 1) } else { (j, j + 1) };
                    normal.cdf(edge(b)) - normal.cdf(edge(a))
                })
                .collect()
        }
    };
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    DisturbanceDist::new(points, probs)
}

/// `x(l+1) = f(x(l), θ(l))` with `θ` drawn i.i.d. from `dist`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    n: usize,
    m: usize,
    dynamics: Vec<Expr>,
    dist: DisturbanceDist,
}

impl SystemModel {
    pub fn new(n: usize, m: usize, dynamics: Vec<Expr>, dist: DisturbanceDist) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Invalid("state dimension must be positive".into()));
        }
        if dynamics.len() != n {
            return Err(ModelError::Invalid(format!(
                "{} dynamics expressions for state dimension {n}",
                dynamics.len()
            )));
        }
        if dist.dim() != m {
            return Err(ModelError::Invalid(format!(
                "disturbance atoms have dimension {}, expected {m}",
                dist.dim()
            )));
        }
        for (i, e) in dynamics.iter().enumerate() {
            if e.max_state_index().is_some_and(|k| k >= n) || e.max_disturbance_index().is_some_and(|k| k >= m) {
                return Err(ModelError::Invalid(format!(
                    "dynamics for x{} reference undeclared variables",
                    i + 1
                )));
            }
        }
        Ok(SystemModel { n, m, dynamics, dist })
    }

    /// Parses one dynamics string per state coordinate.
    pub fn parse<S: AsRef<str>>(n: usize, m: usize, dynamics: &[S], dist: DisturbanceDist) -> Result<Self, ModelError> {
        let exprs = dynamics
            .iter()
            .enumerate()
            .map(|(i, s)| Expr::parse(s.as_ref(), n, m).map_err(|source| ModelError::Parse { coord: i + 1, source }))
            .collect::<Result<Vec<_>, _>>()?;
        SystemModel::new(n, m, exprs, dist)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dist(&self) -> &DisturbanceDist {
        &self.dist
    }

    pub fn dynamics(&self) -> &[Expr] {
        &self.dynamics
    }

    pub fn step(&self, x: &[f64], th: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.dynamics
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.eval(x, th).map_err(|source| ModelError::Eval {
                    coord: i + 1,
                    x: x.to_vec(),
                    th: th.to_vec(),
                    source,
                })
            })
            .collect()
    }

    /// Images `f(x, θ_k)` for every atom, paired with the atom's probability.
    pub fn images(&self, x: &[f64]) -> Result<Vec<(f64, Vec<f64>)>, ModelError> {
        self.dist.iter().map(|(th, p)| Ok((p, self.step(x, th)?))).collect()
    }

    /// Exact `E_θ[g(f(x, θ))]` as a finite weighted sum.
    pub fn expectation<G>(&self, x: &[f64], mut g: G) -> Result<f64, ModelError>
    where
        G: FnMut(&[f64]) -> Result<f64, ModelError>,
    {
        let mut acc = 0.0;
        for (th, p) in self.dist.iter() {
            let y = self.step(x, th)?;
            acc += p * g(&y)?;
        }
        Ok(acc)
    }

    /// Simulates `horizon` steps from `x0`. The run is a deterministic
    /// function of `seed`.
    pub fn simulate(&self, x0: &[f64], horizon: usize, seed: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.simulate_with(x0, horizon, &mut rng)
    }

    pub fn simulate_with<R: Rng + ?Sized>(&self, x0: &[f64], horizon: usize, rng: &mut R) -> Trajectory {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut disturbances = Vec::with_capacity(horizon);
        states.push(x0.to_vec());
        for _ in 0..horizon {
            let th = self.dist.sample(rng).to_vec();
            match self.step(states.last().expect("nonempty"), &th) {
                Ok(next) => {
                    states.push(next);
                    disturbances.push(th);
                }
                Err(e) => {
                    return Trajectory {
                        states,
                        disturbances,
                        error: Some(e),
                    }
                }
            }
        }
        Trajectory {
            states,
            disturbances,
            error: None,
        }
    }
}

/// States `x(0..=L)` and the disturbances that produced them. `error` is set
/// when a step failed; the trajectory is then truncated at the failing state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    pub error: Option<ModelError>,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.disturbances.first().map_or(0, Vec::len);
        let mut out = String::from("step");
        (1..=n).for_each(|i| out.push_str(&format!(",x{i}")));
        (1..=m).for_each(|j| out.push_str(&format!(",th{j}")));
        out.push('\n');
        for (l, x) in self.states.iter().enumerate() {
            out.push_str(&l.to_string());
            x.iter().for_each(|v| out.push_str(&format!(",{v}")));
            match self.disturbances.get(l) {
                Some(th) => th.iter().for_each(|v| out.push_str(&format!(",{v}"))),
                None => (0..m).for_each(|_| out.push(',')),
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn walk(p_up: f64) -> SystemModel {
        let dist = DisturbanceDist::new(vec![vec![-1.0], vec![1.0]], vec![1.0 - p_up, p_up]).unwrap();
        SystemModel::parse(1, 1, &["x1 + th1"], dist).unwrap()
    }

    #[test]
    fn step_examples() {
        assert_eq!(walk(0.5).step(&[3.0], &[1.0]).unwrap(), vec![4.0]);
        let contraction = SystemModel::parse(1, 1, &["0.5*x1 + th1"], DisturbanceDist::degenerate(1)).unwrap();
        assert_eq!(contraction.step(&[4.0], &[0.0]).unwrap(), vec![2.0]);
        let singular = SystemModel::parse(1, 0, &["1/x1"], DisturbanceDist::degenerate(0)).unwrap();
        assert!(matches!(singular.step(&[0.0], &[]), Err(ModelError::Eval { .. })));
    }

    #[test]
    fn distribution_validation() {
        assert!(DisturbanceDist::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]).is_err());
        assert!(DisturbanceDist::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
        assert!(DisturbanceDist::new(vec![], vec![]).is_err());
        assert!(DisturbanceDist::new(vec![vec![0.0]], vec![1.0, 0.0]).is_err());
        assert!(DisturbanceDist::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn single_atom_always_sampled() {
        let d = DisturbanceDist::new(vec![vec![0.0]], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| d.sample(&mut rng) == [0.0]));
    }

    #[test]
    fn fair_coin_frequency() {
        let d = DisturbanceDist::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 100_000;
        let ups = (0..draws).filter(|_| d.sample(&mut rng)[0] > 0.0).count();
        let freq = ups as f64 / draws as f64;
        assert!((0.49..=0.51).contains(&freq), "{freq}");
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let sa: Vec<f64> = (0..50).map(|_| d.sample(&mut a)[0]).collect();
        let sb: Vec<f64> = (0..50).map(|_| d.sample(&mut b)[0]).collect();
        assert_eq!(sa, sb);
    }

    #[test]
    fn biased_frequency_within_hoeffding_band() {
        let d = DisturbanceDist::new(vec![vec![0.0], vec![1.0]], vec![0.3, 0.7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 50_000;
        let delta: f64 = 1e-3;
        let band = ((2.0 / delta).ln() / (2.0 * draws as f64)).sqrt();
        let hits = (0..draws).filter(|_| d.sample(&mut rng)[0] == 1.0).count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.7).abs() <= band, "{freq} outside 0.7 ± {band}");
    }

    #[test]
    fn simulate_examples() {
        let w = walk(0.5);
        let t = w.simulate(&[3.0], 0, 9);
        assert_eq!(t.states, vec![vec![3.0]]);
        assert_eq!(w.simulate(&[3.0], 50, 9), w.simulate(&[3.0], 50, 9));
        let t = w.simulate(&[3.0], 20, 11);
        for l in 0..20 {
            assert_eq!(w.step(&t.states[l], &t.disturbances[l]).unwrap(), t.states[l + 1]);
        }
        let c = SystemModel::parse(1, 1, &["0.5*x1"], DisturbanceDist::degenerate(1)).unwrap();
        let t = c.simulate(&[8.0], 3, 0);
        assert_eq!(t.states, vec![vec![8.0], vec![4.0], vec![2.0], vec![1.0]]);
        assert!(t.error.is_none());
    }

    #[test]
    fn simulate_truncates_on_error() {
        let m = SystemModel::parse(1, 0, &["1/(x1 - 1)"], DisturbanceDist::degenerate(0)).unwrap();
        let t = m.simulate(&[2.0], 5, 0);
        assert_eq!(t.states, vec![vec![2.0], vec![1.0]]);
        assert!(t.error.is_some());
    }

    #[test]
    fn expectation_examples() {
        let w = walk(0.5);
        assert_eq!(w.expectation(&[3.0], |_| Ok(0.7)).unwrap(), 0.7);
        assert_eq!(w.expectation(&[3.0], |y| Ok(y[0])).unwrap(), 3.0);
        let b = walk(0.6);
        assert!((b.expectation(&[3.0], |y| Ok(y[0])).unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn quantize_examples() {
        let u = quantize(Quantization::Uniform { lo: -1.0, hi: 1.0 }, 2).unwrap();
        assert_eq!(u.atoms(), &[vec![-0.5], vec![0.5]]);
        assert_eq!(u.probs(), &[0.5, 0.5]);
        let g = quantize(Quantization::Gaussian { mean: 0.0, std: 1.0 }, 1).unwrap();
        assert_eq!(g.atoms(), &[vec![0.0]]);
        assert_eq!(g.probs(), &[1.0]);
        assert!(quantize(Quantization::Gaussian { mean: 0.0, std: 0.0 }, 3).is_err());
        assert!(quantize(Quantization::Uniform { lo: 1.0, hi: 1.0 }, 3).is_err());
        assert!(quantize(Quantization::Uniform { lo: 0.0, hi: 1.0 }, 0).is_err());
    }

    #[test]
    fn gaussian_eight_atoms_symmetric() {
        let g = quantize(Quantization::Gaussian { mean: 0.0, std: 1.0 }, 8).unwrap();
        let total: f64 = g.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..8 {
            assert_eq!(g.probs()[i], g.probs()[7 - i]);
            assert!((g.atoms()[i][0] + g.atoms()[7 - i][0]).abs() < 1e-12);
        }
        // Cell masses from an independent tabulation of the standard normal CDF.
        let expected = [0.00131831, 0.02140159, 0.13591373, 0.34136637];
        for (p, e) in g.probs().iter().zip(expected) {
            assert!((p - e).abs() < 1e-7, "{p} vs {e}");
        }
    }

    #[test]
    fn product_of_factors() {
        let a = quantize(Quantization::Uniform { lo: 0.0, hi: 1.0 }, 2).unwrap();
        let b = DisturbanceDist::new(vec![vec![0.0], vec![1.0]], vec![0.25, 0.75]).unwrap();
        let p = DisturbanceDist::product(&[a, b]).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.atoms()[1], vec![0.25, 1.0]);
        assert!((p.probs()[1] - 0.375).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn expectation_is_linear(x in -10.0f64..10.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let m = walk(0.37);
            let g1 = |y: &[f64]| Ok(a * y[0] * y[0]);
            let g2 = |y: &[f64]| Ok((b * y[0]).sin());
            let lhs = m.expectation(&[x], |y| Ok(g1(y)? + g2(y)?)).unwrap();
            let rhs = m.expectation(&[x], g1).unwrap() + m.expectation(&[x], g2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn indicator_expectation_in_unit_interval(x in -10.0f64..10.0, c in -10.0f64..10.0) {
            let m = walk(0.8);
            let e = m.expectation(&[x], |y| Ok(if y[0] > c { 1.0 } else { 0.0 })).unwrap();
            prop_assert!((0.0..=1.0).contains(&e));
        }

        #[test]
        fn simulation_reproducible(seed in any::<u64>(), x0 in -5.0f64..5.0) {
            let m = walk(0.5);
            let a = m.simulate(&[x0], 30, seed);
            let b = m.simulate(&[x0], 30, seed);
            prop_assert_eq!(a, b);
        }
    }
}
