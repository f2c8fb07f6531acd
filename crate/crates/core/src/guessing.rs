//! Guessing with a fixed order (rank functions) and memoryless guessing with
//! i.i.d. guesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::measures::{escort, sundaresan_divergence, kl_divergence, Alphabet, Distribution, MomentOrder};
use crate::numeric::{harmonic, normalized_log2_moment};

/// A bijection from symbols to guess ranks `1..=m`.
#[derive(Clone, Debug, PartialEq)]
pub struct GuessingFunction {
    alphabet: Alphabet,
    ranks: Vec<usize>,
}

impl GuessingFunction {
    pub fn new(alphabet: Alphabet, ranks: Vec<usize>) -> Result<Self> {
        alphabet.check_len(ranks.len())?;
        let m = ranks.len();
        let mut seen = vec![false; m];
        for &r in &ranks {
            if r == 0 || r > m || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::InvalidGuessing(format!(
                    "ranks must be a permutation of 1..={m}"
                )));
            }
        }
        Ok(GuessingFunction { alphabet, ranks })
    }

    /// Ranks assigned in the given symbol order: `order[0]` is guessed first.
    pub fn from_order(alphabet: Alphabet, order: &[usize]) -> Result<Self> {
        alphabet.check_len(order.len())?;
        let mut ranks = vec![0; order.len()];
        for (pos, &symbol) in order.iter().enumerate() {
            if symbol >= ranks.len() || ranks[symbol] != 0 {
                return Err(Error::InvalidGuessing(
                    "guess order must list every symbol exactly once".into(),
                ));
            }
            ranks[symbol] = pos + 1;
        }
        Ok(GuessingFunction { alphabet, ranks })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, index: usize) -> usize {
        self.ranks[index]
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn log2_ranks(&self) -> Vec<f64> {
        self.ranks.iter().map(|&r| (r as f64).log2()).collect()
    }

    /// `c = Σ 1/G(x)`, the `m`-th harmonic number.
    pub fn reciprocal_sum(&self) -> f64 {
        harmonic(self.len())
    }

    /// `{symbol: rank}` in alphabet order.
    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .alphabet
            .labels()
            .iter()
            .zip(&self.ranks)
            .map(|(s, &r)| (s.clone(), Value::from(r)))
            .collect();
        Value::Object(map)
    }
}

/// `1 + ln m`, the bound on the reciprocal sum of any guessing function.
pub fn harmonic_bound(m: usize) -> f64 {
    1.0 + (m as f64).ln()
}

/// Guesses in decreasing order of probability, ties by ascending index.
pub fn optimal_guessing(p: &Distribution) -> GuessingFunction {
    GuessingFunction::from_order(p.alphabet().clone(), &p.decreasing_order())
        .expect("a sorted index list is a permutation")
}

/// `(1/ρ) log₂ E_P[G(X)^ρ]`, or `E_P[log₂ G(X)]` at `ρ = 0`.
pub fn guessing_moment(p: &Distribution, g: &GuessingFunction, order: MomentOrder) -> Result<f64> {
    p.alphabet().check_same(g.alphabet())?;
    Ok(normalized_log2_moment(p.probs(), &g.log2_ranks(), order.rho()))
}

/// `Q_G(x) ∝ G(x)^{−1/α}`.
pub fn induced_distribution_from_guessing(g: &GuessingFunction, order: MomentOrder) -> Distribution {
    let alpha = order.alpha();
    let logs: Vec<f64> = g.log2_ranks().iter().map(|l| -l / alpha).collect();
    Distribution::from_log2_weights(g.alphabet.clone(), &logs)
        .expect("finite log-weights always normalize")
}

/// `R_g = guessing_moment(G) − guessing_moment(G_P)`.
pub fn guessing_redundancy(p: &Distribution, g: &GuessingFunction, order: MomentOrder) -> Result<f64> {
    let value = guessing_moment(p, g, order)?;
    Ok(value - guessing_moment(p, &optimal_guessing(p), order)?)
}

/// `I_α(P, Q_G)` for the distribution induced by `G`.
pub fn guessing_mismatch_divergence(p: &Distribution, g: &GuessingFunction, order: MomentOrder) -> Result<f64> {
    let q = induced_distribution_from_guessing(g, order);
    if order.is_shannon() {
        kl_divergence(p, &q)
    } else {
        sundaresan_divergence(p, &q, order)
    }
}

/// An i.i.d. guessing distribution `P̂` used with factorial moments of
/// integer order `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MemorylessStrategy {
    guess_distribution: Distribution,
    rho: u32,
}

impl MemorylessStrategy {
    pub fn new(guess_distribution: Distribution, rho: u32) -> Result<Self> {
        if rho == 0 {
            return Err(Error::NonIntegerRho(0.0));
        }
        Ok(MemorylessStrategy {
            guess_distribution,
            rho,
        })
    }

    /// Accepts a [`MomentOrder`] whose `ρ` must be a positive integer.
    pub fn with_order(guess_distribution: Distribution, order: MomentOrder) -> Result<Self> {
        let rho = order.integer_rho().ok_or(Error::NonIntegerRho(order.rho()))?;
        Self::new(guess_distribution, rho)
    }

    pub fn guess_distribution(&self) -> &Distribution {
        &self.guess_distribution
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn order(&self) -> MomentOrder {
        MomentOrder::from_rho(self.rho as f64).expect("positive integer rho is valid")
    }
}

/// `(1/ρ) log₂ E_P[V_{P̂,ρ}(X)] = (1/ρ) log₂ E_P[P̂(X)^{−ρ}]`.
pub fn memoryless_moment(p: &Distribution, strategy: &MemorylessStrategy) -> Result<f64> {
    let guess = &strategy.guess_distribution;
    p.alphabet().check_same(guess.alphabet())?;
    let psi: Vec<f64> = guess.probs().iter().map(|q| -q.log2()).collect();
    Ok(normalized_log2_moment(p.probs(), &psi, strategy.rho as f64))
}

/// The optimal i.i.d. guessing distribution: the escort of `P` at
/// `α = 1/(1+ρ)`.
pub fn optimal_memoryless(p: &Distribution, rho: u32) -> Result<Distribution> {
    if rho == 0 {
        return Err(Error::NonIntegerRho(0.0));
    }
    let order = MomentOrder::from_rho(rho as f64)?;
    Ok(escort(p, order))
}

/// Hard cap on guesses per trial.
pub const GUESS_CAP: u64 = 1_000_000_000;

/// Number of independent RNG streams a simulation is split into. Fixed so
/// that results do not depend on the thread count.
pub const SIMULATION_LANES: u64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
    /// Trials whose guess count reached [`GUESS_CAP`]; their value is
    /// truncated at the cap.
    pub capped_trials: u64,
}

/// Monte Carlo estimate of `E_P[V_{P̂,ρ}(X)]`.
///
/// Each trial draws `X ~ P` and counts i.i.d. guesses from `P̂` until the
/// first hit. The count is Geometric(`P̂(X)`) and is drawn by inversion.
/// Trials are spread over [`SIMULATION_LANES`] ChaCha8 streams derived from
/// `(seed, lane)` and merged in lane order.
pub fn simulate_memoryless(
    p: &Distribution,
    strategy: &MemorylessStrategy,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let guess = &strategy.guess_distribution;
    p.alphabet().check_same(guess.alphabet())?;

    let cumulative: Vec<f64> = p
        .probs()
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let hit: Vec<f64> = guess.probs().to_vec();
    let rho = strategy.rho;

    let per_lane = trials / SIMULATION_LANES;
    let extra = trials % SIMULATION_LANES;
    let lanes: Vec<LaneStats> = (0..SIMULATION_LANES)
        .into_par_iter()
        .map(|lane| {
            let n = per_lane + u64::from(lane < extra);
            run_lane(seed, lane, n, &cumulative, &hit, rho)
        })
        .collect();

    let merged = lanes.into_iter().fold(LaneStats::default(), LaneStats::merge);
    let stderr = if merged.count > 1 {
        (merged.m2 / (merged.count - 1) as f64 / merged.count as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimulationReport {
        estimate: merged.mean,
        stderr,
        trials,
        seed,
        capped_trials: merged.capped,
    })
}

#[derive(Clone, Copy, Debug, Default)]
struct LaneStats {
    count: u64,
    mean: f64,
    m2: f64,
    capped: u64,
}

impl LaneStats {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: LaneStats) -> LaneStats {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        LaneStats {
            count,
            mean: self.mean + delta * other.count as f64 / count as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64,
            capped: self.capped + other.capped,
        }
    }
}

fn run_lane(seed: u64, lane: u64, n: u64, cumulative: &[f64], hit: &[f64], rho: u32) -> LaneStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    let last = cumulative.len() - 1;
    let mut stats = LaneStats::default();
    for _ in 0..n {
        let u: f64 = rng.random();
        let x = cumulative.partition_point(|&c| c <= u).min(last);
        let (guesses, capped) = geometric(&mut rng, hit[x]);
        stats.capped += u64::from(capped);
        stats.push(factorial_moment(guesses, rho));
    }
    stats
}

/// Number of Bernoulli(`p`) trials up to and including the first success,
/// capped at [`GUESS_CAP`].
fn geometric(rng: &mut ChaCha8Rng, p: f64) -> (u64, bool) {
    if p >= 1.0 {
        return (1, false);
    }
    // 1 - u lies in (0, 1], so the logarithm is finite
    let u: f64 = rng.random();
    let g = ((1.0 - u).ln() / (-p).ln_1p()).floor() + 1.0;
    if g >= GUESS_CAP as f64 {
        (GUESS_CAP, true)
    } else {
        (g as u64, false)
    }
}

/// `V = (1/ρ!) ∏_{l=0}^{ρ−1} (G + l) = C(G+ρ−1, ρ)`.
pub fn factorial_moment(guesses: u64, rho: u32) -> f64 {
    let g = guesses as f64;
    (0..rho).fold(1.0, |acc, l| acc * (g + l as f64) / (l as f64 + 1.0))
}
