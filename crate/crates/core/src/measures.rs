//! Information measures over finite alphabets.
//!
//! Every quantity is reported in bits. The central object is the normalized
//! cumulant `(1/ρ) log₂ E_P[ψ(X)^ρ]`, which is bounded below by
//! `H_α(P) − log₂ k` whenever `Σ ψ⁻¹ ≤ k`, with `α = 1/(1+ρ)`. Equality holds
//! exactly when `ψ⁻¹` is `k` times the escort distribution of `P`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log2_sum_exp2, normalize_log2, normalized_log2_moment};

/// Tolerance on `Σ P(x) = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Ordered, duplicate-free list of symbol labels. Cheap to clone.
#[derive(Clone, Debug, Eq)]
pub struct Alphabet(Arc<[String]>);

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDistribution(
                "alphabet must contain at least one symbol".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidDistribution(format!(
                    "alphabet labels must be unique; '{label}' repeats"
                )));
            }
        }
        Ok(Alphabet(labels.into()))
    }

    /// Labels `"0"`, `"1"`, ... `"m-1"`.
    pub fn indexed(m: usize) -> Self {
        assert!(m >= 1, "alphabet size must be at least 1");
        Alphabet((0..m).map(|i| i.to_string()).collect::<Vec<_>>().into())
    }

    /// Builds without the uniqueness scan; callers guarantee distinct labels.
    pub(crate) fn from_unique(labels: Vec<String>) -> Self {
        Alphabet(labels.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub(crate) fn check_same(&self, other: &Alphabet) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch {
                expected: self.len(),
                found: other.len(),
            })
        }
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if self.len() == found {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch {
                expected: self.len(),
                found,
            })
        }
    }
}

/// A full-support probability mass function over an [`Alphabet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub struct Distribution {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<DistributionJson> for Distribution {
    type Error = Error;

    fn try_from(raw: DistributionJson) -> Result<Self> {
        Distribution::new(raw.alphabet, raw.probs)
    }
}

impl From<Distribution> for DistributionJson {
    fn from(d: Distribution) -> Self {
        DistributionJson {
            alphabet: d.alphabet.labels().to_vec(),
            probs: d.probs,
        }
    }
}

impl Distribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        Self::with_alphabet(Alphabet::new(labels)?, probs)
    }

    pub fn with_alphabet(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        alphabet.check_len(probs.len())?;
        for (i, &p) in probs.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "full support required: mass of '{}' is {p}",
                    alphabet.label(i)
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses must sum to 1 within {SUM_TOLERANCE:e}, got {total}"
            )));
        }
        Ok(Distribution { alphabet, probs })
    }

    /// Normalizes positive finite weights.
    pub fn from_weights(alphabet: Alphabet, weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        let logs: Vec<f64> = weights.iter().map(|w| w.log2()).collect();
        Self::from_log2_weights(alphabet, &logs)
    }

    /// Normalizes weights given as base-2 logarithms.
    pub fn from_log2_weights(alphabet: Alphabet, log2_weights: &[f64]) -> Result<Self> {
        alphabet.check_len(log2_weights.len())?;
        if log2_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidDistribution(
                "log-weights must be finite".into(),
            ));
        }
        Self::with_alphabet(alphabet, normalize_log2(log2_weights))
    }

    pub fn uniform(m: usize) -> Self {
        Self::uniform_over(Alphabet::indexed(m))
    }

    pub fn uniform_over(alphabet: Alphabet) -> Self {
        let m = alphabet.len();
        Distribution {
            alphabet,
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn log2_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.log2()).collect()
    }

    /// `log₂ Z_{P,a}` with `Z_{P,a} = Σ P(x)^a`.
    pub fn log2_power_sum(&self, exponent: f64) -> f64 {
        let terms: Vec<f64> = self.probs.iter().map(|p| exponent * p.log2()).collect();
        log2_sum_exp2(&terms)
    }

    /// Symbol indices sorted by decreasing mass, ties by ascending index.
    pub fn decreasing_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        idx
    }
}

/// The moment parameter `ρ ∈ (−1, ∞)` together with `α = 1/(1+ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentOrder {
    rho: f64,
    alpha: f64,
}

impl MomentOrder {
    pub fn from_rho(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho <= -1.0 {
            return Err(Error::InvalidOrder(format!(
                "rho must be a finite real in (-1, inf), got {rho}"
            )));
        }
        Ok(MomentOrder {
            rho,
            alpha: 1.0 / (1.0 + rho),
        })
    }

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidOrder(format!(
                "alpha must be a finite real in (0, inf), got {alpha}"
            )));
        }
        Self::from_rho(1.0 / alpha - 1.0)
    }

    pub fn shannon() -> Self {
        MomentOrder {
            rho: 0.0,
            alpha: 1.0,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ρ = 0`, i.e. `α = 1`.
    pub fn is_shannon(&self) -> bool {
        self.rho == 0.0
    }

    /// `ρ` as a positive integer, if it is one.
    pub fn integer_rho(&self) -> Option<u32> {
        if self.rho >= 1.0 && self.rho.fract() == 0.0 && self.rho <= u32::MAX as f64 {
            Some(self.rho as u32)
        } else {
            None
        }
    }
}

impl fmt::Display for MomentOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rho={}, alpha={}", self.rho, self.alpha)
    }
}

/// A positive weight `ψ(x)` per symbol together with a budget `k` bounding
/// `Σ ψ(x)⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction {
    log2_values: Vec<f64>,
    budget: f64,
}

impl WeightFunction {
    pub fn new(values: &[f64], budget: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "psi must be positive and finite, got {v}"
            )));
        }
        Self::from_log2(values.iter().map(|v| v.log2()).collect(), budget)
    }

    /// Budget set to `Σ ψ⁻¹` exactly.
    pub fn tight(values: &[f64]) -> Result<Self> {
        let wf = Self::new(values, f64::MAX)?;
        let budget = wf.reciprocal_sum();
        Ok(WeightFunction { budget, ..wf })
    }

    /// Weights given as `log₂ ψ`; use for `ψ = 2^L` with large `L`.
    pub fn from_log2(log2_values: Vec<f64>, budget: f64) -> Result<Self> {
        if log2_values.is_empty() {
            return Err(Error::InvalidWeights("psi must have at least one value".into()));
        }
        if log2_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWeights("log2 psi must be finite".into()));
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::InvalidWeights(format!(
                "budget k must be positive and finite, got {budget}"
            )));
        }
        let wf = WeightFunction {
            log2_values,
            budget,
        };
        let recip = wf.reciprocal_sum();
        if recip > budget * (1.0 + 1e-12) {
            return Err(Error::InvalidWeights(format!(
                "sum of 1/psi = {recip} exceeds budget k = {budget}"
            )));
        }
        Ok(wf)
    }

    pub fn log2_values(&self) -> &[f64] {
        &self.log2_values
    }

    pub fn values(&self) -> Vec<f64> {
        self.log2_values.iter().map(|v| v.exp2()).collect()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.log2_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log2_values.is_empty()
    }

    /// `Σ ψ(x)⁻¹`.
    pub fn reciprocal_sum(&self) -> f64 {
        let neg: Vec<f64> = self.log2_values.iter().map(|v| -v).collect();
        log2_sum_exp2(&neg).exp2()
    }
}

/// `H(P) = −Σ P log₂ P`.
pub fn shannon_entropy(p: &Distribution) -> f64 {
    -p.probs().iter().map(|&x| x * x.log2()).sum::<f64>()
}

/// Rényi entropy of order `α`; delegates to Shannon entropy at `α = 1`.
pub fn renyi_entropy(p: &Distribution, order: MomentOrder) -> f64 {
    if order.is_shannon() {
        return shannon_entropy(p);
    }
    let alpha = order.alpha();
    p.log2_power_sum(alpha) / (1.0 - alpha)
}

/// `D(P‖Q) = Σ P log₂(P/Q)`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.alphabet().check_same(q.alphabet())?;
    Ok(p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| a * (a.log2() - b.log2()))
        .sum())
}

/// `log₂ (Z_{Q,α} / Q(x)^α)` per symbol: the ideal Campbell length under `Q`.
pub fn log2_escort_reciprocal(q: &Distribution, order: MomentOrder) -> Vec<f64> {
    let alpha = order.alpha();
    let log_z = q.log2_power_sum(alpha);
    q.probs().iter().map(|p| log_z - alpha * p.log2()).collect()
}

/// Sundaresan's divergence `I_α(P,Q)`; delegates to KL at `α = 1`.
///
/// Evaluated as `(1/ρ) log₂ E_P[(Z_{Q,α}/Q(X)^α)^ρ] − H_α(P)`, which is the
/// defining expression with `(1−α)/α = ρ`.
pub fn sundaresan_divergence(p: &Distribution, q: &Distribution, order: MomentOrder) -> Result<f64> {
    p.alphabet().check_same(q.alphabet())?;
    if order.is_shannon() {
        return kl_divergence(p, q);
    }
    let psi = log2_escort_reciprocal(q, order);
    Ok(normalized_log2_moment(p.probs(), &psi, order.rho()) - renyi_entropy(p, order))
}

/// Escort (α-scaled) distribution `P(x)^α / Z_{P,α}`.
pub fn escort(p: &Distribution, order: MomentOrder) -> Distribution {
    escort_with_exponent(p, order.alpha())
}

/// Recovers `P` from its escort of order `α` (escort with exponent `1/α`).
pub fn escort_inverse(e: &Distribution, order: MomentOrder) -> Distribution {
    escort_with_exponent(e, 1.0 / order.alpha())
}

fn escort_with_exponent(p: &Distribution, exponent: f64) -> Distribution {
    let logs: Vec<f64> = p.probs().iter().map(|x| exponent * x.log2()).collect();
    Distribution {
        alphabet: p.alphabet().clone(),
        probs: normalize_log2(&logs),
    }
}

/// `(1/ρ) log₂ E_P[ψ(X)^ρ]`, computed in the log domain. At `ρ = 0` this is
/// [`expected_log`].
pub fn normalized_cumulant(p: &Distribution, psi: &WeightFunction, order: MomentOrder) -> Result<f64> {
    p.alphabet().check_len(psi.len())?;
    Ok(normalized_log2_moment(p.probs(), psi.log2_values(), order.rho()))
}

/// `E_P[log₂ ψ(X)]`.
pub fn expected_log(p: &Distribution, psi: &WeightFunction) -> Result<f64> {
    p.alphabet().check_len(psi.len())?;
    Ok(normalized_log2_moment(p.probs(), psi.log2_values(), 0.0))
}

/// The universal lower bound `H_α(P) − log₂ k` on the normalized cumulant
/// (Shannon entropy at `ρ = 0`).
pub fn cumulant_lower_bound(p: &Distribution, order: MomentOrder, budget: f64) -> f64 {
    renyi_entropy(p, order) - budget.log2()
}

/// `log₂ E_P[2^{f(X)}]`.
pub fn log2_mgf(p: &Distribution, f: &[f64]) -> Result<f64> {
    p.alphabet().check_len(f.len())?;
    let terms: Vec<f64> = p.probs().iter().zip(f).map(|(pr, v)| pr.log2() + v).collect();
    Ok(log2_sum_exp2(&terms))
}

/// The maximizer `Q*(x) ∝ P(x)·2^{f(x)}` of `E_Q[f] − D(Q‖P)`.
pub fn gibbs_tilt(p: &Distribution, f: &[f64]) -> Result<Distribution> {
    p.alphabet().check_len(f.len())?;
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWeights("tilt function must be finite".into()));
    }
    let logs: Vec<f64> = p.probs().iter().zip(f).map(|(pr, v)| pr.log2() + v).collect();
    Distribution::from_log2_weights(p.alphabet().clone(), &logs)
}

/// `E_Q[f] − D(Q‖P)`; its maximum over `Q` equals [`log2_mgf`].
pub fn variational_objective(p: &Distribution, q: &Distribution, f: &[f64]) -> Result<f64> {
    p.alphabet().check_len(f.len())?;
    let mean: f64 = q.probs().iter().zip(f).map(|(a, b)| a * b).sum();
    Ok(mean - kl_divergence(q, p)?)
}

/// `H_α(P) + I_α(P,Q) + log₂ c`: upper bound on the normalized cumulant of
/// any `ψ` with `ψ(x) ≤ c·Z_{Q,α}/Q(x)^α`.
pub fn mismatch_upper_bound(p: &Distribution, q: &Distribution, order: MomentOrder, c: f64) -> Result<f64> {
    mismatch_bound(p, q, order, "c", c)
}

/// `H_α(P) + I_α(P,Q) + log₂ a`: lower bound on the normalized cumulant of
/// any `ψ` with `ψ(x) ≥ a·Z_{Q,α}/Q(x)^α`.
pub fn mismatch_lower_bound(p: &Distribution, q: &Distribution, order: MomentOrder, a: f64) -> Result<f64> {
    mismatch_bound(p, q, order, "a", a)
}

fn mismatch_bound(
    p: &Distribution,
    q: &Distribution,
    order: MomentOrder,
    name: &'static str,
    constant: f64,
) -> Result<f64> {
    if !(constant.is_finite() && constant > 0.0) {
        return Err(Error::NonPositiveConstant {
            name,
            value: constant,
        });
    }
    Ok(renyi_entropy(p, order) + sundaresan_divergence(p, q, order)? + constant.log2())
}

/// Smallest `c` and largest `a` with `a·Z_{Q,α}/Q^α ≤ ψ ≤ c·Z_{Q,α}/Q^α`,
/// returned as `(log₂ a, log₂ c)`.
pub fn log2_mismatch_constants(q: &Distribution, psi: &WeightFunction, order: MomentOrder) -> Result<(f64, f64)> {
    q.alphabet().check_len(psi.len())?;
    let reference = log2_escort_reciprocal(q, order);
    let ratios = psi.log2_values().iter().zip(&reference).map(|(v, r)| v - r);
    Ok(ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    }))
}
