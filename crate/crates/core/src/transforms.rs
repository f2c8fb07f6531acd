//! Constructive maps between solutions of the coding, guessing, memoryless
//! guessing and tasks problems. Each map returns a certificate recording the
//! pointwise inequality it relies on and the aggregate bound that follows.

use serde::Serialize;

use crate::coding::{
    coding_cumulant, induced_distribution_from_lengths, mismatch_identity_residual,
    optimal_cumulant_lengths, LengthFunction,
};
use crate::error::{Error, Result};
use crate::guessing::{
    guessing_moment, harmonic_bound, induced_distribution_from_guessing, memoryless_moment,
    GuessingFunction, MemorylessStrategy,
};
use crate::measures::{escort, Alphabet, Distribution, MomentOrder};
use crate::numeric::snapped_ceil;
use crate::sequences::TUPLE_SEPARATOR;
use crate::tasks::{beta, build_partition, partition_function, tasks_moment, tasks_raw_moment, Partition};

/// Pointwise slacks below this are treated as violations.
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferCertificate {
    pub source: &'static str,
    pub target: &'static str,
    /// Block length of the tuple alphabet the maps were applied to.
    pub n: u32,
    /// Minimum over symbols of the defining pointwise inequality's slack, in
    /// bits.
    pub min_pointwise_slack: f64,
    /// Right side minus left side of the aggregate bound, in bits.
    pub aggregate_bound_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<f64>,
}

impl TransferCertificate {
    fn new(
        source: &'static str,
        target: &'static str,
        alphabet: &Alphabet,
        slacks: impl Iterator<Item = f64>,
        aggregate_bound_gap: f64,
    ) -> Self {
        TransferCertificate {
            source,
            target,
            n: block_length(alphabet),
            min_pointwise_slack: slacks.fold(f64::INFINITY, f64::min),
            aggregate_bound_gap,
            identity_residual: None,
        }
    }

    pub fn holds(&self) -> bool {
        self.min_pointwise_slack >= -SLACK_TOLERANCE
            && self.aggregate_bound_gap >= -SLACK_TOLERANCE
            && self.identity_residual.is_none_or(|r| r.abs() <= SLACK_TOLERANCE)
    }
}

fn block_length(alphabet: &Alphabet) -> u32 {
    alphabet.label(0).matches(TUPLE_SEPARATOR).count() as u32 + 1
}

/// `L(x) = max(1, ⌈log₂(c·G(x))⌉)` with `c = Σ 1/G`, the Shannon lengths of
/// `Q_G ∝ 1/G`. Pointwise `L ≤ log₂G + 1 + log₂c`, hence
/// `(1/ρ) log₂E[2^{ρL}] ≤ (1/ρ) log₂E[G^ρ] + 1 + log₂c`.
pub fn guessing_to_lengths(
    p: &Distribution,
    g: &GuessingFunction,
    order: MomentOrder,
) -> Result<(LengthFunction, TransferCertificate)> {
    p.alphabet().check_same(g.alphabet())?;
    let log2_c = g.reciprocal_sum().log2();
    let log2_g = g.log2_ranks();
    let lengths: Vec<u32> = log2_g
        .iter()
        .map(|lg| snapped_ceil(log2_c + lg).max(1.0) as u32)
        .collect();
    let l = LengthFunction::new(g.alphabet().clone(), lengths)?;
    let slacks = log2_g
        .iter()
        .zip(l.lengths())
        .map(|(lg, &len)| lg + 1.0 + log2_c - len as f64);
    let gap = guessing_moment(p, g, order)? + 1.0 + log2_c - coding_cumulant(p, &l, order)?;
    let cert = TransferCertificate::new("guessing", "coding", g.alphabet(), slacks, gap);
    Ok((l, cert))
}

/// Guesses in ascending order of length, ties by index. Kraft gives
/// `log₂G ≤ L` pointwise.
pub fn lengths_to_guessing(
    p: &Distribution,
    l: &LengthFunction,
    order: MomentOrder,
) -> Result<(GuessingFunction, TransferCertificate)> {
    p.alphabet().check_same(l.alphabet())?;
    let kraft = l.kraft();
    if !kraft.satisfied {
        return Err(Error::KraftViolation { sum: kraft.value });
    }
    let g = ascending_guesses(l.alphabet(), l.lengths())?;
    let slacks = l
        .lengths()
        .iter()
        .zip(g.log2_ranks())
        .map(|(&len, lg)| len as f64 - lg);
    let gap = coding_cumulant(p, l, order)? - guessing_moment(p, &g, order)?;
    let cert = TransferCertificate::new("coding", "guessing", l.alphabet(), slacks, gap);
    Ok((g, cert))
}

fn ascending_guesses<K: Ord + Copy>(alphabet: &Alphabet, keys: &[K]) -> Result<GuessingFunction> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by_key(|&i| (keys[i], i));
    GuessingFunction::from_order(alphabet.clone(), &idx)
}

/// Builds the tasks partition from `Q_G ∝ G^{−1/α}`. Its caps equal
/// `⌈β·c·G(x)⌉ ≤ ⌈β(1 + ln|X|)G(x)⌉`, which with `⌈x⌉^ρ ≤ 1 + 2^ρx^ρ`
/// gives `E[A^ρ] ≤ 1 + 2^ρβ^ρ(1 + ln|X|)^ρ E[G^ρ]`.
pub fn guessing_to_partition(
    p: &Distribution,
    g: &GuessingFunction,
    order: MomentOrder,
    cells: u64,
) -> Result<(Partition, TransferCertificate)> {
    p.alphabet().check_same(g.alphabet())?;
    let q = induced_distribution_from_guessing(g, order);
    let part = build_partition(&q, order, cells)?;
    let a = partition_function(&part);
    let m = g.len();
    let scale = beta(cells, m) * harmonic_bound(m);
    let slacks = g
        .ranks()
        .iter()
        .zip(&a)
        .map(|(&rank, &size)| snapped_ceil(scale * rank as f64).log2() - (size as f64).log2());

    let rho = order.rho();
    let log2_guess = rho * guessing_moment(p, g, order)?;
    let bound = 1.0 + (rho * (2.0 * scale).log2() + log2_guess).exp2();
    let gap = bound.log2() - tasks_raw_moment(p, &a, order)?.log2();
    let cert = TransferCertificate::new("guessing", "tasks", g.alphabet(), slacks, gap);
    Ok((part, cert))
}

/// Guesses in ascending order of cell size, ties by index. Pointwise
/// `G ≤ M·A`.
pub fn partition_to_guessing(
    p: &Distribution,
    part: &Partition,
    order: MomentOrder,
) -> Result<(GuessingFunction, TransferCertificate)> {
    p.alphabet().check_same(part.alphabet())?;
    let a = partition_function(part);
    let g = ascending_guesses(part.alphabet(), &a)?;
    let log2_cells = (part.size() as f64).log2();
    let slacks = a
        .iter()
        .zip(g.log2_ranks())
        .map(|(&size, lg)| log2_cells + (size as f64).log2() - lg);
    let gap = log2_cells + tasks_moment(p, &a, order)? - guessing_moment(p, &g, order)?;
    let cert = TransferCertificate::new("tasks", "guessing", part.alphabet(), slacks, gap);
    Ok((g, cert))
}

/// The escort of `Q_L ∝ 2^{−L/α}`, i.e. `P̂(x) = 2^{−L(x)}/ζ` with
/// `ζ = Σ 2^{−L}`. Pointwise `log₂(1/P̂) = L + log₂ζ ≤ L`. The certificate's
/// residual checks `I_α(P,Q_L) = (1/ρ) log₂E[2^{ρL}] + log₂ζ − H_α(P)`.
pub fn lengths_to_memoryless(
    p: &Distribution,
    l: &LengthFunction,
    order: MomentOrder,
) -> Result<(Distribution, TransferCertificate)> {
    p.alphabet().check_same(l.alphabet())?;
    order.integer_rho().ok_or(Error::NonIntegerRho(order.rho()))?;
    let kraft = l.kraft();
    if !kraft.satisfied {
        return Err(Error::KraftViolation { sum: kraft.value });
    }
    let strategy = escort(&induced_distribution_from_lengths(l, order), order);
    let slacks = l
        .lengths()
        .iter()
        .zip(strategy.probs())
        .map(|(&len, q)| len as f64 + q.log2());
    let memoryless = MemorylessStrategy::with_order(strategy.clone(), order)?;
    let gap = coding_cumulant(p, l, order)? - memoryless_moment(p, &memoryless)?;
    let mut cert = TransferCertificate::new("coding", "memoryless", l.alphabet(), slacks, gap);
    cert.identity_residual = Some(mismatch_identity_residual(p, l, order)?);
    Ok((strategy, cert))
}

/// Whether `L` attains the integer-optimal cumulant, and whether that is
/// consistent with the fact that optimal lengths have `ζ ≥ 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZetaCheck {
    pub zeta: f64,
    pub optimal_zeta: f64,
    pub is_optimal: bool,
    pub consistent: bool,
}

pub fn zeta_check(
    p: &Distribution,
    l: &LengthFunction,
    order: MomentOrder,
    max_len: u32,
) -> Result<ZetaCheck> {
    let value = coding_cumulant(p, l, order)?;
    let (best, optimum) = optimal_cumulant_lengths(p, order, max_len)?;
    let zeta = l.kraft().value;
    let is_optimal = l.kraft().satisfied && value <= optimum + 1e-12;
    Ok(ZetaCheck {
        zeta,
        optimal_zeta: best.kraft().value,
        is_optimal,
        consistent: !is_optimal || zeta >= 0.5,
    })
}
