//! Tasks partitioning: `M` keys each trigger a cell of tasks. The partition
//! function `A(x)` counts the tasks performed with `x`; in the ordered
//! variant tasks in a cell run in decreasing probability and the count
//! function `N(x)` is the position of `x` in its cell.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measures::{
    kl_divergence, log2_escort_reciprocal, renyi_entropy, sundaresan_divergence, Alphabet,
    Distribution, MomentOrder,
};
use crate::numeric::{normalized_log2_moment, snapped_ceil};

/// Disjoint nonempty cells covering the alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    alphabet: Alphabet,
    cells: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(alphabet: Alphabet, cells: Vec<Vec<usize>>) -> Result<Self> {
        let m = alphabet.len();
        let mut owner = vec![false; m];
        for cell in &cells {
            if cell.is_empty() {
                return Err(Error::InvalidPartition("cells must be nonempty".into()));
            }
            for &x in cell {
                if x >= m {
                    return Err(Error::InvalidPartition(format!(
                        "symbol index {x} outside alphabet of size {m}"
                    )));
                }
                if std::mem::replace(&mut owner[x], true) {
                    return Err(Error::InvalidPartition(format!(
                        "cells must be disjoint; '{}' appears twice",
                        alphabet.label(x)
                    )));
                }
            }
        }
        if let Some(x) = owner.iter().position(|&o| !o) {
            return Err(Error::InvalidPartition(format!(
                "cells must cover the alphabet; '{}' is missing",
                alphabet.label(x)
            )));
        }
        Ok(Partition { alphabet, cells })
    }

    pub fn from_labels(alphabet: Alphabet, cells: &[Vec<String>]) -> Result<Self> {
        let indexed = cells
            .iter()
            .map(|cell| {
                cell.iter()
                    .map(|label| {
                        alphabet.index_of(label).ok_or_else(|| {
                            Error::InvalidPartition(format!("unknown symbol '{label}'"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, indexed)
    }

    /// Every symbol in its own cell.
    pub fn singletons(alphabet: Alphabet) -> Self {
        let cells = (0..alphabet.len()).map(|i| vec![i]).collect();
        Partition { alphabet, cells }
    }

    /// A single cell holding the whole alphabet, in index order.
    pub fn whole(alphabet: Alphabet) -> Self {
        let cells = vec![(0..alphabet.len()).collect()];
        Partition { alphabet, cells }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// `M`, the number of cells.
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// `{"cells": [["a","b"],["c"]]}`.
    pub fn to_json(&self) -> Value {
        let cells: Vec<Vec<&str>> = self
            .cells
            .iter()
            .map(|c| c.iter().map(|&i| self.alphabet.label(i)).collect())
            .collect();
        json!({ "cells": cells })
    }
}

/// `A(x) = |cell containing x|`.
pub fn partition_function(part: &Partition) -> Vec<u64> {
    let mut a = vec![0; part.alphabet.len()];
    for cell in &part.cells {
        for &x in cell {
            a[x] = cell.len() as u64;
        }
    }
    a
}

/// `N(x)`: rank of `x` within its cell when the cell's tasks run in
/// decreasing `P` order, ties by ascending index.
pub fn count_function(part: &Partition, p: &Distribution) -> Result<Vec<u64>> {
    part.alphabet.check_same(p.alphabet())?;
    let mut n = vec![0; part.alphabet.len()];
    for cell in &part.cells {
        let mut sorted = cell.clone();
        sorted.sort_by(|&a, &b| p.prob(b).total_cmp(&p.prob(a)).then(a.cmp(&b)));
        for (rank, &x) in sorted.iter().enumerate() {
            n[x] = rank as u64 + 1;
        }
    }
    Ok(n)
}

/// `Σ 1/v(x)`.
pub fn reciprocal_sum(values: &[u64]) -> f64 {
    values.iter().map(|&v| 1.0 / v as f64).sum()
}

/// `(1/ρ) log₂ E_P[v(X)^ρ]` for a partition or count function, or
/// `E_P[log₂ v(X)]` at `ρ = 0`.
pub fn tasks_moment(p: &Distribution, values: &[u64], order: MomentOrder) -> Result<f64> {
    p.alphabet().check_len(values.len())?;
    check_positive(values)?;
    let logs: Vec<f64> = values.iter().map(|&v| (v as f64).log2()).collect();
    Ok(normalized_log2_moment(p.probs(), &logs, order.rho()))
}

/// `E_P[v(X)^ρ]` itself (not normalized).
pub fn tasks_raw_moment(p: &Distribution, values: &[u64], order: MomentOrder) -> Result<f64> {
    let normalized = tasks_moment(p, values, order)?;
    Ok((order.rho() * normalized).exp2())
}

fn check_positive(values: &[u64]) -> Result<()> {
    if values.contains(&0) {
        return Err(Error::InvalidPartition("values must be positive integers".into()));
    }
    Ok(())
}

/// `Q(x) ∝ v(x)^{−1/α}` for a partition or count function `v`.
pub fn induced_distribution_from_counts(
    alphabet: &Alphabet,
    values: &[u64],
    order: MomentOrder,
) -> Result<Distribution> {
    alphabet.check_len(values.len())?;
    check_positive(values)?;
    let alpha = order.alpha();
    let logs: Vec<f64> = values.iter().map(|&v| -(v as f64).log2() / alpha).collect();
    Distribution::from_log2_weights(alphabet.clone(), &logs)
}

/// `M[1 + ln(m/M)]`, the bound on `Σ 1/N(x)` for any count function of a
/// partition of `m` tasks into `M` cells. `M = 1` gives `1 + ln m`.
pub fn ordered_budget(m: usize, cells: u64) -> Result<f64> {
    if cells == 0 {
        return Err(Error::InvalidPartition("M must be at least 1".into()));
    }
    if cells as usize > m {
        return Err(Error::MExceedsAlphabet {
            m: cells,
            alphabet_size: m,
        });
    }
    let big_m = cells as f64;
    Ok(big_m * (1.0 + (m as f64 / big_m).ln()))
}

/// `M̃ = (M − log₂|X| − 2)/4`.
pub fn m_tilde(cells: u64, alphabet_size: usize) -> f64 {
    (cells as f64 - (alphabet_size as f64).log2() - 2.0) / 4.0
}

/// `β = 2/(M − log₂|X| − 2)`.
pub fn beta(cells: u64, alphabet_size: usize) -> f64 {
    2.0 / (cells as f64 - (alphabet_size as f64).log2() - 2.0)
}

fn check_construction(q: &Distribution, order: MomentOrder, cells: u64) -> Result<()> {
    if order.rho() <= 0.0 {
        return Err(Error::NonPositiveRho(order.rho()));
    }
    let threshold = (q.len() as f64).log2() + 2.0;
    if (cells as f64) <= threshold {
        return Err(Error::MTooSmall {
            m: cells,
            alphabet_size: q.len(),
            threshold,
        });
    }
    Ok(())
}

/// Per-symbol caps `⌈β·Z_{Q,α}/Q(x)^α⌉`, clamped to `|X|` (no cell can be
/// larger).
pub fn partition_caps(q: &Distribution, order: MomentOrder, cells: u64) -> Result<Vec<u64>> {
    check_construction(q, order, cells)?;
    let m = q.len();
    let log2_beta = beta(cells, m).log2();
    let log2_m = (m as f64).log2();
    Ok(log2_escort_reciprocal(q, order)
        .into_iter()
        .map(|r| {
            let l = log2_beta + r;
            if l >= log2_m {
                m as u64
            } else {
                (snapped_ceil(l.exp2()).max(1.0) as u64).min(m as u64)
            }
        })
        .collect())
}

/// Builds a partition of at most `M` cells whose partition function obeys
/// `A(x) ≤ ⌈β·Z_{Q,α}/Q(x)^α⌉`.
///
/// With `|X| ≤ M` every symbol gets its own cell. Otherwise symbols are
/// scanned in decreasing `Q` order, so caps are nondecreasing.
/// The greedy pass opens a cell at each not-yet-placed symbol and fills it
/// up to that symbol's cap. If that uses more than `M` cells, symbols are
/// instead grouped by dyadic level `⌊log₂ cap⌋` and each level is cut into
/// chunks of `2^level`, which needs at most `2/β + ⌊log₂|X|⌋ + 2 ≤ M` cells.
pub fn build_partition(q: &Distribution, order: MomentOrder, cells: u64) -> Result<Partition> {
    let caps = partition_caps(q, order, cells)?;
    if q.len() as u64 <= cells {
        return Ok(Partition::singletons(q.alphabet().clone()));
    }
    let scan = q.decreasing_order();

    let greedy = greedy_cells(&scan, &caps);
    let chosen = if greedy.len() as u64 <= cells {
        greedy
    } else {
        let dyadic = dyadic_cells(&scan, &caps);
        if dyadic.len() as u64 > cells {
            return Err(Error::CellBudgetExceeded {
                cells: dyadic.len(),
                m: cells,
            });
        }
        dyadic
    };
    Partition::new(q.alphabet().clone(), chosen)
}

fn greedy_cells(scan: &[usize], caps: &[u64]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut limit = 0u64;
    for &x in scan {
        match out.last_mut() {
            Some(cell) if (cell.len() as u64) < limit => cell.push(x),
            _ => {
                limit = caps[x];
                out.push(vec![x]);
            }
        }
    }
    out
}

fn dyadic_cells(scan: &[usize], caps: &[u64]) -> Vec<Vec<usize>> {
    let mut by_level: Vec<Vec<usize>> = Vec::new();
    for &x in scan {
        let level = 63 - caps[x].leading_zeros() as usize;
        if by_level.len() <= level {
            by_level.resize(level + 1, Vec::new());
        }
        by_level[level].push(x);
    }
    by_level
        .into_iter()
        .enumerate()
        .flat_map(|(level, members)| {
            members
                .chunks(1 << level)
                .map(<[usize]>::to_vec)
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `H_α(P) + I_α(P,Q)` (Shannon/KL at `ρ = 0`).
pub(crate) fn entropy_plus_divergence(p: &Distribution, q: &Distribution, order: MomentOrder) -> Result<f64> {
    let div = if order.is_shannon() {
        kl_divergence(p, q)?
    } else {
        sundaresan_divergence(p, q, order)?
    };
    Ok(renyi_entropy(p, order) + div)
}

/// `1 + 2^{ρ(H_α(P) + I_α(P,Q) − log₂M̃)}`: achievability bound on
/// `E_P[A^ρ]` (and `E_P[N^ρ]`) for the partition built from `Q` with `M`
/// cells. `Q = P` gives the matched bound.
pub fn partition_moment_upper_bound(
    p: &Distribution,
    q: &Distribution,
    order: MomentOrder,
    cells: u64,
) -> Result<f64> {
    check_construction(q, order, cells)?;
    let exponent = order.rho() * (entropy_plus_divergence(p, q, order)? - m_tilde(cells, q.len()).log2());
    Ok(1.0 + exponent.exp2())
}

/// `H_α(P) − log₂M`: lower bound on the normalized partition moment.
pub fn partition_lower_bound(p: &Distribution, order: MomentOrder, cells: u64) -> f64 {
    renyi_entropy(p, order) - (cells as f64).log2()
}

/// `H_α(P) − log₂{M[1 + ln(|X|/M)]}`: lower bound on the normalized count
/// moment.
pub fn ordered_lower_bound(p: &Distribution, order: MomentOrder, cells: u64) -> Result<f64> {
    Ok(renyi_entropy(p, order) - ordered_budget(p.len(), cells)?.log2())
}
