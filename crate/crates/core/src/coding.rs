//! Kraft-constrained length functions, Shannon and Campbell code lengths,
//! canonical codeword assignment and the integer-optimal cumulant oracle.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::measures::{
    kl_divergence, log2_escort_reciprocal, renyi_entropy, sundaresan_divergence, Alphabet,
    Distribution, MomentOrder,
};
use crate::numeric::{normalized_log2_moment, snapped_ceil, SNAP_TOLERANCE};

/// Slack allowed on `Σ 2^{−L} ≤ 1`.
pub const KRAFT_TOLERANCE: f64 = 1e-12;

/// Default cap on codeword length explored by the optimal-length oracle.
pub const DEFAULT_MAX_LEN: u32 = 16;

/// Integer code lengths `L(x) ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthFunction {
    alphabet: Alphabet,
    lengths: Vec<u32>,
}

impl LengthFunction {
    pub fn new(alphabet: Alphabet, lengths: Vec<u32>) -> Result<Self> {
        alphabet.check_len(lengths.len())?;
        if let Some(i) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::InvalidLengths(format!(
                "every length must be at least 1; '{}' has length 0",
                alphabet.label(i)
            )));
        }
        Ok(LengthFunction { alphabet, lengths })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.lengths.iter().map(|&l| l as f64).collect()
    }

    /// `η = Σ 2^{−L(x)}` (called `ζ` in the transfer maps).
    pub fn kraft(&self) -> KraftSum {
        kraft_sum(self)
    }

    fn require_kraft(&self) -> Result<()> {
        let k = self.kraft();
        if k.satisfied {
            Ok(())
        } else {
            Err(Error::KraftViolation { sum: k.value })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct KraftSum {
    pub value: f64,
    pub satisfied: bool,
}

pub fn kraft_sum(l: &LengthFunction) -> KraftSum {
    let value: f64 = l.lengths.iter().map(|&len| (-(len as f64)).exp2()).sum();
    KraftSum {
        value,
        satisfied: value <= 1.0 + KRAFT_TOLERANCE,
    }
}

fn lengths_from_log2_targets(alphabet: Alphabet, targets: &[f64]) -> LengthFunction {
    let lengths = targets
        .iter()
        .map(|&t| snapped_ceil(t).max(1.0) as u32)
        .collect();
    LengthFunction { alphabet, lengths }
}

/// `L(x) = ⌈−log₂ Q(x)⌉`, clamped to at least 1.
pub fn shannon_lengths(q: &Distribution) -> LengthFunction {
    let targets: Vec<f64> = q.probs().iter().map(|p| -p.log2()).collect();
    lengths_from_log2_targets(q.alphabet().clone(), &targets)
}

/// `L(x) = ⌈log₂(Z_{P,α}/P(x)^α)⌉`, clamped to at least 1. At `α = 1` this is
/// [`shannon_lengths`].
pub fn campbell_lengths(p: &Distribution, order: MomentOrder) -> LengthFunction {
    let targets = log2_escort_reciprocal(p, order);
    lengths_from_log2_targets(p.alphabet().clone(), &targets)
}

/// Prefix-free codewords, one per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeBook {
    alphabet: Alphabet,
    codewords: Vec<String>,
}

impl CodeBook {
    pub fn codewords(&self) -> &[String] {
        &self.codewords
    }

    pub fn codeword(&self, index: usize) -> &str {
        &self.codewords[index]
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// `{symbol: bitstring}` in alphabet order.
    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .alphabet
            .labels()
            .iter()
            .zip(&self.codewords)
            .map(|(s, c)| (s.clone(), Value::String(c.clone())))
            .collect();
        Value::Object(map)
    }

    pub fn is_prefix_free(&self) -> bool {
        let mut sorted: Vec<&str> = self.codewords.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        // in lexicographic order a prefix sorts immediately before some extension of it
        sorted.windows(2).all(|w| !w[1].starts_with(w[0]))
    }
}

/// Canonical prefix code: symbols sorted by `(length, index)` receive
/// lexicographically increasing codewords.
pub fn assign_codewords(l: &LengthFunction) -> Result<CodeBook> {
    l.require_kraft()?;
    let mut order: Vec<usize> = (0..l.len()).collect();
    order.sort_by_key(|&i| (l.lengths[i], i));

    let mut codewords = vec![String::new(); l.len()];
    let mut code: Vec<u8> = Vec::new();
    let mut first = true;
    for &i in &order {
        let len = l.lengths[i] as usize;
        if !first && !increment(&mut code) {
            return Err(Error::KraftViolation {
                sum: l.kraft().value,
            });
        }
        first = false;
        code.resize(len, 0);
        codewords[i] = code.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
    }
    Ok(CodeBook {
        alphabet: l.alphabet.clone(),
        codewords,
    })
}

/// Binary increment in place; false on overflow.
fn increment(bits: &mut [u8]) -> bool {
    for b in bits.iter_mut().rev() {
        if *b == 0 {
            *b = 1;
            return true;
        }
        *b = 0;
    }
    false
}

/// `(1/ρ) log₂ E_P[2^{ρL}]`, or `E_P[L]` at `ρ = 0`.
pub fn coding_cumulant(p: &Distribution, l: &LengthFunction, order: MomentOrder) -> Result<f64> {
    p.alphabet().check_same(l.alphabet())?;
    Ok(normalized_log2_moment(p.probs(), &l.as_f64(), order.rho()))
}

/// `Q_L(x) ∝ 2^{−L(x)/α}`.
pub fn induced_distribution_from_lengths(l: &LengthFunction, order: MomentOrder) -> Distribution {
    let alpha = order.alpha();
    let logs: Vec<f64> = l.lengths.iter().map(|&len| -(len as f64) / alpha).collect();
    Distribution::from_log2_weights(l.alphabet.clone(), &logs)
        .expect("finite log-weights always normalize")
}

/// Exhaustive search for the Kraft-satisfying integer length function that
/// minimizes the coding cumulant.
///
/// Nondecreasing length multisets are enumerated with Kraft pruning and
/// paired with symbols in decreasing-probability order, which is optimal for
/// each multiset by the rearrangement inequality. Ties keep the first
/// multiset in lexicographic order.
pub fn optimal_cumulant_lengths(
    p: &Distribution,
    order: MomentOrder,
    max_len: u32,
) -> Result<(LengthFunction, f64)> {
    let m = p.len();
    if m > 8 {
        return Err(Error::SearchSpaceGuard(format!(
            "alphabet size must be at most 8, got {m}"
        )));
    }
    if !(1..=16).contains(&max_len) {
        return Err(Error::SearchSpaceGuard(format!(
            "max_len must lie in 1..=16, got {max_len}"
        )));
    }
    if (m as u64) > (1u64 << max_len) {
        return Err(Error::SearchSpaceGuard(format!(
            "no Kraft-satisfying lengths of at most {max_len} bits exist for {m} symbols"
        )));
    }

    let ranked = p.decreasing_order();
    let sorted_probs: Vec<f64> = ranked.iter().map(|&i| p.prob(i)).collect();
    let mut search = OracleSearch {
        probs: &sorted_probs,
        rho: order.rho(),
        max_len,
        unit: 1u64 << max_len,
        current: Vec::with_capacity(m),
        best: None,
    };
    search.descend(1, 0);
    let (value, best) = search.best.expect("at least one feasible multiset exists");

    let mut lengths = vec![0u32; m];
    for (rank, &symbol) in ranked.iter().enumerate() {
        lengths[symbol] = best[rank];
    }
    Ok((
        LengthFunction {
            alphabet: p.alphabet().clone(),
            lengths,
        },
        value,
    ))
}

struct OracleSearch<'a> {
    probs: &'a [f64],
    rho: f64,
    max_len: u32,
    /// `2^{max_len}`: Kraft sums are kept as exact integers in this unit.
    unit: u64,
    current: Vec<u32>,
    best: Option<(f64, Vec<u32>)>,
}

impl OracleSearch<'_> {
    fn descend(&mut self, min_len: u32, used: u64) {
        let pos = self.current.len();
        let remaining = (self.probs.len() - pos) as u64;
        if remaining == 0 {
            let lens: Vec<f64> = self.current.iter().map(|&l| l as f64).collect();
            let value = normalized_log2_moment(self.probs, &lens, self.rho);
            if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
                self.best = Some((value, self.current.clone()));
            }
            return;
        }
        for len in min_len..=self.max_len {
            let each = self.unit >> len;
            // cheapest completion puts every later symbol at max_len, one unit each
            if used + each + (remaining - 1) <= self.unit {
                self.current.push(len);
                self.descend(len, used + each);
                self.current.pop();
            }
        }
    }
}

/// `R_c = coding_cumulant(L) − min_K coding_cumulant(K)`.
pub fn coding_redundancy(
    p: &Distribution,
    l: &LengthFunction,
    order: MomentOrder,
    max_len: u32,
) -> Result<f64> {
    l.require_kraft()?;
    let value = coding_cumulant(p, l, order)?;
    let (_, optimum) = optimal_cumulant_lengths(p, order, max_len)?;
    Ok(value - optimum)
}

/// The mismatch band bracketing `R_c` for a given length function:
/// `I_α(P,Q_L) − log₂η − 1 ≤ R_c ≤ I_α(P,Q_L) − log₂η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RedundancyBand {
    pub divergence: f64,
    pub log2_eta: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn redundancy_band(p: &Distribution, l: &LengthFunction, order: MomentOrder) -> Result<RedundancyBand> {
    l.require_kraft()?;
    p.alphabet().check_same(l.alphabet())?;
    let q_l = induced_distribution_from_lengths(l, order);
    let divergence = if order.is_shannon() {
        kl_divergence(p, &q_l)?
    } else {
        sundaresan_divergence(p, &q_l, order)?
    };
    let log2_eta = l.kraft().value.log2();
    Ok(RedundancyBand {
        divergence,
        log2_eta,
        lower: divergence - log2_eta - 1.0,
        upper: divergence - log2_eta,
    })
}

/// Residual of `cumulant − H_α(P) − I_α(P,Q_L) + log₂η`, identically zero.
pub fn mismatch_identity_residual(p: &Distribution, l: &LengthFunction, order: MomentOrder) -> Result<f64> {
    let band = redundancy_band(p, l, order)?;
    let cumulant = coding_cumulant(p, l, order)?;
    Ok(cumulant - renyi_entropy(p, order) - band.divergence + band.log2_eta)
}

/// True when `2^{L(x)}` lies in `[Z/P^α, 2·Z/P^α)` for every symbol, i.e.
/// `L` is the Campbell ceiling for `P` (or Shannon at `α = 1`).
pub fn within_ceiling_band(p: &Distribution, l: &LengthFunction, order: MomentOrder) -> bool {
    let targets = log2_escort_reciprocal(p, order);
    l.lengths.iter().zip(&targets).all(|(&len, &t)| {
        let len = len as f64;
        (len >= t - SNAP_TOLERANCE && len < t + 1.0) || (t <= SNAP_TOLERANCE && len == 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::new(vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn p3() -> Distribution {
        Distribution::with_alphabet(abc(), vec![0.5, 0.25, 0.25]).unwrap()
    }

    fn lf(lengths: &[u32]) -> LengthFunction {
        LengthFunction::new(Alphabet::indexed(lengths.len()), lengths.to_vec()).unwrap()
    }

    fn rho(r: f64) -> MomentOrder {
        MomentOrder::from_rho(r).unwrap()
    }

    #[test]
    fn kraft_examples() {
        assert_eq!(kraft_sum(&lf(&[1, 2, 2])), KraftSum { value: 1.0, satisfied: true });
        assert_eq!(kraft_sum(&lf(&[1, 1, 1])), KraftSum { value: 1.5, satisfied: false });
        assert_eq!(kraft_sum(&lf(&[2, 2, 2])), KraftSum { value: 0.75, satisfied: true });
        assert!(LengthFunction::new(Alphabet::indexed(2), vec![0, 1]).is_err());
    }

    #[test]
    fn shannon_length_examples() {
        assert_eq!(shannon_lengths(&p3()).lengths(), &[1, 2, 2]);
        let d = Distribution::new(vec!["x".into(), "y".into()], vec![0.6, 0.4]).unwrap();
        assert_eq!(shannon_lengths(&d).lengths(), &[1, 2]);
        assert_eq!(shannon_lengths(&Distribution::uniform(5)).lengths(), &[3; 5]);
        assert_eq!(shannon_lengths(&Distribution::uniform(1)).lengths(), &[1]);
    }

    #[test]
    fn campbell_length_examples() {
        let l = campbell_lengths(&p3(), MomentOrder::from_alpha(0.5).unwrap());
        assert_eq!(l.lengths(), &[2, 2, 2]);
        assert_eq!(l.kraft().value, 0.75);
        for a in [0.2, 0.5, 0.9, 3.0] {
            let l = campbell_lengths(&Distribution::uniform(4), MomentOrder::from_alpha(a).unwrap());
            assert_eq!(l.lengths(), &[2; 4]);
        }
        let skewed = Distribution::new(vec!["x".into(), "y".into(), "z".into()], vec![0.7, 0.2, 0.1]).unwrap();
        assert_eq!(
            campbell_lengths(&skewed, MomentOrder::shannon()),
            shannon_lengths(&skewed)
        );
    }

    #[test]
    fn canonical_codeword_examples() {
        let book = assign_codewords(&LengthFunction::new(abc(), vec![1, 2, 2]).unwrap()).unwrap();
        assert_eq!(book.codewords(), &["0", "10", "11"]);
        assert_eq!(
            book.to_json().to_string(),
            r#"{"a":"0","b":"10","c":"11"}"#
        );
        let book = assign_codewords(&lf(&[2, 2, 2])).unwrap();
        assert_eq!(book.codewords(), &["00", "01", "10"]);
        assert_eq!(assign_codewords(&lf(&[1])).unwrap().codewords(), &["0"]);
        let book = assign_codewords(&lf(&[3, 1, 3, 2])).unwrap();
        assert_eq!(book.codewords(), &["110", "0", "111", "10"]);
        assert!(book.is_prefix_free());
        assert!(matches!(
            assign_codewords(&lf(&[1, 1, 1])),
            Err(Error::KraftViolation { .. })
        ));
    }

    #[test]
    fn long_codewords_do_not_overflow() {
        let book = assign_codewords(&lf(&[100, 100])).unwrap();
        assert_eq!(book.codeword(0).len(), 100);
        assert!(book.codeword(1).ends_with('1'));
        assert!(book.is_prefix_free());
    }

    #[test]
    fn coding_cumulant_examples() {
        let half = MomentOrder::from_alpha(0.5).unwrap();
        let l = campbell_lengths(&p3(), half);
        let v = coding_cumulant(&p3(), &l, half).unwrap();
        let h = renyi_entropy(&p3(), half);
        assert!(v >= h && v <= h + 1.0);
        let l = LengthFunction::new(abc(), vec![2, 2, 2]).unwrap();
        assert!((coding_cumulant(&p3(), &l, rho(1.0)).unwrap() - 2.0).abs() < 1e-12);
        let l = LengthFunction::new(abc(), vec![1, 2, 2]).unwrap();
        assert!((coding_cumulant(&p3(), &l, MomentOrder::shannon()).unwrap() - 1.5).abs() < 1e-15);
        assert!(coding_cumulant(&p3(), &lf(&[1, 2, 2]), rho(1.0)).is_err());
    }

    #[test]
    fn induced_distribution_examples() {
        let q = induced_distribution_from_lengths(&lf(&[1, 2, 2]), MomentOrder::shannon());
        assert_eq!(q.probs(), &[0.5, 0.25, 0.25]);
        let half = MomentOrder::from_alpha(0.5).unwrap();
        let q = induced_distribution_from_lengths(&lf(&[1, 1]), half);
        assert_eq!(q.probs(), &[0.5, 0.5]);
        let q = induced_distribution_from_lengths(&lf(&[1, 2]), half);
        assert!((q.prob(0) - 0.8).abs() < 1e-15 && (q.prob(1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn oracle_examples() {
        let p2 = Distribution::new(vec!["x".into(), "y".into()], vec![0.75, 0.25]).unwrap();
        let (l, v) = optimal_cumulant_lengths(&p2, rho(1.0), DEFAULT_MAX_LEN).unwrap();
        assert_eq!(l.lengths(), &[1, 1]);
        assert!((v - 1.0).abs() < 1e-12);

        for r in [0.5, 1.0, 3.0, -0.5] {
            let (l, v) = optimal_cumulant_lengths(&Distribution::uniform(4), rho(r), DEFAULT_MAX_LEN).unwrap();
            assert_eq!(l.lengths(), &[2; 4]);
            assert!((v - 2.0).abs() < 1e-12);
        }

        let (l, v) = optimal_cumulant_lengths(&p3(), MomentOrder::shannon(), DEFAULT_MAX_LEN).unwrap();
        assert_eq!(l.lengths(), &[1, 2, 2]);
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn oracle_guards() {
        assert!(matches!(
            optimal_cumulant_lengths(&Distribution::uniform(9), rho(1.0), 16),
            Err(Error::SearchSpaceGuard(_))
        ));
        assert!(optimal_cumulant_lengths(&p3(), rho(1.0), 17).is_err());
        assert!(optimal_cumulant_lengths(&p3(), rho(1.0), 1).is_err());
        assert!(optimal_cumulant_lengths(&Distribution::uniform(2), rho(1.0), 1).is_ok());
    }

    #[test]
    fn redundancy_examples() {
        let p2 = Distribution::new(vec!["x".into(), "y".into()], vec![0.75, 0.25]).unwrap();
        let r1 = rho(1.0);
        let (opt, _) = optimal_cumulant_lengths(&p2, r1, DEFAULT_MAX_LEN).unwrap();
        assert!(coding_redundancy(&p2, &opt, r1, DEFAULT_MAX_LEN).unwrap().abs() < 1e-12);

        let l = LengthFunction::new(p2.alphabet().clone(), vec![1, 2]).unwrap();
        let r = coding_redundancy(&p2, &l, r1, DEFAULT_MAX_LEN).unwrap();
        assert!((r - 0.321_928_094_887_362).abs() < 1e-12);

        let l = LengthFunction::new(p2.alphabet().clone(), vec![100, 100]).unwrap();
        let r = coding_redundancy(&p2, &l, r1, DEFAULT_MAX_LEN).unwrap();
        assert!((r - 99.0).abs() < 1e-9);
        let band = redundancy_band(&p2, &l, r1).unwrap();
        assert!((band.log2_eta + 99.0).abs() < 1e-12);
        assert!((band.divergence - 0.100_031_373_047_008).abs() < 1e-12);
        assert!(band.lower <= r + 1e-9 && r <= band.upper + 1e-9);
        assert!(r >= band.divergence + 98.0);
    }

    #[test]
    fn identity_residual_is_zero() {
        let l = LengthFunction::new(abc(), vec![1, 3, 2]).unwrap();
        for r in [-0.5, 0.0, 0.5, 2.0] {
            let res = mismatch_identity_residual(&p3(), &l, rho(r)).unwrap();
            assert!(res.abs() < 1e-12, "rho={r} residual={res}");
        }
    }

    #[test]
    fn ceiling_band_holds_for_constructions() {
        let half = MomentOrder::from_alpha(0.5).unwrap();
        assert!(within_ceiling_band(&p3(), &campbell_lengths(&p3(), half), half));
        assert!(!within_ceiling_band(&p3(), &lf_abc(&[5, 5, 5]), half));
    }

    fn lf_abc(l: &[u32]) -> LengthFunction {
        LengthFunction::new(abc(), l.to_vec()).unwrap()
    }
}
