//! i.i.d. product distributions and the exact-enumeration convergence
//! harness for the sequence versions of every problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{campbell_lengths, coding_cumulant};
use crate::error::{Error, Result};
use crate::guessing::{guessing_moment, memoryless_moment, optimal_guessing, MemorylessStrategy};
use crate::measures::{
    escort, kl_divergence, renyi_entropy, sundaresan_divergence, Alphabet, Distribution,
    MomentOrder,
};
use crate::numeric::{format_sig10, snapped_ceil};
use crate::tasks::{
    build_partition, count_function, entropy_plus_divergence, m_tilde, ordered_budget,
    partition_function, tasks_raw_moment,
};

/// Default bound on `|X|^n` for enumerated product spaces.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// Joins component labels of a tuple symbol (ASCII unit separator).
pub const TUPLE_SEPARATOR: char = '\u{1f}';

const BOUNDARY_TOLERANCE: f64 = 1e-12;
const BRACKET_TOLERANCE: f64 = 1e-9;

/// `P_n` over `X^n`, tuples in lexicographic order of symbol indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpace {
    base: Distribution,
    n: u32,
    dist: Distribution,
}

impl ProductSpace {
    pub fn base(&self) -> &Distribution {
        &self.base
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }

    pub fn into_distribution(self) -> Distribution {
        self.dist
    }
}

fn check_cap(m: usize, n: u32, cap: u64) -> Result<()> {
    let states = (m as u128).checked_pow(n).unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::EnumerationCap { states, cap });
    }
    Ok(())
}

/// `product_distribution_capped` with [`DEFAULT_ENUM_CAP`].
pub fn product_distribution(p: &Distribution, n: u32) -> Result<ProductSpace> {
    product_distribution_capped(p, n, DEFAULT_ENUM_CAP)
}

pub fn product_distribution_capped(p: &Distribution, n: u32, cap: u64) -> Result<ProductSpace> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    check_cap(p.len(), n, cap)?;
    let base_labels = p.alphabet().labels();
    let mut labels: Vec<String> = base_labels.to_vec();
    let mut probs: Vec<f64> = p.probs().to_vec();
    for _ in 1..n {
        let mut next_labels = Vec::with_capacity(labels.len() * p.len());
        let mut next_probs = Vec::with_capacity(probs.len() * p.len());
        for (prefix, &mass) in labels.iter().zip(&probs) {
            for (label, &q) in base_labels.iter().zip(p.probs()) {
                let mut tuple = String::with_capacity(prefix.len() + 1 + label.len());
                tuple.push_str(prefix);
                tuple.push(TUPLE_SEPARATOR);
                tuple.push_str(label);
                next_labels.push(tuple);
                next_probs.push(mass * q);
            }
        }
        labels = next_labels;
        probs = next_probs;
    }
    // component labels are unique and the separator is reserved, so tuples are too
    let dist = Distribution::with_alphabet(Alphabet::from_unique(labels), probs)?;
    Ok(ProductSpace {
        base: p.clone(),
        n,
        dist,
    })
}

/// Gaps between product-space measures and `n` times their single-letter
/// values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub n: u32,
    pub entropy_gap: f64,
    pub divergence_gap: f64,
}

impl AdditivityReport {
    /// Both gaps within `1e-8·n`.
    pub fn holds(&self) -> bool {
        let tol = 1e-8 * self.n as f64;
        self.entropy_gap <= tol && self.divergence_gap <= tol
    }
}

/// `|H_α(P_n) − nH_α(P)|` and `|I_α(P_n,Q_n) − nI_α(P,Q)|` (Shannon and KL
/// at `ρ = 0`).
pub fn additivity_report(
    p: &Distribution,
    q: &Distribution,
    order: MomentOrder,
    n: u32,
) -> Result<AdditivityReport> {
    p.alphabet().check_same(q.alphabet())?;
    let pn = product_distribution(p, n)?.into_distribution();
    let qn = Distribution::with_alphabet(
        pn.alphabet().clone(),
        product_distribution(q, n)?.into_distribution().probs().to_vec(),
    )?;
    let div = |a: &Distribution, b: &Distribution| {
        if order.is_shannon() {
            kl_divergence(a, b)
        } else {
            sundaresan_divergence(a, b, order)
        }
    };
    let nf = n as f64;
    Ok(AdditivityReport {
        n,
        entropy_gap: (renyi_entropy(&pn, order) - nf * renyi_entropy(p, order)).abs(),
        divergence_gap: (div(&pn, &qn)? - nf * div(p, q)?).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Campbell,
    Guessing,
    Memoryless,
    Tasks,
    OrderedTasks,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Campbell => "campbell",
            Problem::Guessing => "guessing",
            Problem::Memoryless => "memoryless",
            Problem::Tasks => "tasks",
            Problem::OrderedTasks => "ordered-tasks",
        }
    }

    pub fn is_tasks(self) -> bool {
        matches!(self, Problem::Tasks | Problem::OrderedTasks)
    }
}

/// How the number of cells `M_n` grows with `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum CellRule {
    /// `M_n = ⌈scale·base^n⌉`, so `γ = log₂ base`.
    Exponential { base: f64, scale: f64 },
    /// `M_n = ⌈slope·n + intercept⌉`, so `γ = 0`.
    Linear { slope: f64, intercept: f64 },
    /// `M_n = ⌈n·log₂|X| + 3⌉`, the smallest admissible size; `γ = 0`.
    MinAdmissible,
}

impl CellRule {
    /// `γ = lim (log₂ M_n)/n`.
    pub fn gamma(&self) -> f64 {
        match *self {
            CellRule::Exponential { base, .. } => base.log2(),
            CellRule::Linear { .. } | CellRule::MinAdmissible => 0.0,
        }
    }

    pub fn cells(&self, n: u32, alphabet_size: usize) -> Result<u64> {
        let nf = n as f64;
        let raw = match *self {
            CellRule::Exponential { base, scale } => scale * base.powf(nf),
            CellRule::Linear { slope, intercept } => slope * nf + intercept,
            CellRule::MinAdmissible => nf * (alphabet_size as f64).log2() + 3.0,
        };
        let m = snapped_ceil(raw);
        if !(m.is_finite() && m >= 1.0 && m < u64::MAX as f64) {
            return Err(Error::InvalidConfig(format!(
                "M_n must be a positive integer below 2^64, got {raw} at n = {n}"
            )));
        }
        Ok(m as u64)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CellRule::Exponential { base, scale } => {
                base.is_finite() && base >= 1.0 && scale.is_finite() && scale > 0.0
            }
            CellRule::Linear { slope, intercept } => {
                slope.is_finite() && slope >= 0.0 && intercept.is_finite()
            }
            CellRule::MinAdmissible => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "M_n rule {self:?} must be nondecreasing with positive values"
            )))
        }
    }
}

fn default_n_min() -> u32 {
    1
}

/// One convergence experiment, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub p: Distribution,
    /// Design distribution for the mismatched variants; defaults to `p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Distribution>,
    pub rho: Vec<f64>,
    #[serde(default = "default_n_min")]
    pub n_min: u32,
    pub n_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_n: Option<CellRule>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_cap: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn design(&self) -> &Distribution {
        self.q.as_ref().unwrap_or(&self.p)
    }

    pub fn cap(&self) -> u64 {
        self.enum_cap.unwrap_or(DEFAULT_ENUM_CAP)
    }

    fn orders(&self) -> Result<Vec<MomentOrder>> {
        if self.rho.is_empty() {
            return Err(Error::InvalidConfig("rho grid must not be empty".into()));
        }
        self.rho.iter().map(|&r| MomentOrder::from_rho(r)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = &self.q {
            self.p.alphabet().check_same(q.alphabet())?;
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "n range must satisfy 1 <= n_min <= n_max, got {}..={}",
                self.n_min, self.n_max
            )));
        }
        check_cap(self.p.len(), self.n_max, self.cap())?;
        let orders = self.orders()?;
        match self.problem {
            Problem::Memoryless => {
                for o in &orders {
                    o.integer_rho().ok_or(Error::NonIntegerRho(o.rho()))?;
                }
            }
            Problem::Tasks | Problem::OrderedTasks => {
                let rule = self.m_n.ok_or_else(|| {
                    Error::InvalidConfig("tasks problems need an M_n rule".into())
                })?;
                rule.validate()?;
                for o in &orders {
                    if o.rho() <= 0.0 {
                        return Err(Error::NonPositiveRho(o.rho()));
                    }
                    let h = entropy_plus_divergence(&self.p, self.design(), *o)?;
                    if (rule.gamma() - h).abs() <= BOUNDARY_TOLERANCE {
                        return Err(Error::BoundaryConfig(format!(
                            "gamma = {} equals H_alpha + I_alpha at rho = {}; neither regime applies",
                            rule.gamma(),
                            o.rho()
                        )));
                    }
                }
                let log2_m = (self.p.len() as f64).log2();
                for n in self.n_min..=self.n_max {
                    let cells = rule.cells(n, self.p.len())?;
                    let need = n as f64 * log2_m + 3.0;
                    if (cells as f64) < need - BRACKET_TOLERANCE {
                        return Err(Error::MTooSmall {
                            m: cells,
                            alphabet_size: self.p.len(),
                            threshold: need,
                        });
                    }
                }
            }
            Problem::Campbell | Problem::Guessing => {}
        }
        Ok(())
    }
}

/// Which side of `γ` versus `H_α + I_α` a tasks configuration sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TasksRegime {
    /// `γ > H_α + I_α`: `E[A_n^ρ] → 1`.
    Vanishing,
    /// `γ < H_α + I_α`: `(1/nρ) log₂E[A_n^ρ] → H_α + I_α − γ`.
    Growing,
}

/// One grid point. Tasks rows in the vanishing regime report `E[A_n^ρ]`
/// itself; every other row reports a per-symbol normalized cumulant in bits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub problem: Problem,
    pub n: u32,
    pub rho: f64,
    pub alpha: f64,
    pub value_bits: f64,
    pub target_bits: f64,
    pub lower_bracket: Option<f64>,
    pub upper_bracket: Option<f64>,
    #[serde(rename = "M_n")]
    pub m_n: Option<u64>,
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<TasksRegime>,
}

impl ConvergenceRow {
    pub fn within_bracket(&self) -> bool {
        let lo = self.lower_bracket.is_none_or(|l| self.value_bits >= l - BRACKET_TOLERANCE);
        let hi = self.upper_bracket.is_none_or(|u| self.value_bits <= u + BRACKET_TOLERANCE);
        lo && hi
    }

    pub fn bracket_nonempty(&self) -> bool {
        match (self.lower_bracket, self.upper_bracket) {
            (Some(l), Some(u)) => l <= u + BRACKET_TOLERANCE,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: Problem,
    pub seed: u64,
    pub gamma: Option<f64>,
    /// For tasks problems: whether an optimal tasks solution carries over to
    /// guessing, which needs `log₂M_n` to grow sub-linearly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guessing_transfer: Option<&'static str>,
    pub rows: Vec<ConvergenceRow>,
}

pub const CSV_HEADER: &str =
    "problem,n,rho,alpha,value_bits,target_bits,lower_bracket,upper_bracket,M_n,gamma";

fn opt_cell(x: Option<f64>) -> String {
    x.map(format_sig10).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn all_within_brackets(&self) -> bool {
        self.rows.iter().all(ConvergenceRow::within_bracket)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.problem.name().to_string(),
                r.n.to_string(),
                format_sig10(r.rho),
                format_sig10(r.alpha),
                format_sig10(r.value_bits),
                format_sig10(r.target_bits),
                opt_cell(r.lower_bracket),
                opt_cell(r.upper_bracket),
                r.m_n.map(|m| m.to_string()).unwrap_or_default(),
                opt_cell(r.gamma),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

struct Spaces {
    n: u32,
    pn: Distribution,
    qn: Distribution,
}

fn spaces(cfg: &ExperimentConfig, n: u32) -> Result<Spaces> {
    let cap = cfg.cap();
    let pn = product_distribution_capped(&cfg.p, n, cap)?.into_distribution();
    let qn = match &cfg.q {
        None => pn.clone(),
        Some(q) => Distribution::with_alphabet(
            pn.alphabet().clone(),
            product_distribution_capped(q, n, cap)?.into_distribution().probs().to_vec(),
        )?,
    };
    Ok(Spaces { n, pn, qn })
}

fn row(
    cfg: &ExperimentConfig,
    s: &Spaces,
    order: MomentOrder,
    value_bits: f64,
    target_bits: f64,
    lower: f64,
    upper: f64,
) -> ConvergenceRow {
    ConvergenceRow {
        problem: cfg.problem,
        n: s.n,
        rho: order.rho(),
        alpha: order.alpha(),
        value_bits,
        target_bits,
        lower_bracket: Some(lower),
        upper_bracket: Some(upper),
        m_n: None,
        gamma: None,
        regime: None,
    }
}

/// `E_P[A^ρ]` (or `E_P[N^ρ]`) for the partition of `X^n` built from `Q_n`.
fn tasks_value(s: &Spaces, order: MomentOrder, cells: u64, ordered: bool) -> Result<f64> {
    let part = build_partition(&s.qn, order, cells)?;
    let values = if ordered {
        count_function(&part, &s.qn)?
    } else {
        partition_function(&part)
    };
    tasks_raw_moment(&s.pn, &values, order)
}

fn evaluate(cfg: &ExperimentConfig, s: &Spaces, order: MomentOrder) -> Result<ConvergenceRow> {
    let n = s.n as f64;
    let h = renyi_entropy(&cfg.p, order);
    let target = entropy_plus_divergence(&cfg.p, cfg.design(), order)?;
    match cfg.problem {
        Problem::Campbell => {
            let l = campbell_lengths(&s.qn, order);
            let v = coding_cumulant(&s.pn, &l, order)? / n;
            Ok(row(cfg, s, order, v, target, target, target + 1.0 / n))
        }
        Problem::Guessing => {
            let g = optimal_guessing(&s.qn);
            let v = guessing_moment(&s.pn, &g, order)? / n;
            let m = cfg.p.len() as f64;
            let lower = h - (1.0 + n * m.ln()).log2() / n;
            Ok(row(cfg, s, order, v, target, lower, target))
        }
        Problem::Memoryless => {
            let strategy = MemorylessStrategy::with_order(escort(&s.qn, order), order)?;
            let v = memoryless_moment(&s.pn, &strategy)? / n;
            Ok(row(cfg, s, order, v, target, target, target))
        }
        Problem::Tasks | Problem::OrderedTasks => {
            let ordered = cfg.problem == Problem::OrderedTasks;
            let rule = cfg.m_n.expect("validated");
            let gamma = rule.gamma();
            let m = cfg.p.len();
            let cells = rule.cells(s.n, m)?;
            let rho = order.rho();
            let raw = tasks_value(s, order, cells, ordered)?;
            let states = (m as f64).powf(n);
            let log2_budget = if ordered {
                ordered_budget(states as usize, cells.min(states as u64))?.log2()
            } else {
                (cells as f64).log2()
            };
            let lower_exponent = h - log2_budget / n;
            let upper_exponent = target - m_tilde(cells, m.pow(s.n)).log2() / n;
            let mut r = if gamma > target {
                let lower = (n * rho * lower_exponent).exp2().max(1.0);
                let upper = 1.0 + (n * rho * upper_exponent).exp2();
                row(cfg, s, order, raw, 1.0, lower, upper)
            } else {
                let v = raw.log2() / (n * rho);
                let upper = upper_exponent.max(0.0) + 1.0 / (n * rho);
                row(cfg, s, order, v, target - gamma, lower_exponent, upper)
            };
            r.m_n = Some(cells);
            r.gamma = Some(gamma);
            r.regime = Some(if gamma > target {
                TasksRegime::Vanishing
            } else {
                TasksRegime::Growing
            });
            Ok(r)
        }
    }
}

/// Exact per-`n`, per-`ρ` values with their targets and finite-`n`
/// brackets. Rows are ordered by `n`, then by position in the `ρ` grid.
pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let orders = cfg.orders()?;
    let per_n: Vec<Vec<ConvergenceRow>> = (cfg.n_min..=cfg.n_max)
        .into_par_iter()
        .map(|n| {
            let s = spaces(cfg, n)?;
            orders.iter().map(|&o| evaluate(cfg, &s, o)).collect()
        })
        .collect::<Result<_>>()?;
    let gamma = cfg.m_n.filter(|_| cfg.problem.is_tasks()).map(|r| r.gamma());
    Ok(ConvergenceReport {
        problem: cfg.problem,
        seed: cfg.seed,
        gamma,
        guessing_transfer: gamma.map(|g| if g == 0.0 { "applies" } else { "no-transfer" }),
        rows: per_n.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: u32,
    pub rho: f64,
    #[serde(rename = "M_n")]
    pub m_n: u64,
    pub value_bits: f64,
    pub limit_bits: f64,
    pub gap_bits: f64,
    pub lower_bracket: f64,
    pub upper_bracket: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub gamma: f64,
    pub rows: Vec<RateRow>,
}

impl RateReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Compares `(1/nρ) log₂E[A_n^ρ]` with its limit `H_α − γ` in the growing
/// regime. Needs a tasks problem with `γ` strictly below `H_α + I_α`.
pub fn remark_rate_check(cfg: &ExperimentConfig) -> Result<RateReport> {
    if !cfg.problem.is_tasks() {
        return Err(Error::InvalidConfig(format!(
            "rate check needs a tasks problem, got {}",
            cfg.problem.name()
        )));
    }
    cfg.validate()?;
    let gamma = cfg.m_n.expect("validated").gamma();
    for o in cfg.orders()? {
        let h = entropy_plus_divergence(&cfg.p, cfg.design(), o)?;
        if gamma >= h {
            return Err(Error::InvalidConfig(format!(
                "rate check needs gamma < H_alpha + I_alpha; gamma = {gamma}, H_alpha + I_alpha = {h} at rho = {}",
                o.rho()
            )));
        }
    }
    let report = run_convergence_experiment(cfg)?;
    let rows = report
        .rows
        .iter()
        .map(|r| RateRow {
            n: r.n,
            rho: r.rho,
            m_n: r.m_n.expect("tasks rows carry M_n"),
            value_bits: r.value_bits,
            limit_bits: r.target_bits,
            gap_bits: r.value_bits - r.target_bits,
            lower_bracket: r.lower_bracket.expect("growing rows are bracketed"),
            upper_bracket: r.upper_bracket.expect("growing rows are bracketed"),
            within: r.within_bracket(),
        })
        .collect();
    Ok(RateReport { gamma, rows })
}
