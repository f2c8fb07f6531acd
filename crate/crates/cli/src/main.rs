mod input;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use guessworks::coding::{
    assign_codewords, campbell_lengths, coding_cumulant, optimal_cumulant_lengths, redundancy_band,
    shannon_lengths, LengthFunction, DEFAULT_MAX_LEN,
};
use guessworks::guessing::{
    guessing_mismatch_divergence, guessing_moment, harmonic_bound, memoryless_moment, optimal_guessing,
    simulate_memoryless, GuessingFunction, MemorylessStrategy,
};
use guessworks::measures::{
    escort, escort_inverse, kl_divergence, renyi_entropy, shannon_entropy, sundaresan_divergence,
};
use guessworks::sequences::{
    additivity_report, product_distribution_capped, remark_rate_check, run_convergence_experiment,
    DEFAULT_ENUM_CAP,
};
use guessworks::tasks::{
    beta, build_partition, count_function, m_tilde, ordered_budget, ordered_lower_bound,
    partition_function, partition_lower_bound, partition_moment_upper_bound, tasks_moment, Partition,
};
use guessworks::transforms::{
    guessing_to_lengths, guessing_to_partition, lengths_to_guessing, lengths_to_memoryless,
    partition_to_guessing, TransferCertificate,
};
use guessworks::{Distribution, MomentOrder};
use serde_json::{json, Map, Value};

use output::{number, render, Format, Output};

const ENUM_CAP_VAR: &str = "GUESSWORKS_ENUM_CAP";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; exit status 2.
    Usage(String),
    /// A violated precondition or unreadable input; exit status 1.
    Domain(String),
}

impl From<guessworks::Error> for CliError {
    fn from(e: guessworks::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Rényi/Sundaresan measures, coding, guessing and tasks partitioning over
/// finite alphabets. Distributions are JSON files of the form
/// {"alphabet": [...], "probs": [...]}.
#[derive(Parser)]
#[command(name = "guessworks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Order α > 0; ρ = 1/α − 1.
    #[arg(long, global = true, allow_negative_numbers = true, conflicts_with = "rho")]
    alpha: Option<f64>,
    /// Moment parameter ρ > −1; α = 1/(1 + ρ).
    #[arg(long, global = true, allow_negative_numbers = true)]
    rho: Option<f64>,
    /// Number of partition cells.
    #[arg(long = "M", global = true, value_name = "M")]
    cells: Option<u64>,
    /// Replace P (and Q) by their n-fold i.i.d. products.
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Design (mismatched) distribution; defaults to P.
    #[arg(long, global = true, value_name = "FILE")]
    q: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Entropies, divergences and escort distributions.
    Measure {
        #[arg(value_enum)]
        quantity: Quantity,
        p: PathBuf,
    },
    /// Code lengths, codebooks and coding cumulants.
    Code {
        #[arg(value_enum)]
        action: CodeAction,
        p: PathBuf,
        /// {symbol: length} JSON; defaults to Campbell lengths of Q (Shannon if no order is given).
        #[arg(long, value_name = "FILE")]
        lengths: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_len: u32,
    },
    /// Guessing functions, memoryless strategies and simulation.
    Guess {
        #[arg(value_enum)]
        action: GuessAction,
        p: PathBuf,
        /// {symbol: rank} JSON; defaults to the optimal order for Q.
        #[arg(long, value_name = "FILE")]
        guessing: Option<PathBuf>,
        /// Memoryless guessing distribution; defaults to the escort of Q.
        #[arg(long, value_name = "FILE")]
        strategy: Option<PathBuf>,
    },
    /// Tasks partitions, their moments and bounds.
    Tasks {
        #[arg(value_enum)]
        action: TasksAction,
        p: PathBuf,
        /// {"cells": [[...], ...]} JSON; defaults to the partition built from Q with --M cells.
        #[arg(long, value_name = "FILE")]
        partition: Option<PathBuf>,
        /// Use the count function N (ordered tasks) instead of A.
        #[arg(long)]
        ordered: bool,
    },
    /// Maps between solutions of different problems, with certificates.
    Transform {
        #[arg(value_enum)]
        kind: TransformKind,
        p: PathBuf,
        #[arg(long, value_name = "FILE")]
        lengths: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        guessing: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        partition: Option<PathBuf>,
    },
    /// Exact-enumeration convergence experiment from a JSON config.
    Experiment {
        config: PathBuf,
        /// Report the growth-rate check for tasks configs instead.
        #[arg(long)]
        rate: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Shannon,
    Renyi,
    Kl,
    Sundaresan,
    Escort,
    EscortInverse,
    Additivity,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeAction {
    Shannon,
    Campbell,
    Optimal,
    Codebook,
    Kraft,
    Cumulant,
    Redundancy,
}

#[derive(Clone, Copy, ValueEnum)]
enum GuessAction {
    Optimal,
    Moment,
    Redundancy,
    Memoryless,
    MemorylessMoment,
    Simulate,
}

#[derive(Clone, Copy, ValueEnum)]
enum TasksAction {
    Build,
    Moment,
    Bounds,
    Budget,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    GuessingToLengths,
    LengthsToGuessing,
    GuessingToPartition,
    PartitionToGuessing,
    LengthsToMemoryless,
}

/// Input distributions after the optional `--n` product.
struct Inputs {
    p: Distribution,
    q: Distribution,
}

impl Opts {
    fn order(&self) -> CliResult<Option<MomentOrder>> {
        Ok(match (self.alpha, self.rho) {
            (Some(a), None) => Some(MomentOrder::from_alpha(a)?),
            (None, Some(r)) => Some(MomentOrder::from_rho(r)?),
            (None, None) => None,
            (Some(_), Some(_)) => return Err(usage("supply exactly one of --alpha and --rho")),
        })
    }

    fn require_order(&self) -> CliResult<MomentOrder> {
        self.order()?
            .ok_or_else(|| usage("this subcommand needs exactly one of --alpha and --rho"))
    }

    fn require_cells(&self) -> CliResult<u64> {
        self.cells.ok_or_else(|| usage("this subcommand needs --M"))
    }

    fn inputs(&self, path: &Path) -> CliResult<Inputs> {
        let p = input::distribution(path)?;
        let q = match &self.q {
            Some(qp) => input::distribution_like(qp, p.alphabet())?,
            None => p.clone(),
        };
        match self.n {
            None | Some(1) => Ok(Inputs { p, q }),
            Some(n) => {
                let cap = enum_cap()?;
                let pn = product_distribution_capped(&p, n, cap)?.into_distribution();
                let qn = product_distribution_capped(&q, n, cap)?.into_distribution();
                let qn = Distribution::with_alphabet(pn.alphabet().clone(), qn.probs().to_vec())?;
                Ok(Inputs { p: pn, q: qn })
            }
        }
    }
}

fn usage(msg: &str) -> CliError {
    CliError::Usage(msg.to_string())
}

fn enum_cap() -> CliResult<u64> {
    match std::env::var(ENUM_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{ENUM_CAP_VAR} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_ENUM_CAP),
    }
}

fn lengths_json(l: &LengthFunction) -> Value {
    let map: Map<String, Value> = l
        .alphabet()
        .labels()
        .iter()
        .zip(l.lengths())
        .map(|(k, &v)| (k.clone(), v.into()))
        .collect();
    Value::Object(map)
}

fn distribution_json(d: &Distribution) -> Value {
    serde_json::to_value(d).expect("distributions serialize")
}

fn record(v: impl serde::Serialize) -> Output {
    Output::Record(serde_json::to_value(v).expect("reports serialize"))
}

fn divergence(p: &Distribution, q: &Distribution, order: MomentOrder) -> CliResult<f64> {
    Ok(if order.is_shannon() {
        kl_divergence(p, q)?
    } else {
        sundaresan_divergence(p, q, order)?
    })
}

fn run(cli: Cli) -> CliResult<String> {
    let opts = &cli.opts;
    let out = match cli.command {
        Command::Measure { quantity, p } => measure(opts, quantity, &p)?,
        Command::Code {
            action,
            p,
            lengths,
            max_len,
        } => code(opts, action, &p, lengths.as_deref(), max_len)?,
        Command::Guess {
            action,
            p,
            guessing,
            strategy,
        } => guess(opts, action, &p, guessing.as_deref(), strategy.as_deref())?,
        Command::Tasks {
            action,
            p,
            partition,
            ordered,
        } => tasks(opts, action, &p, partition.as_deref(), ordered)?,
        Command::Transform {
            kind,
            p,
            lengths,
            guessing,
            partition,
        } => transform(opts, kind, &p, lengths.as_deref(), guessing.as_deref(), partition.as_deref())?,
        Command::Experiment { config, rate } => experiment(opts, &config, rate)?,
    };
    Ok(render(out, opts.format))
}

fn measure(opts: &Opts, quantity: Quantity, path: &Path) -> CliResult<Output> {
    if let Quantity::Additivity = quantity {
        let order = opts.require_order()?;
        let n = opts.n.ok_or_else(|| usage("additivity needs --n"))?;
        let p = input::distribution(path)?;
        let q = match &opts.q {
            Some(qp) => input::distribution_like(qp, p.alphabet())?,
            None => p.clone(),
        };
        let cap = enum_cap()?;
        product_distribution_capped(&p, n, cap)?;
        return Ok(record(additivity_report(&p, &q, order, n)?));
    }
    let Inputs { p, q } = opts.inputs(path)?;
    Ok(match quantity {
        Quantity::Shannon => Output::Scalar(shannon_entropy(&p)),
        Quantity::Renyi => Output::Scalar(renyi_entropy(&p, opts.require_order()?)),
        Quantity::Kl => Output::Scalar(kl_divergence(&p, &q)?),
        Quantity::Sundaresan => Output::Scalar(divergence(&p, &q, opts.require_order()?)?),
        Quantity::Escort => Output::Map(distribution_json(&escort(&p, opts.require_order()?))),
        Quantity::EscortInverse => {
            Output::Map(distribution_json(&escort_inverse(&p, opts.require_order()?)))
        }
        Quantity::Additivity => unreachable!("handled above"),
    })
}

fn load_lengths(opts: &Opts, file: Option<&Path>, inputs: &Inputs) -> CliResult<LengthFunction> {
    match file {
        Some(f) => input::lengths(f, inputs.p.alphabet()),
        None => Ok(match opts.order()? {
            Some(o) => campbell_lengths(&inputs.q, o),
            None => shannon_lengths(&inputs.q),
        }),
    }
}

fn code(opts: &Opts, action: CodeAction, path: &Path, file: Option<&Path>, max_len: u32) -> CliResult<Output> {
    let inputs = opts.inputs(path)?;
    let p = &inputs.p;
    Ok(match action {
        CodeAction::Shannon => Output::Map(lengths_json(&shannon_lengths(&inputs.q))),
        CodeAction::Campbell => Output::Map(lengths_json(&campbell_lengths(&inputs.q, opts.require_order()?))),
        CodeAction::Optimal => {
            let (l, value) = optimal_cumulant_lengths(p, opts.require_order()?, max_len)?;
            Output::Record(json!({ "lengths": lengths_json(&l), "cumulant": number(value) }))
        }
        CodeAction::Codebook => Output::Map(assign_codewords(&load_lengths(opts, file, &inputs)?)?.to_json()),
        CodeAction::Kraft => record(load_lengths(opts, file, &inputs)?.kraft()),
        CodeAction::Cumulant => {
            let order = opts.require_order()?;
            Output::Scalar(coding_cumulant(p, &load_lengths(opts, file, &inputs)?, order)?)
        }
        CodeAction::Redundancy => {
            let order = opts.require_order()?;
            let l = load_lengths(opts, file, &inputs)?;
            let value = coding_cumulant(p, &l, order)?;
            let (_, optimum) = optimal_cumulant_lengths(p, order, max_len)?;
            let band = redundancy_band(p, &l, order)?;
            Output::Record(json!({
                "cumulant": number(value),
                "optimal_cumulant": number(optimum),
                "redundancy": number(value - optimum),
                "divergence": number(band.divergence),
                "log2_kraft_sum": number(band.log2_eta),
                "band_lower": number(band.lower),
                "band_upper": number(band.upper),
            }))
        }
    })
}

fn load_guessing(file: Option<&Path>, inputs: &Inputs) -> CliResult<GuessingFunction> {
    match file {
        Some(f) => input::guessing(f, inputs.p.alphabet()),
        None => Ok(optimal_guessing(&inputs.q)),
    }
}

fn load_strategy(opts: &Opts, file: Option<&Path>, inputs: &Inputs) -> CliResult<MemorylessStrategy> {
    let order = opts.require_order()?;
    let dist = match file {
        Some(f) => input::distribution_like(f, inputs.p.alphabet())?,
        None => escort(&inputs.q, order),
    };
    Ok(MemorylessStrategy::with_order(dist, order)?)
}

fn guess(
    opts: &Opts,
    action: GuessAction,
    path: &Path,
    guessing: Option<&Path>,
    strategy: Option<&Path>,
) -> CliResult<Output> {
    let inputs = opts.inputs(path)?;
    let p = &inputs.p;
    Ok(match action {
        GuessAction::Optimal => Output::Map(optimal_guessing(&inputs.q).to_json()),
        GuessAction::Moment => {
            Output::Scalar(guessing_moment(p, &load_guessing(guessing, &inputs)?, opts.require_order()?)?)
        }
        GuessAction::Redundancy => {
            let order = opts.require_order()?;
            let g = load_guessing(guessing, &inputs)?;
            let value = guessing_moment(p, &g, order)?;
            let optimum = guessing_moment(p, &optimal_guessing(p), order)?;
            Output::Record(json!({
                "moment": number(value),
                "optimal_moment": number(optimum),
                "redundancy": number(value - optimum),
                "divergence": number(guessing_mismatch_divergence(p, &g, order)?),
                "band_halfwidth": number(harmonic_bound(p.len()).log2()),
            }))
        }
        GuessAction::Memoryless => {
            let s = load_strategy(opts, None, &inputs)?;
            Output::Map(distribution_json(s.guess_distribution()))
        }
        GuessAction::MemorylessMoment => {
            Output::Scalar(memoryless_moment(p, &load_strategy(opts, strategy, &inputs)?)?)
        }
        GuessAction::Simulate => {
            let seed = opts
                .seed
                .ok_or_else(|| usage("simulate is stochastic and needs --seed"))?;
            let trials = opts.trials.ok_or_else(|| usage("simulate needs --trials"))?;
            let s = load_strategy(opts, strategy, &inputs)?;
            let report = simulate_memoryless(p, &s, trials, seed)?;
            let analytic = (s.rho() as f64 * memoryless_moment(p, &s)?).exp2();
            let mut v = serde_json::to_value(report).expect("reports serialize");
            v["analytic"] = number(analytic);
            Output::Record(v)
        }
    })
}

fn load_partition(opts: &Opts, file: Option<&Path>, inputs: &Inputs) -> CliResult<Partition> {
    match file {
        Some(f) => input::partition(f, inputs.p.alphabet()),
        None => Ok(build_partition(&inputs.q, opts.require_order()?, opts.require_cells()?)?),
    }
}

fn tasks(opts: &Opts, action: TasksAction, path: &Path, file: Option<&Path>, ordered: bool) -> CliResult<Output> {
    let inputs = opts.inputs(path)?;
    let p = &inputs.p;
    Ok(match action {
        TasksAction::Build => {
            let order = opts.require_order()?;
            Output::Map(build_partition(&inputs.q, order, opts.require_cells()?)?.to_json())
        }
        TasksAction::Moment => {
            let order = opts.require_order()?;
            let part = load_partition(opts, file, &inputs)?;
            let values = if ordered {
                count_function(&part, p)?
            } else {
                partition_function(&part)
            };
            Output::Scalar(tasks_moment(p, &values, order)?)
        }
        TasksAction::Bounds => {
            let order = opts.require_order()?;
            let cells = opts.require_cells()?;
            let mut v = json!({
                "lower": number(partition_lower_bound(p, order, cells)),
                "ordered_lower": Value::Null,
                "upper_log2": Value::Null,
                "beta": number(beta(cells, p.len())),
                "m_tilde": number(m_tilde(cells, p.len())),
            });
            if cells as usize <= p.len() {
                v["ordered_lower"] = number(ordered_lower_bound(p, order, cells)?);
            }
            let upper = partition_moment_upper_bound(p, &inputs.q, order, cells)?;
            v["upper_log2"] = number(upper.log2() / order.rho());
            Output::Record(v)
        }
        TasksAction::Budget => Output::Scalar(ordered_budget(p.len(), opts.require_cells()?)?),
    })
}

fn certified(result: Value, cert: TransferCertificate) -> Output {
    let mut v = json!({ "result": result });
    if let (Value::Object(map), Value::Object(c)) = (&mut v, serde_json::to_value(cert).expect("certificates serialize")) {
        map.extend(c);
    }
    Output::Record(v)
}

fn transform(
    opts: &Opts,
    kind: TransformKind,
    path: &Path,
    lengths: Option<&Path>,
    guessing: Option<&Path>,
    partition: Option<&Path>,
) -> CliResult<Output> {
    let inputs = opts.inputs(path)?;
    let p = &inputs.p;
    let order = opts.require_order()?;
    Ok(match kind {
        TransformKind::GuessingToLengths => {
            let (l, cert) = guessing_to_lengths(p, &load_guessing(guessing, &inputs)?, order)?;
            certified(lengths_json(&l), cert)
        }
        TransformKind::LengthsToGuessing => {
            let (g, cert) = lengths_to_guessing(p, &load_lengths(opts, lengths, &inputs)?, order)?;
            certified(g.to_json(), cert)
        }
        TransformKind::GuessingToPartition => {
            let g = load_guessing(guessing, &inputs)?;
            let (part, cert) = guessing_to_partition(p, &g, order, opts.require_cells()?)?;
            certified(part.to_json(), cert)
        }
        TransformKind::PartitionToGuessing => {
            let part = load_partition(opts, partition, &inputs)?;
            let (g, cert) = partition_to_guessing(p, &part, order)?;
            certified(g.to_json(), cert)
        }
        TransformKind::LengthsToMemoryless => {
            let (s, cert) = lengths_to_memoryless(p, &load_lengths(opts, lengths, &inputs)?, order)?;
            certified(distribution_json(&s), cert)
        }
    })
}

fn experiment(opts: &Opts, path: &Path, rate: bool) -> CliResult<Output> {
    let mut cfg = input::experiment_config(path)?;
    if cfg.enum_cap.is_none() && std::env::var_os(ENUM_CAP_VAR).is_some() {
        cfg.enum_cap = Some(enum_cap()?);
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if rate {
        let report = remark_rate_check(&cfg)?;
        let mut csv = String::from("n,rho,M_n,value_bits,limit_bits,gap_bits,lower_bracket,upper_bracket,within\n");
        for r in &report.rows {
            let f = guessworks::numeric::format_sig10;
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n,
                f(r.rho),
                r.m_n,
                f(r.value_bits),
                f(r.limit_bits),
                f(r.gap_bits),
                f(r.lower_bracket),
                f(r.upper_bracket),
                r.within
            ));
        }
        let json = serde_json::to_value(&report).expect("reports serialize");
        return Ok(Output::Rows { json, csv });
    }
    let report = run_convergence_experiment(&cfg)?;
    let json = serde_json::to_value(&report).expect("reports serialize");
    Ok(Output::Rows {
        json,
        csv: report.to_csv(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.opts.output.clone();
    match run(cli) {
        Ok(text) => {
            if let Some(path) = output {
                if let Err(e) = fs::write(&path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
