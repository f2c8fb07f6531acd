//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines are always printed; exits nonzero if any criterion
//! fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use guessworks::coding::{
    assign_codewords, campbell_lengths, coding_cumulant, coding_redundancy,
    mismatch_identity_residual, optimal_cumulant_lengths, redundancy_band, LengthFunction,
};
use guessworks::guessing::{
    guessing_mismatch_divergence, guessing_moment, guessing_redundancy, harmonic_bound,
    memoryless_moment, optimal_guessing, simulate_memoryless, GuessingFunction, MemorylessStrategy,
};
use guessworks::measures::{
    cumulant_lower_bound, escort, gibbs_tilt, log2_mgf, normalized_cumulant, renyi_entropy,
    sundaresan_divergence, variational_objective, Alphabet, Distribution, MomentOrder,
    WeightFunction,
};
use guessworks::sequences::{
    product_distribution, run_convergence_experiment, CellRule, ConvergenceReport, ExperimentConfig,
    Problem,
};
use guessworks::tasks::{
    build_partition, count_function, induced_distribution_from_counts, ordered_budget, partition_caps,
    partition_function, reciprocal_sum, tasks_moment, Partition,
};
use guessworks::transforms::{
    guessing_to_lengths, guessing_to_partition, lengths_to_guessing, lengths_to_memoryless,
    partition_to_guessing,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-9;
const SLACK_TOL: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

/// Running worst case over a batch of checks.
#[derive(Default)]
struct Tally {
    checks: usize,
    worst: f64,
    failures: usize,
}

impl Tally {
    /// `slack` should be ≥ −tol.
    fn slack(&mut self, slack: f64, tol: f64) {
        self.checks += 1;
        if self.checks == 1 || slack < self.worst {
            self.worst = slack;
        }
        if !(slack >= -tol) {
            self.failures += 1;
        }
    }

    /// `|residual|` should be ≤ tol.
    fn residual(&mut self, residual: f64, tol: f64) {
        self.checks += 1;
        self.worst = self.worst.max(residual.abs());
        if !(residual.abs() <= tol) {
            self.failures += 1;
        }
    }

    fn flag(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x6775_6573_7377 ^ stream)
}

/// Mixture of flat and strongly skewed random distributions.
fn random_dist(rng: &mut ChaCha8Rng, m: usize) -> Distribution {
    let power = [1.0, 3.0, 8.0][rng.random_range(0..3)];
    let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powf(power) + 1e-4).collect();
    Distribution::from_weights(Alphabet::indexed(m), &w).unwrap()
}

fn random_order(rng: &mut ChaCha8Rng) -> MomentOrder {
    let rho = if rng.random_bool(0.25) {
        rng.random_range(-0.9..0.0)
    } else {
        rng.random_range(0.05..5.0)
    };
    MomentOrder::from_rho(rho).unwrap()
}

fn positive_order(rng: &mut ChaCha8Rng) -> MomentOrder {
    MomentOrder::from_rho(rng.random_range(0.05..5.0)).unwrap()
}

fn random_kraft_lengths(rng: &mut ChaCha8Rng, m: usize, max: u32) -> LengthFunction {
    let mut lengths: Vec<u32> = (0..m).map(|_| rng.random_range(1..=max)).collect();
    while lengths.iter().map(|&l| (-(l as f64)).exp2()).sum::<f64>() > 1.0 {
        let i = rng.random_range(0..m);
        lengths[i] += 1;
    }
    LengthFunction::new(Alphabet::indexed(m), lengths).unwrap()
}

fn random_guessing(rng: &mut ChaCha8Rng, m: usize) -> GuessingFunction {
    let mut ranks: Vec<usize> = (1..=m).collect();
    ranks.shuffle(rng);
    GuessingFunction::new(Alphabet::indexed(m), ranks).unwrap()
}

fn random_partition(rng: &mut ChaCha8Rng, m: usize) -> Partition {
    let k = rng.random_range(1..=m);
    let mut cells = vec![Vec::new(); k];
    for x in 0..m {
        cells[rng.random_range(0..k)].push(x);
    }
    cells.retain(|c: &Vec<usize>| !c.is_empty());
    Partition::new(Alphabet::indexed(m), cells).unwrap()
}

fn summarize(t: &Tally, what: &str) -> Verdict {
    Verdict {
        pass: t.failures == 0 && t.checks > 0,
        detail: format!("{what} {:.3e} over {} checks, {} failures", t.worst, t.checks, t.failures),
    }
}

fn exact_identities() -> Verdict {
    let mut r = rng(1);
    let mut t = Tally::default();
    for _ in 0..200 {
        let m = r.random_range(1..=10);
        let p = random_dist(&mut r, m);
        let q = random_dist(&mut r, m);
        for rho in 1..=3u32 {
            let o = MomentOrder::from_rho(rho as f64).unwrap();
            let h = renyi_entropy(&p, o);
            let at_escort = MemorylessStrategy::new(escort(&p, o), rho).unwrap();
            t.residual(memoryless_moment(&p, &at_escort).unwrap() - h, IDENTITY_TOL);
            let mismatched = MemorylessStrategy::new(escort(&q, o), rho).unwrap();
            let target = h + sundaresan_divergence(&p, &q, o).unwrap();
            t.residual(memoryless_moment(&p, &mismatched).unwrap() - target, IDENTITY_TOL);
        }
    }
    for _ in 0..200 {
        let m = r.random_range(1..=10);
        let p = random_dist(&mut r, m);
        let l = random_kraft_lengths(&mut r, m, 12);
        let o = random_order(&mut r);
        t.residual(mismatch_identity_residual(&p, &l, o).unwrap(), IDENTITY_TOL);
    }
    for _ in 0..200 {
        let m = r.random_range(1..=10);
        let p = random_dist(&mut r, m);
        let part = random_partition(&mut r, m);
        let o = random_order(&mut r);
        let h = renyi_entropy(&p, o);
        let a = partition_function(&part);
        let q_a = induced_distribution_from_counts(p.alphabet(), &a, o).unwrap();
        let div = |q: &Distribution| if o.is_shannon() {
            guessworks::measures::kl_divergence(&p, q).unwrap()
        } else {
            sundaresan_divergence(&p, q, o).unwrap()
        };
        let target = h + div(&q_a) - (part.size() as f64).log2();
        t.residual(tasks_moment(&p, &a, o).unwrap() - target, IDENTITY_TOL);
        let n = count_function(&part, &p).unwrap();
        let q_n = induced_distribution_from_counts(p.alphabet(), &n, o).unwrap();
        let target = h + div(&q_n) - reciprocal_sum(&n).log2();
        t.residual(tasks_moment(&p, &n, o).unwrap() - target, IDENTITY_TOL);
    }
    for _ in 0..200 {
        let m = r.random_range(1..=10);
        let p = random_dist(&mut r, m);
        let f: Vec<f64> = (0..m).map(|_| r.random_range(-20.0..20.0)).collect();
        let lhs = log2_mgf(&p, &f).unwrap();
        let tilt = gibbs_tilt(&p, &f).unwrap();
        t.residual(lhs - variational_objective(&p, &tilt, &f).unwrap(), IDENTITY_TOL);
        let other = random_dist(&mut r, m);
        t.slack(lhs - variational_objective(&p, &other, &f).unwrap(), SLACK_TOL);
    }
    summarize(&t, "max residual")
}

fn inequality_suites() -> Verdict {
    let mut r = rng(2);
    let mut t = Tally::default();
    for _ in 0..500 {
        let m = r.random_range(1..=12);
        let p = random_dist(&mut r, m);
        let o = random_order(&mut r);
        let h = renyi_entropy(&p, o);

        let psi: Vec<f64> = (0..m).map(|_| r.random_range(0.05..50.0)).collect();
        let wf = WeightFunction::tight(&psi).unwrap();
        let bound = cumulant_lower_bound(&p, o, wf.budget());
        t.slack(normalized_cumulant(&p, &wf, o).unwrap() - bound, SLACK_TOL);
        let k = wf.budget();
        let z = escort(&p, o);
        let tight: Vec<f64> = z.probs().iter().map(|e| 1.0 / (k * e)).collect();
        let wf = WeightFunction::new(&tight, k).unwrap();
        t.residual(normalized_cumulant(&p, &wf, o).unwrap() - bound, IDENTITY_TOL);

        let l = random_kraft_lengths(&mut r, m, 12);
        t.slack(coding_cumulant(&p, &l, o).unwrap() - h, SLACK_TOL);
        let c = coding_cumulant(&p, &campbell_lengths(&p, o), o).unwrap();
        t.slack(h + 1.0 - c, SLACK_TOL);

        let part = random_partition(&mut r, m);
        let a = partition_function(&part);
        t.slack(tasks_moment(&p, &a, o).unwrap() - (h - (part.size() as f64).log2()), SLACK_TOL);
        let n = count_function(&part, &p).unwrap();
        let budget = ordered_budget(m, part.size() as u64).unwrap();
        t.slack(tasks_moment(&p, &n, o).unwrap() - (h - budget.log2()), SLACK_TOL);
    }
    for _ in 0..500 {
        let m = r.random_range(1..=12);
        let p = random_dist(&mut r, m);
        let o = positive_order(&mut r);
        let h = renyi_entropy(&p, o);
        let log_band = harmonic_bound(m).log2();
        let best = guessing_moment(&p, &optimal_guessing(&p), o).unwrap();
        t.slack(best - (h - log_band), SLACK_TOL);
        t.slack(h - best, SLACK_TOL);
        let g = random_guessing(&mut r, m);
        let gap = guessing_redundancy(&p, &g, o).unwrap() - guessing_mismatch_divergence(&p, &g, o).unwrap();
        t.slack(log_band - gap.abs(), SLACK_TOL);
    }
    for _ in 0..300 {
        let m = r.random_range(1..=6);
        let p = random_dist(&mut r, m);
        let o = random_order(&mut r);
        let l = random_kraft_lengths(&mut r, m, 8);
        let rc = coding_redundancy(&p, &l, o, 16).unwrap();
        let band = redundancy_band(&p, &l, o).unwrap();
        t.slack(rc - band.lower, SLACK_TOL);
        t.slack(band.upper - rc, SLACK_TOL);
        if band.log2_eta >= -1.0 {
            t.slack(rc - (band.divergence - 1.0), SLACK_TOL);
            t.slack(band.divergence + 1.0 - rc, SLACK_TOL);
        }
    }
    summarize(&t, "min slack")
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for perm in permutations(m - 1) {
        for pos in 0..=perm.len() {
            let mut next = perm.clone();
            next.insert(pos, m);
            out.push(next);
        }
    }
    out
}

fn brute_force_lengths(p: &Distribution, o: MomentOrder) -> f64 {
    let m = p.len();
    let max = m.max(1) as u32;
    let mut best = f64::INFINITY;
    let mut lengths = vec![1u32; m];
    loop {
        let kraft: f64 = lengths.iter().map(|&l| (-(l as f64)).exp2()).sum();
        if kraft <= 1.0 {
            let l = LengthFunction::new(p.alphabet().clone(), lengths.clone()).unwrap();
            best = best.min(coding_cumulant(p, &l, o).unwrap());
        }
        let mut i = 0;
        loop {
            if i == m {
                return best;
            }
            lengths[i] += 1;
            if lengths[i] <= max {
                break;
            }
            lengths[i] = 1;
            i += 1;
        }
    }
}

fn oracle_equivalence() -> Verdict {
    let mut r = rng(3);
    let mut t = Tally::default();
    let mut worst_gap = 0.0f64;
    for _ in 0..50 {
        let m = r.random_range(2..=6);
        let p = random_dist(&mut r, m);
        let perms = permutations(m);
        for rho in [0.5, 1.0, 2.0] {
            let o = MomentOrder::from_rho(rho).unwrap();
            let best = guessing_moment(&p, &optimal_guessing(&p), o).unwrap();
            let brute = perms
                .iter()
                .map(|ranks| {
                    let g = GuessingFunction::new(p.alphabet().clone(), ranks.clone()).unwrap();
                    guessing_moment(&p, &g, o).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            worst_gap = worst_gap.max(best - brute);
            t.slack(brute - best, 1e-12);
        }
    }
    for _ in 0..50 {
        let m = r.random_range(1..=5);
        let p = random_dist(&mut r, m);
        for rho in [-0.5, 0.0, 0.5, 1.0, 2.0] {
            let o = MomentOrder::from_rho(rho).unwrap();
            let (l, value) = optimal_cumulant_lengths(&p, o, 16).unwrap();
            t.flag(l.kraft().satisfied);
            let brute = brute_force_lengths(&p, o);
            worst_gap = worst_gap.max((value - brute).abs());
            t.residual(value - brute, 1e-12);
        }
    }
    Verdict {
        pass: t.failures == 0,
        detail: format!(
            "largest oracle-vs-exhaustive gap {worst_gap:.3e} over {} comparisons, {} failures",
            t.checks, t.failures
        ),
    }
}

fn config(problem: Problem, probs: &[f64], q: Option<&[f64]>, rho: f64, rule: Option<CellRule>) -> ExperimentConfig {
    let alphabet = Alphabet::indexed(probs.len());
    ExperimentConfig {
        problem,
        p: Distribution::with_alphabet(alphabet.clone(), probs.to_vec()).unwrap(),
        q: q.map(|q| Distribution::with_alphabet(alphabet.clone(), q.to_vec()).unwrap()),
        rho: vec![rho],
        n_min: 1,
        n_max: 8,
        m_n: rule,
        seed: 0,
        enum_cap: None,
    }
}

fn asymptotic_brackets() -> Verdict {
    const P3: [f64; 3] = [0.5, 0.25, 0.25];
    const SKEW: [f64; 3] = [0.9, 0.05, 0.05];
    let vanishing = CellRule::Exponential { base: 3.0, scale: 2.0 };
    let runs: Vec<(&str, ExperimentConfig)> = vec![
        ("campbell", config(Problem::Campbell, &P3, None, 1.0, None)),
        ("guessing", config(Problem::Guessing, &P3, None, 1.0, None)),
        ("mismatched-shannon", config(Problem::Campbell, &P3, Some(&[0.2, 0.3, 0.5]), 0.0, None)),
        ("tasks-vanishing", config(Problem::Tasks, &SKEW, None, 1.0, Some(vanishing))),
        ("ordered-vanishing", config(Problem::OrderedTasks, &SKEW, None, 1.0, Some(vanishing))),
        ("tasks-growing", config(Problem::Tasks, &P3, None, 1.0, Some(CellRule::MinAdmissible))),
        ("ordered-growing", config(Problem::OrderedTasks, &P3, None, 1.0, Some(CellRule::MinAdmissible))),
    ];
    let mut t = Tally::default();
    let mut notes = Vec::new();
    for (name, cfg) in &runs {
        let report: ConvergenceReport = match run_convergence_experiment(cfg) {
            Ok(r) => r,
            Err(e) => {
                t.flag(false);
                notes.push(format!("{name}: {e}"));
                continue;
            }
        };
        for row in &report.rows {
            t.flag(row.within_bracket() && row.bracket_nonempty());
        }
        if name.ends_with("vanishing") {
            let excess: Vec<f64> = report.rows.iter().map(|r| r.upper_bracket.unwrap() - 1.0).collect();
            t.flag(excess.windows(2).all(|w| w[1] < w[0]));
            notes.push(format!("{name} bound excess at n=8 {:.3e}", excess[excess.len() - 1]));
        }
    }
    Verdict {
        pass: t.failures == 0,
        detail: format!("{} rows and trends checked, {} failures; {}", t.checks, t.failures, notes.join("; ")),
    }
}

fn construction_postconditions() -> Verdict {
    let mut r = rng(5);
    let mut t = Tally::default();
    for _ in 0..1000 {
        let m = r.random_range(1..=64);
        let q = random_dist(&mut r, m);
        let o = positive_order(&mut r);
        let threshold = ((m as f64).log2() + 2.0).floor() as u64;
        let cells = r.random_range(threshold + 1..=threshold + m as u64);
        let part = build_partition(&q, o, cells).unwrap();
        let caps = partition_caps(&q, o, cells).unwrap();
        let a = partition_function(&part);
        t.flag(part.size() as u64 <= cells && a.iter().zip(&caps).all(|(a, c)| a <= c));
    }
    for _ in 0..1000 {
        let m = r.random_range(1..=64);
        let l = random_kraft_lengths(&mut r, m, 14);
        let book = assign_codewords(&l).unwrap();
        let lengths_match = book.codewords().iter().zip(l.lengths()).all(|(w, &n)| w.len() == n as usize);
        t.flag(book.is_prefix_free() && lengths_match);
    }
    Verdict {
        pass: t.failures == 0,
        detail: format!("{} constructions checked, {} failures", t.checks, t.failures),
    }
}

fn transfer_certificates() -> Verdict {
    let mut r = rng(6);
    let mut t = Tally::default();
    for _ in 0..1000 {
        let m = r.random_range(1..=12);
        let p = random_dist(&mut r, m);
        let o = positive_order(&mut r);
        let g = random_guessing(&mut r, m);
        let l = random_kraft_lengths(&mut r, m, 12);
        let threshold = ((m as f64).log2() + 2.0).floor() as u64;
        let cells = r.random_range(threshold + 1..=threshold + m as u64);
        let int_order = MomentOrder::from_rho(r.random_range(1..=3) as f64).unwrap();

        let certs = [
            guessing_to_lengths(&p, &g, o).unwrap().1,
            lengths_to_guessing(&p, &l, o).unwrap().1,
            guessing_to_partition(&p, &g, o, cells).unwrap().1,
            partition_to_guessing(&p, &random_partition(&mut r, m), o).unwrap().1,
            lengths_to_memoryless(&p, &l, int_order).unwrap().1,
        ];
        for cert in &certs {
            t.slack(cert.min_pointwise_slack, SLACK_TOL);
            t.slack(cert.aggregate_bound_gap, SLACK_TOL);
            if let Some(res) = cert.identity_residual {
                t.residual(res, IDENTITY_TOL);
            }
        }
    }
    let bases: [&[f64]; 3] = [&[0.5, 0.25, 0.25], &[0.7, 0.2, 0.1], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
    for probs in bases {
        let p = Distribution::with_alphabet(Alphabet::indexed(3), probs.to_vec()).unwrap();
        for rho in [0.5, 1.0, 2.0] {
            let o = MomentOrder::from_rho(rho).unwrap();
            let h = renyi_entropy(&p, o);
            for n in 1..=6u32 {
                let pn = product_distribution(&p, n).unwrap().into_distribution();
                let g = optimal_guessing(&pn);
                let (l, _) = guessing_to_lengths(&pn, &g, o).unwrap();
                let nf = n as f64;
                let coding = coding_cumulant(&pn, &l, o).unwrap() / nf;
                let guessing = guessing_moment(&pn, &g, o).unwrap() / nf;
                let c = g.reciprocal_sum();
                t.slack(guessing + (1.0 + c.log2()) / nf - coding, SLACK_TOL);
                t.slack(coding - h, SLACK_TOL);
            }
        }
    }
    summarize(&t, "min slack")
}

fn monte_carlo() -> Verdict {
    let p = Distribution::with_alphabet(Alphabet::indexed(4), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let o = MomentOrder::from_rho(1.0).unwrap();
    let strategy = MemorylessStrategy::new(escort(&p, o), 1).unwrap();
    let analytic = memoryless_moment(&p, &strategy).unwrap().exp2();
    let mut within = 0;
    let mut capped = 0;
    for seed in 1..=100u64 {
        let report = simulate_memoryless(&p, &strategy, 1_000_000, seed).unwrap();
        capped += report.capped_trials;
        if (report.estimate - analytic).abs() <= 3.0 * report.stderr {
            within += 1;
        }
    }
    Verdict {
        pass: within >= 99 && capped == 0,
        detail: format!("{within}/100 seeds within 3 standard errors of {analytic:.10}, {capped} capped trials"),
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| std::fs::write(dir.path().join(name), body).unwrap();
    write("p.json", r#"{"alphabet":["a","b","c","d"],"probs":[0.4,0.3,0.2,0.1]}"#);
    write(
        "cfg.json",
        r#"{"problem":"ordered-tasks","p":{"alphabet":["x","y","z"],"probs":[0.9,0.05,0.05]},
            "rho":[0.5,1,2],"n_max":6,"m_n":{"rule":"exponential","base":3,"scale":2},"seed":11}"#,
    );
    let invocations: Vec<Vec<&str>> = vec![
        vec!["guess", "simulate", "--rho", "2", "--trials", "200000", "--seed", "7", "p.json", "--format", "json"],
        vec!["experiment", "cfg.json", "--format", "csv"],
        vec!["experiment", "cfg.json", "--format", "json"],
        vec!["transform", "guessing-to-partition", "--rho", "1", "--M", "5", "p.json", "--format", "json"],
        vec!["code", "optimal", "--alpha", "0.3", "p.json"],
        vec!["measure", "sundaresan", "--rho", "1", "--q", "p.json", "--n", "3", "p.json"],
    ];
    let run = |args: &[&str], threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_guessworks"))
            .current_dir(dir.path())
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
    };
    let mut identical = 0;
    for args in &invocations {
        let a = run(args, "1");
        let b = run(args, "1");
        let c = run(args, "4");
        if a.status.success() && a.stdout == b.stdout && a.stdout == c.stdout && !a.stdout.is_empty() {
            identical += 1;
        }
    }
    Verdict {
        pass: identical == invocations.len(),
        detail: format!(
            "{identical}/{} invocations byte-identical across repeated runs and thread counts",
            invocations.len()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Verdict); 8] = [
        (1, "exact identities", Duration::from_secs(1), exact_identities),
        (2, "inequality suites", Duration::from_secs(5), inequality_suites),
        (3, "brute-force oracle equivalence", Duration::from_secs(30), oracle_equivalence),
        (4, "asymptotic brackets by exact enumeration", Duration::from_secs(60), asymptotic_brackets),
        (5, "construction postconditions", Duration::from_secs(60), construction_postconditions),
        (6, "transfer certificates", Duration::from_secs(60), transfer_certificates),
        (7, "Monte Carlo memoryless guessing", Duration::from_secs(60), monte_carlo),
        (8, "determinism of CLI reports", Duration::from_secs(60), determinism),
    ];
    let mut all = true;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        let pass = verdict.pass && elapsed <= limit;
        all &= pass;
        println!(
            "criterion {id} {} {name}: {} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            verdict.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
