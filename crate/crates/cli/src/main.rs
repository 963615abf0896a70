//! `timerev`: forward/backward entropy checks from the command line.
//!
//! Exit status: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors.

mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use timerev_core::io::{read_model, read_transition, LoadedModel};
use timerev_core::synth::{generate_markov, joint_tuple_distribution, stationary_distribution};
use timerev_core::{
    bayes_reverse_conditional, conditional_from_joint, count_ngrams, delta_h_with, reverse_joint,
    symmetry_check, theorem_check, train_ngram_model, CheckOptions, ConditionalModel, DeltaHReport,
    EvalOptions, JointTupleDistribution, Sequence, Smoothing, UniformModel, Units,
    DEFAULT_THRESHOLD,
};

use input::InputArgs;
use output::{Format, Sink};

#[derive(Parser, Debug)]
#[command(
    name = "timerev",
    version,
    about = "Forward and backward conditional entropy of sequences"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sum sequentially in key order.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Report entropies in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

impl GlobalArgs {
    fn units(&self) -> Units {
        if self.bits {
            Units::Bits
        } else {
            Units::Nats
        }
    }

    fn eval(&self) -> EvalOptions {
        EvalOptions {
            deterministic: self.deterministic,
            ..Default::default()
        }
    }

    fn sink(&self) -> Sink {
        Sink::new(self.output.clone(), self.format)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count overlapping k-tuples.
    Count(CountArgs),
    /// Check the forward/backward boundary identity.
    Verify(VerifyArgs),
    /// Compare add-k learners trained forwards and backwards.
    DeltaH(DeltaHArgs),
    /// List tuples where forward and reversed models disagree about the joint.
    Symmetry(SymmetryArgs),
    /// Sample a Markov chain to a file of raw symbol-id bytes.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct CountArgs {
    /// Tuple length k.
    #[arg(long)]
    order: usize,
    #[command(flatten)]
    input: InputArgs,
}

/// Where a chain comes from when no sequence file is given.
#[derive(Args, Debug, Clone)]
struct ChainArgs {
    /// Transition-matrix JSON file.
    #[arg(long)]
    transition: Option<PathBuf>,
    /// Length of the generated sequence.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Context order n.
    #[arg(long)]
    order: Option<usize>,
    /// Joint model file; its order fixes n.
    #[arg(long, conflicts_with = "transition")]
    joint: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    input: InputArgs,
    /// Report the residual without asserting it (allows non-stationary joints).
    #[arg(long)]
    report_only: bool,
}

#[derive(Args, Debug)]
struct DeltaHArgs {
    /// Context order n.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Smoothing for both learners.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long)]
    k_forward: Option<f64>,
    #[arg(long)]
    k_backward: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    transition: Option<PathBuf>,
    #[arg(long)]
    length: Option<usize>,
    /// Seeds for generated sequences, comma separated.
    #[arg(long, alias = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Clone, Debug, PartialEq)]
enum ModelChoice {
    Exact,
    Bayes,
    Uniform,
    Trained,
    File(PathBuf),
}

impl std::str::FromStr for ModelChoice {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "exact" => ModelChoice::Exact,
            "bayes" => ModelChoice::Bayes,
            "uniform" => ModelChoice::Uniform,
            "trained" => ModelChoice::Trained,
            path => ModelChoice::File(path.into()),
        })
    }
}

#[derive(Args, Debug)]
struct SymmetryArgs {
    /// Context order n (ignored with --joint).
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// exact | uniform | trained | FILE
    #[arg(long, default_value = "exact")]
    forward: ModelChoice,
    /// exact | bayes | uniform | trained | FILE
    #[arg(long, default_value = "exact")]
    backward: ModelChoice,
    #[arg(long, default_value_t = 20)]
    top: usize,
    /// Smoothing of trained models.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, conflicts_with = "transition")]
    joint: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Clone, Debug, PartialEq)]
enum Init {
    Stationary,
    Uniform,
    Index(usize),
}

impl std::str::FromStr for Init {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stationary" => Ok(Init::Stationary),
            "uniform" => Ok(Init::Uniform),
            other => other.parse().map(Init::Index).map_err(|_| {
                format!("expected stationary, uniform or a state index, got {other:?}")
            }),
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    transition: PathBuf,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "stationary")]
    init: Init,
    /// Output file (falls back to --output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Count(a) => cmd_count(g, a),
        Command::Verify(a) => cmd_verify(g, a),
        Command::DeltaH(a) => cmd_delta_h(g, a),
        Command::Symmetry(a) => cmd_symmetry(g, a),
        Command::Gen(a) => cmd_gen(g, a),
    }
}

#[derive(Serialize)]
struct CountRow {
    key: u64,
    tuple: Vec<String>,
    count: u64,
}

#[derive(Serialize)]
struct CountReport {
    order: usize,
    window_total: u64,
    alphabet: Vec<String>,
    counts: Vec<CountRow>,
}

fn cmd_count(g: &GlobalArgs, a: &CountArgs) -> Result<Outcome> {
    let seq = a.input.read(None)?.context("count needs --input")?;
    let table = count_ngrams(&seq, a.order)?;
    let alphabet = seq.alphabet();
    let rows: Vec<CountRow> = table
        .sorted()
        .into_iter()
        .map(|(key, count)| CountRow {
            key,
            tuple: alphabet.labels(&table.decode(key)),
            count,
        })
        .collect();
    let report = CountReport {
        order: a.order,
        window_total: table.window_total(),
        alphabet: (0..seq.alphabet_size() as u32)
            .map(|s| alphabet.label(s))
            .collect(),
        counts: rows,
    };
    let sink = g.sink();
    match g.format {
        Format::Json => sink.json(&report)?,
        Format::Csv => sink.csv_rows(
            report
                .counts
                .iter()
                .map(|r| vec![r.key.to_string(), r.tuple.join(" "), r.count.to_string()]),
            &["key", "tuple", "count"],
        )?,
    }
    Ok(Outcome::Ok)
}

/// A joint distribution plus the sequence to analyse under it.
fn joint_and_sequence(
    order: Option<usize>,
    joint: Option<&PathBuf>,
    chain: &ChainArgs,
    input: &InputArgs,
) -> Result<(JointTupleDistribution, Sequence)> {
    if let Some(path) = joint {
        let joint = match read_model(path).with_context(|| format!("reading {}", path.display()))? {
            LoadedModel::Joint(j) => j,
            LoadedModel::Conditional(_) => {
                bail!("{} holds a conditional model, not a joint", path.display())
            }
        };
        if let Some(n) = order {
            if n != joint.context_order() {
                bail!(
                    "--order {n} does not match the joint file (order {})",
                    joint.context_order()
                );
            }
        }
        let seq = match input.read(Some(joint.alphabet_size()))? {
            Some(seq) => seq,
            None => bail!("--joint needs --input"),
        };
        return Ok((joint, seq));
    }
    let n = order.unwrap_or(1);
    if let Some(path) = &chain.transition {
        let p = read_transition(path).with_context(|| format!("reading {}", path.display()))?;
        let pi = stationary_distribution(&p).context("stationary distribution")?;
        let joint = joint_tuple_distribution(&p, &pi, n + 1)?;
        let seq = match input.read(Some(p.size()))? {
            Some(seq) => seq,
            None => {
                let length = chain
                    .length
                    .context("--transition needs --length or --input")?;
                generate_markov(&p, &pi, length, chain.seed)?
            }
        };
        return Ok((joint, seq));
    }
    let seq = input
        .read(None)?
        .context("no input: give --joint, --transition or --input")?;
    let joint = JointTupleDistribution::empirical(&count_ngrams(&seq, n + 1)?)?;
    Ok((joint, seq))
}

fn cmd_verify(g: &GlobalArgs, a: &VerifyArgs) -> Result<Outcome> {
    let (joint, seq) = joint_and_sequence(a.order, a.joint.as_ref(), &a.chain, &a.input)?;
    let opts = CheckOptions {
        report_only: a.report_only,
        eval: g.eval(),
    };
    let report = theorem_check(&seq, &joint, opts)?;
    let shown = report.in_units(g.units());
    g.sink().report(&shown)?;
    if a.report_only {
        eprintln!(
            "residual {:e}, per-symbol gap {:e} ({})",
            shown.residual,
            shown.per_symbol_gap,
            if g.bits { "bits" } else { "nats" }
        );
        return Ok(Outcome::Ok);
    }
    if report.within_tolerance {
        Ok(Outcome::Ok)
    } else {
        eprintln!(
            "verification failed: residual {:e} exceeds {:e} nats",
            report.residual, report.tolerance
        );
        Ok(Outcome::Failed)
    }
}

#[derive(Serialize)]
struct DeltaHSummary {
    seeds: Vec<u64>,
    runs: Vec<DeltaHReport>,
    mean_delta_h: f64,
    sd_delta_h: f64,
    mean_abs_delta_h: f64,
    units: Units,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn cmd_delta_h(g: &GlobalArgs, a: &DeltaHArgs) -> Result<Outcome> {
    let smoothing = Smoothing {
        forward: a.k_forward.unwrap_or(a.k),
        backward: a.k_backward.unwrap_or(a.k),
    };
    let units = g.units();
    let Some(path) = &a.transition else {
        let seq = a
            .input
            .read(None)?
            .context("delta-h needs --input or --transition")?;
        let report = delta_h_with(&seq, a.order, smoothing, a.threshold, g.eval())?;
        g.sink().report(&report.in_units(units))?;
        return Ok(Outcome::Ok);
    };
    let p = read_transition(path).with_context(|| format!("reading {}", path.display()))?;
    let pi = stationary_distribution(&p).context("stationary distribution")?;
    let length = a.length.context("--transition needs --length")?;
    let seeds = if a.seeds.is_empty() {
        vec![0]
    } else {
        a.seeds.clone()
    };
    let runs = seeds
        .iter()
        .map(|&seed| {
            let seq = generate_markov(&p, &pi, length, seed)?;
            Ok(delta_h_with(&seq, a.order, smoothing, a.threshold, g.eval())?.in_units(units))
        })
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = runs.iter().map(|r| r.delta_h_per_symbol).collect();
    let (mean, sd) = mean_sd(&deltas);
    let abs: Vec<f64> = deltas.iter().map(|d| d.abs()).collect();
    let summary = DeltaHSummary {
        seeds,
        runs,
        mean_delta_h: mean,
        sd_delta_h: sd,
        mean_abs_delta_h: mean_sd(&abs).0,
        units,
    };
    g.sink().report(&summary)?;
    Ok(Outcome::Ok)
}

fn build_model(
    choice: &ModelChoice,
    backward: bool,
    joint: &JointTupleDistribution,
    seq: Option<&Sequence>,
    k: f64,
) -> Result<Box<dyn ConditionalModel>> {
    let n = joint.context_order();
    let a = joint.alphabet_size();
    Ok(match choice {
        ModelChoice::Exact if backward => Box::new(conditional_from_joint(&reverse_joint(joint))),
        ModelChoice::Exact => Box::new(conditional_from_joint(joint)),
        ModelChoice::Bayes if backward => {
            let forward = conditional_from_joint(joint);
            Box::new(bayes_reverse_conditional(
                &forward,
                &joint.leading_marginal(),
            )?)
        }
        ModelChoice::Bayes => bail!("bayes is only available as the backward model"),
        ModelChoice::Uniform => Box::new(UniformModel::new(n, a)?),
        ModelChoice::Trained => {
            let seq = seq.context("trained models need a sequence (--input or --length)")?;
            let train_on = if backward {
                seq.reversed()
            } else {
                seq.clone()
            };
            Box::new(train_ngram_model(&train_on, n, k)?)
        }
        ModelChoice::File(path) => read_model(path)
            .with_context(|| format!("reading {}", path.display()))?
            .into_conditional(),
    })
}

fn cmd_symmetry(g: &GlobalArgs, a: &SymmetryArgs) -> Result<Outcome> {
    let (joint, seq) = if a.joint.is_some() || a.chain.transition.is_some() {
        let needs_seq = a.input.input.is_some() || a.chain.length.is_some();
        if needs_seq {
            let order = a.joint.is_none().then_some(a.order);
            let (j, s) = joint_and_sequence(order, a.joint.as_ref(), &a.chain, &a.input)?;
            (j, Some(s))
        } else if let Some(path) = &a.joint {
            match read_model(path).with_context(|| format!("reading {}", path.display()))? {
                LoadedModel::Joint(j) => (j, None),
                LoadedModel::Conditional(_) => {
                    bail!("{} holds a conditional model, not a joint", path.display())
                }
            }
        } else {
            let path = a.chain.transition.as_ref().expect("checked above");
            let p = read_transition(path).with_context(|| format!("reading {}", path.display()))?;
            let pi = stationary_distribution(&p).context("stationary distribution")?;
            (joint_tuple_distribution(&p, &pi, a.order + 1)?, None)
        }
    } else {
        let seq = a
            .input
            .read(None)?
            .context("symmetry needs --joint, --transition or --input")?;
        let joint = JointTupleDistribution::empirical(&count_ngrams(&seq, a.order + 1)?)?;
        (joint, Some(seq))
    };
    let forward = build_model(&a.forward, false, &joint, seq.as_ref(), a.k)?;
    let backward = build_model(&a.backward, true, &joint, seq.as_ref(), a.k)?;
    let mut report = symmetry_check(&forward, &backward, &joint, a.top)?;
    report.units = g.units();
    let sink = g.sink();
    match g.format {
        Format::Json => sink.json(&report)?,
        Format::Csv => sink.csv_rows(
            report.rows.iter().map(|r| {
                vec![
                    r.key.to_string(),
                    r.tuple
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.abs_gap.to_string(),
                ]
            }),
            &["key", "tuple", "lhs", "rhs", "abs_gap"],
        )?,
    }
    Ok(Outcome::Ok)
}

fn cmd_gen(g: &GlobalArgs, a: &GenArgs) -> Result<Outcome> {
    let p = read_transition(&a.transition)
        .with_context(|| format!("reading {}", a.transition.display()))?;
    if p.size() > 256 {
        bail!(
            "alphabet of {} states does not fit in one byte per symbol",
            p.size()
        );
    }
    let init = match a.init {
        Init::Stationary => stationary_distribution(&p).context("--init stationary")?,
        Init::Uniform => vec![1.0 / p.size() as f64; p.size()],
        Init::Index(i) => {
            if i >= p.size() {
                bail!("initial state {i} outside {} states", p.size());
            }
            let mut v = vec![0.0; p.size()];
            v[i] = 1.0;
            v
        }
    };
    let seq = generate_markov(&p, &init, a.length, a.seed)?;
    let bytes: Vec<u8> = seq.ids().iter().map(|&s| s as u8).collect();
    let out = a
        .out
        .as_ref()
        .or(g.output.as_ref())
        .context("gen needs --out")?;
    std::fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))?;
    Ok(Outcome::Ok)
}
