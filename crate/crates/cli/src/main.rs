use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stpolar::ga::{design_mean_from_sigma2, ga_evolve};
use stpolar::kernel::{encode_1d, log2_exact};
use stpolar::mimo::sinr_statistics;
use stpolar::rng::StreamFactory;
use stpolar::sim::{self, antennas_for_gamma, ConfigLayer, DesignRule};
use stpolar::st2d::{encode_2d, equivalence_sweep, MessageMatrix};
use stpolar::{BitVector, CodingMode, Error, Result};

#[derive(Parser)]
#[command(name = "stpolar", version, about = "Spatiotemporal 2-D polar codes for MMSE-MIMO links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Gaussian-approximation reliability profile.
    Construct(ConstructArgs),
    /// Encode a message and print the 1-D and 2-D codewords.
    Encode(EncodeArgs),
    /// Check that every split and both modes match the 1-D encoder.
    EquivCheck(EquivArgs),
    /// Run a BER/BLER sweep and write the results CSV.
    Simulate(Box<SimulateArgs>),
    /// Per-stream post-MMSE SINR statistics.
    SinrStats(SinrArgs),
    /// Slot counts of 1-D and 2-D transmission.
    Latency(LatencyArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Code length N (power of two).
    #[arg(long)]
    n: usize,
    /// LLR mean of the channel.
    #[arg(long = "design-mean", alias = "design_mean", conflicts_with = "snr_db")]
    design_mean: Option<f64>,
    /// Design SNR in dB for BPSK over AWGN (design mean 2/σ²).
    #[arg(long = "snr-db", alias = "snr_db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    /// Message as '0'/'1' characters, first index first.
    bits: String,
    /// Number of streams for the 2-D layout.
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long, default_value = "time-space")]
    mode: CodingMode,
}

#[derive(Args)]
struct EquivArgs {
    #[arg(long)]
    n: usize,
    /// Enumerate every message.
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    /// Number of random messages.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// `key = value` configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mode: Option<CodingMode>,
    /// awgn or mimo.
    #[arg(long)]
    channel: Option<String>,
    /// Receive antennas.
    #[arg(long, conflicts_with = "gamma")]
    l: Option<usize>,
    /// Load factor S/L.
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated SNR points in dB.
    #[arg(long = "snr-db", alias = "snr_db", allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long = "design-mean", alias = "design_mean", conflicts_with = "design_rule")]
    design_mean: Option<f64>,
    /// `auto` derives the design mean from the SNR (AWGN) or a pilot SINR run (MIMO).
    #[arg(long = "design-rule", alias = "design_rule")]
    design_rule: Option<String>,
    #[arg(long = "max-frames", alias = "max_frames")]
    max_frames: Option<u64>,
    #[arg(long = "target-frame-errors", alias = "target_frame_errors")]
    target_frame_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (does not change the results).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SinrArgs {
    #[arg(long, required_unless_present = "gamma")]
    l: Option<usize>,
    #[arg(long, conflicts_with = "l")]
    gamma: Option<f64>,
    #[arg(long)]
    s: usize,
    #[arg(long = "snr-db", alias = "snr_db", allow_hyphen_values = true, default_value_t = 10.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LatencyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
        }
    }
}

fn stages(n: usize) -> Result<u32> {
    log2_exact(n).ok_or(Error::NotPowerOfTwo(n))
}

fn construct(a: ConstructArgs) -> Result<()> {
    let mean = match (a.design_mean, a.snr_db) {
        (Some(m), _) => m,
        (None, Some(snr)) => design_mean_from_sigma2(sim::sigma2_at(snr)),
        (None, None) => return Err(Error::InvalidParameter("give --design-mean or --snr-db".into())),
    };
    let profile = ga_evolve(mean, stages(a.n)?)?;
    emit(&profile.to_table(), a.out.as_ref())
}

fn encode(a: EncodeArgs) -> Result<()> {
    let u: BitVector = a.bits.parse()?;
    let n = u.len();
    if a.s == 0 || n % a.s != 0 {
        return Err(Error::InvalidParameter(format!("S = {} does not divide N = {n}", a.s)));
    }
    let x1 = encode_1d(&u);
    let x2 = encode_2d(&MessageMatrix::reshape(&u, a.s, n / a.s)?, a.mode);
    emit(&format!("1D: {x1}\n2D ({}x{}, {}), one row per stream:\n{x2}", a.s, n / a.s, a.mode), None)
}

fn equiv_check(a: EquivArgs) -> Result<()> {
    let samples = (!a.exhaustive).then_some(a.samples);
    let r = equivalence_sweep(a.n, samples, a.seed)?;
    let scope = if a.exhaustive { "all" } else { "random" };
    match r.failure {
        None => emit(
            &format!(
                "N={}: {} splits x 2 modes equivalent to 1-D encoding over {} {scope} messages\n",
                r.n, r.splits, r.messages
            ),
            None,
        ),
        Some((u, report)) => Err(Error::CheckFailed(format!(
            "split {}x{} differs from 1-D encoding for message {u}: {:?}",
            report.s, report.t, report.first_mismatch
        ))),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let base = match &a.config {
        Some(path) => ConfigLayer::from_file(path)?,
        None => ConfigLayer::default(),
    };
    let mut flags = ConfigLayer {
        n: a.n,
        s: a.s,
        t: a.t,
        k: a.k,
        mode: a.mode,
        l: a.l,
        gamma: a.gamma,
        max_frames: a.max_frames,
        target_frame_errors: a.target_frame_errors,
        seed: a.seed,
        out: a.out,
        ..ConfigLayer::default()
    };
    if let Some(c) = &a.channel {
        flags.set("channel", c)?;
    }
    if let Some(list) = &a.snr_db {
        flags.set("snr_db", list)?;
    }
    if let Some(m) = a.design_mean {
        flags.design = Some(DesignRule::Fixed(m));
    }
    if let Some(rule) = &a.design_rule {
        flags.set("design_rule", rule)?;
    }
    let mut cfg = flags.over(base).build()?;
    cfg.workers = a.workers;
    cfg.validate()?;
    let results = sim::run(&cfg)?;
    for r in &results {
        eprintln!(
            "snr {:>6.2} dB: frames {:>9} frame errors {:>5} BER {:.3e} BLER {:.3e} ({:.1} s)",
            r.snr_db,
            r.frames,
            r.frame_errors,
            r.ber(),
            r.bler(),
            r.elapsed_seconds
        );
    }
    match &cfg.out {
        Some(path) => sim::export_results(&results, path),
        None => emit(&sim::results_to_csv(&results)?, None),
    }
}

fn sinr_stats(a: SinrArgs) -> Result<()> {
    let l = match (a.l, a.gamma) {
        (Some(l), _) => l,
        (None, Some(g)) => antennas_for_gamma(a.s, g)?,
        (None, None) => unreachable!("clap requires one of --l and --gamma"),
    };
    if a.s == 0 || l < a.s {
        return Err(Error::InvalidParameter(format!("need L >= S >= 1, got L = {l}, S = {}", a.s)));
    }
    let stats = sinr_statistics(l, a.s, sim::sigma2_at(a.snr_db), a.trials, &StreamFactory::new(a.seed))?;
    emit(&stats.to_table(), a.out.as_ref())
}

fn latency(a: LatencyArgs) -> Result<()> {
    let (one, two) = sim::latency_estimate(a.n, a.s)?;
    emit(&format!("{one}; {two}\n"), None)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Encode(a) => encode(a),
        Command::EquivCheck(a) => equiv_check(a),
        Command::Simulate(a) => simulate(*a),
        Command::SinrStats(a) => sinr_stats(a),
        Command::Latency(a) => latency(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
