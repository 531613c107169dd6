//! Command-line front end: generate problems, recover signals, measure
//! restricted isometry constants and run the experiments.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stable_recovery::ensembles::generate;
use stable_recovery::harness::config::{ExperimentConfig, ExperimentKind};
use stable_recovery::harness::experiments::{run_experiment, write_rip_scan};
use stable_recovery::harness::scan::{constants_record, run_constants, rip_scan, CONSTANTS_HEADER};
use stable_recovery::harness::{fmt_sig, write_csv_file};
use stable_recovery::linops::{DenseMatrix, MeasurementOperator};
use stable_recovery::noisemodel::{apply_noise, NoiseSpec};
use stable_recovery::rip::RipReport;
use stable_recovery::rng::{derive_seed, Purpose};
use stable_recovery::signals::{gen_compressible, gen_sparse_spikes, read_signal_csv, write_signal_csv};
use stable_recovery::solvers::{solve, RecoveryProblem, SolverResult};
use stable_recovery::vector::{dist2, norm2};
use stable_recovery::{Error, Result};

#[derive(Parser)]
#[command(name = "srcv", version, about = "Stable recovery from incomplete and inaccurate measurements")]
struct Cli {
    /// Experiment config file (key = value lines with [section] headers).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides master_seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides output_dir.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Full-size image experiment (256 x 256, 25000 measurements).
    #[arg(long, global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalChoice {
    Sparse,
    Compressible,
}

#[derive(Subcommand)]
enum Command {
    /// Writes operator.bin, signal.csv, measurements.csv and problem.csv.
    Gen {
        #[arg(long, value_enum)]
        signal: Option<SignalChoice>,
        /// Noise level; defaults to the first configured sigma.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Solves BP (epsilon = 0) or BPDN from files written by `gen`.
    Recover {
        #[arg(long)]
        operator: Option<PathBuf>,
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Defaults to the epsilon recorded in problem.csv.
        #[arg(long)]
        epsilon: Option<f64>,
        /// True signal, for reporting the error; defaults to signal.csv if present.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Exhaustive delta_S of one operator file, or the configured rip scan.
    Rip {
        #[arg(long)]
        operator: Option<PathBuf>,
        #[arg(long)]
        s_max: Option<usize>,
    },
    /// Stability constants over a grid of deltas and M/|T0| ratios.
    Constants {
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        ratio: Option<Vec<usize>>,
    },
    /// Runs table1, table2, image, rip-scan or constants.
    Experiment { name: ExperimentKind },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srcv: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path, kind)?,
        None => ExperimentConfig::defaults(kind.unwrap_or(ExperimentKind::Table1)),
    };
    if let Some(seed) = cli.seed {
        c.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        c.output_dir = out.clone();
    }
    if cli.full_scale {
        c.full_scale();
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen { signal, sigma } => gen(cli, *signal, *sigma),
        Command::Recover {
            operator,
            measurements,
            epsilon,
            truth,
        } => recover(cli, operator, measurements, *epsilon, truth),
        Command::Rip { operator, s_max } => rip(cli, operator, *s_max),
        Command::Constants { delta, ratio } => {
            let mut c = load_config(cli, Some(ExperimentKind::Constants))?;
            if let Some(d) = delta {
                c.delta = d.clone();
            }
            if let Some(r) = ratio {
                c.ratio = r.clone();
            }
            c.validate()?;
            fs::create_dir_all(&c.output_dir)?;
            let rows = run_constants(&c)?;
            let path = c.output_dir.join("constants.csv");
            write_csv_file(
                &path,
                &CONSTANTS_HEADER,
                rows.iter().map(|(r, k)| constants_record(*r, k)),
            )?;
            for (ratio, k) in &rows {
                println!(
                    "M/|T0| = {ratio}, delta = {}: C_S = {:.4}, C1_S = {:.4}, C2_S = {:.4}{}",
                    fmt_sig(k.delta_m),
                    k.c_s,
                    k.c1_s,
                    k.c2_s,
                    if k.is_valid() { "" } else { " (invalid)" }
                );
            }
            println!("{}", path.display());
            Ok(())
        }
        Command::Experiment { name } => {
            let c = load_config(cli, Some(*name))?;
            for path in run_experiment(&c)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn gen(cli: &Cli, signal: Option<SignalChoice>, sigma: Option<f64>) -> Result<()> {
    let c = load_config(cli, None)?;
    let signal = signal.unwrap_or(match c.experiment {
        ExperimentKind::Table2 => SignalChoice::Compressible,
        _ => SignalChoice::Sparse,
    });
    let sigma = sigma.or(c.sigma.first().copied()).unwrap_or(0.0);
    let mut spec = stable_recovery::ensembles::EnsembleSpec::new(c.ensemble, c.n, c.m, c.master_seed);
    spec.normalize_columns = c.normalize_columns;
    let a = generate(&spec)?.materialize()?;
    let seed = derive_seed(c.master_seed, 1, Purpose::Signal);
    let x0 = match signal {
        SignalChoice::Sparse => gen_sparse_spikes(c.m, c.k, seed)?,
        SignalChoice::Compressible => gen_compressible(c.m, c.decay, c.amplitude, seed)?,
    };
    let noise = NoiseSpec {
        lambda: c.lambda,
        ..NoiseSpec::gaussian(sigma, derive_seed(c.master_seed, 1, Purpose::Noise))
    };
    let noisy = apply_noise(&a.forward(&x0)?, &noise)?;

    let dir = &c.output_dir;
    fs::create_dir_all(dir)?;
    a.write_binary(BufWriter::new(File::create(dir.join("operator.bin"))?))?;
    write_signal_csv(BufWriter::new(File::create(dir.join("signal.csv"))?), &x0)?;
    write_signal_csv(
        BufWriter::new(File::create(dir.join("measurements.csv"))?),
        &noisy.y_noisy,
    )?;
    write_csv_file(
        &dir.join("problem.csv"),
        &["n", "m", "sigma", "lambda", "epsilon", "e_norm", "seed"],
        [[
            c.n.to_string(),
            c.m.to_string(),
            fmt_sig(sigma),
            fmt_sig(c.lambda),
            fmt_sig(noisy.epsilon),
            fmt_sig(norm2(&noisy.e)),
            c.master_seed.to_string(),
        ]],
    )?;
    println!("{}", dir.display());
    Ok(())
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    read_signal_csv(BufReader::new(File::open(path)?))
}

fn read_operator(path: &Path) -> Result<MeasurementOperator> {
    Ok(DenseMatrix::read_binary(BufReader::new(File::open(path)?))?.into())
}

/// The epsilon column of a problem.csv written by `gen`.
fn recorded_epsilon(path: &Path) -> Result<f64> {
    let mut rdr = csv::Reader::from_path(path)?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "epsilon")
        .ok_or_else(|| Error::Format(format!("{}: no epsilon column", path.display())))?;
    let rec = rdr
        .records()
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty", path.display())))??;
    rec.get(col)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("{}: bad epsilon", path.display())))
}

fn recover(
    cli: &Cli,
    operator: &Option<PathBuf>,
    measurements: &Option<PathBuf>,
    epsilon: Option<f64>,
    truth: &Option<PathBuf>,
) -> Result<()> {
    let c = load_config(cli, None)?;
    let dir = &c.output_dir;
    let a = read_operator(&operator.clone().unwrap_or_else(|| dir.join("operator.bin")))?;
    let y = read_vector(&measurements.clone().unwrap_or_else(|| dir.join("measurements.csv")))?;
    let eps = match epsilon {
        Some(e) => e,
        None => recorded_epsilon(&dir.join("problem.csv"))?,
    };
    let res = solve(&RecoveryProblem::l1(&a, y, eps), &c.solver)?;

    fs::create_dir_all(dir)?;
    write_signal_csv(BufWriter::new(File::create(dir.join("recovered.csv"))?), &res.x_sharp)?;
    write_csv_file(
        &dir.join("result.csv"),
        &SolverResult::CSV_HEADER,
        [res.csv_record()],
    )?;
    res.write_log(BufWriter::new(File::create(dir.join("log.csv"))?))?;
    println!("{} (epsilon = {}): {}", if eps == 0.0 { "bp" } else { "bpdn" }, fmt_sig(eps), res.message);
    let truth = truth.clone().or_else(|| {
        let p = dir.join("signal.csv");
        p.exists().then_some(p)
    });
    if let Some(t) = truth {
        let x0 = read_vector(&t)?;
        let err = dist2(&res.x_sharp, &x0);
        println!("error {} (relative {})", fmt_sig(err), fmt_sig(err / norm2(&x0)));
    }
    Ok(())
}

fn rip(cli: &Cli, operator: &Option<PathBuf>, s_max: Option<usize>) -> Result<()> {
    let Some(path) = operator else {
        let mut c = load_config(cli, Some(ExperimentKind::RipScan))?;
        if let Some(s) = s_max {
            c.s_max = s;
        }
        for p in run_experiment(&c)? {
            println!("{}", p.display());
        }
        return Ok(());
    };
    let mut c = load_config(cli, None)?;
    if let Some(s) = s_max {
        c.s_max = s;
    }
    let a = read_operator(path)?;
    fs::create_dir_all(&c.output_dir)?;
    let scan = rip_scan(std::slice::from_ref(&a), c.s_max, c.subset_budget)?;
    let files = write_rip_scan(&c.output_dir, &scan)?;
    let report: &RipReport = &scan.reports[0];
    let deltas = c.output_dir.join("rip.csv");
    report.write_csv(BufWriter::new(File::create(&deltas)?))?;
    for (s, e) in &report.entries {
        println!("delta_{s} = {}", fmt_sig(e.delta));
    }
    for p in files.iter().chain([&deltas]) {
        println!("{}", p.display());
    }
    Ok(())
}
