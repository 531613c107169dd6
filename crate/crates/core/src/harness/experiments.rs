//! Runs a configured experiment and writes its CSV tables and images.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ExperimentKind, ImageSource, NoiseChoice};
use super::image::{blocks, harbour_scene, read_pgm, write_pgm, Picture};
use super::imaging::{recover_image, ImageNoise, ImageReport};
use super::scan::{constants_record, run_constants, run_rip_scan, RipScan, CONSTANTS_HEADER};
use super::tables::{run_table1, run_table2, TableReport, TableRow, TrialRecord};
use super::{fmt_sig, write_csv_file};
use crate::error::{Error, Result};
use crate::signals::write_signal_csv;

/// The test image named by the config, as a mean-free unit-norm vector.
pub fn load_image(config: &ExperimentConfig) -> Result<(Vec<f64>, usize)> {
    let pic = match &config.source {
        ImageSource::Scene => harbour_scene(config.side),
        ImageSource::Blocks => blocks(config.side),
        ImageSource::File(path) => read_pgm(path)?,
    };
    let side = pic.square_side()?;
    if side != config.side {
        return Err(Error::InvalidArgument(format!(
            "image is {side}x{side} but the config expects side = {}; set [image] side",
            config.side
        )));
    }
    Ok((pic.centered_unit()?, side))
}

pub fn image_noises(config: &ExperimentConfig) -> Vec<ImageNoise> {
    config
        .noise
        .iter()
        .map(|c| match c {
            NoiseChoice::None => ImageNoise::None,
            NoiseChoice::Gaussian => ImageNoise::Gaussian {
                sigma: config.sigma[0],
            },
            NoiseChoice::Quantize => ImageNoise::Quantize {
                num_levels: config.num_levels,
            },
        })
        .collect()
}

/// Both image recoveries under every configured perturbation.
pub fn run_image(config: &ExperimentConfig) -> Result<(Vec<f64>, ImageReport)> {
    if config.experiment != ExperimentKind::Image {
        return Err(Error::InvalidArgument(format!(
            "config is for '{}', not 'image'",
            config.experiment
        )));
    }
    config.validate()?;
    let (x0, side) = load_image(config)?;
    let report = recover_image(
        &x0,
        side,
        config.n,
        config.master_seed,
        &image_noises(config),
        &config.solver,
    )?;
    Ok((x0, report))
}

/// Runs the experiment and writes its files under `config.output_dir`,
/// returning their paths.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    match config.experiment {
        ExperimentKind::Table1 => write_table(dir, &run_table1(config)?),
        ExperimentKind::Table2 => write_table(dir, &run_table2(config)?),
        ExperimentKind::Image => {
            let (x0, report) = run_image(config)?;
            write_image_outputs(dir, &x0, &report)
        }
        ExperimentKind::RipScan => write_rip_scan(dir, &run_rip_scan(config)?),
        ExperimentKind::Constants => {
            let path = dir.join("constants.csv");
            let rows = run_constants(config)?;
            write_csv_file(
                &path,
                &CONSTANTS_HEADER,
                rows.iter().map(|(r, c)| constants_record(*r, c)),
            )?;
            Ok(vec![path])
        }
    }
}

/// `table.csv` (one row per sigma, with the approximation floor), and
/// `trials.csv` (one row per solve).
pub fn write_table(dir: &Path, report: &TableReport) -> Result<Vec<PathBuf>> {
    let table = dir.join("table.csv");
    let mut header = TableRow::CSV_HEADER.to_vec();
    header.push("approx_error");
    write_csv_file(
        &table,
        &header,
        report.rows.iter().map(|r| {
            let mut rec = r.csv_record();
            rec.push(fmt_sig(report.approx_error));
            rec
        }),
    )?;
    let trials = dir.join("trials.csv");
    write_csv_file(
        &trials,
        &TrialRecord::CSV_HEADER,
        report.records.iter().map(TrialRecord::csv_record),
    )?;
    Ok(vec![table, trials])
}

pub fn write_rip_scan(dir: &Path, scan: &RipScan) -> Result<Vec<PathBuf>> {
    let path = dir.join("rip_scan.csv");
    write_csv_file(&path, &RipScan::CSV_HEADER, scan.csv_records())?;
    Ok(vec![path])
}

pub const IMAGE_METRICS_HEADER: [&str; 13] = [
    "noise",
    "parameter",
    "n",
    "s_terms",
    "e_norm",
    "epsilon",
    "approx_error",
    "wavelet_error",
    "tv_error",
    "wavelet_converged",
    "tv_converged",
    "wavelet_seconds",
    "tv_seconds",
];

/// `metrics.csv`, plus each image as PGM (rescaled for viewing) and as a
/// lossless `index,value` CSV.
pub fn write_image_outputs(dir: &Path, x0: &[f64], report: &ImageReport) -> Result<Vec<PathBuf>> {
    let side = report.side;
    let mut paths = write_picture(dir, "original", x0, side)?;
    for run in &report.runs {
        let label = run.noise.label();
        paths.extend(write_picture(dir, &format!("{label}_wavelet"), &run.wavelet_image, side)?);
        paths.extend(write_picture(dir, &format!("{label}_tv"), &run.tv_image, side)?);
    }
    let metrics = dir.join("metrics.csv");
    write_csv_file(
        &metrics,
        &IMAGE_METRICS_HEADER,
        report.runs.iter().map(|r| {
            vec![
                r.noise.label(),
                fmt_sig(r.noise.parameter()),
                report.n.to_string(),
                report.s_terms.to_string(),
                fmt_sig(r.e_norm),
                fmt_sig(r.epsilon),
                fmt_sig(r.approx_error),
                fmt_sig(r.wavelet_error),
                fmt_sig(r.tv_error),
                r.wavelet_converged.to_string(),
                r.tv_converged.to_string(),
                fmt_sig(r.wavelet_seconds),
                fmt_sig(r.tv_seconds),
            ]
        }),
    )?;
    paths.push(metrics);
    Ok(paths)
}

fn write_picture(dir: &Path, name: &str, pixels: &[f64], side: usize) -> Result<Vec<PathBuf>> {
    let pgm = dir.join(format!("{name}.pgm"));
    write_pgm(&pgm, &Picture::new(side, side, pixels.to_vec())?)?;
    let csv = dir.join(format!("{name}.csv"));
    write_signal_csv(BufWriter::new(File::create(&csv)?), pixels)?;
    Ok(vec![pgm, csv])
}
