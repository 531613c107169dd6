//! Experiment configuration: `key = value` lines under `[section]` headers.
//!
//! ```ini
//! experiment = table1
//! master_seed = 2005
//! trials = 10
//! output_dir = out/table1
//!
//! [problem]
//! m = 1024
//! n = 300
//! k = 50
//! sigma = 0.01, 0.02, 0.05, 0.1, 0.2, 0.5
//! lambda = 2
//!
//! [ensemble]
//! kind = gaussian
//!
//! [solver]
//! gap_tolerance = 1e-8
//! ```
//!
//! Every key is checked against the section it appears in; unknown
//! sections, unknown keys and repeated keys are errors.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use super::imaging::{default_measurements, default_sigma};
use crate::ensembles::EnsembleKind;
use crate::error::{Error, Result};
use crate::rip::DEFAULT_SUBSET_BUDGET;
use crate::signals::{COMPRESSIBLE_AMPLITUDE, COMPRESSIBLE_DECAY};
use crate::solvers::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Table1,
    Table2,
    Image,
    RipScan,
    Constants,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Table1,
        ExperimentKind::Table2,
        ExperimentKind::Image,
        ExperimentKind::RipScan,
        ExperimentKind::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::Table2 => "table2",
            ExperimentKind::Image => "image",
            ExperimentKind::RipScan => "rip-scan",
            ExperimentKind::Constants => "constants",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == t)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{s}'")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Measurement perturbations the image experiment cycles through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseChoice {
    None,
    Gaussian,
    Quantize,
}

impl FromStr for NoiseChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(NoiseChoice::None),
            "gaussian" => Ok(NoiseChoice::Gaussian),
            "quantize" => Ok(NoiseChoice::Quantize),
            _ => Err(Error::InvalidArgument(format!("unknown noise kind '{s}'"))),
        }
    }
}

/// Where the image experiment gets its picture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageSource {
    /// Built-in piecewise-smooth scene.
    Scene,
    /// Built-in piecewise-constant blocks.
    Blocks,
    File(PathBuf),
}

impl FromStr for ImageSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "scene" => ImageSource::Scene,
            "blocks" => ImageSource::Blocks,
            path => ImageSource::File(PathBuf::from(path)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,

    /// Signal length (pixels for images).
    pub m: usize,
    /// Number of measurements.
    pub n: usize,
    /// Sparsity of spike signals; oracle support size for compressible ones.
    pub k: usize,
    pub sigma: Vec<f64>,
    pub lambda: f64,
    /// Decay and amplitude of the compressible signals.
    pub decay: f64,
    pub amplitude: f64,

    pub ensemble: EnsembleKind,
    pub normalize_columns: bool,

    pub noise: Vec<NoiseChoice>,
    pub num_levels: usize,

    pub solver: SolverOptions,

    pub source: ImageSource,
    pub side: usize,

    pub s_max: usize,
    pub subset_budget: u128,

    /// Restricted isometry constants for the constants grid.
    pub delta: Vec<f64>,
    /// `M / |T0|` ratios for the constants grid.
    pub ratio: Vec<usize>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let table_sigmas = vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5];
        let mut c = Self {
            experiment: kind,
            master_seed: 2005,
            trials: 10,
            output_dir: PathBuf::from("out").join(kind.name()),
            m: 1024,
            n: 300,
            k: 50,
            sigma: table_sigmas,
            lambda: 2.0,
            decay: COMPRESSIBLE_DECAY,
            amplitude: COMPRESSIBLE_AMPLITUDE,
            ensemble: EnsembleKind::GaussianIid,
            normalize_columns: false,
            noise: vec![NoiseChoice::Gaussian],
            num_levels: 10,
            solver: SolverOptions::default(),
            source: ImageSource::Scene,
            side: 64,
            s_max: 4,
            subset_budget: DEFAULT_SUBSET_BUDGET,
            delta: vec![0.2, 0.25],
            ratio: vec![3],
        };
        match kind {
            ExperimentKind::Table1 | ExperimentKind::Table2 | ExperimentKind::Constants => {}
            ExperimentKind::Image => {
                c.trials = 1;
                c.set_side(64);
                c.noise = vec![NoiseChoice::Gaussian, NoiseChoice::Quantize];
            }
            ExperimentKind::RipScan => {
                c.trials = 5;
                c.m = 16;
                c.n = 8;
                c.normalize_columns = true;
            }
        }
        c
    }

    /// Image side together with the matching pixel count, measurement count
    /// and noise level.
    pub fn set_side(&mut self, side: usize) {
        self.side = side;
        self.m = side * side;
        self.n = default_measurements(side);
        self.sigma = vec![default_sigma(side)];
    }

    /// The 256 x 256 image with 25000 measurements.
    pub fn full_scale(&mut self) {
        if self.experiment == ExperimentKind::Image {
            self.set_side(256);
        }
    }

    pub fn from_file(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, kind).map_err(|e| match e {
            Error::Config { location, message } => Error::Config {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// Parses a config file. `kind` overrides a missing `experiment` key and
    /// must agree with it when both are given.
    pub fn parse(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config {
            location: format!("line {}", e.line),
            message: e.msg.to_string(),
        })?;
        let declared = ini
            .section(None::<String>)
            .and_then(|p| p.get("experiment"))
            .map(|v| v.parse::<ExperimentKind>())
            .transpose()
            .map_err(|e| cfg_err("experiment", e.to_string()))?;
        let kind = match (declared, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(cfg_err(
                    "experiment",
                    format!("file declares '{a}' but '{b}' was requested"),
                ))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(cfg_err("experiment", "missing experiment name".into())),
        };
        let mut c = Self::defaults(kind);
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let loc = match section {
                    Some(s) => format!("[{s}] {key}"),
                    None => key.to_string(),
                };
                if !seen.insert(loc.clone()) {
                    return Err(cfg_err(&loc, "key given twice".into()));
                }
                entries.push((section, key, value, loc));
            }
        }
        // the image side resets size-derived defaults, so explicit n and
        // sigma must come after it
        entries.sort_by_key(|(section, key, _, _)| !(*section == Some("image") && *key == "side"));
        for (section, key, value, loc) in entries {
            c.set(section, key, value)
                .map_err(|e| cfg_err(&loc, e.to_string()))?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, section: Option<&str>, key: &str, value: &str) -> Result<()> {
        match (section, key) {
            (None, "experiment") => {}
            (None, "master_seed") => self.master_seed = num(value)?,
            (None, "trials") => self.trials = num(value)?,
            (None, "output_dir") => self.output_dir = PathBuf::from(value.trim()),
            (Some("problem"), "m") => self.m = num(value)?,
            (Some("problem"), "n") => self.n = num(value)?,
            (Some("problem"), "k") => self.k = num(value)?,
            (Some("problem"), "sigma") => self.sigma = list(value)?,
            (Some("problem"), "lambda") => self.lambda = num(value)?,
            (Some("problem"), "decay") => self.decay = num(value)?,
            (Some("problem"), "amplitude") => self.amplitude = num(value)?,
            (Some("ensemble"), "kind") => {
                self.ensemble = EnsembleKind::parse(value).ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown ensemble '{value}'"))
                })?
            }
            (Some("ensemble"), "normalize_columns") => self.normalize_columns = num(value)?,
            (Some("noise"), "kinds") => self.noise = list(value)?,
            (Some("noise"), "num_levels") => self.num_levels = num(value)?,
            (Some("solver"), "gap_tolerance") => self.solver.gap_tolerance = num(value)?,
            (Some("solver"), "max_newton_iters") => self.solver.max_newton_iters = num(value)?,
            (Some("solver"), "barrier_increase") => self.solver.barrier_increase = num(value)?,
            (Some("solver"), "cg_tolerance") => self.solver.cg_tolerance = num(value)?,
            (Some("solver"), "cg_max_iters") => self.solver.cg_max_iters = Some(num(value)?),
            (Some("solver"), "line_search_alpha") => self.solver.line_search_alpha = num(value)?,
            (Some("solver"), "line_search_beta") => self.solver.line_search_beta = num(value)?,
            (Some("image"), "source") => self.source = value.parse()?,
            (Some("image"), "side") => self.set_side(num(value)?),
            (Some("rip"), "s_max") => self.s_max = num(value)?,
            (Some("rip"), "subset_budget") => self.subset_budget = num(value)?,
            (Some("constants"), "delta") => self.delta = list(value)?,
            (Some("constants"), "ratio") => self.ratio = list(value)?,
            (Some(s), _) if !SECTIONS.contains(&s) => {
                return Err(Error::InvalidArgument(format!("unknown section [{s}]")))
            }
            _ => return Err(Error::InvalidArgument("unknown key".into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |loc: &str, msg: &str| Err(cfg_err(loc, msg.into()));
        if self.trials == 0 {
            return bad("trials", "trials must be >= 1");
        }
        if matches!(self.experiment, ExperimentKind::Table1 | ExperimentKind::Table2) {
            if self.sigma.is_empty() {
                return bad("[problem] sigma", "sigma list must not be empty");
            }
            if self.k == 0 || self.k > self.m {
                return bad("[problem] k", "k must lie in [1, m]");
            }
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad("[problem] sigma", "sigma values must be finite and >= 0");
        }
        if self.m == 0 || self.n == 0 {
            return bad("[problem] n", "m and n must be positive");
        }
        if !(self.lambda >= 0.0) {
            return bad("[problem] lambda", "lambda must be >= 0");
        }
        if self.experiment == ExperimentKind::Image {
            if self.side * self.side != self.m {
                return bad("[image] side", "m must equal side * side");
            }
            if self.noise.is_empty() {
                return bad("[noise] kinds", "need at least one noise kind");
            }
            if self.noise.contains(&NoiseChoice::Gaussian) && self.sigma.is_empty() {
                return bad("[problem] sigma", "gaussian noise needs a sigma");
            }
        }
        if self.experiment == ExperimentKind::Constants
            && (self.delta.is_empty() || self.ratio.is_empty() || self.ratio.contains(&0))
        {
            return bad("[constants]", "need nonempty delta and positive ratio lists");
        }
        if self.experiment == ExperimentKind::RipScan && self.s_max == 0 {
            return bad("[rip] s_max", "s_max must be >= 1");
        }
        self.solver
            .validate()
            .map_err(|e| cfg_err("[solver]", e.to_string()))
    }
}

const SECTIONS: [&str; 7] = ["problem", "ensemble", "noise", "solver", "image", "rip", "constants"];

fn cfg_err(location: &str, message: String) -> Error {
    Error::Config {
        location: location.into(),
        message,
    }
}

fn num<T: FromStr>(v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e: T::Err| Error::InvalidArgument(format!("cannot parse '{v}': {e}")))
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(num)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let c = ExperimentConfig::parse(
            "experiment = table2\ntrials = 3\n[problem]\nsigma = 0.1, 0.2\n[solver]\ngap_tolerance = 1e-6\n",
            None,
        )
        .unwrap();
        assert_eq!(c.experiment, ExperimentKind::Table2);
        assert_eq!(c.trials, 3);
        assert_eq!(c.sigma, vec![0.1, 0.2]);
        assert_eq!(c.solver.gap_tolerance, 1e-6);
        assert_eq!(c.n, 300);
    }

    #[test]
    fn unknown_and_repeated_keys_fail() {
        for text in [
            "experiment = table1\nbogus = 1\n",
            "experiment = table1\n[problem]\nsigmas = 0.1\n",
            "experiment = table1\n[extra]\nm = 3\n",
            "experiment = table1\n[problem]\nm = 3\nm = 4\n",
            "experiment = table1\n[problem]\nsigma = \n",
            "experiment = table9\n",
        ] {
            assert!(ExperimentConfig::parse(text, None).is_err(), "{text}");
        }
    }

    #[test]
    fn requested_kind_must_agree() {
        assert!(ExperimentConfig::parse("experiment = image\n", Some(ExperimentKind::Table1)).is_err());
        let c = ExperimentConfig::parse("[image]\nside = 32\n", Some(ExperimentKind::Image)).unwrap();
        assert_eq!((c.m, c.n), (1024, 390));
        let c = ExperimentConfig::parse(
            "[problem]\nn = 500\n[image]\nside = 32\n",
            Some(ExperimentKind::Image),
        )
        .unwrap();
        assert_eq!((c.m, c.n), (1024, 500));
        assert!(ExperimentConfig::parse("trials = 2\n", None).is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }
}
