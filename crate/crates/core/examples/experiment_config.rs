//! Experiments are driven by small key = value config files. This one
//! evaluates the stability constants on a grid and writes the CSV.

use stable_recovery::harness::config::ExperimentConfig;
use stable_recovery::harness::experiments::run_experiment;

const CONFIG: &str = "
experiment = constants
output_dir = out/example-constants

[problem]
k = 10

[constants]
delta = 0.1, 0.2, 0.25, 0.3
ratio = 2, 3, 4
";

fn main() -> stable_recovery::Result<()> {
    let config = ExperimentConfig::parse(CONFIG, None)?;
    for path in run_experiment(&config)? {
        println!("{}", path.display());
        print!("{}", std::fs::read_to_string(path)?);
    }
    Ok(())
}
