//! Restricted isometry constants by brute force on a small matrix, the two
//! recovery conditions, and the constants of the error bounds.

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::rip::{
    check_exact_condition, check_stable_condition, stability_constants, RipReport,
    DEFAULT_SUBSET_BUDGET,
};

fn main() -> stable_recovery::Result<()> {
    let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, 10, 20, 4).normalized())?;
    let report = RipReport::exhaustive(&a, 1..=4, DEFAULT_SUBSET_BUDGET)?;
    report.write_csv(std::io::stdout())?;
    println!("exact condition at S = 1: {}", check_exact_condition(&report, 1)?);
    println!("stable condition at S = 1: {}", check_stable_condition(&report, 1)?);

    // the bound constants for M = 3 |T0|
    for delta in [0.2, 0.25] {
        let c = stability_constants(50, 150, delta, delta);
        println!(
            "delta = {delta}: C_S = {:.2}, C1_S = {:.2}, C2_S = {:.2}",
            c.c_s, c.c1_s, c.c2_s
        );
    }
    Ok(())
}
