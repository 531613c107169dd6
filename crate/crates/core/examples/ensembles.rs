//! The measurement ensembles side by side: adjoint consistency, column
//! norms, and the coherence of the orthonormal bases they subsample.

use stable_recovery::ensembles::{coherence, generate, random_orthonormal, EnsembleKind, EnsembleSpec};
use stable_recovery::linops::DenseMatrix;
use stable_recovery::vector::dot;

fn main() -> stable_recovery::Result<()> {
    let (n, m) = (64, 256);
    let x: Vec<f64> = (0..m).map(|i| (i as f64 * 0.37).sin()).collect();
    let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
    for kind in [
        EnsembleKind::GaussianIid,
        EnsembleKind::BinaryPm,
        EnsembleKind::PartialFourier,
        EnsembleKind::ScrambledFourier,
        EnsembleKind::RowSubsampledOrthogonal,
    ] {
        let a = generate(&EnsembleSpec::new(kind, n, m, 1))?;
        // <A x, u> = <x, A* u>
        let gap = (dot(&a.forward(&x)?, &u) - dot(&x, &a.adjoint(&u)?)).abs();
        let norms = a.gram_diagonal();
        let mean = norms.iter().sum::<f64>() / m as f64;
        println!("{:<18} adjoint gap {gap:.1e}, mean ||a_j||^2 {mean:.3}", kind.name());
    }

    // spikes are maximally coherent, a random rotation nearly incoherent
    println!("mu(identity) = {:.2}", coherence(&DenseMatrix::identity(m))?.mu);
    println!("mu(random)   = {:.2}", coherence(&random_orthonormal(m, 2)?)?.mu);
    Ok(())
}
