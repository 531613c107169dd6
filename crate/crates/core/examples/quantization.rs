//! Uniform quantization as a deterministic perturbation, and the noise
//! bound that covers it.

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::noisemodel::{apply_noise, NoiseSpec, Quantizer};
use stable_recovery::signals::gen_sparse_spikes;

fn main() -> stable_recovery::Result<()> {
    let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, 300, 1024, 7))?;
    let y = a.forward(&gen_sparse_spikes(1024, 50, 11)?)?;
    let q = Quantizer::spanning(&y, 10)?;
    println!("levels {:.3} .. {:.3}, step {:.3}", q.level(0), q.level(9), q.step);

    let noisy = apply_noise(&y, &NoiseSpec::quantize(10))?;
    let e_norm = noisy.e.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("||e|| = {e_norm:.3} <= eps = {:.3}", noisy.epsilon);
    Ok(())
}
