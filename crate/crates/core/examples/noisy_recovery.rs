//! Basis pursuit denoising under white noise, next to the least-squares
//! oracle that knows the support.

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::noisemodel::{apply_noise, NoiseSpec};
use stable_recovery::signals::{gen_sparse_spikes, top_k};
use stable_recovery::solvers::{oracle_ls, solve_bpdn, RecoveryProblem, SolverOptions};
use stable_recovery::vector::{dist2, norm2};

fn main() -> stable_recovery::Result<()> {
    let (n, m, k) = (300, 1024, 50);
    let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, n, m, 7))?;
    let x0 = gen_sparse_spikes(m, k, 11)?;
    let (_, support) = top_k(&x0, k)?;

    println!("sigma    eps     ||e||   error   oracle");
    for (i, sigma) in [0.01, 0.05, 0.2].into_iter().enumerate() {
        let noisy = apply_noise(&a.forward(&x0)?, &NoiseSpec::gaussian(sigma, 100 + i as u64))?;
        let problem = RecoveryProblem::l1(&a, noisy.y_noisy.clone(), noisy.epsilon);
        let res = solve_bpdn(&problem, &SolverOptions::default())?;
        let oracle = oracle_ls(&a, &noisy.y_noisy, &support)?;
        println!(
            "{sigma:<8} {:.3}  {:.3}  {:.3}   {:.3}",
            noisy.epsilon,
            norm2(&noisy.e),
            dist2(&res.x_sharp, &x0),
            dist2(&oracle, &x0)
        );
    }
    Ok(())
}
