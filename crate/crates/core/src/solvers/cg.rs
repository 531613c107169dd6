use crate::error::Result;
use crate::vector::{axpy, dot, norm2};

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` of the returned iterate.
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator, with an optional Jacobi preconditioner given as the inverse
/// diagonal. Returns the iterate with the smallest residual seen.
pub fn pcg<F>(
    apply: F,
    b: &[f64],
    inv_diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let precondition = |r: &[f64]| -> Vec<f64> {
        match inv_diag {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        }
    };
    pcg_with(apply, precondition, b, tol, max_iter)
}

/// As [`pcg`], with the preconditioner given as the map `r -> M^{-1} r`.
pub(crate) fn pcg_with<F, P>(
    mut apply: F,
    precondition: P,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let len = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; len],
            iterations: 0,
            rel_residual: 0.0,
        });
    }

    let mut x = vec![0.0; len];
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best_x = x.clone();
    let mut best_res = 1.0;
    let mut iterations = 0;

    for it in 1..=max_iter {
        iterations = it;
        let q = apply(&p)?;
        let pq = dot(&p, &q);
        if !(pq > 0.0) || !pq.is_finite() {
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        // recompute the true residual now and then to limit drift
        if it % 50 == 0 {
            let ax = apply(&x)?;
            for (ri, (bi, axi)) in r.iter_mut().zip(b.iter().zip(&ax)) {
                *ri = bi - axi;
            }
        } else {
            axpy(-alpha, &q, &mut r);
        }
        let res = norm2(&r) / bnorm;
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if res <= tol {
            break;
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(CgOutcome {
        x: best_x,
        iterations,
        rel_residual: best_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, -1.0, 2.0]];
        let b = [1.0, 2.0, 3.0];
        let apply = |v: &[f64]| -> Result<Vec<f64>> {
            Ok((0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect())
        };
        let out = pcg(apply, &b, None, 1e-14, 10).unwrap();
        let ax = apply(&out.x).unwrap();
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
        let inv = [0.25, 1.0 / 3.0, 0.5];
        let out2 = pcg(apply, &b, Some(&inv), 1e-14, 10).unwrap();
        for (u, v) in out.x.iter().zip(&out2.x) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
