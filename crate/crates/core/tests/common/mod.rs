//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use stable_recovery::linops::{DenseMatrix, IndexSet, MeasurementOperator};
use stable_recovery::rng::{stream, Purpose};
use stable_recovery::vector::dot;

pub fn gaussian_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Purpose::Probe);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `<A x, u> - <x, A^T u>` relative to `||A|| ||x|| ||u||`, with `||A||`
/// estimated from the forward image.
pub fn adjoint_mismatch(a: &MeasurementOperator, seed: u64) -> f64 {
    let x = gaussian_vec(a.cols(), seed);
    let u = gaussian_vec(a.rows(), seed.wrapping_add(1));
    let ax = a.forward(&x).unwrap();
    let atu = a.adjoint(&u).unwrap();
    let lhs = dot(&ax, &u);
    let rhs = dot(&x, &atu);
    let scale = stable_recovery::vector::norm2(&ax) * stable_recovery::vector::norm2(&u)
        + stable_recovery::vector::norm2(&x) * stable_recovery::vector::norm2(&atu);
    (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE)
}

pub fn to_nalgebra(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j))
}

/// Every subset of `0..m` with at most `max_len` elements, including the
/// empty one.
pub fn subsets(m: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l: &usize| l + 1);
            for j in start..m {
                let mut t = s.clone();
                t.push(j);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Minimum of `||x||_1` subject to `||A x - y|| <= eps`, by enumerating
/// supports and sign patterns.
///
/// On a support `T` with signs `s`, stationarity gives
/// `x_T = x_ls - t G^{-1} s` with `G = A_T^T A_T`; the residual splits into
/// the least-squares residual and an orthogonal part, so `||A x - y|| = eps`
/// fixes `t`. Every candidate built this way is feasible, and some minimizer
/// has linearly independent columns, so the smallest candidate l1 norm is the
/// optimum.
pub fn bpdn_brute_force(a: &DenseMatrix, y: &[f64], eps: f64) -> f64 {
    let (n, m) = (a.rows(), a.cols());
    let yv = DVector::from_column_slice(y);
    if yv.norm() <= eps {
        return 0.0;
    }
    let full = to_nalgebra(a);
    let mut best = f64::INFINITY;
    for t in subsets(m, n) {
        if t.is_empty() {
            continue;
        }
        let at = full.select_columns(&t);
        let g = at.transpose() * &at;
        let Some(ginv) = g.clone().try_inverse() else {
            continue;
        };
        // skip numerically rank deficient supports
        let sv = g.singular_values();
        if sv.min() < 1e-10 * sv.max() {
            continue;
        }
        let x_ls = &ginv * (at.transpose() * &yv);
        let r_ls = &at * &x_ls - &yv;
        let slack = eps * eps - r_ls.norm_squared();
        if slack < 0.0 {
            continue;
        }
        for pattern in 0..(1u32 << t.len()) {
            let s = DVector::from_fn(t.len(), |i, _| {
                if pattern >> i & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            });
            let gs = &ginv * &s;
            let t_step = (slack / s.dot(&gs)).sqrt();
            let x = &x_ls - gs * t_step;
            best = best.min(x.iter().map(|v| v.abs()).sum());
        }
    }
    best
}

/// Least squares on the support by a QR factorization.
pub fn ls_on_support(a: &DenseMatrix, y: &[f64], t: &IndexSet) -> Vec<f64> {
    let at = to_nalgebra(a).select_columns(t.as_slice());
    let qr = at.qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let coef = qr.r().solve_upper_triangular(&qty).unwrap();
    let mut x = vec![0.0; a.cols()];
    for (k, &j) in t.as_slice().iter().enumerate() {
        x[j] = coef[k];
    }
    x
}
