//! Invariants that must hold for every input, checked with proptest.

mod common;

use std::sync::Arc;

use proptest::prelude::*;

use common::{adjoint_mismatch, gaussian_vec};
use stable_recovery::ensembles::{generate, random_orthonormal, EnsembleKind, EnsembleSpec};
use stable_recovery::harness::fmt_sig;
use stable_recovery::linops::{compose, Gradient2D, IdentityTransform, MeasurementOperator};
use stable_recovery::noisemodel::{apply_noise, NoiseSpec};
use stable_recovery::rip::{delta_exhaustive, stability_constants};
use stable_recovery::signals::{approx_errors, gen_compressible, gen_sparse_spikes, top_k};
use stable_recovery::solvers::{l1_norm, solve, tv_norm, RecoveryProblem, SolverOptions};
use stable_recovery::vector::{dist2, norm1, norm2, sub};
use stable_recovery::wavelets::WaveletTransform;

const KINDS: [EnsembleKind; 5] = [
    EnsembleKind::GaussianIid,
    EnsembleKind::BinaryPm,
    EnsembleKind::PartialFourier,
    EnsembleKind::ScrambledFourier,
    EnsembleKind::RowSubsampledOrthogonal,
];

fn ensemble() -> impl Strategy<Value = (EnsembleKind, usize, usize, u64, bool)> {
    (0..KINDS.len(), 2usize..48, 1usize..48, any::<u64>(), any::<bool>()).prop_map(
        |(k, m, n, seed, norm)| (KINDS[k], n.min(m), m, seed, norm),
    )
}

fn op((kind, n, m, seed, norm): (EnsembleKind, usize, usize, u64, bool)) -> MeasurementOperator {
    let mut spec = EnsembleSpec::new(kind, n, m, seed);
    spec.normalize_columns = norm;
    generate(&spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_is_consistent(e in ensemble(), probe in any::<u64>()) {
        prop_assert!(adjoint_mismatch(&op(e), probe) < 1e-10);
    }

    #[test]
    fn operators_are_linear(e in ensemble(), probe in any::<u64>(), alpha in -3.0f64..3.0) {
        let a = op(e);
        let x = gaussian_vec(a.cols(), probe);
        let z = gaussian_vec(a.cols(), probe ^ 1);
        let mix: Vec<f64> = x.iter().zip(&z).map(|(p, q)| alpha * p + q).collect();
        let lhs = a.forward(&mix).unwrap();
        let (ax, az) = (a.forward(&x).unwrap(), a.forward(&z).unwrap());
        let rhs: Vec<f64> = ax.iter().zip(&az).map(|(p, q)| alpha * p + q).collect();
        prop_assert!(dist2(&lhs, &rhs) <= 1e-10 * (1.0 + norm2(&rhs)));
    }

    #[test]
    fn materialized_operator_agrees(e in ensemble(), probe in any::<u64>()) {
        let a = op(e);
        let d: MeasurementOperator = a.materialize().unwrap().into();
        let x = gaussian_vec(a.cols(), probe);
        let (p, q) = (a.forward(&x).unwrap(), d.forward(&x).unwrap());
        prop_assert!(dist2(&p, &q) <= 1e-10 * (1.0 + norm2(&q)));
        let diag = a.gram_diagonal();
        for (g, c) in diag.iter().zip(d.materialize().unwrap().column_norms_sq()) {
            prop_assert!((g - c).abs() < 1e-10);
        }
    }

    #[test]
    fn normalized_columns_have_unit_norm(e in ensemble()) {
        let a = op((e.0, e.1, e.2, e.3, true));
        for c in a.materialize().unwrap().column_norms_sq() {
            prop_assert!((c - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_adjoint(h in 1usize..20, w in 1usize..20, probe in any::<u64>()) {
        let g: MeasurementOperator = Gradient2D::new(h, w).unwrap().into();
        prop_assert!(adjoint_mismatch(&g, probe) < 1e-10);
    }

    #[test]
    fn composed_adjoint(side_log in 3u32..6, n in 4usize..60, seed in any::<u64>(), probe in any::<u64>()) {
        let side = 1usize << side_log;
        let wt = WaveletTransform::image(side, WaveletTransform::default_levels(side)).unwrap();
        let outer = generate(&EnsembleSpec::new(EnsembleKind::ScrambledFourier, n, side * side, seed)).unwrap();
        let c = compose(outer, Arc::new(wt)).unwrap();
        prop_assert!(adjoint_mismatch(&c, probe) < 1e-10);

        let outer = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, n, 64, seed)).unwrap();
        let c = compose(outer, Arc::new(IdentityTransform(64))).unwrap();
        prop_assert!(adjoint_mismatch(&c, probe) < 1e-10);
    }

    #[test]
    fn dwt_is_orthonormal(len_log in 3u32..12, lv in 1usize..9, probe in any::<u64>()) {
        let len = 1usize << len_log;
        let levels = lv.min(WaveletTransform::default_levels(len).max(1));
        let wt = WaveletTransform::signal(len, levels).unwrap();
        let x = gaussian_vec(len, probe);
        let alpha = wt.dwt(&x).unwrap();
        prop_assert!((norm2(&alpha) - norm2(&x)).abs() <= 1e-10 * norm2(&x));
        prop_assert!(dist2(&wt.idwt(&alpha).unwrap(), &x) <= 1e-10 * norm2(&x));
        // the inverse is the adjoint
        let beta = gaussian_vec(len, probe ^ 7);
        let lhs = stable_recovery::vector::dot(&alpha, &beta);
        let rhs = stable_recovery::vector::dot(&x, &wt.idwt(&beta).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * norm2(&x) * norm2(&beta));
    }

    #[test]
    fn image_dwt_is_orthonormal(side_log in 3u32..7, probe in any::<u64>()) {
        let side = 1usize << side_log;
        let wt = WaveletTransform::image(side, WaveletTransform::default_levels(side)).unwrap();
        let x = gaussian_vec(side * side, probe);
        let alpha = wt.dwt(&x).unwrap();
        prop_assert!((norm2(&alpha) - norm2(&x)).abs() <= 1e-10 * norm2(&x));
        prop_assert!(dist2(&wt.idwt(&alpha).unwrap(), &x) <= 1e-10 * norm2(&x));
    }

    #[test]
    fn delta_is_monotone_in_s(n in 3usize..8, m in 4usize..11, seed in any::<u64>()) {
        let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, n, m, seed).normalized()).unwrap();
        let mut prev = 0.0;
        for s in 1..=m.min(5) {
            let d = delta_exhaustive(&a, s).unwrap();
            prop_assert!(d + 1e-12 >= prev, "delta_{s} = {d} < {prev}");
            prev = d;
        }
    }

    #[test]
    fn delta_vanishes_on_orthonormal_columns(m in 2usize..10, seed in any::<u64>()) {
        let q: MeasurementOperator = random_orthonormal(m, seed).unwrap().into();
        for s in 1..=m.min(4) {
            prop_assert!(delta_exhaustive(&q, s).unwrap() < 1e-10);
        }
    }

    #[test]
    fn constants_grow_with_delta_and_shrink_with_block_size(
        t0 in 1usize..60, ratio in 2usize..6, d1 in 0.0f64..0.3, dd in 0.0f64..0.05,
    ) {
        let lo = stability_constants(t0, ratio * t0, d1, d1);
        let hi = stability_constants(t0, ratio * t0, d1 + dd, d1 + dd);
        prop_assume!(hi.is_valid());
        prop_assert!(hi.c_s >= lo.c_s - 1e-12);
        prop_assert!(hi.c1_s >= lo.c1_s - 1e-12);
        let wide = stability_constants(t0, (ratio + 1) * t0, d1, d1);
        prop_assert!(wide.c_s <= lo.c_s + 1e-12);
        // 1 + sqrt(rho) >= sqrt(1 + rho)
        prop_assert!(lo.c1_s >= lo.c_s - 1e-12);
    }

    #[test]
    fn tails_and_top_k(m in 1usize..200, s in 1usize..50, seed in any::<u64>()) {
        let s = s.min(m);
        let x = gen_compressible(m, 1.25, 2.0, seed).unwrap();
        let (kept, t) = top_k(&x, s).unwrap();
        prop_assert_eq!(t.len(), s);
        let tails = approx_errors(&x, s).unwrap();
        prop_assert!(tails.l2_tail <= tails.l1_tail + 1e-15);
        prop_assert!((tails.l1_tail - norm1(&sub(&x, &kept))).abs() < 1e-12);
        // every dropped entry is no larger than every kept one
        let min_kept = t.as_slice().iter().map(|&i| x[i].abs()).fold(f64::INFINITY, f64::min);
        let max_dropped = t.complement().as_slice().iter().map(|&i| x[i].abs()).fold(0.0, f64::max);
        prop_assert!(max_dropped <= min_kept);
    }

    #[test]
    fn quantization_error_is_within_half_a_step(n in 2usize..200, levels in 2usize..40, probe in any::<u64>()) {
        let y = gaussian_vec(n, probe);
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let nz = apply_noise(&y, &NoiseSpec::quantize(levels)).unwrap();
        let q = nz.q.unwrap();
        prop_assert!(nz.e.iter().all(|e| e.abs() <= q / 2.0 * (1.0 + 1e-12)));
    }

    #[test]
    fn fmt_sig_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let back: f64 = fmt_sig(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-11 * v.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bpdn_invariants(n in 6usize..14, extra in 4usize..14, k in 1usize..4, seed in any::<u64>(), sigma in 0.001f64..0.2) {
        let m = n + extra;
        let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, n, m, seed)).unwrap();
        let x0 = gen_sparse_spikes(m, k.min(n / 2), seed).unwrap();
        let clean = a.forward(&x0).unwrap();
        let nz = apply_noise(&clean, &NoiseSpec::gaussian(sigma, seed)).unwrap();
        let opts = SolverOptions::default();
        let res = solve(&RecoveryProblem::l1(&a, nz.y_noisy.clone(), nz.epsilon), &opts).unwrap();
        prop_assert!(res.converged, "{}", res.message);
        let tol = 1e-6;
        prop_assert!(res.residual_norm <= nz.epsilon * (1.0 + tol));
        prop_assert!((l1_norm(&res.x_sharp) - res.objective_value).abs() <= tol * (1.0 + res.objective_value));

        if norm2(&nz.e) <= nz.epsilon {
            let h = sub(&res.x_sharp, &x0);
            let ah = a.forward(&h).unwrap();
            prop_assert!(norm2(&ah) <= 2.0 * nz.epsilon * (1.0 + tol));
            // x0 is feasible, so it cannot beat the minimizer
            prop_assert!(res.objective_value <= norm1(&x0) * (1.0 + tol));
            let (on, off): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
                h.iter().copied().enumerate().partition(|(i, _)| x0[*i] != 0.0);
            let l1 = |v: &[(usize, f64)]| v.iter().map(|(_, x)| x.abs()).sum::<f64>();
            prop_assert!(l1(&off) <= l1(&on) + tol * (1.0 + norm1(&x0)));
        }

        // a wider tube can only lower the optimum
        let wider = solve(&RecoveryProblem::l1(&a, nz.y_noisy.clone(), 1.5 * nz.epsilon + 1e-3), &opts).unwrap();
        prop_assert!(wider.objective_value <= res.objective_value * (1.0 + tol) + tol);

        // scaling the data and the radius scales the solution
        let c = 3.7;
        let y_scaled: Vec<f64> = nz.y_noisy.iter().map(|v| c * v).collect();
        let scaled = solve(&RecoveryProblem::l1(&a, y_scaled, c * nz.epsilon), &opts).unwrap();
        prop_assert!((scaled.objective_value - c * res.objective_value).abs() <= 1e-6 * c * (1.0 + res.objective_value));
    }

    #[test]
    fn tv_norm_matches_definition(h in 1usize..12, w in 1usize..12, probe in any::<u64>()) {
        let x = gaussian_vec(h * w, probe);
        let mut want = 0.0;
        for i in 0..h {
            for j in 0..w {
                let here = x[i * w + j];
                let dv = if i + 1 < h { x[(i + 1) * w + j] - here } else { 0.0 };
                let dh = if j + 1 < w { x[i * w + j + 1] - here } else { 0.0 };
                want += (dv * dv + dh * dh).sqrt();
            }
        }
        prop_assert!((tv_norm(&x, h, w).unwrap() - want).abs() <= 1e-12 * (1.0 + want));
    }
}
