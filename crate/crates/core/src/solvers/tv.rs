//! Total-variation recovery `min TV(x)  s.t.  ||A x - y|| <= eps` as a
//! second-order cone program, solved by a Mehrotra predictor-corrector
//! interior point method with Nesterov-Todd scaling.
//!
//! Variables are the image `x` and one epigraph height `u_k` per pixel.
//! Cone slacks are `s_k = (u_k, dv_k, dh_k)` in `Q^3` and
//! `s_r = (eps, A x - y)` in `Q^{n+1}`, with duals `l_k` and `l_r`. After the
//! heights are eliminated the Newton system in `x` is
//! `H = sum_k D_k^T S_k D_k + A^T T A`: a banded part with half-bandwidth
//! equal to the image width plus a rank-`n` part. Moderate sizes solve it
//! exactly through the Woodbury identity; larger ones use CG preconditioned
//! by the banded part.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::banded::{BandCholesky, SymBand};
use super::soc::{self, NtScaling};
use super::{pcg, IterationRecord, Objective, RecoveryProblem, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::linops::{Gradient2D, MeasurementOperator};
use crate::vector::{dot, norm2, sub};

const MAX_ITERS: usize = 150;
const FEASIBILITY_TOL: f64 = 1e-9;
const STEP_FRACTION: f64 = 0.99;
/// Relative radius used in place of a requested `eps = 0`.
const EPSILON_FLOOR: f64 = 1e-8;
/// Largest `n * m` for which `A` is materialized and the Woodbury path used.
const DENSE_LIMIT: usize = 1 << 25;
const REFINEMENT_STEPS: usize = 2;

struct Iterate {
    x: Vec<f64>,
    u: Vec<f64>,
    s: Vec<[f64; 3]>,
    l: Vec<[f64; 3]>,
    sr: Vec<f64>,
    lr: Vec<f64>,
}

struct Residuals {
    /// `s_k - (u_k, D_k x)`.
    rp: Vec<[f64; 3]>,
    /// `s_r - (eps, A x - y)`.
    rpr: Vec<f64>,
    /// `1 - l_k0`.
    rdu: Vec<f64>,
    /// `-D^T l_k[1..] - A^T l_r[1..]`.
    rdx: Vec<f64>,
    r: Vec<f64>,
}

/// Per-cone data fixed for one iteration.
struct Scalings {
    pixel: Vec<NtScaling>,
    /// `W_k^{-2}` for each pixel cone.
    t: Vec<[[f64; 3]; 3]>,
    lam: Vec<[f64; 3]>,
    resid: NtScaling,
    lam_r: Vec<f64>,
}

struct Direction {
    dx: Vec<f64>,
    du: Vec<f64>,
    ds: Vec<[f64; 3]>,
    dl: Vec<[f64; 3]>,
    dsr: Vec<f64>,
    dlr: Vec<f64>,
}

fn arr3(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn project_out_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|t| *t -= mean);
}

/// Everything about `A` that stays fixed across iterations.
struct Measurements<'a> {
    a: &'a MeasurementOperator,
    /// `A` and `A^T` when small enough to hold densely.
    dense: Option<(DMatrix<f64>, DMatrix<f64>)>,
    /// `A 1 / sqrt(m)`; `None` when the constant image is invisible to `A`.
    g: Option<Vec<f64>>,
}

impl<'a> Measurements<'a> {
    fn new(a: &'a MeasurementOperator, dense_limit: usize) -> Result<Self> {
        let (n, m) = (a.rows(), a.cols());
        let dense = if n * m <= dense_limit {
            let d = a.materialize()?;
            let amat = DMatrix::from_row_slice(n, m, d.data());
            let at = amat.transpose();
            Some((amat, at))
        } else {
            None
        };
        let frob: f64 = a.gram_diagonal().iter().sum::<f64>().sqrt();
        let u = vec![1.0 / (m as f64).sqrt(); m];
        let g = a.forward(&u)?;
        let g = (norm2(&g) > 1e-9 * frob).then_some(g);
        Ok(Self {
            a,
            dense,
            g,
        })
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.dense {
            Some((amat, _)) => Ok((amat * DVector::from_column_slice(x)).as_slice().to_vec()),
            None => self.a.forward(x),
        }
    }

    fn adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        match &self.dense {
            Some((_, at)) => Ok((at * DVector::from_column_slice(v)).as_slice().to_vec()),
            None => self.a.adjoint(v),
        }
    }
}

/// The Newton system of one iteration with the pixel cones and heights
/// eliminated. Unknowns are the image step `dx` and the residual-cone dual
/// step `mu`; `dx` is eliminated in turn through the banded part `B`, which
/// leaves the `(n + 1)`-square system `K = W_r^2 + diag(0, A B^+ A^T)`,
/// bordered by the constant image when `A` sees it. Keeping `mu` explicit
/// avoids `W_r^{-2}`, which blows up as the residual cone tightens.
struct NewtonSystem<'m, 'a> {
    meas: &'m Measurements<'a>,
    chol: BandCholesky,
    resid: &'m NtScaling,
    /// Dense Cholesky of `K` when `A` is held densely; CG on `K` otherwise.
    k_chol: Option<Cholesky<f64, Dyn>>,
    /// `K^{-1} g_hat` and `g_hat^T K^{-1} g_hat`, with `g_hat = (0, g)`.
    border: Option<(Vec<f64>, f64)>,
    cg_tol: f64,
    cg_max: usize,
    cg_iterations: usize,
}

impl<'m, 'a> NewtonSystem<'m, 'a> {
    fn new(
        meas: &'m Measurements<'a>,
        band: SymBand,
        resid: &'m NtScaling,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let n = meas.a.rows();
        let max_diag = band.diagonal().iter().cloned().fold(0.0, f64::max);
        let mut shifted = band;
        // B is singular along the constant image, which every solve
        // projects out; the shift only lets the factorization exist
        shifted.add_diagonal(1e-13 * max_diag.max(f64::MIN_POSITIVE));
        let chol = shifted.cholesky()?;
        let mut sys = Self {
            meas,
            chol,
            resid,
            k_chol: None,
            border: None,
            cg_tol: opts.cg_tolerance.min(1e-12),
            cg_max: opts.cg_limit(n + 1).max(10 * n),
            cg_iterations: 0,
        };
        if let Some((_, at)) = &meas.dense {
            let mut z = at.clone();
            for mut col in z.column_iter_mut() {
                let c = col.as_mut_slice();
                project_out_mean(c);
                sys.chol.forward_solve(c);
            }
            let zz = z.transpose() * &z;
            let mut k = DMatrix::zeros(n + 1, n + 1);
            k.view_mut((1, 1), (n, n)).copy_from(&zz);
            for j in 0..=n {
                let mut e = vec![0.0; n + 1];
                e[j] = 1.0;
                let col = resid.apply_sq(&e);
                for (i, v) in col.iter().enumerate() {
                    k[(i, j)] += v;
                }
            }
            sys.k_chol = Some(factor_with_ridge(k)?);
        }
        if let Some(g) = &meas.g {
            let mut gh = vec![0.0; n + 1];
            gh[1..].copy_from_slice(g);
            let kg = sys.k_solve(&gh)?;
            let gkg = dot(&gh, &kg);
            sys.border = Some((kg, gkg));
        }
        Ok(sys)
    }

    /// `B^+ v`, inverting `B` on the complement of the constant image.
    fn band_pinv(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        project_out_mean(&mut w);
        self.chol.forward_solve(&mut w);
        self.chol.backward_solve(&mut w);
        project_out_mean(&mut w);
        w
    }

    fn k_apply(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.resid.apply_sq(mu);
        let t = self.band_pinv(&self.meas.adjoint(&mu[1..])?);
        for (o, v) in out[1..].iter_mut().zip(self.meas.forward(&t)?) {
            *o += v;
        }
        Ok(out)
    }

    fn k_solve(&mut self, b: &[f64]) -> Result<Vec<f64>> {
        if let Some(kc) = &self.k_chol {
            let mut x = kc.solve(&DVector::from_column_slice(b)).as_slice().to_vec();
            for _ in 0..REFINEMENT_STEPS {
                let r = sub(b, &self.k_apply(&x)?);
                let dx = kc.solve(&DVector::from_column_slice(&r));
                x.iter_mut().zip(dx.iter()).for_each(|(a, d)| *a += d);
            }
            return Ok(x);
        }
        let out = pcg(|v| self.k_apply(v), b, None, self.cg_tol, self.cg_max)?;
        self.cg_iterations += out.iterations;
        if out.rel_residual > 1e-3 {
            return Err(Error::Singular(format!(
                "CG on the TV Newton system stalled at relative residual {:.3e}",
                out.rel_residual
            )));
        }
        Ok(out.x)
    }

    /// Solves `B dx - A^T mu[1..] = rhs_x`, `W_r^2 mu + (0, A dx) = q_r`.
    fn solve(&mut self, rhs_x: &[f64], q_r: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = rhs_x.len();
        let root_m = (m as f64).sqrt();
        let brhs = self.band_pinv(rhs_x);
        let abr = self.meas.forward(&brhs)?;
        let mut b = q_r.to_vec();
        b[1..].iter_mut().zip(&abr).for_each(|(v, t)| *v -= t);
        let mut mu = self.k_solve(&b)?;
        let mut c = 0.0;
        if let Some((kg, gkg)) = &self.border {
            let rho = rhs_x.iter().sum::<f64>() / root_m;
            let g = self.meas.g.as_ref().expect("border implies g");
            c = (dot(&g[..], &mu[1..]) + rho) / gkg;
            mu.iter_mut().zip(kg).for_each(|(v, t)| *v -= c * t);
        }
        let corr = self.band_pinv(&self.meas.adjoint(&mu[1..])?);
        let dx = brhs
            .iter()
            .zip(&corr)
            .map(|(a, b)| a + b + c / root_m)
            .collect();
        Ok((dx, mu))
    }
}

fn factor_with_ridge(mut mat: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let max_diag = mat.diagonal().max();
    let mut ridge = 0.0;
    let mut next = 1e-15 * max_diag;
    while next <= 1e-6 * max_diag {
        if let Some(c) = Cholesky::new(mat.clone()) {
            return Ok(c);
        }
        for i in 0..mat.nrows() {
            mat[(i, i)] += next - ridge;
        }
        ridge = next;
        next *= 100.0;
    }
    Err(Error::Singular("capacitance matrix could not be factored".into()))
}

struct Tv<'m, 'a> {
    meas: &'m Measurements<'a>,
    grad: Gradient2D,
    y: &'a [f64],
    epsilon: f64,
}

impl Tv<'_, '_> {
    fn residuals(&self, it: &Iterate) -> Result<Residuals> {
        let (dv, dh) = self.grad.diffs(&it.x)?;
        let r = sub(&self.meas.a.forward(&it.x)?, self.y);
        let rp = (0..it.x.len())
            .map(|k| {
                let s = it.s[k];
                [s[0] - it.u[k], s[1] - dv[k], s[2] - dh[k]]
            })
            .collect();
        let mut rpr = Vec::with_capacity(r.len() + 1);
        rpr.push(it.sr[0] - self.epsilon);
        rpr.extend(it.sr[1..].iter().zip(&r).map(|(s, ri)| s - ri));
        let rdu = it.l.iter().map(|l| 1.0 - l[0]).collect();
        let p: Vec<f64> = it.l.iter().map(|l| l[1]).collect();
        let q: Vec<f64> = it.l.iter().map(|l| l[2]).collect();
        let dtl = self.grad.adjoint_diffs(&p, &q)?;
        let atl = self.meas.a.adjoint(&it.lr[1..])?;
        let rdx = dtl.iter().zip(&atl).map(|(a, b)| -a - b).collect();
        Ok(Residuals {
            rp,
            rpr,
            rdu,
            rdx,
            r,
        })
    }

    fn scalings(&self, it: &Iterate) -> Option<Scalings> {
        let count = it.x.len();
        let mut pixel = Vec::with_capacity(count);
        let mut t = Vec::with_capacity(count);
        let mut lam = Vec::with_capacity(count);
        for k in 0..count {
            let nt = NtScaling::new(&it.s[k], &it.l[k])?;
            let jw = nt.jw();
            let ie2 = 1.0 / (nt.eta * nt.eta);
            let mut tk = [[0.0; 3]; 3];
            for (i, row) in tk.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = ie2 * 2.0 * jw[i] * jw[j];
                }
                row[i] += if i == 0 { -ie2 } else { ie2 };
            }
            t.push(tk);
            lam.push(arr3(&nt.apply(&it.l[k])));
            pixel.push(nt);
        }
        let resid = NtScaling::new(&it.sr, &it.lr)?;
        let lam_r = resid.apply(&it.lr);
        Some(Scalings {
            pixel,
            t,
            lam,
            resid,
            lam_r,
        })
    }

    /// `sum_k D_k^T S_k D_k` with `S_k` the Schur complement of the height.
    fn banded_part(&self, sc: &Scalings) -> SymBand {
        let (h, w) = (self.grad.height(), self.grad.width());
        let mut band = SymBand::zeros(h * w, w);
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                let t = &sc.t[k];
                let svv = t[1][1] - t[1][0] * t[0][1] / t[0][0];
                let shh = t[2][2] - t[2][0] * t[0][2] / t[0][0];
                let svh = t[1][2] - t[1][0] * t[0][2] / t[0][0];
                // D_k restricted to pixels (k, k + 1, k + w)
                let idx = [k, k + 1, k + w];
                let dv = if i + 1 < h { [-1.0, 0.0, 1.0] } else { [0.0; 3] };
                let dh = if j + 1 < w { [-1.0, 1.0, 0.0] } else { [0.0; 3] };
                for a in 0..3 {
                    for b in 0..3 {
                        if idx[a] < idx[b] {
                            continue;
                        }
                        let val = svv * dv[a] * dv[b]
                            + shh * dh[a] * dh[b]
                            + svh * (dv[a] * dh[b] + dh[a] * dv[b]);
                        if val != 0.0 {
                            band.add(idx[a], idx[b], val);
                        }
                    }
                }
            }
        }
        band
    }

    fn direction(
        &self,
        sys: &mut NewtonSystem<'_, '_>,
        sc: &Scalings,
        res: &Residuals,
        rc: &[[f64; 3]],
        rcr: &[f64],
    ) -> Result<Direction> {
        let count = rc.len();
        let mut f = Vec::with_capacity(count);
        for k in 0..count {
            let nt = &sc.pixel[k];
            let wvk = nt.apply(&soc::jdiv(&sc.lam[k], nt.det_lambda, &rc[k]));
            let q: Vec<f64> = (0..3).map(|i| wvk[i] + res.rp[k][i]).collect();
            f.push(arr3(&nt.apply_inv_sq(&q)));
        }
        let wvr = sc.resid.apply(&soc::jdiv(&sc.lam_r, sc.resid.det_lambda, rcr));
        let qr: Vec<f64> = wvr.iter().zip(&res.rpr).map(|(a, b)| a + b).collect();

        // right-hand side in (u, x), then eliminate u
        let rhs_u: Vec<f64> = (0..count).map(|k| -res.rdu[k] + f[k][0]).collect();
        let p: Vec<f64> = f.iter().map(|t| t[1]).collect();
        let q: Vec<f64> = f.iter().map(|t| t[2]).collect();
        let dtf = self.grad.adjoint_diffs(&p, &q)?;
        let p: Vec<f64> = (0..count)
            .map(|k| sc.t[k][1][0] * rhs_u[k] / sc.t[k][0][0])
            .collect();
        let q: Vec<f64> = (0..count)
            .map(|k| sc.t[k][2][0] * rhs_u[k] / sc.t[k][0][0])
            .collect();
        let elim = self.grad.adjoint_diffs(&p, &q)?;
        let rhs_x: Vec<f64> = (0..count)
            .map(|i| -res.rdx[i] + dtf[i] - elim[i])
            .collect();
        let (dx, mu) = sys.solve(&rhs_x, &qr)?;

        let (ddv, ddh) = self.grad.diffs(&dx)?;
        let mut d = Direction {
            dx,
            du: Vec::with_capacity(count),
            ds: Vec::with_capacity(count),
            dl: Vec::with_capacity(count),
            dsr: Vec::new(),
            dlr: Vec::new(),
        };
        for k in 0..count {
            let t = &sc.t[k];
            let du = (rhs_u[k] - t[0][1] * ddv[k] - t[0][2] * ddh[k]) / t[0][0];
            let extra = sc.pixel[k].apply_inv_sq(&[-du, -ddv[k], -ddh[k]]);
            let dl = [f[k][0] + extra[0], f[k][1] + extra[1], f[k][2] + extra[2]];
            // from the linearized primal equality, which stays accurate when
            // W^{-2} is huge
            let rp = &res.rp[k];
            d.ds.push([du - rp[0], ddv[k] - rp[1], ddh[k] - rp[2]]);
            d.dl.push(dl);
            d.du.push(du);
        }
        d.dlr = mu;
        let adx = self.meas.forward(&d.dx)?;
        d.dsr = res.rpr.iter().map(|r| -r).collect();
        d.dsr[1..].iter_mut().zip(&adx).for_each(|(v, a)| *v += a);
        Ok(d)
    }
}

fn step_lengths(it: &Iterate, d: &Direction) -> (f64, f64) {
    let mut ap = soc::max_step(&it.sr, &d.dsr);
    let mut ad = soc::max_step(&it.lr, &d.dlr);
    for k in 0..it.s.len() {
        ap = ap.min(soc::max_step(&it.s[k], &d.ds[k]));
        ad = ad.min(soc::max_step(&it.l[k], &d.dl[k]));
    }
    (ap, ad)
}

/// Average complementarity, optionally after steps `(ap, ad)` along `d`.
fn complementarity(it: &Iterate, step: Option<(&Direction, f64, f64)>) -> f64 {
    let pair = |s: &[f64], l: &[f64], ds: &[f64], dl: &[f64], ap: f64, ad: f64| -> f64 {
        (0..s.len())
            .map(|i| (s[i] + ap * ds[i]) * (l[i] + ad * dl[i]))
            .sum()
    };
    let zero3 = [0.0; 3];
    let zero_r = vec![0.0; it.sr.len()];
    let mut c = 0.0;
    for k in 0..it.s.len() {
        c += match step {
            Some((d, ap, ad)) => pair(&it.s[k], &it.l[k], &d.ds[k], &d.dl[k], ap, ad),
            None => pair(&it.s[k], &it.l[k], &zero3, &zero3, 0.0, 0.0),
        };
    }
    c += match step {
        Some((d, ap, ad)) => pair(&it.sr, &it.lr, &d.dsr, &d.dlr, ap, ad),
        None => pair(&it.sr, &it.lr, &zero_r, &zero_r, 0.0, 0.0),
    };
    c / (it.s.len() + 1) as f64
}

fn starting_point(
    meas: &Measurements<'_>,
    grad: &Gradient2D,
    y: &[f64],
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<(Iterate, usize)> {
    let a = meas.a;
    let n = a.rows();
    // least-norm solution
    let (z, cg) = match &meas.dense {
        Some((amat, _)) => {
            let chol = Cholesky::new(amat * amat.transpose())
                .ok_or_else(|| Error::Singular("A A^T is not positive definite".into()))?;
            (chol.solve(&DVector::from_column_slice(y)).as_slice().to_vec(), 0)
        }
        None => {
            let out = pcg(
                |v| a.forward(&a.adjoint(v)?),
                y,
                None,
                opts.cg_tolerance.min(1e-12),
                opts.cg_limit(n).max(10 * n),
            )?;
            (out.x, out.iterations)
        }
    };
    let x = a.adjoint(&z)?;
    let (dv, dh) = grad.diffs(&x)?;
    let mags: Vec<f64> = dv.iter().zip(&dh).map(|(p, q)| p.hypot(*q)).collect();
    let mmax = mags.iter().cloned().fold(0.0, f64::max);
    let floor = if mmax > 0.0 { 0.1 * mmax } else { 1e-3 * norm2(&x).max(1e-12) };
    let u: Vec<f64> = mags.iter().map(|g| g + floor).collect();
    let s = (0..x.len()).map(|k| [u[k], dv[k], dh[k]]).collect();
    let l = vec![[1.0, 0.0, 0.0]; x.len()];
    let r = sub(&a.forward(&x)?, y);
    let rn = norm2(&r);
    let shrink = if rn > 0.5 * epsilon { 0.5 * epsilon / rn } else { 1.0 };
    let mut sr = Vec::with_capacity(n + 1);
    sr.push(epsilon);
    sr.extend(r.iter().map(|t| t * shrink));
    let mut lr = vec![0.0; n + 1];
    lr[0] = u.iter().sum::<f64>() / (x.len() as f64 * epsilon);
    Ok((Iterate { x, u, s, l, sr, lr }, cg))
}

pub fn solve_tv(problem: &RecoveryProblem<'_>, opts: &SolverOptions) -> Result<SolverResult> {
    solve_tv_impl(problem, opts, DENSE_LIMIT)
}

fn solve_tv_impl(
    problem: &RecoveryProblem<'_>,
    opts: &SolverOptions,
    dense_limit: usize,
) -> Result<SolverResult> {
    problem.validate()?;
    opts.validate()?;
    let Objective::Tv { height, width } = problem.objective else {
        return Err(Error::InvalidArgument("solve_tv needs a TV objective".into()));
    };
    let a = problem.a;
    let y = &problem.y;
    let grad = Gradient2D::new(height, width)?;
    let count = grad.pixels();
    let epsilon = if problem.epsilon == 0.0 {
        EPSILON_FLOOR * norm2(y)
    } else {
        problem.epsilon
    };
    if norm2(y) <= epsilon {
        return Ok(SolverResult::trivial_zero(count, y, epsilon, "x = 0 is feasible"));
    }

    let meas = Measurements::new(a, dense_limit)?;
    let tv = Tv {
        meas: &meas,
        grad,
        y,
        epsilon,
    };
    let (mut it, mut cg_total) = starting_point(&meas, &grad, y, epsilon, opts)?;
    let ynorm = norm2(y);
    let dual_scale = 1.0 + (count as f64).sqrt();

    let mut log = Vec::new();
    let mut converged = false;
    let mut gap;
    let mut iters = 0;
    let mut message = String::new();
    loop {
        let res = tv.residuals(&it)?;
        let primal = it.u.iter().sum::<f64>();
        let dual = dot(y, &it.lr[1..]) - epsilon * it.lr[0];
        gap = ((primal - dual) / primal.abs().max(f64::MIN_POSITIVE)).max(0.0);
        let pinf = res
            .rp
            .iter()
            .flat_map(|v| v.iter())
            .chain(&res.rpr)
            .map(|t| t * t)
            .sum::<f64>()
            .sqrt();
        let dinf = norm2(&res.rdu).hypot(norm2(&res.rdx));
        log.push(IterationRecord {
            stage: iters,
            newton_iter: iters,
            gap,
            residual: norm2(&res.r),
        });
        if gap <= opts.gap_tolerance
            && pinf <= FEASIBILITY_TOL * (1.0 + ynorm)
            && dinf <= FEASIBILITY_TOL * dual_scale
        {
            converged = true;
            break;
        }
        if iters == MAX_ITERS {
            break;
        }
        iters += 1;

        let Some(sc) = tv.scalings(&it) else {
            message = format!("iterate reached a cone boundary with relative gap {gap:.3e}");
            break;
        };
        let mut sys = NewtonSystem::new(&meas, tv.banded_part(&sc), &sc.resid, opts)?;
        let mu = complementarity(&it, None);

        let ll: Vec<[f64; 3]> = sc.lam.iter().map(|l| arr3(&soc::jprod(l, l))).collect();
        let llr = soc::jprod(&sc.lam_r, &sc.lam_r);
        let rc: Vec<[f64; 3]> = ll.iter().map(|v| [-v[0], -v[1], -v[2]]).collect();
        let rcr: Vec<f64> = llr.iter().map(|v| -v).collect();
        let aff = tv.direction(&mut sys, &sc, &res, &rc, &rcr)?;
        let (ap, ad) = step_lengths(&it, &aff);
        let mu_aff = complementarity(&it, Some((&aff, ap.min(1.0), ad.min(1.0))));
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let mut rc = Vec::with_capacity(count);
        for k in 0..count {
            let nt = &sc.pixel[k];
            let second = soc::jprod(&nt.apply_inv(&aff.ds[k]), &nt.apply(&aff.dl[k]));
            let mut v = [0.0; 3];
            for i in 0..3 {
                v[i] = -ll[k][i] - second[i];
            }
            v[0] += sigma * mu;
            rc.push(v);
        }
        let second = soc::jprod(&sc.resid.apply_inv(&aff.dsr), &sc.resid.apply(&aff.dlr));
        let mut rcr: Vec<f64> = llr.iter().zip(&second).map(|(a, b)| -a - b).collect();
        rcr[0] += sigma * mu;
        let dir = tv.direction(&mut sys, &sc, &res, &rc, &rcr)?;
        cg_total += sys.cg_iterations;
        let (ap, ad) = step_lengths(&it, &dir);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-14 && ad < 1e-14 {
            message = format!("step length collapsed with relative gap {gap:.3e}");
            break;
        }
        for k in 0..count {
            it.x[k] += ap * dir.dx[k];
            it.u[k] += ap * dir.du[k];
            for i in 0..3 {
                it.s[k][i] += ap * dir.ds[k][i];
                it.l[k][i] += ad * dir.dl[k][i];
            }
        }
        for (v, d) in it.sr.iter_mut().zip(&dir.dsr) {
            *v += ap * d;
        }
        for (v, d) in it.lr.iter_mut().zip(&dir.dlr) {
            *v += ad * d;
        }
    }
    if message.is_empty() {
        message = if converged {
            "duality gap below tolerance".into()
        } else {
            format!("iteration limit reached with relative gap {gap:.3e}")
        };
    }
    let x = it.x;
    Ok(SolverResult {
        objective_value: super::tv_norm(&x, height, width)?,
        residual_norm: norm2(&sub(&a.forward(&x)?, y)),
        x_sharp: x,
        duality_gap: gap,
        newton_iterations: iters,
        barrier_stages: iters,
        cg_iterations: cg_total,
        converged,
        epsilon_used: epsilon,
        log,
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate, EnsembleKind, EnsembleSpec};

    fn blocks(side: usize) -> Vec<f64> {
        (0..side * side)
            .map(|k| {
                let (i, j) = (k / side, k % side);
                let mut v = 0.1;
                if i >= side / 4 && i < 3 * side / 4 && j >= side / 4 && j < side / 2 {
                    v += 1.0;
                }
                if i < side / 3 && j >= 2 * side / 3 {
                    v -= 0.6;
                }
                v
            })
            .collect()
    }

    fn problem(kind: EnsembleKind, dc: bool, n: usize, side: usize) -> (MeasurementOperator, Vec<f64>) {
        let mut spec = EnsembleSpec::new(kind, n, side * side, 11);
        if !dc {
            spec = spec.without_dc();
        }
        let a = generate(&spec).unwrap();
        let mut x0 = blocks(side);
        if !dc {
            project_out_mean(&mut x0);
        }
        (a, x0)
    }

    #[test]
    fn noiseless_blocks_are_recovered() {
        for (kind, dc) in [
            (EnsembleKind::GaussianIid, true),
            (EnsembleKind::ScrambledFourier, false),
        ] {
            let side = 12;
            let (a, x0) = problem(kind, dc, 70, side);
            let y = a.forward(&x0).unwrap();
            let p = RecoveryProblem::tv(&a, y, 0.0, side, side);
            let r = solve_tv(&p, &SolverOptions::default()).unwrap();
            assert!(r.converged, "{kind:?}: {}", r.message);
            let err = norm2(&sub(&r.x_sharp, &x0)) / norm2(&x0);
            assert!(err < 1e-6, "{kind:?}: relative error {err:e}");
        }
    }

    #[test]
    fn noisy_solution_is_feasible_and_no_rougher_than_truth() {
        let side = 10;
        let (a, x0) = problem(EnsembleKind::GaussianIid, true, 50, side);
        let mut y = a.forward(&x0).unwrap();
        y.iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v += 0.02 * ((i * 7919) as f64).sin());
        let eps = norm2(&sub(&a.forward(&x0).unwrap(), &y)) * 1.05;
        let p = RecoveryProblem::tv(&a, y, eps, side, side);
        let r = solve_tv(&p, &SolverOptions::default()).unwrap();
        assert!(r.converged, "{}", r.message);
        assert!(r.residual_norm <= eps * (1.0 + 1e-7));
        assert!(r.objective_value <= super::super::tv_norm(&x0, side, side).unwrap() * (1.0 + 1e-7));
    }

    #[test]
    fn matrix_free_path_matches_dense_path() {
        let side = 8;
        for (kind, dc) in [
            (EnsembleKind::GaussianIid, true),
            (EnsembleKind::ScrambledFourier, false),
        ] {
            let (a, x0) = problem(kind, dc, 30, side);
            let y = a.forward(&x0).unwrap();
            let eps = 0.05 * norm2(&y);
            let p = RecoveryProblem::tv(&a, y, eps, side, side);
            let opts = SolverOptions::default();
            let dense = solve_tv_impl(&p, &opts, usize::MAX).unwrap();
            let free = solve_tv_impl(&p, &opts, 0).unwrap();
            assert!(dense.converged && free.converged);
            assert!(free.cg_iterations > 0 && dense.cg_iterations == 0);
            let rel = (dense.objective_value - free.objective_value).abs() / dense.objective_value;
            assert!(rel < 1e-6, "{kind:?}: objectives differ by {rel:e}");
        }
    }
}
