//! Mehrotra predictor-corrector interior point method for the l1 programs.
//!
//! `x = p - q` with `p, q >= 0`. Basis pursuit is the LP
//! `min 1^T (p + q)  s.t.  A (p - q) = y`. The noise-aware problem adds a
//! second-order cone variable `w = (w0, w1)` with `w1 = A (p - q) - y` and
//! `w0 = eps`. Dual variables are `nu` for the rows and `kappa` for the
//! `w0` equation; the cone slack is `s_w = (-kappa, nu)`. The cone block uses
//! Nesterov-Todd scaling.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::bpdn::residual_dual_bound;
use super::soc::{self, NtScaling};
use super::{pcg, IterationRecord, SolverOptions, SolverResult};
use crate::error::{Error, Result};
use crate::linops::MeasurementOperator;
use crate::vector::{dot, norm1, norm2, norm_inf, sub};

const MAX_ITERS: usize = 100;
const FEASIBILITY_TOL: f64 = 1e-9;
const STEP_FRACTION: f64 = 0.99;
/// Matrix-free operators up to this many entries are materialized so the
/// normal equations can be factored directly.
const MATERIALIZE_LIMIT: usize = 1 << 25;
const REFINE_STEPS: usize = 2;

enum NormalMatrix {
    /// Factor of the (possibly ridged) matrix, and the matrix itself for
    /// iterative refinement.
    Dense(Cholesky<f64, Dyn>, DMatrix<f64>),
    Iterative { d: Vec<f64>, cone: Option<NtScaling> },
}

/// Normal equations `A~ diag(D) A~^T`, where the cone block contributes
/// `W^2` through `A~ = [[A, -A, -I], [0, 0, e0^T]]`.
struct NormalSolver<'a> {
    a: &'a MeasurementOperator,
    dense: Option<DMatrix<f64>>,
    cg_tol: f64,
    cg_max: usize,
    cg_iterations: usize,
}

impl<'a> NormalSolver<'a> {
    fn new(a: &'a MeasurementOperator, opts: &SolverOptions) -> Result<Self> {
        let dense = match a.as_dense() {
            Some(d) => Some(DMatrix::from_row_slice(d.rows(), d.cols(), d.data())),
            None if a.rows() * a.cols() <= MATERIALIZE_LIMIT => {
                let d = a.materialize()?;
                Some(DMatrix::from_row_slice(d.rows(), d.cols(), d.data()))
            }
            None => None,
        };
        let n = a.rows();
        Ok(Self {
            a,
            dense,
            cg_tol: opts.cg_tolerance.min(1e-12),
            cg_max: opts.cg_limit(n).max(10 * n),
            cg_iterations: 0,
        })
    }

    /// With `check_rank` the factorization must be well conditioned; during
    /// the iterations a tiny ridge is added instead, since the scaling
    /// legitimately drives the matrix towards singularity.
    fn factor(&self, d: &[f64], cone: Option<&NtScaling>, check_rank: bool) -> Result<NormalMatrix> {
        let Some(amat) = &self.dense else {
            return Ok(NormalMatrix::Iterative {
                d: d.to_vec(),
                cone: cone.cloned(),
            });
        };
        let n = amat.nrows();
        let mut b = amat.clone();
        for (j, dj) in d.iter().enumerate() {
            b.column_mut(j).scale_mut(dj.sqrt());
        }
        let top = &b * b.transpose();
        let mut gram = match cone {
            None => top,
            Some(nt) => {
                let e2 = nt.eta * nt.eta;
                let w = &nt.w;
                let mut g = DMatrix::zeros(n + 1, n + 1);
                g.view_mut((0, 0), (n, n)).copy_from(&top);
                for i in 0..n {
                    for j in 0..n {
                        g[(i, j)] += 2.0 * e2 * w[i + 1] * w[j + 1];
                    }
                    g[(i, i)] += e2;
                    let off = -2.0 * e2 * w[0] * w[i + 1];
                    g[(i, n)] = off;
                    g[(n, i)] = off;
                }
                g[(n, n)] = e2 * (2.0 * w[0] * w[0] - 1.0);
                g
            }
        };
        let max_diag = gram.diagonal().max();
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            return Err(Error::Singular("normal matrix has no positive diagonal".into()));
        }
        if check_rank {
            let chol = Cholesky::new(gram.clone())
                .ok_or_else(|| Error::Singular("A A^T is not positive definite".into()))?;
            let l = chol.l_dirty().diagonal();
            let (lo, hi) = (l.min(), l.max());
            if (lo / hi).powi(2) < 1e-13 {
                return Err(Error::Singular(format!(
                    "A has (numerically) dependent rows: pivot ratio {:.3e}",
                    (lo / hi).powi(2)
                )));
            }
            return Ok(NormalMatrix::Dense(chol, gram));
        }
        let exact = gram.clone();
        let mut ridge = 1e-15 * max_diag;
        let mut previous = 0.0;
        while ridge <= 1e-6 * max_diag {
            for i in 0..gram.nrows() {
                gram[(i, i)] += ridge - previous;
            }
            previous = ridge;
            if let Some(chol) = Cholesky::new(gram.clone()) {
                return Ok(NormalMatrix::Dense(chol, exact));
            }
            ridge *= 100.0;
        }
        Err(Error::Singular("normal equations could not be factored".into()))
    }

    fn solve(&mut self, m: &NormalMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        let (d, cone) = match m {
            NormalMatrix::Dense(chol, gram) => {
                // near the cone boundary the matrix is badly conditioned;
                // refinement keeps the primal residual from drifting
                let b = DVector::from_column_slice(rhs);
                let mut x = chol.solve(&b);
                for _ in 0..REFINE_STEPS {
                    let r = &b - gram * &x;
                    x += chol.solve(&r);
                }
                return Ok(x.as_slice().to_vec());
            }
            NormalMatrix::Iterative { d, cone } => (d, cone),
        };
        let a = self.a;
        let n = a.rows();
        let out = pcg(
            |v| {
                let scaled: Vec<f64> = a
                    .adjoint(&v[..n])?
                    .iter()
                    .zip(d)
                    .map(|(x, s)| x * s)
                    .collect();
                let mut out = a.forward(&scaled)?;
                if let Some(nt) = cone {
                    // W^2 applied to (v_n, -v_top), mapped back through A~
                    let mut u = Vec::with_capacity(n + 1);
                    u.push(v[n]);
                    u.extend(v[..n].iter().map(|t| -t));
                    let w2u = nt.apply_sq(&u);
                    for (o, t) in out.iter_mut().zip(&w2u[1..]) {
                        *o -= t;
                    }
                    out.push(w2u[0]);
                }
                Ok(out)
            },
            rhs,
            None,
            self.cg_tol,
            self.cg_max,
        )?;
        self.cg_iterations += out.iterations;
        if out.rel_residual > 1e-6 {
            return Err(Error::Singular(format!(
                "CG on the normal equations stalled at relative residual {:.3e}",
                out.rel_residual
            )));
        }
        Ok(out.x)
    }
}

struct Cone {
    w: Vec<f64>,
    sw: Vec<f64>,
    kappa: f64,
}

struct State {
    p: Vec<f64>,
    q: Vec<f64>,
    sp: Vec<f64>,
    sq: Vec<f64>,
    nu: Vec<f64>,
    cone: Option<Cone>,
}

struct Residuals {
    /// `y - A (p - q) + w1`.
    rp: Vec<f64>,
    /// `eps - w0`.
    rp0: f64,
    rdp: Vec<f64>,
    rdq: Vec<f64>,
    rdw: Vec<f64>,
    /// `A^T nu`.
    atnu: Vec<f64>,
    /// `A x - y`.
    r: Vec<f64>,
}

struct Direction {
    dp: Vec<f64>,
    dq: Vec<f64>,
    dw: Vec<f64>,
    dnu: Vec<f64>,
    dkappa: f64,
    dsp: Vec<f64>,
    dsq: Vec<f64>,
    dsw: Vec<f64>,
}

impl Direction {
    fn add(&mut self, c: &Direction) {
        let pairs: [(&mut Vec<f64>, &Vec<f64>); 7] = [
            (&mut self.dp, &c.dp),
            (&mut self.dq, &c.dq),
            (&mut self.dw, &c.dw),
            (&mut self.dnu, &c.dnu),
            (&mut self.dsp, &c.dsp),
            (&mut self.dsq, &c.dsq),
            (&mut self.dsw, &c.dsw),
        ];
        for (a, b) in pairs {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.dkappa += c.dkappa;
    }
}

impl State {
    fn x(&self) -> Vec<f64> {
        sub(&self.p, &self.q)
    }

    fn degree(&self) -> f64 {
        (2 * self.p.len() + usize::from(self.cone.is_some())) as f64
    }

    fn mu(&self) -> f64 {
        let mut c = dot(&self.p, &self.sp) + dot(&self.q, &self.sq);
        if let Some(k) = &self.cone {
            c += dot(&k.w, &k.sw);
        }
        c / self.degree()
    }

    fn residuals(&self, a: &MeasurementOperator, y: &[f64], epsilon: f64) -> Result<Residuals> {
        let r = sub(&a.forward(&self.x())?, y);
        let atnu = a.adjoint(&self.nu)?;
        let mut rp: Vec<f64> = r.iter().map(|v| -v).collect();
        let (mut rp0, mut rdw) = (0.0, Vec::new());
        if let Some(k) = &self.cone {
            for (t, wi) in rp.iter_mut().zip(&k.w[1..]) {
                *t += wi;
            }
            rp0 = epsilon - k.w[0];
            rdw.push(-k.kappa - k.sw[0]);
            rdw.extend(self.nu.iter().zip(&k.sw[1..]).map(|(v, s)| v - s));
        }
        let rdp = atnu.iter().zip(&self.sp).map(|(t, s)| 1.0 - t - s).collect();
        let rdq = atnu.iter().zip(&self.sq).map(|(t, s)| 1.0 + t - s).collect();
        Ok(Residuals {
            rp,
            rp0,
            rdp,
            rdq,
            rdw,
            atnu,
            r,
        })
    }
}

/// Newton direction for complementarity targets `rcp`, `rcq` and, for the
/// cone, `lambda o (W^{-1} dw + W dsw) = rcw`.
#[allow(clippy::too_many_arguments)]
fn direction(
    solver: &mut NormalSolver<'_>,
    nm: &NormalMatrix,
    st: &State,
    res: &Residuals,
    nt: Option<&(NtScaling, Vec<f64>)>,
    rcp: &[f64],
    rcq: &[f64],
    rcw: &[f64],
) -> Result<Direction> {
    let m = st.p.len();
    let n = st.nu.len();
    let tp: Vec<f64> = (0..m)
        .map(|i| (rcp[i] - st.p[i] * res.rdp[i]) / st.sp[i])
        .collect();
    let tq: Vec<f64> = (0..m)
        .map(|i| (rcq[i] - st.q[i] * res.rdq[i]) / st.sq[i])
        .collect();
    let at = solver.a.forward(&sub(&tp, &tq))?;
    let mut rhs: Vec<f64> = res.rp.iter().zip(&at).map(|(r, v)| r - v).collect();
    if let Some((scaling, lambda)) = nt {
        let v = scaling.apply(&soc::jdiv(lambda, scaling.det_lambda, rcw));
        let w2rd = scaling.apply_sq(&res.rdw);
        let tw: Vec<f64> = v.iter().zip(&w2rd).map(|(a, b)| a - b).collect();
        for (r, t) in rhs.iter_mut().zip(&tw[1..]) {
            *r += t;
        }
        rhs.push(res.rp0 - tw[0]);
    }
    let dy = solver.solve(nm, &rhs)?;
    let dnu = dy[..n].to_vec();
    let atdnu = solver.a.adjoint(&dnu)?;
    let mut d = Direction {
        dp: vec![0.0; m],
        dq: vec![0.0; m],
        dw: Vec::new(),
        dnu,
        dkappa: 0.0,
        dsp: vec![0.0; m],
        dsq: vec![0.0; m],
        dsw: Vec::new(),
    };
    for i in 0..m {
        d.dsp[i] = res.rdp[i] - atdnu[i];
        d.dsq[i] = res.rdq[i] + atdnu[i];
        d.dp[i] = tp[i] + st.p[i] / st.sp[i] * atdnu[i];
        d.dq[i] = tq[i] - st.q[i] / st.sq[i] * atdnu[i];
    }
    if nt.is_some() {
        d.dkappa = dy[n];
        let mut u = Vec::with_capacity(n + 1);
        u.push(d.dkappa);
        u.extend(d.dnu.iter().map(|t| -t));
        d.dsw = res.rdw.iter().zip(&u).map(|(r, t)| r - t).collect();
        // `tw + W^2 u` cancels badly near the boundary, where W^2 is huge;
        // the primal equations give the same step without that loss
        let adx = solver.a.forward(&sub(&d.dp, &d.dq))?;
        d.dw = Vec::with_capacity(n + 1);
        d.dw.push(res.rp0);
        d.dw.extend(adx.iter().zip(&res.rp).map(|(v, r)| v - r));
    }
    Ok(d)
}

/// [`direction`] followed by refinement on the unreduced Newton equations,
/// reusing the factorization. The reduced system is badly conditioned once
/// the cone iterate nears its boundary.
#[allow(clippy::too_many_arguments)]
fn refined_direction(
    solver: &mut NormalSolver<'_>,
    nm: &NormalMatrix,
    st: &State,
    res: &Residuals,
    nt: Option<&(NtScaling, Vec<f64>)>,
    rcp: &[f64],
    rcq: &[f64],
    rcw: &[f64],
) -> Result<Direction> {
    let mut d = direction(solver, nm, st, res, nt, rcp, rcq, rcw)?;
    let Some((scaling, lambda)) = nt else {
        return Ok(d);
    };
    let m = st.p.len();
    for _ in 0..REFINE_STEPS {
        let atdnu = solver.a.adjoint(&d.dnu)?;
        let adx = solver.a.forward(&sub(&d.dp, &d.dq))?;
        let mut u = Vec::with_capacity(d.dnu.len() + 1);
        u.push(d.dkappa);
        u.extend(d.dnu.iter().map(|t| -t));
        let inner: Vec<f64> = scaling
            .apply_inv(&d.dw)
            .iter()
            .zip(&scaling.apply(&d.dsw))
            .map(|(a, b)| a + b)
            .collect();
        let ecw: Vec<f64> = rcw
            .iter()
            .zip(&soc::jprod(lambda, &inner))
            .map(|(r, v)| r - v)
            .collect();
        let ecp: Vec<f64> = (0..m)
            .map(|i| rcp[i] - st.sp[i] * d.dp[i] - st.p[i] * d.dsp[i])
            .collect();
        let ecq: Vec<f64> = (0..m)
            .map(|i| rcq[i] - st.sq[i] * d.dq[i] - st.q[i] * d.dsq[i])
            .collect();
        let e = Residuals {
            rp: (0..adx.len())
                .map(|i| res.rp[i] - adx[i] + d.dw[i + 1])
                .collect(),
            rp0: res.rp0 - d.dw[0],
            rdp: (0..m).map(|i| res.rdp[i] - d.dsp[i] - atdnu[i]).collect(),
            rdq: (0..m).map(|i| res.rdq[i] - d.dsq[i] + atdnu[i]).collect(),
            rdw: (0..u.len()).map(|i| res.rdw[i] - d.dsw[i] - u[i]).collect(),
            atnu: Vec::new(),
            r: Vec::new(),
        };
        let c = direction(solver, nm, st, &e, nt, &ecp, &ecq, &ecw)?;
        d.add(&c);
    }
    Ok(d)
}

/// Largest step keeping `v + s dv` in the cone, over the two orthants and
/// the optional second-order cone.
fn ratio_test(v1: &[f64], d1: &[f64], v2: &[f64], d2: &[f64], cone: Option<(&[f64], &[f64])>) -> f64 {
    let mut s = f64::INFINITY;
    for (v, d) in v1.iter().zip(d1).chain(v2.iter().zip(d2)) {
        if *d < 0.0 {
            s = s.min(-v / d);
        }
    }
    if let Some((v, d)) = cone {
        s = s.min(soc::max_step(v, d));
    }
    s
}

/// Relative gap certified by the better of two dual feasible points: the
/// scaled iterate `nu` and the scaled residual direction.
fn certified_gap(x: &[f64], y: &[f64], epsilon: f64, res: &Residuals, nu: &[f64], atr: &[f64]) -> f64 {
    let obj = norm1(x);
    if obj == 0.0 {
        return 0.0;
    }
    let from_nu = (dot(y, nu) - epsilon * norm2(nu)) / norm_inf(&res.atnu).max(1.0);
    let from_r = residual_dual_bound(&res.r, atr, y, epsilon);
    (obj - from_nu.max(from_r)).max(0.0) / obj
}

/// Solves the LP (`epsilon == None`) or the cone program. The caller has
/// already validated `y` and ruled out the trivial cases.
pub(crate) fn solve_l1(
    a: &MeasurementOperator,
    y: &[f64],
    epsilon: Option<f64>,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let m = a.cols();
    let n = a.rows();
    let eps = epsilon.unwrap_or(0.0);
    let mut solver = NormalSolver::new(a, opts)?;

    // least-norm solution as a starting point; also the rank check
    let ones = vec![1.0; m];
    let nm = solver.factor(&ones, None, true)?;
    let x0 = a.adjoint(&solver.solve(&nm, y)?)?;
    let shift = 0.1 * norm_inf(&x0);
    let cone = epsilon.map(|e| {
        let mut w = vec![0.0; n + 1];
        w[0] = e;
        let mut sw = vec![0.0; n + 1];
        sw[0] = 1.0;
        Cone { w, sw, kappa: -1.0 }
    });
    let mut st = State {
        p: x0.iter().map(|v| v.max(0.0) + shift).collect(),
        q: x0.iter().map(|v| (-v).max(0.0) + shift).collect(),
        sp: vec![1.0; m],
        sq: vec![1.0; m],
        nu: vec![0.0; n],
        cone,
    };

    let ynorm = norm2(y);
    let mut log = Vec::new();
    let mut converged = false;
    let mut gap;
    let mut iters = 0;
    let mut message = String::new();
    loop {
        let res = st.residuals(a, y, eps)?;
        let atr = a.adjoint(&res.r)?;
        let x = st.x();
        gap = certified_gap(&x, y, eps, &res, &st.nu, &atr);
        let infeasibility = norm2(&res.rp).hypot(res.rp0);
        log.push(IterationRecord {
            stage: iters,
            newton_iter: iters,
            gap,
            residual: norm2(&res.r),
        });
        if infeasibility <= FEASIBILITY_TOL * (1.0 + ynorm) && gap <= opts.gap_tolerance {
            converged = true;
            break;
        }
        if iters == MAX_ITERS {
            break;
        }
        iters += 1;

        let nt = match &st.cone {
            None => None,
            Some(k) => {
                let Some(scaling) = NtScaling::new(&k.w, &k.sw) else {
                    message = format!("cone iterate reached the boundary with relative gap {gap:.3e}");
                    break;
                };
                let lambda = scaling.apply(&k.sw);
                Some((scaling, lambda))
            }
        };
        let d: Vec<f64> = (0..m).map(|i| st.p[i] / st.sp[i] + st.q[i] / st.sq[i]).collect();
        let nm = solver.factor(&d, nt.as_ref().map(|(s, _)| s), false)?;
        let mu = st.mu();

        let rcp: Vec<f64> = (0..m).map(|i| -st.p[i] * st.sp[i]).collect();
        let rcq: Vec<f64> = (0..m).map(|i| -st.q[i] * st.sq[i]).collect();
        let ll = nt.as_ref().map(|(_, l)| soc::jprod(l, l)).unwrap_or_default();
        let rcw: Vec<f64> = ll.iter().map(|v| -v).collect();
        let aff = refined_direction(&mut solver, &nm, &st, &res, nt.as_ref(), &rcp, &rcq, &rcw)?;
        // a common primal and dual step: separate ones let the cone
        // iterates oscillate and stall near the boundary
        let (ap, ad) = step_lengths(&st, &aff);
        let ap = ap.min(ad).min(1.0);
        let ad = ap;
        let mut comp = 0.0;
        for i in 0..m {
            comp += (st.p[i] + ap * aff.dp[i]) * (st.sp[i] + ad * aff.dsp[i]);
            comp += (st.q[i] + ap * aff.dq[i]) * (st.sq[i] + ad * aff.dsq[i]);
        }
        if let Some(k) = &st.cone {
            for i in 0..=n {
                comp += (k.w[i] + ap * aff.dw[i]) * (k.sw[i] + ad * aff.dsw[i]);
            }
        }
        let sigma = (comp / st.degree() / mu).powi(3).clamp(0.0, 1.0);

        let rcp: Vec<f64> = (0..m)
            .map(|i| sigma * mu - st.p[i] * st.sp[i] - aff.dp[i] * aff.dsp[i])
            .collect();
        let rcq: Vec<f64> = (0..m)
            .map(|i| sigma * mu - st.q[i] * st.sq[i] - aff.dq[i] * aff.dsq[i])
            .collect();
        let mut rcw = Vec::new();
        if let Some((scaling, _)) = &nt {
            let second = soc::jprod(&scaling.apply_inv(&aff.dw), &scaling.apply(&aff.dsw));
            rcw = ll.iter().zip(&second).map(|(a, b)| -a - b).collect();
            rcw[0] += sigma * mu;
        }
        let dir = refined_direction(&mut solver, &nm, &st, &res, nt.as_ref(), &rcp, &rcq, &rcw)?;
        let (ap, ad) = step_lengths(&st, &dir);
        let ap = (STEP_FRACTION * ap.min(ad)).min(1.0);
        let ad = ap;
        if ap < 1e-14 && ad < 1e-14 {
            message = format!("step length collapsed with relative gap {gap:.3e}");
            break;
        }
        for i in 0..m {
            st.p[i] += ap * dir.dp[i];
            st.q[i] += ap * dir.dq[i];
            st.sp[i] += ad * dir.dsp[i];
            st.sq[i] += ad * dir.dsq[i];
        }
        for (v, dv) in st.nu.iter_mut().zip(&dir.dnu) {
            *v += ad * dv;
        }
        if let Some(k) = &mut st.cone {
            for i in 0..=n {
                k.w[i] += ap * dir.dw[i];
                k.sw[i] += ad * dir.dsw[i];
            }
            k.kappa += ad * dir.dkappa;
        }
    }
    if message.is_empty() {
        message = if converged {
            "duality gap below tolerance".into()
        } else {
            format!("iteration limit reached with relative gap {gap:.3e}")
        };
    }
    let x = st.x();
    Ok(SolverResult {
        objective_value: norm1(&x),
        residual_norm: norm2(&sub(&a.forward(&x)?, y)),
        x_sharp: x,
        duality_gap: gap,
        newton_iterations: iters,
        barrier_stages: iters,
        cg_iterations: solver.cg_iterations,
        converged,
        epsilon_used: eps,
        log,
        message,
    })
}

fn step_lengths(st: &State, d: &Direction) -> (f64, f64) {
    let (pc, dc) = match &st.cone {
        Some(k) => (
            Some((k.w.as_slice(), d.dw.as_slice())),
            Some((k.sw.as_slice(), d.dsw.as_slice())),
        ),
        None => (None, None),
    };
    (
        ratio_test(&st.p, &d.dp, &st.q, &d.dq, pc),
        ratio_test(&st.sp, &d.dsp, &st.sq, &d.dsq, dc),
    )
}
