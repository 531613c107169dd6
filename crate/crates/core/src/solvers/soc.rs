//! Second-order cone `Q = {(v0, v1) : v0 >= ||v1||}` algebra: Jordan
//! product, its inverse, boundary steps and Nesterov-Todd scaling.

use crate::vector::{dot, norm2};

/// `v0^2 - ||v1||^2`, factored to limit cancellation near the boundary.
pub(crate) fn det(v: &[f64]) -> f64 {
    let t = norm2(&v[1..]);
    (v[0] - t) * (v[0] + t)
}

/// `u o v = (u . v, u0 v1 + v0 u1)`.
pub(crate) fn jprod(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    out.push(dot(u, v));
    out.extend(u[1..].iter().zip(&v[1..]).map(|(a, b)| u[0] * b + v[0] * a));
    out
}

/// Solves `l o x = r` for `x`, given `det(l)`.
pub(crate) fn jdiv(l: &[f64], det_l: f64, r: &[f64]) -> Vec<f64> {
    let x0 = (l[0] * r[0] - dot(&l[1..], &r[1..])) / det_l;
    let mut out = Vec::with_capacity(l.len());
    out.push(x0);
    out.extend(l[1..].iter().zip(&r[1..]).map(|(a, b)| (b - x0 * a) / l[0]));
    out
}

/// Largest `s >= 0` with `x + s d` in the cone (infinite if unbounded).
pub(crate) fn max_step(x: &[f64], d: &[f64]) -> f64 {
    let c = -det(x);
    if !(c < 0.0) {
        return 0.0;
    }
    let a = -(d[0] * d[0] - dot(&d[1..], &d[1..]));
    let b = -2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
    super::max_step_quadratic(a, b, c)
}

/// Nesterov-Todd scaling `W` with `W^2 s = x`, stored as
/// `W = eta [[w0, w1^T], [w1, I + w1 w1^T / (1 + w0)]]`.
#[derive(Debug, Clone)]
pub(crate) struct NtScaling {
    pub eta: f64,
    pub w: Vec<f64>,
    /// `det(W^{-1} x) = sqrt(det x det s)`.
    pub det_lambda: f64,
}

impl NtScaling {
    pub(crate) fn new(x: &[f64], s: &[f64]) -> Option<Self> {
        let (dx, ds) = (det(x), det(s));
        if !(dx > 0.0 && ds > 0.0) {
            return None;
        }
        let (xd, sd) = (dx.sqrt(), ds.sqrt());
        let xb: Vec<f64> = x.iter().map(|v| v / xd).collect();
        let sb: Vec<f64> = s.iter().map(|v| v / sd).collect();
        let gamma = ((1.0 + dot(&xb, &sb)) / 2.0).sqrt();
        let mut w = Vec::with_capacity(x.len());
        w.push((xb[0] + sb[0]) / (2.0 * gamma));
        w.extend(xb[1..].iter().zip(&sb[1..]).map(|(a, b)| (a - b) / (2.0 * gamma)));
        Some(Self {
            eta: (xd / sd).sqrt(),
            w,
            det_lambda: xd * sd,
        })
    }

    /// `H v` with `W = eta H`.
    fn apply_h(&self, v: &[f64]) -> Vec<f64> {
        let w = &self.w;
        let w1v1 = dot(&w[1..], &v[1..]);
        let c = v[0] + w1v1 / (1.0 + w[0]);
        let mut out = Vec::with_capacity(v.len());
        out.push(w[0] * v[0] + w1v1);
        out.extend(w[1..].iter().zip(&v[1..]).map(|(wi, vi)| vi + c * wi));
        out
    }

    pub(crate) fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.apply_h(v).into_iter().map(|t| self.eta * t).collect()
    }

    /// `W^{-1} v = J H J v / eta`, since `H J H = J`.
    pub(crate) fn apply_inv(&self, v: &[f64]) -> Vec<f64> {
        let mut jv = v.to_vec();
        jv[1..].iter_mut().for_each(|t| *t = -*t);
        let mut out = self.apply_h(&jv);
        out[1..].iter_mut().for_each(|t| *t = -*t);
        out.iter_mut().for_each(|t| *t /= self.eta);
        out
    }

    /// `W^2 v = eta^2 (2 w (w . v) - J v)`.
    pub(crate) fn apply_sq(&self, v: &[f64]) -> Vec<f64> {
        let e2 = self.eta * self.eta;
        let wv = 2.0 * dot(&self.w, v);
        let mut out: Vec<f64> = self.w.iter().zip(v).map(|(wi, vi)| e2 * (wv * wi + vi)).collect();
        out[0] -= 2.0 * e2 * v[0];
        out
    }

    /// `J w`, the direction that defines `W^{-2} = eta^-2 (2 Jw (Jw)^T - J)`.
    pub(crate) fn jw(&self) -> Vec<f64> {
        let mut out = self.w.clone();
        out[1..].iter_mut().for_each(|t| *t = -*t);
        out
    }

    pub(crate) fn apply_inv_sq(&self, v: &[f64]) -> Vec<f64> {
        let ie2 = 1.0 / (self.eta * self.eta);
        let jw = self.jw();
        let c = 2.0 * dot(&jw, v);
        let mut out: Vec<f64> = jw.iter().zip(v).map(|(a, b)| ie2 * (c * a + b)).collect();
        out[0] -= 2.0 * ie2 * v[0];
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scaling_maps_s_to_x() {
        let x = [3.0, 1.0, -0.5, 2.0];
        let s = [2.0, -0.3, 0.8, 0.1];
        let nt = NtScaling::new(&x, &s).unwrap();
        let w2s = nt.apply_sq(&s);
        for (a, b) in w2s.iter().zip(&x) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        // W^{-1} x = W s
        let l1 = nt.apply_inv(&x);
        let l2 = nt.apply(&s);
        for (a, b) in l1.iter().zip(&l2) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert_relative_eq!(det(&l2), nt.det_lambda, epsilon = 1e-12);
        let back = nt.apply_inv_sq(&x);
        for (a, b) in back.iter().zip(&s) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn jdiv_inverts_jprod() {
        let l = [2.0, 0.5, -1.0];
        let x = [0.3, -0.7, 1.1];
        let r = jprod(&l, &x);
        let back = jdiv(&l, det(&l), &r);
        for (a, b) in back.iter().zip(&x) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn step_stops_on_boundary() {
        let x = [1.0, 0.0];
        let d = [0.0, 1.0];
        assert_relative_eq!(max_step(&x, &d), 1.0, epsilon = 1e-12);
        let inward = [1.0, 0.0];
        assert!(max_step(&x, &inward).is_infinite());
        let out = [-1.0, 0.0];
        assert_relative_eq!(max_step(&x, &out), 1.0, epsilon = 1e-12);
    }
}
