//! Test signals and best-S-term approximation metrics.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linops::IndexSet;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// `k` entries of +-1 on a uniformly random support.
    SparseSpikes { k: usize },
    /// Sorted magnitudes `c t^-r`, randomly permuted and signed.
    Compressible { r: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub m: usize,
    pub seed: u64,
}

impl SignalSpec {
    pub fn generate(&self) -> Result<Vec<f64>> {
        match self.kind {
            SignalKind::SparseSpikes { k } => gen_sparse_spikes(self.m, k, self.seed),
            SignalKind::Compressible { r, c } => gen_compressible(self.m, r, c, self.seed),
        }
    }
}

/// Decay exponent of the compressible test signals.
pub const COMPRESSIBLE_DECAY: f64 = 10.0 / 9.0;
/// Amplitude giving the length-1024 compressible signal an l2 norm of about
/// sqrt(50).
pub const COMPRESSIBLE_AMPLITUDE: f64 = 5.819;

pub fn gen_sparse_spikes(m: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    if k > m {
        return Err(Error::InvalidArgument(format!(
            "support size {k} exceeds length {m}"
        )));
    }
    let mut rng = stream(seed, Purpose::Signal);
    let mut idx: Vec<usize> = (0..m).collect();
    let (support, _) = idx.partial_shuffle(&mut rng, k);
    let mut x = vec![0.0; m];
    for &i in support.iter() {
        x[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    Ok(x)
}

pub fn gen_compressible(m: usize, r: f64, c: f64, seed: u64) -> Result<Vec<f64>> {
    if r <= 1.0 || c <= 0.0 || !r.is_finite() || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "compressible signal needs r > 1 and c > 0, got r = {r}, c = {c}"
        )));
    }
    let mut rng = stream(seed, Purpose::Signal);
    let mut template: Vec<f64> = (1..=m).map(|t| c * (t as f64).powf(-r)).collect();
    template.shuffle(&mut rng);
    for v in template.iter_mut() {
        if rng.random::<bool>() {
            *v = -*v;
        }
    }
    Ok(template)
}

/// Keeps the `s` largest-magnitude entries (ties go to the lower index).
pub fn top_k(x: &[f64], s: usize) -> Result<(Vec<f64>, IndexSet)> {
    if s > x.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {s} of {} entries",
            x.len()
        )));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let kept = IndexSet::from_unsorted(order[..s].to_vec(), x.len())?;
    let mut out = vec![0.0; x.len()];
    for &i in kept.as_slice() {
        out[i] = x[i];
    }
    Ok((out, kept))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxErrors {
    pub l1_tail: f64,
    pub l2_tail: f64,
    /// `l1_tail / sqrt(S)`
    pub scaled: f64,
}

pub fn approx_errors(x: &[f64], s: usize) -> Result<ApproxErrors> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "approximation errors need S >= 1".into(),
        ));
    }
    let (kept, _) = top_k(x, s)?;
    let (mut l1, mut l2) = (0.0, 0.0);
    for (a, b) in x.iter().zip(&kept) {
        let d = (a - b).abs();
        l1 += d;
        l2 += d * d;
    }
    Ok(ApproxErrors {
        l1_tail: l1,
        l2_tail: l2.sqrt(),
        scaled: l1 / (s as f64).sqrt(),
    })
}

/// CSV dump with columns `index,value`.
pub fn write_signal_csv<W: Write>(w: W, x: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "value"])?;
    for (i, v) in x.iter().enumerate() {
        out.write_record([i.to_string(), crate::harness::fmt_sig(*v)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_signal_csv<R: std::io::Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let idx: usize = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("row {row}: bad index")))?;
        if idx != row {
            return Err(Error::Format(format!("row {row}: index {idx} out of order")));
        }
        let v: f64 = rec
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("row {row}: bad value")))?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{norm1, norm2};

    #[test]
    fn spikes_are_unit_and_exact_count() {
        let x = gen_sparse_spikes(1024, 50, 11).unwrap();
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 50);
        assert!(x.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        assert!((norm2(&x) - 50f64.sqrt()).abs() < 1e-12);
        assert_eq!(norm1(&x), 50.0);
        let full = gen_sparse_spikes(8, 8, 1).unwrap();
        assert!(full.iter().all(|v| v.abs() == 1.0));
        assert!(gen_sparse_spikes(4, 5, 0).is_err());
    }

    #[test]
    fn compressible_sorted_magnitudes_follow_power_law() {
        let (m, r, c) = (300, 1.5, 2.0);
        let x = gen_compressible(m, r, c, 4).unwrap();
        let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        for (t, v) in mags.iter().enumerate() {
            assert!((v - c * ((t + 1) as f64).powf(-r)).abs() < 1e-12);
        }
        assert!(gen_compressible(10, 1.0, 1.0, 0).is_err());
        assert!(gen_compressible(10, 2.0, 0.0, 0).is_err());
    }

    #[test]
    fn top_k_edges_and_ties() {
        let x = [1.0, -3.0, 3.0, 0.5];
        let (k2, t) = top_k(&x, 2).unwrap();
        assert_eq!(k2, vec![0.0, -3.0, 3.0, 0.0]);
        assert_eq!(t.as_slice(), &[1, 2]);
        let (k1, _) = top_k(&x, 1).unwrap();
        assert_eq!(k1, vec![0.0, -3.0, 0.0, 0.0]);
        assert_eq!(top_k(&x, 0).unwrap().0, vec![0.0; 4]);
        assert_eq!(top_k(&x, 4).unwrap().0, x.to_vec());
        assert!(top_k(&x, 5).is_err());
    }

    #[test]
    fn tails_of_sparse_vector_vanish() {
        let x = gen_sparse_spikes(64, 5, 2).unwrap();
        let e = approx_errors(&x, 5).unwrap();
        assert_eq!((e.l1_tail, e.l2_tail, e.scaled), (0.0, 0.0, 0.0));
        assert!(approx_errors(&x, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let x = vec![0.1, -2.5e-7, 3.0];
        let mut buf = Vec::new();
        write_signal_csv(&mut buf, &x).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,value\n0,"));
        let back = read_signal_csv(&buf[..]).unwrap();
        assert_eq!(back, x);
    }
}
