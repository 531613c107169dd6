//! Seeded measurement ensembles and coherence.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};
use crate::linops::{
    DenseMatrix, IndexSet, MeasurementOperator, OrthonormalTransform, PartialFourier,
    ScrambledFourier,
};
use crate::rng::{stream, substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// i.i.d. N(0, 1/n) entries.
    GaussianIid,
    /// i.i.d. +-1/sqrt(n) entries.
    BinaryPm,
    /// `n` random rows of the real trigonometric basis.
    PartialFourier,
    /// Partial Fourier with a random permutation of the columns.
    ScrambledFourier,
    /// `n` random rows of a random orthonormal `m x m` matrix.
    RowSubsampledOrthogonal,
}

impl EnsembleKind {
    pub fn is_subsampled(self) -> bool {
        !matches!(self, EnsembleKind::GaussianIid | EnsembleKind::BinaryPm)
    }

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::GaussianIid => "gaussian",
            EnsembleKind::BinaryPm => "binary",
            EnsembleKind::PartialFourier => "partial_fourier",
            EnsembleKind::ScrambledFourier => "scrambled_fourier",
            EnsembleKind::RowSubsampledOrthogonal => "orthogonal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian_iid" => EnsembleKind::GaussianIid,
            "binary" | "binary_pm" => EnsembleKind::BinaryPm,
            "partial_fourier" | "fourier" => EnsembleKind::PartialFourier,
            "scrambled_fourier" | "scrambled" => EnsembleKind::ScrambledFourier,
            "orthogonal" | "row_subsampled_orthogonal" => EnsembleKind::RowSubsampledOrthogonal,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub normalize_columns: bool,
    /// Leave the constant (DC) row out of the candidate rows of the
    /// Fourier kinds.
    pub exclude_dc: bool,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, m: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            m,
            seed,
            normalize_columns: false,
            exclude_dc: false,
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize_columns = true;
        self
    }

    pub fn without_dc(mut self) -> Self {
        self.exclude_dc = true;
        self
    }
}

/// Draws the operator described by `spec`. Identical specs give
/// bit-identical operators.
pub fn generate(spec: &EnsembleSpec) -> Result<MeasurementOperator> {
    let EnsembleSpec { kind, n, m, .. } = *spec;
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "ensemble dimensions must be positive, got {n}x{m}"
        )));
    }
    if kind.is_subsampled() && n > m {
        return Err(Error::InvalidArgument(format!(
            "cannot select {n} distinct rows out of {m}"
        )));
    }
    n.checked_mul(m)
        .ok_or_else(|| Error::InvalidArgument(format!("{n}x{m} overflows")))?;

    let op = match kind {
        EnsembleKind::GaussianIid | EnsembleKind::BinaryPm => {
            let scale = 1.0 / (n as f64).sqrt();
            let mut a = DenseMatrix::zeros(n, m)?;
            for j in 0..m {
                let mut rng = substream(spec.seed, j as u64, Purpose::Ensemble);
                for i in 0..n {
                    let v = if kind == EnsembleKind::GaussianIid {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z * scale
                    } else if rng.random::<bool>() {
                        scale
                    } else {
                        -scale
                    };
                    a.set(i, j, v);
                }
            }
            if spec.normalize_columns {
                a.normalize_columns()?;
            }
            MeasurementOperator::Dense(a)
        }
        EnsembleKind::PartialFourier => {
            let mut pf = PartialFourier::new(m, select_rows(spec)?)?;
            if spec.normalize_columns {
                pf.normalize_columns()?;
            }
            MeasurementOperator::PartialFourier(pf)
        }
        EnsembleKind::ScrambledFourier => {
            let pf = PartialFourier::new(m, select_rows(spec)?)?;
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut stream(spec.seed, Purpose::Permutation));
            let mut sf = ScrambledFourier::new(pf, perm)?;
            if spec.normalize_columns {
                sf.normalize_columns()?;
            }
            MeasurementOperator::ScrambledFourier(sf)
        }
        EnsembleKind::RowSubsampledOrthogonal => {
            let u = random_orthonormal(m, spec.seed)?;
            let rows = select_rows(spec)?;
            let mut a = DenseMatrix::zeros(n, m)?;
            for (i, &r) in rows.as_slice().iter().enumerate() {
                for j in 0..m {
                    a.set(i, j, u.get(r, j));
                }
            }
            if spec.normalize_columns {
                a.normalize_columns()?;
            }
            MeasurementOperator::Dense(a)
        }
    };
    Ok(op)
}

/// `n` distinct rows via a seeded partial Fisher-Yates shuffle of `[0, m)`.
fn select_rows(spec: &EnsembleSpec) -> Result<IndexSet> {
    let first = usize::from(spec.exclude_dc);
    let mut pool: Vec<usize> = (first..spec.m).collect();
    if spec.n > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {} rows from {} candidates",
            spec.n,
            pool.len()
        )));
    }
    let mut rng = stream(spec.seed, Purpose::Ensemble);
    let (chosen, _) = pool.partial_shuffle(&mut rng, spec.n);
    IndexSet::from_unsorted(chosen.to_vec(), spec.m)
}

/// Random orthonormal `m x m` matrix: Q factor of a seeded Gaussian matrix,
/// with column signs fixed so that `diag(R) > 0`.
pub fn random_orthonormal(m: usize, seed: u64) -> Result<DenseMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("size must be positive".into()));
    }
    let mut rng = stream(seed, Purpose::Ensemble);
    let g = DMatrix::<f64>::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = DenseMatrix::zeros(m, m)?;
    for j in 0..m {
        let s = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            out.set(i, j, s * q[(i, j)]);
        }
    }
    Ok(out)
}

/// `mu = sqrt(m) * max |U_ij|`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CoherenceValue {
    pub mu: f64,
}

/// Coherence of a square orthonormal matrix. Rejects inputs whose Gram
/// matrix deviates from the identity by more than 1e-8.
pub fn coherence(u: &DenseMatrix) -> Result<CoherenceValue> {
    check_len("coherence input (square)", u.rows(), u.cols())?;
    let g = u.gram();
    let m = u.cols();
    let mut dev: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g.get(i, j) - want).abs());
        }
    }
    if dev > 1e-8 {
        return Err(Error::NotOrthonormal { max_deviation: dev });
    }
    let max = u.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(CoherenceValue {
        mu: (m as f64).sqrt() * max,
    })
}

/// `mu(Phi, Psi) = sqrt(m) max_{k,j} |<phi_k, psi_j>|`, probing every
/// `psi_j = Psi* e_j` with the analysis of `Phi`.
pub fn mutual_coherence(
    phi: &dyn OrthonormalTransform,
    psi: &dyn OrthonormalTransform,
) -> Result<CoherenceValue> {
    let m = phi.len();
    check_len("mutual coherence bases", m, psi.len())?;
    let mut e = vec![0.0; m];
    let mut max: f64 = 0.0;
    for j in 0..m {
        e[j] = 1.0;
        let col = phi.analyze(&psi.synthesize(&e)?)?;
        e[j] = 0.0;
        max = col.iter().fold(max, |acc, v| acc.max(v.abs()));
    }
    Ok(CoherenceValue {
        mu: (m as f64).sqrt() * max,
    })
}
