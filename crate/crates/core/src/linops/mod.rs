//! Measurement operators with matrix-free forward and adjoint application.

mod dense;
mod fourier;
mod gradient;

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

pub use dense::DenseMatrix;
pub use fourier::{PartialFourier, RealFourierBasis, ScrambledFourier, TrigRow};
pub use gradient::Gradient2D;

use crate::error::{check_len, Error, Result};
use crate::rng::{stream, Purpose};
use crate::vector::{dist2, norm2};

/// Sorted set of distinct column indices drawn from `[0, universe)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    /// `indices` must be strictly increasing and below `universe`.
    pub fn new(indices: Vec<usize>, universe: usize) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "index set not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(Error::InvalidArgument(format!(
                    "index {last} out of range for {universe} columns"
                )));
            }
        }
        Ok(Self { indices, universe })
    }

    /// Sorts the indices first; duplicates are still an error.
    pub fn from_unsorted(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, universe)
    }

    pub fn full(universe: usize) -> Self {
        Self {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Complement within the universe.
    pub fn complement(&self) -> IndexSet {
        let indices = (0..self.universe).filter(|i| !self.contains(*i)).collect();
        IndexSet {
            indices,
            universe: self.universe,
        }
    }
}

/// An orthonormal change of basis: `analyze` is `W`, `synthesize` is `W*`.
pub trait OrthonormalTransform: Send + Sync + fmt::Debug {
    fn len(&self) -> usize;
    fn analyze(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn synthesize(&self, alpha: &[f64]) -> Result<Vec<f64>>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityTransform(pub usize);

impl OrthonormalTransform for IdentityTransform {
    fn len(&self) -> usize {
        self.0
    }

    fn analyze(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("identity transform input", self.0, x.len())?;
        Ok(x.to_vec())
    }

    fn synthesize(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        self.analyze(alpha)
    }
}

/// `outer` applied after synthesis by an orthonormal transform, i.e. the
/// map `alpha -> outer(W* alpha)`.
#[derive(Debug, Clone)]
pub struct Composed {
    outer: MeasurementOperator,
    inner: Arc<dyn OrthonormalTransform>,
}

impl Composed {
    pub fn outer(&self) -> &MeasurementOperator {
        &self.outer
    }

    pub fn inner(&self) -> &Arc<dyn OrthonormalTransform> {
        &self.inner
    }
}

/// The measurement map `A`, in one of its concrete representations.
#[derive(Debug, Clone)]
pub enum MeasurementOperator {
    Dense(DenseMatrix),
    PartialFourier(PartialFourier),
    ScrambledFourier(ScrambledFourier),
    Composed(Box<Composed>),
    Gradient2D(Gradient2D),
}

impl From<DenseMatrix> for MeasurementOperator {
    fn from(m: DenseMatrix) -> Self {
        MeasurementOperator::Dense(m)
    }
}

impl From<PartialFourier> for MeasurementOperator {
    fn from(p: PartialFourier) -> Self {
        MeasurementOperator::PartialFourier(p)
    }
}

impl From<ScrambledFourier> for MeasurementOperator {
    fn from(s: ScrambledFourier) -> Self {
        MeasurementOperator::ScrambledFourier(s)
    }
}

impl From<Gradient2D> for MeasurementOperator {
    fn from(g: Gradient2D) -> Self {
        MeasurementOperator::Gradient2D(g)
    }
}

impl MeasurementOperator {
    /// Output length `n` (`2 * height * width` for the gradient).
    pub fn rows(&self) -> usize {
        match self {
            Self::Dense(d) => d.rows(),
            Self::PartialFourier(p) => p.rows(),
            Self::ScrambledFourier(s) => s.rows(),
            Self::Composed(c) => c.outer.rows(),
            Self::Gradient2D(g) => 2 * g.pixels(),
        }
    }

    /// Input length `m`.
    pub fn cols(&self) -> usize {
        match self {
            Self::Dense(d) => d.cols(),
            Self::PartialFourier(p) => p.cols(),
            Self::ScrambledFourier(s) => s.cols(),
            Self::Composed(c) => c.inner.len(),
            Self::Gradient2D(g) => g.pixels(),
        }
    }

    /// `A x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input", self.cols(), x.len())?;
        match self {
            Self::Dense(d) => d.forward(x),
            Self::PartialFourier(p) => p.forward(x),
            Self::ScrambledFourier(s) => s.forward(x),
            Self::Composed(c) => c.outer.forward(&c.inner.synthesize(x)?),
            Self::Gradient2D(g) => g.forward(x),
        }
    }

    /// `A^T u`.
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint input", self.rows(), u.len())?;
        match self {
            Self::Dense(d) => d.adjoint(u),
            Self::PartialFourier(p) => p.adjoint(u),
            Self::ScrambledFourier(s) => s.adjoint(u),
            Self::Composed(c) => c.inner.analyze(&c.outer.adjoint(u)?),
            Self::Gradient2D(g) => g.adjoint(u),
        }
    }

    /// Dense copy of the columns in `t`, probed with unit vectors for the
    /// matrix-free variants.
    pub fn restrict_columns(&self, t: &IndexSet) -> Result<DenseMatrix> {
        if t.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot restrict to an empty column set".into(),
            ));
        }
        check_len("index set universe", self.cols(), t.universe())?;
        let n = self.rows();
        match self {
            Self::Dense(d) => {
                let mut out = DenseMatrix::zeros(n, t.len())?;
                for i in 0..n {
                    for (jj, &j) in t.as_slice().iter().enumerate() {
                        out.set(i, jj, d.get(i, j));
                    }
                }
                Ok(out)
            }
            _ => {
                let mut e = vec![0.0; self.cols()];
                let mut columns = Vec::with_capacity(t.len());
                for &j in t.as_slice() {
                    e[j] = 1.0;
                    columns.push(self.forward(&e)?);
                    e[j] = 0.0;
                }
                DenseMatrix::from_columns(n, &columns)
            }
        }
    }

    /// Full dense materialization.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.restrict_columns(&IndexSet::full(self.cols()))
    }

    /// Squared column norms, `diag(A^T A)`. Exact except for `Composed`,
    /// where every entry is the mean column energy `||A||_F^2 / m`.
    pub fn gram_diagonal(&self) -> Vec<f64> {
        match self {
            Self::Dense(d) => d.column_norms_sq(),
            Self::PartialFourier(p) => p.column_norms_sq(),
            Self::ScrambledFourier(s) => s.column_norms_sq(),
            Self::Gradient2D(g) => g.column_norms_sq(),
            Self::Composed(c) => {
                let outer = c.outer.gram_diagonal();
                let mean = outer.iter().sum::<f64>() / c.inner.len() as f64;
                vec![mean; c.inner.len()]
            }
        }
    }

    /// Column `j`, computed as `A e_j`.
    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        match self {
            Self::Dense(d) if j < d.cols() => Ok(d.column(j)),
            _ => {
                let mut e = vec![0.0; self.cols()];
                if j >= e.len() {
                    return Err(Error::InvalidArgument(format!("column {j} out of range")));
                }
                e[j] = 1.0;
                self.forward(&e)
            }
        }
    }

    pub fn as_dense(&self) -> Option<&DenseMatrix> {
        match self {
            Self::Dense(d) => Some(d),
            _ => None,
        }
    }
}

/// `alpha -> outer(inner.synthesize(alpha))`. The transform must be
/// orthonormal; this is probed on one random vector to 1e-10.
pub fn compose(
    outer: MeasurementOperator,
    inner: Arc<dyn OrthonormalTransform>,
) -> Result<MeasurementOperator> {
    check_len("composed transform length", outer.cols(), inner.len())?;
    let mut rng = stream(0x6f72_7468, Purpose::Probe);
    let probe: Vec<f64> = (0..inner.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let coef = inner.analyze(&probe)?;
    let back = inner.synthesize(&coef)?;
    let scale = norm2(&probe);
    let round_trip = dist2(&back, &probe) / scale;
    let energy = (norm2(&coef) / scale - 1.0).abs();
    if round_trip > 1e-10 || energy > 1e-10 {
        return Err(Error::NotOrthonormal {
            max_deviation: round_trip.max(energy),
        });
    }
    Ok(MeasurementOperator::Composed(Box::new(Composed {
        outer,
        inner,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![0, 2, 5], 6).is_ok());
        assert!(IndexSet::new(vec![0, 2, 2], 6).is_err());
        assert!(IndexSet::new(vec![3, 1], 6).is_err());
        assert!(IndexSet::new(vec![6], 6).is_err());
        let s = IndexSet::from_unsorted(vec![4, 1], 6).unwrap();
        assert_eq!(s.as_slice(), &[1, 4]);
        assert_eq!(s.complement().as_slice(), &[0, 2, 3, 5]);
        assert!(IndexSet::from_unsorted(vec![4, 4], 6).is_err());
    }

    #[test]
    fn identity_forward_and_adjoint() {
        let a = MeasurementOperator::from(DenseMatrix::identity(4));
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(a.forward(&x).unwrap(), x.to_vec());
        assert_eq!(a.adjoint(&x).unwrap(), x.to_vec());
        assert!(matches!(
            a.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.adjoint(&[1.0; 5]).is_err());
    }

    #[test]
    fn restrict_identity_columns() {
        let a = MeasurementOperator::from(DenseMatrix::identity(4));
        let t = IndexSet::new(vec![1, 3], 4).unwrap();
        let r = a.restrict_columns(&t).unwrap();
        assert_eq!(r.column(0), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.column(1), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(a.restrict_columns(&IndexSet::new(vec![], 4).unwrap()).is_err());
        assert_eq!(a.materialize().unwrap(), DenseMatrix::identity(4));
    }

    #[derive(Debug)]
    struct NotOrthonormal;

    impl OrthonormalTransform for NotOrthonormal {
        fn len(&self) -> usize {
            4
        }
        fn analyze(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(x.iter().map(|v| 2.0 * v).collect())
        }
        fn synthesize(&self, a: &[f64]) -> Result<Vec<f64>> {
            Ok(a.iter().map(|v| 0.5 * v).collect())
        }
    }

    #[test]
    fn compose_checks_transform() {
        let outer = MeasurementOperator::from(DenseMatrix::identity(4));
        assert!(matches!(
            compose(outer.clone(), Arc::new(NotOrthonormal)),
            Err(Error::NotOrthonormal { .. })
        ));
        assert!(compose(outer.clone(), Arc::new(IdentityTransform(3))).is_err());
        let c = compose(outer, Arc::new(IdentityTransform(4))).unwrap();
        assert_eq!(c.forward(&[1.0, -2.0, 0.0, 3.0]).unwrap(), vec![1.0, -2.0, 0.0, 3.0]);
    }
}
