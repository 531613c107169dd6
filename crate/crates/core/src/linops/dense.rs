use std::io::{Read, Write};

use crate::error::{check_len, Error, Result};
use crate::vector::dot;

const MAGIC: &[u8; 6] = b"SPROP1";

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidArgument(format!("{rows}x{cols} overflows")))?;
        check_len("dense matrix data", len, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidArgument(format!("{rows}x{cols} overflows")))?;
        Self::new(rows, cols, vec![0.0; len])
    }

    pub fn identity(size: usize) -> Self {
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Self {
            rows: size,
            cols: size,
            data,
        }
    }

    /// Builds a matrix column by column.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols)?;
        for (j, c) in columns.iter().enumerate() {
            check_len("column", rows, c.len())?;
            for (i, v) in c.iter().enumerate() {
                m.data[i * cols + j] = *v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data: t,
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("matmul inner dimension", self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols)?;
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A^T A` (cols x cols).
    pub fn gram(&self) -> DenseMatrix {
        let m = self.cols;
        let mut g = vec![0.0; m * m];
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..m {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let grow = &mut g[a * m..(a + 1) * m];
                for (gb, rb) in grow[a..].iter_mut().zip(&r[a..]) {
                    *gb += ra * rb;
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                g[a * m + b] = g[b * m + a];
            }
        }
        DenseMatrix {
            rows: m,
            cols: m,
            data: g,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input", self.cols, x.len())?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| dot(row, x))
            .collect())
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint input", self.rows, u.len())?;
        let mut out = vec![0.0; self.cols];
        for (row, ui) in self.data.chunks_exact(self.cols).zip(u) {
            if *ui == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += ui * a;
            }
        }
        Ok(out)
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * a;
            }
        }
        out
    }

    /// Rescales every column to unit l2 norm. Zero columns are an error.
    pub fn normalize_columns(&mut self) -> Result<()> {
        let norms = self.column_norms_sq();
        let inv: Vec<f64> = norms
            .iter()
            .enumerate()
            .map(|(j, n)| {
                if *n > 0.0 {
                    Ok(1.0 / n.sqrt())
                } else {
                    Err(Error::InvalidArgument(format!("column {j} is zero")))
                }
            })
            .collect::<Result<_>>()?;
        for row in self.data.chunks_exact_mut(self.cols) {
            for (a, s) in row.iter_mut().zip(&inv) {
                *a *= s;
            }
        }
        Ok(())
    }

    /// Writes the `SPROP1` binary layout: magic, u32 rows, u32 cols, then
    /// rows*cols little-endian f64 in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let rows = u32::try_from(self.rows)
            .map_err(|_| Error::InvalidArgument("row count exceeds u32".into()))?;
        let cols = u32::try_from(self.cols)
            .map_err(|_| Error::InvalidArgument("column count exceeds u32".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "bad operator magic {:?}, expected SPROP1",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let rows = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cols = u32::from_le_bytes(word) as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("operator size overflows".into()))?;
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::new(rows, cols, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout_is_exact() {
        let m = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, -0.5]).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..6], b"SPROP1");
        assert_eq!(&buf[6..10], &2u32.to_le_bytes());
        assert_eq!(&buf[10..14], &3u32.to_le_bytes());
        assert_eq!(buf.len(), 14 + 6 * 8);
        assert_eq!(&buf[14..22], &1.0f64.to_le_bytes());
        assert_eq!(&buf[54..62], &(-0.5f64).to_le_bytes());
        let back = DenseMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let m = DenseMatrix::identity(2);
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            DenseMatrix::read_binary(&bad[..]),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            DenseMatrix::read_binary(&buf[..buf.len() - 1]),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn gram_matches_matmul() {
        let a = DenseMatrix::new(3, 2, vec![1.0, 2.0, -1.0, 0.5, 3.0, 1.0]).unwrap();
        let g = a.gram();
        let g2 = a.transpose().matmul(&a).unwrap();
        for (x, y) in g.data().iter().zip(g2.data()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
