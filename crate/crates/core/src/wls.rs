//! Least squares through a Householder QR with column-norm pivoting.
//!
//! Columns are equilibrated to unit norm before factorizing so that the rank
//! decision does not depend on the units of the covariates.

/// Relative size of `|R_kk|` against `|R_00|` below which a column counts as
/// linearly dependent on the ones before it.
pub(crate) const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major dense matrix.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_columns(rows: usize, columns: &[&[f64]]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            debug_assert_eq!(c.len(), rows);
            data.extend_from_slice(c);
        }
        Matrix {
            rows,
            cols: columns.len(),
            data,
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                *o += a * xj;
            }
        }
        out
    }

    /// `Aᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| self.column(j).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `diag(s) A`
    pub fn scale_rows(&self, s: &[f64]) -> Matrix {
        let mut data = self.data.clone();
        for col in data.chunks_mut(self.rows) {
            for (a, si) in col.iter_mut().zip(s) {
                *a *= si;
            }
        }
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PivotedQr {
    rows: usize,
    cols: usize,
    /// Householder vectors, one per column; `v[k]` acts on rows `k..`.
    reflectors: Vec<Vec<f64>>,
    /// Upper triangle of R, row-major `cols × cols`.
    r: Vec<f64>,
    /// Position `k` of the factorization holds original column `perm[k]`.
    perm: Vec<usize>,
    /// Equilibration factors, indexed by original column.
    col_scale: Vec<f64>,
}

impl PivotedQr {
    pub fn new(a: &Matrix) -> Self {
        let (n, p) = (a.rows, a.cols);
        let mut work = a.data.clone();
        let mut col_scale = vec![1.0; p];
        for (j, col) in work.chunks_mut(n.max(1)).take(p).enumerate() {
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                col_scale[j] = 1.0 / norm;
                col.iter_mut().for_each(|x| *x /= norm);
            }
        }

        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::with_capacity(p);
        let mut r = vec![0.0; p * p];
        let steps = p.min(n);

        for k in 0..steps {
            // pivot: largest remaining column norm over rows k..
            let (best, _) = (k..p)
                .map(|j| {
                    let col = &work[j * n + k..(j + 1) * n];
                    (j, col.iter().map(|x| x * x).sum::<f64>())
                })
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best != k {
                for i in 0..n {
                    work.swap(k * n + i, best * n + i);
                }
                for i in 0..k {
                    r.swap(i * p + k, i * p + best);
                }
                perm.swap(k, best);
            }

            let x = &work[k * n + k..(k + 1) * n];
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = x.to_vec();
            if norm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            r[k * p + k] = alpha;

            for j in k + 1..p {
                let col = &mut work[j * n + k..(j + 1) * n];
                if vnorm2 > 0.0 {
                    let s =
                        2.0 * v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
                    col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
                }
                r[k * p + j] = col[0];
            }
            reflectors.push(if vnorm2 > 0.0 {
                let s = (2.0 / vnorm2).sqrt();
                v.iter_mut().for_each(|t| *t *= s);
                v
            } else {
                Vec::new()
            });
        }

        PivotedQr {
            rows: n,
            cols: p,
            reflectors,
            r,
            perm,
            col_scale,
        }
    }

    /// Numerical rank under [`RANK_TOLERANCE`].
    pub fn rank(&self) -> usize {
        let p = self.cols;
        if p == 0 {
            return 0;
        }
        let lead = self.r[0].abs();
        if lead.is_nan() || lead == 0.0 {
            return 0;
        }
        (0..p.min(self.rows))
            .take_while(|&k| self.r[k * p + k].abs() > RANK_TOLERANCE * lead)
            .count()
    }

    /// Minimizes `‖A x − b‖`. Assumes full column rank.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.rows);
        let p = self.cols;
        let mut qtb = b.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            if v.is_empty() {
                continue;
            }
            let tail = &mut qtb[k..];
            let s: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
            tail.iter_mut().zip(v).for_each(|(t, vi)| *t -= s * vi);
        }
        let mut y = vec![0.0; p];
        for i in (0..p).rev() {
            let row = &self.r[i * p..(i + 1) * p];
            let acc = qtb[i] - (i + 1..p).map(|j| row[j] * y[j]).sum::<f64>();
            y[i] = acc / row[i];
        }
        let mut x = vec![0.0; p];
        for (k, &orig) in self.perm.iter().enumerate() {
            x[orig] = y[k] * self.col_scale[orig];
        }
        x
    }

    /// `(AᵀA)⁻¹`, row-major `cols × cols`, in original column order.
    pub fn unscaled_covariance(&self) -> Vec<f64> {
        let p = self.cols;
        // R⁻¹ (upper triangular), column by column
        let mut rinv = vec![0.0; p * p];
        for j in 0..p {
            rinv[j * p + j] = 1.0 / self.r[j * p + j];
            for i in (0..j).rev() {
                let mut acc = 0.0;
                for k in i + 1..=j {
                    acc += self.r[i * p + k] * rinv[k * p + j];
                }
                rinv[i * p + j] = -acc / self.r[i * p + i];
            }
        }
        let mut cov = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..p {
                let s: f64 = (a.max(b)..p)
                    .map(|k| rinv[a * p + k] * rinv[b * p + k])
                    .sum();
                let (oa, ob) = (self.perm[a], self.perm[b]);
                cov[oa * p + ob] = s * self.col_scale[oa] * self.col_scale[ob];
            }
        }
        cov
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> Matrix {
        let c0 = [1.0, 1.0, 1.0, 1.0, 1.0];
        let c1 = [0.0, 1.0, 2.0, 3.0, 4.0];
        let c2 = [1.0, -1.0, 2.0, 0.5, 3.0];
        Matrix::from_columns(5, &[&c0, &c1, &c2])
    }

    #[test]
    fn exact_system_recovers_coefficients() {
        let a = design();
        let beta = [0.5, -2.0, 3.0];
        let b = a.mul_vec(&beta);
        let x = PivotedQr::new(&a).solve(&b);
        for (xi, bi) in x.iter().zip(beta) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let a = design();
        let b = [1.0, 0.0, 2.0, 5.0, -1.0];
        let x = PivotedQr::new(&a).solve(&b);
        let fitted = a.mul_vec(&x);
        let resid: Vec<f64> = b.iter().zip(&fitted).map(|(u, v)| u - v).collect();
        for g in a.tr_mul_vec(&resid) {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_inverts_gram() {
        let a = design();
        let qr = PivotedQr::new(&a);
        let cov = qr.unscaled_covariance();
        let p = a.cols;
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for k in 0..p {
                    let gram_ik: f64 = a
                        .column(i)
                        .iter()
                        .zip(a.column(k))
                        .map(|(u, v)| u * v)
                        .sum();
                    s += gram_ik * cov[k * p + j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-10, "({i},{j}) = {s}");
            }
        }
    }

    #[test]
    fn rank_detects_duplicates_and_zero_columns() {
        let c0 = [1.0, 1.0, 1.0, 1.0];
        let c1 = [0.0, 1.0, 0.0, 1.0];
        let c2 = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(
            PivotedQr::new(&Matrix::from_columns(4, &[&c0, &c1, &c2])).rank(),
            2
        );
        let z = [0.0; 4];
        assert_eq!(
            PivotedQr::new(&Matrix::from_columns(4, &[&c0, &z])).rank(),
            1
        );
        // scale differences alone do not reduce rank
        let tiny = [1e-9, 3e-9, -2e-9, 0.0];
        assert_eq!(
            PivotedQr::new(&Matrix::from_columns(4, &[&c0, &tiny])).rank(),
            2
        );
    }

    #[test]
    fn more_columns_than_rows() {
        let c0 = [1.0, 2.0];
        let c1 = [0.0, 1.0];
        let c2 = [5.0, 1.0];
        assert_eq!(
            PivotedQr::new(&Matrix::from_columns(2, &[&c0, &c1, &c2])).rank(),
            2
        );
    }
}
