//! Dense row-major matrices and the symmetric eigensolver everything else
//! builds on.
//!
//! The eigensolver is a Householder tridiagonalization followed by implicit
//! QL with shifts, with a fixed iteration scheme so results are bit-stable
//! for a given input. No external linear-algebra backend is used.

use crate::error::{Error, Result};

/// Dense `rows x cols` matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from a slice of column vectors, all of the same length.
    pub fn from_cols(cols: &[Vec<f64>]) -> Self {
        if cols.is_empty() {
            return Mat::zeros(0, 0);
        }
        let n = cols[0].len();
        let mut m = Mat::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), n, "ragged column set");
            for i in 0..n {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for j in 0..other.cols {
                    dst[j] += a * src[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self' * v` without forming the transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let a = v[i];
            if a == 0.0 {
                continue;
            }
            let src = self.row(i);
            for j in 0..self.cols {
                out[j] += a * src[j];
            }
        }
        out
    }

    /// Gram matrix `self' * self`.
    pub fn gram(&self) -> Mat {
        let mut g = Mat::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..self.cols {
                    g[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// Gram matrix `self * self'`.
    pub fn gram_t(&self) -> Mat {
        let mut g = Mat::zeros(self.rows, self.rows);
        for a in 0..self.rows {
            let ra = self.row(a);
            for b in a..self.rows {
                let v = dot(ra, self.row(b));
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Maximum absolute asymmetry `|A - A'|_max`; zero for non-square input
    /// is never reported, the caller checks squareness first.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `y += s * x`
#[inline]
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Returns `(values, vectors)` with eigenvalues sorted in decreasing order
/// and the eigenvectors as the corresponding columns. Each eigenvector's
/// first coordinate with magnitude above 1e-12 is made positive so the
/// output is reproducible across runs.
pub fn sym_eig(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let mut z = a.clone();
    // Symmetrize exactly so rounding in the input cannot bias the reduction.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (z[(i, j)] + z[(j, i)]);
            z[(i, j)] = m;
            z[(j, i)] = m;
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut z, &mut d, &mut e)?;

    // Sort descending; ties broken by original index for determinism.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (jnew, &jold) in order.iter().enumerate() {
        let mut col = z.col(jold);
        fix_sign(&mut col);
        vectors.set_col(jnew, &col);
    }
    Ok((values, vectors))
}

/// Make the first coordinate with |value| > 1e-12 positive.
pub fn fix_sign(v: &mut [f64]) {
    for &x in v.iter() {
        if x.abs() > 1e-12 {
            if x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Householder reduction of the symmetric matrix in `z` to tridiagonal form,
/// accumulating the transformation in `z`.
fn tred2(z: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = z.rows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = z[(i, l)];
            } else {
                for k in 0..=l {
                    z[(i, k)] /= scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let mut f = z[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                f = 0.0;
                for j in 0..=l {
                    z[(j, i)] = z[(i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[(j, k)] * z[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += z[(k, j)] * z[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let adj = f * e[k] + g * z[(i, k)];
                        z[(j, k)] -= adj;
                    }
                }
            }
        } else {
            e[i] = z[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..i {
                    let adj = g * z[(k, i)];
                    z[(k, j)] -= adj;
                }
            }
        }
        d[i] = z[(i, i)];
        z[(i, i)] = 1.0;
        for j in 0..i {
            z[(j, i)] = 0.0;
            z[(i, j)] = 0.0;
        }
    }
}

/// Implicit-QL iteration on the tridiagonal matrix (diagonal `d`,
/// subdiagonal `e`), updating the accumulated eigenvectors in `z`.
fn tql2(z: &mut Mat, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::SolverDiverged(60));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[inline]
fn hypot(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Thin singular value decomposition `M = U diag(s) V'` computed through the
/// eigendecomposition of the smaller Gram matrix.
///
/// Singular values are returned in decreasing order. Values below
/// `1e-14 * s_max` come back as zero with zero vectors; callers that only
/// keep components above a threshold (the shrinkage operators here) are
/// unaffected.
pub fn thin_svd(m: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    let (r, c) = (m.rows(), m.cols());
    if r == 0 || c == 0 {
        return Ok((Mat::zeros(r, 0), Vec::new(), Mat::zeros(c, 0)));
    }
    if r <= c {
        let (lam, u) = sym_eig(&m.gram_t())?;
        let smax = lam[0].max(0.0).sqrt();
        let cutoff = 1e-14 * smax;
        let mut s = Vec::with_capacity(r);
        let mut v = Mat::zeros(c, r);
        for j in 0..r {
            let sj = lam[j].max(0.0).sqrt();
            if sj > cutoff && sj > 0.0 {
                s.push(sj);
                let uj = u.col(j);
                let mut vj = m.tr_matvec(&uj);
                for x in vj.iter_mut() {
                    *x /= sj;
                }
                v.set_col(j, &vj);
            } else {
                s.push(0.0);
            }
        }
        Ok((u, s, v))
    } else {
        let (v, s, u) = thin_svd(&m.transpose())?;
        Ok((u, s, v))
    }
}

/// Largest singular value of `M`.
pub fn spectral_norm_impl(m: &Mat) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    let g = if m.rows() <= m.cols() {
        m.gram_t()
    } else {
        m.gram()
    };
    let (lam, _) = sym_eig(&g).expect("gram matrix is symmetric by construction");
    lam[0].max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(values: &[f64], vectors: &Mat) -> Mat {
        let n = vectors.rows();
        let mut out = Mat::zeros(n, n);
        for k in 0..values.len() {
            let v = vectors.col(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += values[k] * v[i] * v[j];
                }
            }
        }
        out
    }

    #[test]
    fn eig_diagonal() {
        let mut a = Mat::zeros(3, 3);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = 1.0;
        a[(2, 2)] = 2.0;
        let (vals, vecs) = sym_eig(&a).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        assert!((vecs[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for n in [1usize, 2, 3, 5, 8, 12, 20] {
            let mut a = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = next();
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let (vals, vecs) = sym_eig(&a).unwrap();
            // descending
            for k in 1..n {
                assert!(vals[k - 1] >= vals[k] - 1e-12);
            }
            // orthonormal columns
            let g = vecs.gram();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g[(i, j)] - want).abs() < 1e-10, "n={n} Q'Q[{i},{j}]");
                }
            }
            // A = Q diag Q'
            let rec = reconstruct(&vals, &vecs);
            let err = rec.sub(&a).max_abs();
            assert!(err < 1e-9, "n={n} reconstruction err {err}");
        }
    }

    #[test]
    fn eig_deterministic() {
        let mut a = Mat::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                a[(i, j)] = ((i * 7 + j * 3) % 5) as f64;
            }
        }
        let a = a.add(&a.transpose());
        let r1 = sym_eig(&a).unwrap();
        let r2 = sym_eig(&a).unwrap();
        assert_eq!(r1.0, r2.0);
        assert_eq!(r1.1, r2.1);
    }

    #[test]
    fn svd_reconstruction() {
        let m = Mat::from_fn(5, 3, |i, j| ((i + 1) * (j + 2)) as f64 + (i as f64) * 0.3);
        let (u, s, v) = thin_svd(&m).unwrap();
        let mut rec = Mat::zeros(5, 3);
        for k in 0..s.len() {
            let uk = u.col(k);
            let vk = v.col(k);
            for i in 0..5 {
                for j in 0..3 {
                    rec[(i, j)] += s[k] * uk[i] * vk[j];
                }
            }
        }
        assert!(rec.sub(&m).max_abs() < 1e-9);
        for k in 1..s.len() {
            assert!(s[k - 1] >= s[k]);
        }
    }

    #[test]
    fn spectral_norm_rank_one() {
        let u = [1.0, 2.0, -2.0];
        let v = [3.0, 0.0, 4.0, 0.0];
        let m = Mat::from_fn(3, 4, |i, j| u[i] * v[j]);
        let want = norm2(&u) * norm2(&v);
        assert!((spectral_norm_impl(&m) - want).abs() < 1e-9 * want);
    }
}
