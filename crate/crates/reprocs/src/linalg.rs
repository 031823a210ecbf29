//! Basis matrices, subspace-error and denseness measures, and the dense
//! eigendecomposition entry points used by the tracking and baseline code.

use crate::error::{Error, Result};
use crate::mat::{self, Mat};

/// Default cap on the number of subsets the exact denseness enumeration may
/// visit. The quantity is a maximum over all size-`s` index subsets, so the
/// exact mode is only viable when `C(n, s)` is moderate.
pub const DEFAULT_ENUM_CAP: u128 = 2_000_000;

/// Matrix with orthonormal columns. The width may be zero, which stands in
/// for the empty matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    mat: Mat,
}

impl BasisMatrix {
    /// Wrap a matrix after checking `Q'Q = I` within 1e-10.
    pub fn new(mat: Mat) -> Result<Self> {
        if mat.cols() > mat.rows() {
            return Err(Error::DimensionMismatch(format!(
                "basis width {} exceeds dimension {}",
                mat.cols(),
                mat.rows()
            )));
        }
        let b = BasisMatrix { mat };
        let defect = b.orthonormality_defect();
        if defect > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(b)
    }

    /// Empty basis in dimension `n`.
    pub fn empty(n: usize) -> Self {
        BasisMatrix {
            mat: Mat::zeros(n, 0),
        }
    }

    pub fn n(&self) -> usize {
        self.mat.rows()
    }

    pub fn r(&self) -> usize {
        self.mat.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.r() == 0
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        self.mat.col(j)
    }

    /// `max |(Q'Q - I)_{ij}|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.mat.gram();
        let mut worst = 0.0_f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).abs());
            }
        }
        worst
    }

    /// `P' v`
    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        self.mat.tr_matvec(v)
    }

    /// `P c`
    pub fn lift(&self, c: &[f64]) -> Vec<f64> {
        self.mat.matvec(c)
    }

    /// `P (P' v)`
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(v))
    }

    /// `(I - P P') v`
    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        if !self.is_empty() {
            let p = self.project(v);
            for (o, q) in out.iter_mut().zip(&p) {
                *o -= q;
            }
        }
        out
    }

    /// Horizontal concatenation `[self other]`; the caller guarantees the
    /// blocks are mutually orthogonal.
    pub fn concat(&self, other: &BasisMatrix) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "concat of bases with dimensions {} and {}",
                self.n(),
                other.n()
            )));
        }
        let mut cols: Vec<Vec<f64>> = (0..self.r()).map(|j| self.col(j)).collect();
        cols.extend((0..other.r()).map(|j| other.col(j)));
        BasisMatrix::new(Mat::from_cols(&cols))
    }
}

/// Result of a top-`r` symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvectors as orthonormal columns, one per retained eigenvalue.
    pub vectors: BasisMatrix,
    /// Retained eigenvalues, non-increasing.
    pub values: Vec<f64>,
}

/// How a denseness coefficient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensenessMode {
    /// Exhaustive maximum over all size-`s` row subsets.
    Exact,
    /// Triangle-inequality bound `s * kappa_1`.
    Loose,
}

/// Denseness coefficient of a matrix together with how it was computed.
#[derive(Debug, Clone)]
pub struct DensenessReport {
    pub kappa: f64,
    pub s: usize,
    pub mode: DensenessMode,
    pub subsets_evaluated: u64,
}

/// Orthonormal basis for the numerical column span of `M`.
///
/// Modified Gram-Schmidt with a second re-orthogonalization pass; a column
/// whose residual after projection falls below `rank_tol` times the largest
/// original column norm is dropped. An all-zero input yields the empty
/// basis.
pub fn orthonormalize(m: &Mat, rank_tol: f64) -> BasisMatrix {
    assert!(rank_tol > 0.0, "rank_tol must be positive");
    let n = m.rows();
    let col_scale = (0..m.cols())
        .map(|j| mat::norm2(&m.col(j)))
        .fold(0.0_f64, f64::max);
    if col_scale == 0.0 {
        return BasisMatrix::empty(n);
    }
    let thresh = rank_tol * col_scale;
    let mut q: Vec<Vec<f64>> = Vec::new();
    for j in 0..m.cols() {
        let mut v = m.col(j);
        for _pass in 0..2 {
            for base in &q {
                let c = mat::dot(base, &v);
                mat::axpy(&mut v, -c, base);
            }
        }
        let nv = mat::norm2(&v);
        if nv > thresh {
            for x in v.iter_mut() {
                *x /= nv;
            }
            q.push(v);
        }
    }
    BasisMatrix {
        mat: Mat::from_cols(&q),
    }
    .into_checked()
}

impl BasisMatrix {
    fn into_checked(self) -> BasisMatrix {
        debug_assert!(self.orthonormality_defect() <= 1e-10);
        self
    }
}

/// Top-`r` eigenpairs of a symmetric matrix.
///
/// The input must be symmetric within 1e-10; eigenvalues come back in
/// decreasing order and eigenvectors follow a fixed sign convention, so the
/// output is deterministic for a given input.
pub fn top_r_evd(a: &Mat, r: usize) -> Result<SymEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.asymmetry();
    if asym > 1e-10 {
        return Err(Error::NotHermitian(asym));
    }
    if r > a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "requested {} eigenpairs of a {}x{} matrix",
            r,
            a.rows(),
            a.cols()
        )));
    }
    let (values, vectors) = mat::sym_eig(a)?;
    let kept: Vec<Vec<f64>> = (0..r).map(|j| vectors.col(j)).collect();
    Ok(SymEig {
        vectors: BasisMatrix {
            mat: Mat::from_cols(&kept),
        },
        values: values[..r].to_vec(),
    })
}

/// Subspace error `||(I - P_hat P_hat') P||_2`.
///
/// Equals the sine of the largest principal angle between the estimated and
/// true subspaces. An empty estimate against a nonempty `P` gives `||P||_2`
/// (one for a true basis); two empty bases give zero.
pub fn subspace_error(p_hat: &BasisMatrix, p: &BasisMatrix) -> Result<f64> {
    if p_hat.n() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "subspace_error dimensions {} vs {}",
            p_hat.n(),
            p.n()
        )));
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let cols: Vec<Vec<f64>> = (0..p.r()).map(|j| p_hat.project_out(&p.col(j))).collect();
    Ok(mat::spectral_norm_impl(&Mat::from_cols(&cols)))
}

/// Denseness coefficient `kappa_s(B) = max_{|T| = s} ||I_T' basis(B)||_2`.
///
/// Exact mode enumerates every size-`s` subset (monotonicity in the subset
/// makes size exactly `s` sufficient) and requires `C(n, s)` at or below the
/// cap; the loose mode returns the triangle-inequality bound `s * kappa_1`.
pub fn denseness_coeff(b: &Mat, s: usize, mode: DensenessMode) -> Result<DensenessReport> {
    denseness_coeff_with_cap(b, s, mode, DEFAULT_ENUM_CAP)
}

/// [`denseness_coeff`] with an explicit enumeration cap.
pub fn denseness_coeff_with_cap(
    b: &Mat,
    s: usize,
    mode: DensenessMode,
    cap: u128,
) -> Result<DensenessReport> {
    let q = orthonormalize(b, 1e-10);
    if q.is_empty() {
        return Err(Error::InvalidConfig(
            "denseness coefficient of a zero matrix".into(),
        ));
    }
    let n = q.n();
    if s == 0 || s > n {
        return Err(Error::InvalidConfig(format!(
            "subset size {s} out of range for dimension {n}"
        )));
    }
    match mode {
        DensenessMode::Loose => {
            let kappa1 = (0..n)
                .map(|i| mat::norm2(q.mat().row(i)))
                .fold(0.0_f64, f64::max);
            Ok(DensenessReport {
                kappa: s as f64 * kappa1,
                s,
                mode,
                subsets_evaluated: 0,
            })
        }
        DensenessMode::Exact => {
            let total = binomial(n, s);
            if total > cap {
                return Err(Error::EnumerationCap {
                    subsets: total,
                    cap,
                });
            }
            let r = q.r();
            let mut worst = 0.0_f64;
            let mut count = 0u64;
            for_each_combination(n, s, |t| {
                count += 1;
                worst = worst.max(row_submatrix_norm_sq(q.mat(), t, r));
            });
            Ok(DensenessReport {
                kappa: worst.max(0.0).sqrt().min(1.0),
                s,
                mode,
                subsets_evaluated: count,
            })
        }
    }
}

/// Squared spectral norm of the `|T| x r` row restriction of `q`.
fn row_submatrix_norm_sq(q: &Mat, t: &[usize], r: usize) -> f64 {
    let s = t.len();
    if r == 1 {
        // single column: the norm is just the energy on the subset
        return t.iter().map(|&i| q[(i, 0)] * q[(i, 0)]).sum();
    }
    if s == 1 {
        return mat::dot(q.row(t[0]), q.row(t[0]));
    }
    // Gram on the smaller side of the s x r submatrix.
    let g = if s <= r {
        let mut g = Mat::zeros(s, s);
        for a in 0..s {
            let ra = q.row(t[a]);
            for b in a..s {
                let v = mat::dot(ra, q.row(t[b]));
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    } else {
        let mut g = Mat::zeros(r, r);
        for &i in t {
            let row = q.row(i);
            for a in 0..r {
                for b in a..r {
                    g[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..r {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    };
    let (vals, _) = mat::sym_eig(&g).expect("gram is symmetric");
    vals[0].max(0.0)
}

/// Restricted isometry constant of the projector `I - P P'`, computed as
/// `kappa_s(P)^2`.
pub fn ric_projector(p: &BasisMatrix, s: usize) -> Result<f64> {
    ric_projector_with_cap(p, s, DEFAULT_ENUM_CAP)
}

/// [`ric_projector`] with an explicit enumeration cap.
pub fn ric_projector_with_cap(p: &BasisMatrix, s: usize, cap: u128) -> Result<f64> {
    let rep = denseness_coeff_with_cap(p.mat(), s, DensenessMode::Exact, cap)?;
    Ok(rep.kappa * rep.kappa)
}

/// Induced 2-norm (largest singular value) of a dense matrix.
pub fn spectral_norm(m: &Mat) -> f64 {
    mat::spectral_norm_impl(m)
}

/// `C(n, k)` in wide arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Visit every size-`k` subset of `{0, .., n-1}` in lexicographic order.
pub fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_mat(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Mat {
        Mat::from_fn(n, m, |_, _| rng.sample(StandardNormal))
    }

    fn random_basis(rng: &mut ChaCha8Rng, n: usize, r: usize) -> BasisMatrix {
        orthonormalize(&gaussian_mat(rng, n, r), 1e-10)
    }

    fn unit_col(n: usize, i: usize) -> BasisMatrix {
        let mut m = Mat::zeros(n, 1);
        m[(i, 0)] = 1.0;
        BasisMatrix::new(m).unwrap()
    }

    /// Independent restricted-isometry oracle: extreme eigenvalues of
    /// `(Psi' Psi)[T, T]` over every subset of size `s`.
    fn brute_force_ric(psi: &Mat, s: usize) -> f64 {
        let g = psi.transpose().matmul(psi);
        let mut worst = 0.0_f64;
        for_each_combination(g.rows(), s, |t| {
            let sub = Mat::from_fn(t.len(), t.len(), |a, b| g[(t[a], t[b])]);
            let (vals, _) = mat::sym_eig(&sub).unwrap();
            worst = worst
                .max(vals[0] - 1.0)
                .max(1.0 - vals[vals.len() - 1]);
        });
        worst
    }

    #[test]
    fn orthonormalize_idempotent_on_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_basis(&mut rng, 5, 2);
        let q2 = orthonormalize(q.mat(), 1e-10);
        // same projector
        let p1 = q.mat().matmul(&q.mat().transpose());
        let p2 = q2.mat().matmul(&q2.mat().transpose());
        assert!(spectral_norm(&p1.sub(&p2)) <= 1e-10);
    }

    #[test]
    fn orthonormalize_collinear() {
        let v = [1.0, 2.0, -1.0, 0.5];
        let m = Mat::from_fn(4, 2, |i, j| if j == 0 { v[i] } else { 2.0 * v[i] });
        let q = orthonormalize(&m, 1e-10);
        assert_eq!(q.r(), 1);
    }

    #[test]
    fn orthonormalize_zero_is_empty() {
        let q = orthonormalize(&Mat::zeros(6, 3), 1e-10);
        assert!(q.is_empty());
        assert_eq!(q.n(), 6);
    }

    #[test]
    fn orthonormalize_random_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = gaussian_mat(&mut rng, 8, 3);
        let q = orthonormalize(&m, 1e-10);
        assert_eq!(q.r(), 3);
        assert!(q.orthonormality_defect() <= 1e-10);
        let resid = Mat::from_cols(&(0..3).map(|j| q.project_out(&m.col(j))).collect::<Vec<_>>());
        assert!(spectral_norm(&resid) <= 1e-8 * spectral_norm(&m));
    }

    #[test]
    fn top_r_evd_diagonal() {
        let mut a = Mat::zeros(3, 3);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = 2.0;
        a[(2, 2)] = 1.0;
        let e = top_r_evd(&a, 2).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 2.0).abs() < 1e-12);
        let span = Mat::from_cols(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let truth = BasisMatrix::new(span).unwrap();
        assert!(subspace_error(&e.vectors, &truth).unwrap() <= 1e-10);
    }

    #[test]
    fn top_r_evd_empty() {
        let a = Mat::identity(4);
        let e = top_r_evd(&a, 0).unwrap();
        assert!(e.vectors.is_empty());
        assert!(e.values.is_empty());
    }

    #[test]
    fn top_r_evd_recovers_constructed_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_basis(&mut rng, 10, 3);
        let lam = [5.0, 4.0, 3.0];
        let mut a = Mat::zeros(10, 10);
        for k in 0..3 {
            let c = p.col(k);
            for i in 0..10 {
                for j in 0..10 {
                    a[(i, j)] += lam[k] * c[i] * c[j];
                }
            }
        }
        let e = top_r_evd(&a, 3).unwrap();
        assert!(subspace_error(&e.vectors, &p).unwrap() <= 1e-8);
        for (got, want) in e.values.iter().zip(lam) {
            assert!((got - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn top_r_evd_rejects_asymmetric() {
        let mut a = Mat::zeros(2, 2);
        a[(0, 1)] = 1.0;
        match top_r_evd(&a, 1) {
            Err(Error::NotHermitian(_)) => {}
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn subspace_error_basic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_basis(&mut rng, 6, 2);
        assert!(subspace_error(&p, &p).unwrap() <= 1e-10);
        let e1 = unit_col(2, 0);
        let e2 = unit_col(2, 1);
        assert!((subspace_error(&e1, &e2).unwrap() - 1.0).abs() <= 1e-12);
        // empty estimate
        let none = BasisMatrix::empty(6);
        assert!((subspace_error(&none, &p).unwrap() - 1.0).abs() <= 1e-10);
        assert_eq!(
            subspace_error(&BasisMatrix::empty(3), &BasisMatrix::empty(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn subspace_error_norm_identities() {
        // the four norms of the switching identity agree
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let p = random_basis(&mut rng, 6, 2);
            let ph = random_basis(&mut rng, 6, 2);
            let se = subspace_error(&ph, &p).unwrap();

            let pp = p.mat().matmul(&p.mat().transpose());
            let php = ph.mat().matmul(&ph.mat().transpose());
            let i6 = Mat::identity(6);
            let a = i6.sub(&php).matmul(&pp);
            let b = i6.sub(&pp).matmul(&php);
            let c = i6.sub(&pp).matmul(ph.mat());
            assert!((spectral_norm(&a) - se).abs() <= 1e-8);
            assert!((spectral_norm(&b) - se).abs() <= 1e-8);
            assert!((spectral_norm(&c) - se).abs() <= 1e-8);
        }
    }

    #[test]
    fn denseness_sparse_vector() {
        let e3 = unit_col(10, 3);
        let rep = denseness_coeff(e3.mat(), 1, DensenessMode::Exact).unwrap();
        assert!((rep.kappa - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn denseness_flat_vector() {
        let m = Mat::from_fn(4, 1, |_, _| 0.5);
        let rep = denseness_coeff(&m, 2, DensenessMode::Exact).unwrap();
        assert!((rep.kappa - (2.0_f64 / 4.0).sqrt()).abs() <= 1e-12);
        assert_eq!(rep.subsets_evaluated, 6);
    }

    #[test]
    fn denseness_exact_matches_per_subset_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = random_basis(&mut rng, 8, 2);
        let rep = denseness_coeff(q.mat(), 2, DensenessMode::Exact).unwrap();
        assert_eq!(rep.subsets_evaluated, 28);
        // oracle: spectral norm of each 2x2 row restriction via its Gram
        let mut worst = 0.0_f64;
        for_each_combination(8, 2, |t| {
            let sub = Mat::from_fn(2, q.r(), |a, b| q.mat()[(t[a], b)]);
            worst = worst.max(spectral_norm(&sub));
        });
        assert!((rep.kappa - worst).abs() <= 1e-12);
    }

    #[test]
    fn denseness_loose_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = random_basis(&mut rng, 8, 2);
        let exact = denseness_coeff(q.mat(), 3, DensenessMode::Exact).unwrap();
        let loose = denseness_coeff(q.mat(), 3, DensenessMode::Loose).unwrap();
        assert!(loose.kappa + 1e-12 >= exact.kappa);
    }

    #[test]
    fn denseness_cap_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = random_basis(&mut rng, 30, 2);
        match denseness_coeff_with_cap(q.mat(), 10, DensenessMode::Exact, 1000) {
            Err(Error::EnumerationCap { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn denseness_monotone_in_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_basis(&mut rng, 9, 3);
        let mut prev = 0.0;
        for s in 1..=5 {
            let rep = denseness_coeff(q.mat(), s, DensenessMode::Exact).unwrap();
            assert!(rep.kappa + 1e-12 >= prev, "kappa_s not monotone at s={s}");
            prev = rep.kappa;
        }
    }

    #[test]
    fn ric_unit_vector() {
        let p = unit_col(4, 0);
        assert!((ric_projector(&p, 1).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ric_flat_column() {
        let m = Mat::from_fn(4, 1, |_, _| -0.5);
        let p = orthonormalize(&m, 1e-10);
        assert!((ric_projector(&p, 2).unwrap() - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn ric_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let p = random_basis(&mut rng, 8, 2);
            let ours = ric_projector(&p, 2).unwrap();
            let proj = Mat::identity(8).sub(&p.mat().matmul(&p.mat().transpose()));
            let oracle = brute_force_ric(&proj, 2);
            assert!((ours - oracle).abs() <= 1e-10, "ours={ours} oracle={oracle}");
        }
    }

    #[test]
    fn spectral_norm_diag() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = 3.0;
        m[(1, 1)] = -5.0;
        assert!((spectral_norm(&m) - 5.0).abs() <= 1e-12);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(40, 6), 3_838_380);
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn combinations_count() {
        let mut count = 0u64;
        for_each_combination(7, 3, |_| count += 1);
        assert_eq!(count, 35);
    }
}
