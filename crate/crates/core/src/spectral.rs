//! Singular value decomposition and the trailing-energy functional.
//!
//! The decomposition is a one-sided (Hestenes) Jacobi iteration. It is slower
//! than Golub-Kahan for large matrices but the matrices here are small, and
//! Jacobi gives high relative accuracy on the small singular values, which
//! are exactly the ones the rank tests look at.

use nalgebra::{DMatrix, DVector};

use crate::error::{RankError, Result};
use crate::scalar::{from_usize, lit, Real};

const MAX_SWEEPS: usize = 80;

/// Full SVD `mat = left * diag(singular_values) * right^T`.
///
/// For an m x k input (m >= k), `left` is m x m and `right` is k x k, both
/// orthogonal. Singular values are sorted in descending order. Each left
/// vector is oriented so its largest-magnitude entry is positive; the paired
/// right vector is flipped with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T: Real> {
    pub singular_values: DVector<T>,
    pub left: DMatrix<T>,
    pub right: DMatrix<T>,
}

/// Column blocks of the singular vectors at a split index `r0`.
///
/// `p1`/`q1` hold the leading `r0` vectors, `p2`/`q2` the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBlocks<T: Real> {
    pub split: usize,
    pub p1: DMatrix<T>,
    pub p2: DMatrix<T>,
    pub q1: DMatrix<T>,
    pub q2: DMatrix<T>,
}

fn check_input<T: Real>(mat: &DMatrix<T>) -> Result<()> {
    let (m, k) = mat.shape();
    if m < k {
        return Err(RankError::Dimension { rows: m, cols: k });
    }
    if k == 0 {
        return Err(RankError::InvalidInput("matrix has no columns".into()));
    }
    if mat.iter().any(|x| !x.is_finite()) {
        return Err(RankError::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Runs Jacobi sweeps on the column-major buffer `a` (m rows, k columns)
/// until all column pairs are orthogonal. Rotations are mirrored into `v`
/// (k x k, column-major) when given. Returns false if it did not converge.
fn jacobi_sweeps<T: Real>(a: &mut [T], m: usize, k: usize, mut v: Option<&mut [T]>) -> bool {
    // Recomputed inner products carry rounding of a few ulps times the
    // column count; a tighter threshold can cycle on rotations that no
    // longer change anything.
    let eps = T::default_epsilon() * from_usize::<T>(4 * m);
    let one = T::one();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let x = a[p * m + i];
                    let y = a[q * m + i];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = if zeta >= T::zero() {
                    one / (zeta + one.hypot(zeta))
                } else {
                    -one / (-zeta + one.hypot(zeta))
                };
                let c = one / one.hypot(t);
                let s = c * t;
                rotate(a, m, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, k, p, q, c, s);
                }
            }
        }
        if !rotated {
            return true;
        }
    }
    false
}

#[inline]
fn rotate<T: Real>(buf: &mut [T], rows: usize, p: usize, q: usize, c: T, s: T) {
    for i in 0..rows {
        let x = buf[p * rows + i];
        let y = buf[q * rows + i];
        buf[p * rows + i] = c * x - s * y;
        buf[q * rows + i] = s * x + c * y;
    }
}

fn column_norms<T: Real>(a: &[T], m: usize, k: usize) -> Vec<T> {
    (0..k)
        .map(|j| a[j * m..(j + 1) * m].iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
        .collect()
}

fn descending_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap_or(std::cmp::Ordering::Equal));
    order
}

/// Removes from `x` its projection on the first `cols` columns of `basis`,
/// twice for numerical safety.
fn orthogonalize_against<T: Real>(x: &mut DVector<T>, basis: &DMatrix<T>, cols: &[usize]) {
    for _ in 0..2 {
        for &c in cols {
            let u = basis.column(c);
            let proj = u.dot(x);
            x.axpy(-proj, &u, T::one());
        }
    }
}

/// Full SVD with orthogonal completion of the left basis.
pub fn svd<T: Real>(mat: &DMatrix<T>) -> Result<SpectralDecomposition<T>> {
    check_input(mat)?;
    let (m, k) = mat.shape();
    let mut a = mat.clone();
    let mut v = DMatrix::<T>::identity(k, k);
    if !jacobi_sweeps(a.as_mut_slice(), m, k, Some(v.as_mut_slice())) {
        return Err(RankError::Numerical("Jacobi SVD did not converge".into()));
    }

    let norms = column_norms(a.as_slice(), m, k);
    let order = descending_order(&norms);
    let sigma_max = norms[order[0]];
    let tol = sigma_max * T::default_epsilon() * from_usize::<T>(m.max(k));

    let singular_values = DVector::from_iterator(k, order.iter().map(|&j| norms[j]));
    let mut right = DMatrix::<T>::zeros(k, k);
    let mut left = DMatrix::<T>::zeros(m, m);
    let mut filled: Vec<usize> = Vec::with_capacity(m);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &v.column(src));
        let sigma = norms[src];
        if sigma > tol && sigma > T::zero() {
            let mut u: DVector<T> = a.column(src) / sigma;
            orthogonalize_against(&mut u, &left, &filled);
            let norm = u.norm();
            if norm > lit(0.5) {
                left.set_column(dst, &(u / norm));
                filled.push(dst);
            }
        }
    }

    // Fill the remaining left columns from the standard basis.
    let mut missing: Vec<usize> = (0..m).filter(|j| !filled.contains(j)).collect();
    missing.sort_unstable();
    let mut candidate = 0;
    for dst in missing {
        loop {
            if candidate >= m {
                return Err(RankError::Numerical("failed to complete the left basis".into()));
            }
            let mut e = DVector::<T>::zeros(m);
            e[candidate] = T::one();
            candidate += 1;
            orthogonalize_against(&mut e, &left, &filled);
            let norm = e.norm();
            if norm > lit(1e-3) {
                left.set_column(dst, &(e / norm));
                filled.push(dst);
                break;
            }
        }
    }

    for j in 0..m {
        let col = left.column(j);
        let mut best = 0;
        for i in 1..m {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < T::zero() {
            left.column_mut(j).neg_mut();
            if j < k {
                right.column_mut(j).neg_mut();
            }
        }
    }

    Ok(SpectralDecomposition { singular_values, left, right })
}

/// Singular values only, in descending order.
pub fn singular_values<T: Real>(mat: &DMatrix<T>) -> Result<Vec<T>> {
    check_input(mat)?;
    let (m, k) = mat.shape();
    let mut a = mat.clone();
    if !jacobi_sweeps(a.as_mut_slice(), m, k, None) {
        return Err(RankError::Numerical("Jacobi SVD did not converge".into()));
    }
    let mut norms = column_norms(a.as_slice(), m, k);
    norms.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Ok(norms)
}

/// Sum of squares of the singular values past position `r`, from a list
/// sorted in descending order.
pub fn trailing_energy<T: Real>(sorted_singular_values: &[T], r: usize) -> T {
    sorted_singular_values.iter().skip(r).fold(T::zero(), |acc, &s| acc + s * s)
}

/// Squared distance from `mat` to the set of matrices of rank at most `r`:
/// the sum of the squared singular values beyond the r-th.
pub fn phi_r<T: Real>(mat: &DMatrix<T>, r: usize) -> Result<T> {
    let k = mat.ncols();
    if r > k {
        return Err(RankError::InvalidArgument(format!("rank {r} exceeds column count {k}")));
    }
    Ok(trailing_energy(&singular_values(mat)?, r))
}

/// Splits the singular vectors at `r0`.
pub fn partition<T: Real>(dec: &SpectralDecomposition<T>, r0: usize) -> Result<SubspaceBlocks<T>> {
    let m = dec.left.nrows();
    let k = dec.right.nrows();
    if r0 > k {
        return Err(RankError::InvalidArgument(format!("split {r0} exceeds column count {k}")));
    }
    Ok(SubspaceBlocks {
        split: r0,
        p1: dec.left.columns(0, r0).into_owned(),
        p2: dec.left.columns(r0, m - r0).into_owned(),
        q1: dec.right.columns(0, r0).into_owned(),
        q2: dec.right.columns(r0, k - r0).into_owned(),
    })
}

impl<T: Real> SpectralDecomposition<T> {
    /// Rebuilds the original matrix.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let m = self.left.nrows();
        let k = self.right.nrows();
        let mut sigma = DMatrix::<T>::zeros(m, k);
        for j in 0..k {
            sigma[(j, j)] = self.singular_values[j];
        }
        &self.left * sigma * self.right.transpose()
    }

    pub fn rows(&self) -> usize {
        self.left.nrows()
    }

    pub fn cols(&self) -> usize {
        self.right.nrows()
    }

    pub fn phi(&self, r: usize) -> T {
        trailing_energy(self.singular_values.as_slice(), r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn orthogonality_error(q: &DMatrix<f64>) -> f64 {
        let n = q.ncols();
        (q.transpose() * q - DMatrix::<f64>::identity(n, n)).amax()
    }

    // Independent oracle: eigenvalues of A^T A.
    fn oracle_squared_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
        let eig = SymmetricEigen::new(a.transpose() * a);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
        vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
        vals
    }

    #[test]
    fn converges_when_residual_sits_at_rounding_level() {
        // Once cycled forever under a threshold of one ulp.
        let a = DMatrix::from_column_slice(2, 2, &[-1.3518278135726884, -0.9844610738985543, -0.2617105308873722, 0.9055560149359092]);
        let dec = svd(&a).unwrap();
        assert!((&dec.reconstruct() - &a).norm() < 1e-14);
        let oracle = oracle_squared_singular_values(&a);
        for (s, o) in dec.singular_values.iter().zip(&oracle) {
            assert!((s * s - o).abs() < 1e-13);
        }
    }

    #[test]
    fn diagonal_tall_matrix() {
        let a = DMatrix::from_row_slice(4, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let dec = svd(&a).unwrap();
        assert_eq!(dec.singular_values.as_slice(), &[3.0, 2.0, 1.0]);
        assert!((dec.left.clone() - DMatrix::identity(4, 4)).amax() < 1e-15);
        assert!((dec.right.clone() - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn rank_one_square() {
        let a = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let dec = svd(&a).unwrap();
        assert!((dec.singular_values[0] - 2.0).abs() < 1e-14);
        assert!(dec.singular_values[1].abs() < 1e-14);
        assert!(phi_r(&a, 1).unwrap() < 1e-28);
        assert!((dec.reconstruct() - a).amax() < 1e-14);
    }

    #[test]
    fn zero_matrix_gives_identity_bases() {
        let dec = svd(&DMatrix::<f64>::zeros(3, 2)).unwrap();
        assert!(dec.singular_values.iter().all(|&s| s == 0.0));
        assert_eq!(dec.left, DMatrix::identity(3, 3));
        assert_eq!(dec.right, DMatrix::identity(2, 2));
    }

    #[test]
    fn wide_and_non_finite_inputs_are_rejected() {
        assert!(matches!(svd(&DMatrix::<f64>::zeros(2, 3)), Err(RankError::Dimension { rows: 2, cols: 3 })));
        let mut a = DMatrix::<f64>::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&a), Err(RankError::InvalidInput(_))));
    }

    #[test]
    fn single_precision_instantiation() {
        let a = DMatrix::<f32>::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let dec = svd(&a).unwrap();
        assert!((dec.reconstruct() - &a).amax() < 1e-5);
        // Oracle values for this matrix: sqrt of the eigenvalues of A^T A.
        let a64 = a.map(|x| x as f64);
        let oracle = oracle_squared_singular_values(&a64);
        for (s, o) in dec.singular_values.iter().zip(oracle) {
            assert!(((*s as f64) - o.sqrt()).abs() < 1e-5);
        }
    }

    #[test]
    fn partition_shapes() {
        let a = DMatrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64 + if i == j { 2.0 } else { 0.0 });
        let dec = svd(&a).unwrap();
        let b = partition(&dec, 1).unwrap();
        assert_eq!(b.p1.shape(), (5, 1));
        assert_eq!(b.p2.shape(), (5, 4));
        assert_eq!(b.q1.shape(), (3, 1));
        assert_eq!(b.q2.shape(), (3, 2));
        let full = partition(&dec, 3).unwrap();
        assert_eq!(full.q2.ncols(), 0);
        assert!(partition(&dec, 4).is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..=6, 0usize..=3).prop_flat_map(|(k, extra)| {
            let m = k + extra;
            proptest::collection::vec(-5.0f64..5.0, m * k).prop_map(move |v| DMatrix::from_vec(m, k, v))
        })
    }

    // Low-rank products exercise the zero-singular-value path.
    fn low_rank_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (2usize..=6, 0usize..=2, 0usize..=5).prop_flat_map(|(k, extra, rank)| {
            let m = k + extra;
            let rank = rank.min(k);
            (
                proptest::collection::vec(-3.0f64..3.0, m * rank),
                proptest::collection::vec(-3.0f64..3.0, rank * k),
            )
                .prop_map(move |(a, b)| DMatrix::from_vec(m, rank, a) * DMatrix::from_vec(rank, k, b))
        })
    }

    fn random_orthogonal(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] + if i == j { 3.0 } else { 0.0 });
        raw.qr().q()
    }

    proptest! {
        #[test]
        fn decomposition_invariants(a in prop_oneof![matrix_strategy(), low_rank_strategy()]) {
            let dec = svd(&a).unwrap();
            let scale = a.amax().max(1.0);
            prop_assert!((dec.reconstruct() - &a).amax() <= 1e-12 * scale * 10.0);
            prop_assert!(orthogonality_error(&dec.left) < 1e-12);
            prop_assert!(orthogonality_error(&dec.right) < 1e-12);
            let s = dec.singular_values.as_slice();
            prop_assert!(s.iter().all(|&x| x >= 0.0));
            prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
            for j in 0..dec.left.ncols() {
                let col = dec.left.column(j);
                let big = col.iter().cloned().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
                prop_assert!(big > 0.0);
            }
            let oracle = oracle_squared_singular_values(&a);
            let s1 = s[0].max(1e-300);
            for (x, o) in s.iter().zip(oracle) {
                prop_assert!((x * x - o).abs() <= 1e-10 * s1 * s1 + 1e-14);
            }
        }

        #[test]
        fn phi_is_monotone_and_vanishes_at_full_rank(a in matrix_strategy()) {
            let k = a.ncols();
            let values: Vec<f64> = (0..=k).map(|r| phi_r(&a, r).unwrap()).collect();
            prop_assert!(values.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            prop_assert_eq!(values[k], 0.0);
            prop_assert!((values[0] - a.norm_squared()).abs() <= 1e-10 * a.norm_squared().max(1.0));
        }

        #[test]
        fn phi_is_orthogonally_invariant(a in matrix_strategy(), seed in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let (m, k) = a.shape();
            let u = random_orthogonal(m, &seed);
            let w = random_orthogonal(k, &seed[3..]);
            let b = &u * &a * w.transpose();
            for r in 0..=k {
                let (x, y) = (phi_r(&a, r).unwrap(), phi_r(&b, r).unwrap());
                prop_assert!((x - y).abs() <= 1e-9 * a.norm_squared().max(1.0));
            }
        }

        #[test]
        fn phi_is_minimum_over_orthonormal_frames(a in matrix_strategy(), r_frac in 0.0f64..1.0, seed in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let k = a.ncols();
            let r = ((k as f64) * r_frac) as usize;
            let frame = random_orthogonal(k, &seed).columns(0, k - r).into_owned();
            let energy = (&a * &frame).norm_squared();
            let phi = phi_r(&a, r).unwrap();
            prop_assert!(energy >= phi - 1e-9 * a.norm_squared().max(1.0));
            // The minimiser is the trailing block of right singular vectors.
            let dec = svd(&a).unwrap();
            let q2 = partition(&dec, r).unwrap().q2;
            prop_assert!(((&a * q2).norm_squared() - phi).abs() <= 1e-9 * a.norm_squared().max(1.0));
        }
    }
}
