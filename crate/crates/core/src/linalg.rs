//! Dense symmetric factorizations, Kronecker matrix-vector products, SPD
//! square roots, and a packed symmetric matrix for grids too large to hold
//! in full square storage.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Escalating diagonal regularization for nearly singular kernel matrices.
///
/// λ = 0 is attempted first, then `initial_scale`·(mean diagonal) growing by
/// `growth` up to `max_scale`·(mean diagonal).
#[derive(Debug, Clone, Copy)]
pub struct JitterPolicy {
    pub initial_scale: f64,
    pub max_scale: f64,
    pub growth: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            initial_scale: 1e-10,
            max_scale: 1e-6,
            growth: 10.0,
        }
    }
}

impl JitterPolicy {
    /// No regularization at all; the bare factorization must succeed.
    pub fn none() -> Self {
        Self {
            initial_scale: 0.0,
            max_scale: 0.0,
            growth: 10.0,
        }
    }

    fn ladder(&self, mean_diag: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        if self.initial_scale > 0.0 {
            let mut s = self.initial_scale;
            while s <= self.max_scale * (1.0 + 1e-12) {
                out.push(s * mean_diag);
                s *= self.growth;
            }
        }
        out
    }
}

/// Lower-triangular Cholesky factor together with the jitter that was added
/// to the diagonal to obtain it.
#[derive(Debug, Clone)]
pub struct LowerTriangularFactor {
    l: DMatrix<f64>,
    jitter: f64,
}

impl LowerTriangularFactor {
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn size(&self) -> usize {
        self.l.nrows()
    }

    /// Solve L Lᵀ x = b.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut DVector<f64>) {
        self.l.solve_lower_triangular_mut(b);
        self.l.tr_solve_lower_triangular_mut(b);
    }

    /// Solve L y = b (forward substitution only).
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut y = b.clone();
        self.l.solve_lower_triangular_mut(&mut y);
        y
    }

    /// Solve L Lᵀ X = B column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        self.l.solve_lower_triangular_mut(&mut x);
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }
}

/// Cholesky factorization with the jitter policy applied on failure.
///
/// Returns L with L Lᵀ = M + λI for the smallest successful λ from the
/// policy ladder; the failing pivot index is reported when even the largest
/// jitter does not rescue positivity.
pub fn cholesky(m: &DMatrix<f64>, policy: &JitterPolicy) -> Result<LowerTriangularFactor> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "cholesky expects a square matrix");
    let mean_diag = m.diagonal().iter().sum::<f64>() / n.max(1) as f64;
    let mut last_pivot = 0;
    for &lambda in policy.ladder(mean_diag.abs()).iter() {
        let mut work = m.clone();
        if lambda > 0.0 {
            for i in 0..n {
                work[(i, i)] += lambda;
            }
        }
        match cholesky_in_place_blocked(&mut work) {
            Ok(()) => {
                return Ok(LowerTriangularFactor {
                    l: work,
                    jitter: lambda,
                })
            }
            Err(pivot) => last_pivot = pivot,
        }
    }
    Err(Error::NotPositiveDefinite {
        size: n,
        pivot: last_pivot,
        jitter: policy.max_scale * mean_diag.abs(),
    })
}

const CHOL_BLOCK: usize = 192;

/// Right-looking blocked Cholesky; the trailing update runs block column by
/// block column so only the lower triangle is touched. Err carries the index
/// of the failing pivot.
fn cholesky_in_place_blocked(a: &mut DMatrix<f64>) -> std::result::Result<(), usize> {
    let n = a.nrows();
    let mut k = 0;
    while k < n {
        let b = CHOL_BLOCK.min(n - k);
        factor_diag_block(a, k, b)?;
        let m = n - k - b;
        if m > 0 {
            // panel <- panel * L11^{-T}, in a scratch copy to keep borrows simple
            let mut panel = a.view((k + b, k), (m, b)).clone_owned();
            {
                let ps = panel.as_mut_slice();
                for j in 0..b {
                    let (left, right) = ps.split_at_mut(j * m);
                    let colj = &mut right[0..m];
                    for q in 0..j {
                        let l = a[(k + j, k + q)];
                        let colq = &left[q * m..(q + 1) * m];
                        for (x, &y) in colj.iter_mut().zip(colq) {
                            *x -= l * y;
                        }
                    }
                    let inv = 1.0 / a[(k + j, k + j)];
                    for x in colj.iter_mut() {
                        *x *= inv;
                    }
                }
            }
            a.view_mut((k + b, k), (m, b)).copy_from(&panel);
            let panel_t = panel.transpose();
            let mut c0 = 0;
            while c0 < m {
                let w = CHOL_BLOCK.min(m - c0);
                a.view_mut((k + b + c0, k + b + c0), (m - c0, w)).gemm(
                    -1.0,
                    &panel.view((c0, 0), (m - c0, b)),
                    &panel_t.view((0, c0), (b, w)),
                    1.0,
                );
                c0 += w;
            }
        }
        k += b;
    }
    // zero the strict upper triangle so the factor is a clean L
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

fn factor_diag_block(a: &mut DMatrix<f64>, k: usize, b: usize) -> std::result::Result<(), usize> {
    for j in 0..b {
        let d = a[(k + j, k + j)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(k + j);
        }
        let d = d.sqrt();
        a[(k + j, k + j)] = d;
        let inv = 1.0 / d;
        for i in j + 1..b {
            a[(k + i, k + j)] *= inv;
        }
        for c in j + 1..b {
            let l = a[(k + c, k + j)];
            for i in c..b {
                a[(k + i, k + c)] -= a[(k + i, k + j)] * l;
            }
        }
    }
    Ok(())
}

/// B with B Bᵀ = M⁻¹, computed as B = L⁻ᵀ by a triangular solve against the
/// identity. B is upper-triangular; M⁻¹ is never formed.
pub fn inverse_covariance_factor(m: &DMatrix<f64>, policy: &JitterPolicy) -> Result<DMatrix<f64>> {
    let f = cholesky(m, policy)?;
    let n = f.size();
    let mut b = DMatrix::identity(n, n);
    // L Bᵀ = I  =>  Bᵀ = L⁻¹, column by column
    f.lower().solve_lower_triangular_mut(&mut b);
    Ok(b.transpose())
}

/// A Kronecker product ⊗_j A_j held as its small factors.
#[derive(Debug, Clone)]
pub struct KroneckerFactors {
    factors: Vec<DMatrix<f64>>,
}

impl KroneckerFactors {
    pub fn new(factors: Vec<DMatrix<f64>>) -> Self {
        assert!(!factors.is_empty());
        Self { factors }
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn input_len(&self) -> usize {
        self.factors.iter().map(|f| f.ncols()).product()
    }

    pub fn output_len(&self) -> usize {
        self.factors.iter().map(|f| f.nrows()).product()
    }

    /// (⊗_j A_j) v without materializing the product; the vector is indexed
    /// with the last factor fastest. Cost O((Σ_j n_j)·Π_j n_j) for square
    /// factors.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                actual: v.len(),
            });
        }
        let d = self.factors.len();
        let mut cur = v.to_vec();
        // process axes last to first; `right` counts already-transformed sizes
        let mut right = 1usize;
        for j in (0..d).rev() {
            let fac = &self.factors[j];
            let (m, n) = (fac.nrows(), fac.ncols());
            let left: usize = self.factors[..j].iter().map(|f| f.ncols()).product();
            let mut next = vec![0.0; left * m * right];
            for l in 0..left {
                let xoff = l * n * right;
                let yoff = l * m * right;
                for o in 0..m {
                    let yrow = &mut next[yoff + o * right..yoff + (o + 1) * right];
                    for i in 0..n {
                        let a = fac[(o, i)];
                        if a == 0.0 {
                            continue;
                        }
                        let xrow = &cur[xoff + i * right..xoff + (i + 1) * right];
                        for (yv, &xv) in yrow.iter_mut().zip(xrow) {
                            *yv += a * xv;
                        }
                    }
                }
            }
            cur = next;
            right *= m;
        }
        Ok(cur)
    }
}

/// Kronecker matrix-vector product; see [`KroneckerFactors::matvec`].
pub fn kron_matvec(factors: &KroneckerFactors, v: &[f64]) -> Result<Vec<f64>> {
    factors.matvec(v)
}

/// Principal square root of a symmetric PSD matrix via eigendecomposition.
/// Negative eigenvalues are clipped to zero; the clip count is returned with
/// the root.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > 1e-8 * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut clipped = 0;
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            if l < 0.0 {
                clipped += 1;
                0.0
            } else {
                l.sqrt()
            }
        })
        .collect();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(r);
    }
    Ok((&scaled * eig.eigenvectors.transpose(), clipped))
}

/// Symmetric matrix stored as the packed lower triangle, row by row.
/// n_sg×n_sg kernel matrices on fine sparse grids do not fit in full square
/// storage at desk scale.
#[derive(Debug, Clone)]
pub struct PackedSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl PackedSymmetric {
    /// Fill from a closure over (i, j) with i ≥ j.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * (r + 1) / 2 + c]
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.data[i * (i + 1) / 2 + i])
    }

    /// y = A x. Each packed row is streamed once; the dot and axpy passes of
    /// a row run back to back so the second pass hits cache.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        let mut off = 0usize;
        for i in 0..self.n {
            let row = &self.data[off..off + i + 1];
            let xi = x[i];
            let (head, diag) = row.split_at(i);
            let mut acc = 0.0;
            for (&a, &xv) in head.iter().zip(&x[..i]) {
                acc += a * xv;
            }
            y[i] += acc + diag[0] * xi;
            for (yv, &a) in y[..i].iter_mut().zip(head) {
                *yv += a * xi;
            }
            off += i + 1;
        }
        y
    }

    /// Dense principal submatrix at the given positions.
    pub fn gather(&self, idx: &[usize]) -> DMatrix<f64> {
        let k = idx.len();
        let mut m = DMatrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().take(a + 1) {
                let v = self.get(i, j);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky(&DMatrix::identity(3, 3), &JitterPolicy::default()).unwrap();
        assert_eq!(f.jitter(), 0.0);
        assert_relative_eq!(f.lower().clone(), DMatrix::identity(3, 3), epsilon = 1e-14);
    }

    #[test]
    fn cholesky_2x2_example() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky(&m, &JitterPolicy::default()).unwrap();
        let rec = f.lower() * f.lower().transpose();
        assert_relative_eq!(rec, m, epsilon = 1e-12);
        assert_relative_eq!(f.lower()[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.lower()[(1, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(f.lower()[(1, 1)], 2.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn cholesky_zero_matrix_fails_with_pivot() {
        let m = DMatrix::zeros(4, 4);
        match cholesky(&m, &JitterPolicy::default()) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_reports_jitter_on_semidefinite() {
        // rank-1 matrix; only jitter makes it factorizable
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let m = &v * v.transpose();
        let f = cholesky(&m, &JitterPolicy::default()).unwrap();
        assert!(f.jitter() > 0.0);
        let rec = f.lower() * f.lower().transpose();
        let target = &m + DMatrix::identity(3, 3) * f.jitter();
        let rel = (&rec - &target).norm() / target.norm();
        assert!(rel < 1e-10, "relative reconstruction error {rel}");
    }

    #[test]
    fn blocked_cholesky_matches_reconstruction_on_large_matrix() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = random_spd(300, &mut rng);
        let f = cholesky(&m, &JitterPolicy::none()).unwrap();
        let rec = f.lower() * f.lower().transpose();
        let rel = (&rec - &m).norm() / m.norm();
        assert!(rel < 1e-10, "relative reconstruction error {rel}");
    }

    #[test]
    fn inverse_factor_examples() {
        let policy = JitterPolicy::default();
        let b = inverse_covariance_factor(&DMatrix::identity(3, 3), &policy).unwrap();
        assert_relative_eq!(b, DMatrix::identity(3, 3), epsilon = 1e-14);

        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let b = inverse_covariance_factor(&m, &policy).unwrap();
        assert_relative_eq!(b[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(b[(1, 1)], 1.0 / 3.0, epsilon = 1e-14);

        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let b = inverse_covariance_factor(&m, &policy).unwrap();
        // upper triangular, and B Bᵀ M = I
        assert_eq!(b[(1, 0)], 0.0);
        let prod = &b * b.transpose() * &m;
        assert_relative_eq!(prod, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn kron_matvec_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        let k = KroneckerFactors::new(vec![id.clone(), id.clone()]);
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(k.matvec(&v).unwrap(), v.to_vec());

        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = KroneckerFactors::new(vec![a, id]);
        let y = k.matvec(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 3.0, 0.0]);

        let k2 = KroneckerFactors::new(vec![DMatrix::identity(2, 2)]);
        assert!(k2.matvec(&[1.0]).is_err());
    }

    fn dense_kron(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut out = DMatrix::from_element(1, 1, 1.0);
        for f in factors {
            out = out.kronecker(f);
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn kron_matvec_matches_dense(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = rng.random_range(1..=3);
            let sizes: Vec<usize> = (0..d).map(|_| rng.random_range(1..=6)).collect();
            let factors: Vec<DMatrix<f64>> = sizes
                .iter()
                .map(|&n| DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5))
                .collect();
            let total: usize = sizes.iter().product();
            let v: Vec<f64> = (0..total).map(|_| rng.random::<f64>() - 0.5).collect();
            let kf = KroneckerFactors::new(factors.clone());
            let fast = kf.matvec(&v).unwrap();
            let dense = dense_kron(&factors) * DVector::from_vec(v);
            for (a, b) in fast.iter().zip(dense.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn spd_sqrt_examples() {
        let (s, c) = spd_sqrt(&DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(s, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert_eq!(c, 0);

        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let (s, _) = spd_sqrt(&m).unwrap();
        assert_relative_eq!(s[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], 3.0, epsilon = 1e-12);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = random_spd(5, &mut rng);
        let (s, _) = spd_sqrt(&m).unwrap();
        let rel = (&s * &s - &m).norm() / m.norm();
        assert!(rel < 1e-8, "relative error {rel}");

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(spd_sqrt(&asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn packed_symmetric_matvec_matches_dense() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = random_spd(37, &mut rng);
        let p = PackedSymmetric::from_fn(37, |i, j| m[(i, j)]);
        let x: Vec<f64> = (0..37).map(|_| rng.random::<f64>() - 0.5).collect();
        let y = p.matvec(&x);
        let yd = &m * DVector::from_vec(x.clone());
        for (a, b) in y.iter().zip(yd.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        assert_eq!(p.get(3, 7), p.get(7, 3));
        let sub = p.gather(&[2, 5, 11]);
        assert_relative_eq!(sub[(0, 2)], m[(2, 11)], epsilon = 1e-15);
    }
}
