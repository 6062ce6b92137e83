//! Small dense matrices.
//!
//! Everything in this crate is at most `d(q+1)` square with `q <= 8`, so a
//! row-major `Vec` with naive products is all that is needed.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::{Real, Scalar};

#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.rows {
            list.entry(&&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        list.finish()
    }
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self {
            rows: n,
            cols: m,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn column_vector(v: Vec<S>) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[S]) {
        assert_eq!(v.len(), self.rows);
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = x.clone();
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn map(&self, mut f: impl FnMut(&S) -> S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(S::zero(), |acc, j| {
                    acc + self[(i, j)].clone() * v[j].clone()
                })
            })
            .collect()
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let two = S::one() + S::one();
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)].clone() + self[(j, i)].clone()) / two.clone()
        })
    }

    /// `A · M · Aᵀ`.
    pub fn congruence(&self, a: &Mat<S>) -> Self {
        &(a * self) * &a.transpose()
    }

    pub fn kron(&self, other: &Mat<S>) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |i, j| {
            self[(i / p, j / q)].clone() * other[(i % p, j % q)].clone()
        })
    }

    /// Copies `block` into `self` starting at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Mat<S>) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .map(|x| x.abs())
            .fold(S::zero(), |acc, x| if x > acc { x } else { acc })
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }
}

impl<S: Real> Mat<S> {
    pub fn frobenius(&self) -> S {
        self.data
            .iter()
            .fold(S::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    /// `‖self − other‖_F / ‖other‖_F`, falling back to the absolute
    /// difference when `other` vanishes.
    pub fn relative_distance(&self, other: &Mat<S>) -> S {
        let diff = (self - other).frobenius();
        let scale = other.frobenius();
        if scale > S::zero() {
            diff / scale
        } else {
            diff
        }
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;

    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Mul for &Mat<S> {
    type Output = Mat<S>;

    fn mul(self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a.clone() * rhs[(k, j)].clone();
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }
}

impl<S: Scalar> Add for &Mat<S> {
    type Output = Mat<S>;

    fn add(self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }
}

impl<S: Scalar> Sub for &Mat<S> {
    type Output = Mat<S>;

    fn sub(self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }
}

impl<S: Scalar> Neg for &Mat<S> {
    type Output = Mat<S>;

    fn neg(self) -> Mat<S> {
        self.map(|x| -x.clone())
    }
}

fn cast<S: Real>(x: f64) -> S {
    S::from_f64_lossy(x)
}

/// Matrix exponential by scaling and squaring with a degree-12 Taylor
/// polynomial.
pub fn expm<S: Real>(m: &Mat<S>) -> Mat<S> {
    assert!(m.is_square());
    let n = m.rows();
    let norm = (0..n)
        .map(|i| (0..n).fold(S::zero(), |acc, j| acc + m[(i, j)].abs()))
        .fold(S::zero(), S::max);
    let mut squarings = 0u32;
    let half = cast::<S>(0.5);
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm *= half;
        squarings += 1;
    }
    let scaled = m.scale(&cast::<S>(0.5f64.powi(squarings as i32)));

    // Horner form of sum_{k<=12} X^k / k!
    let ident = Mat::identity(n);
    let mut acc = ident.clone();
    for k in (1..=12).rev() {
        acc = &ident + &(&scaled * &acc).scale(&(S::one() / S::from_count(k)));
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues and the matrix whose columns are eigenvectors.
pub fn symmetric_eigen<S: Real>(m: &Mat<S>) -> (Vec<S>, Mat<S>) {
    assert!(m.is_square());
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = Mat::identity(n);
    let eps = S::epsilon();
    for _sweep in 0..64 {
        let off: S = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(S::zero(), |acc, (i, j)| acc + a[(i, j)] * a[(i, j)]);
        let diag: S = (0..n).fold(S::zero(), |acc, i| acc + a[(i, i)] * a[(i, i)]);
        if off <= eps * eps * diag || off == S::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == S::zero() {
                    continue;
                }
                let two = S::one() + S::one();
                let tau = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = tau.signum() / (tau.abs() + (S::one() + tau * tau).sqrt());
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

pub fn min_eigenvalue<S: Real>(m: &Mat<S>) -> S {
    symmetric_eigen(m).0.into_iter().fold(S::infinity(), S::min)
}

/// Symmetric PSD projection carried out on the correlation scale so that
/// entries of very different magnitude keep their relative accuracy.
pub fn project_psd<S: Real>(m: &mut Mat<S>) {
    let n = m.rows();
    *m = m.symmetrized();
    for i in 0..n {
        if m[(i, i)] <= S::zero() {
            for k in 0..n {
                m[(i, k)] = S::zero();
                m[(k, i)] = S::zero();
            }
        }
    }
    let scale: Vec<S> = (0..n).map(|i| m[(i, i)].sqrt()).collect();
    let active: Vec<usize> = (0..n).filter(|&i| scale[i] > S::zero()).collect();
    if active.len() < 2 {
        return;
    }
    let corr = Mat::from_fn(active.len(), active.len(), |a, b| {
        let (i, j) = (active[a], active[b]);
        m[(i, j)] / (scale[i] * scale[j])
    });
    let (vals, vecs) = symmetric_eigen(&corr);
    if vals.iter().all(|&l| l >= S::zero()) {
        return;
    }
    let clipped: Vec<S> = vals.into_iter().map(|l| l.max(S::zero())).collect();
    let k = active.len();
    for a in 0..k {
        for b in 0..k {
            let c = (0..k).fold(S::zero(), |acc, e| {
                acc + vecs[(a, e)] * clipped[e] * vecs[(b, e)]
            });
            let (i, j) = (active[a], active[b]);
            m[(i, j)] = c * scale[i] * scale[j];
        }
    }
    *m = m.symmetrized();
}

/// Posterior covariance conditioning: symmetrize, zero out diagonal entries
/// that are pure cancellation noise (below `1e-14` of the predictive
/// variance) together with their row and column, then floor negative
/// eigenvalues at zero.
pub fn floor_covariance<S: Real>(post: &mut Mat<S>, pred: &Mat<S>) {
    *post = post.symmetrized();
    let n = post.rows();
    let cutoff = cast::<S>(1e-14);
    for i in 0..n {
        if post[(i, i)] <= cutoff * pred[(i, i)].abs() {
            for k in 0..n {
                post[(i, k)] = S::zero();
                post[(k, i)] = S::zero();
            }
        }
    }
    project_psd(post);
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kron_of_identities_is_identity() {
        let a = Mat::<f64>::identity(2);
        let b = Mat::<f64>::identity(3);
        assert_eq!(a.kron(&b), Mat::identity(6));
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t: f64 = 0.7;
        let m = Mat::from_rows(vec![vec![0.0, -t], vec![t, 0.0]]);
        let e = expm(&m);
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-14);
        assert_relative_eq!(e[(1, 0)], t.sin(), epsilon = 1e-14);
    }

    #[test]
    fn expm_large_norm_diagonal() {
        let m = Mat::from_rows(vec![vec![-3.0, 0.0], vec![0.0, 2.5]]);
        let e = expm(&m);
        assert_relative_eq!(e[(0, 0)], (-3.0f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(e[(1, 1)], 2.5f64.exp(), max_relative = 1e-13);
    }

    #[test]
    fn jacobi_recovers_spectrum() {
        let m = Mat::from_rows(vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.25],
            vec![0.5, 0.25, 1.0],
        ]);
        let (vals, vecs) = symmetric_eigen(&m);
        for (k, &l) in vals.iter().enumerate() {
            let v = vecs.col(k);
            let mv = m.matvec(&v);
            for i in 0..3 {
                assert_relative_eq!(mv[i], l * v[i], epsilon = 1e-12);
            }
        }
        let trace: f64 = vals.iter().sum();
        assert_relative_eq!(trace, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_clips_negative_direction() {
        let mut m = Mat::from_rows(vec![vec![1.0, 1.0 + 1e-9], vec![1.0 + 1e-9, 1.0]]);
        project_psd(&mut m);
        assert!(min_eigenvalue(&m) >= -1e-15);
    }

    #[test]
    fn projection_leaves_psd_untouched() {
        let orig = Mat::from_rows(vec![vec![1e-20, 1e-12], vec![1e-12, 1.0]]);
        let mut m = orig.clone();
        project_psd(&mut m);
        assert_eq!(m, orig);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(50);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(integral, 2.0 / 11.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
    }
}
