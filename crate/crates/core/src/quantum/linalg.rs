use std::ops::{Index, IndexMut, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};

pub type C64 = Complex64;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { n, data }
    }

    /// Builds a matrix whose columns are `columns`.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let n = columns.len();
        Self::from_fn(n, |i, j| columns[j][i])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.n).map(|j| self.column(j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        ComplexMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        Self::from_fn(n * m, |r, c| self[(r / m, c / m)] * other[(r % m, c % m)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `⟨u|M|v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        u.iter()
            .zip(self.mul_vec(v))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `(M + M†) / 2`, exactly Hermitian.
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        for i in 0..self.n {
            m[(i, i)].im = 0.0;
        }
        m
    }

    /// `max |U†U - I|`.
    pub fn unitarity_residual(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.n))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// as columns.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let residual = m.hermiticity_residual();
    if !m.is_finite() || residual > 1e-10 {
        return domain(format!("matrix is not Hermitian (residual {residual:e})"));
    }
    let eig = m.hermitian_part().to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Modified Gram–Schmidt on a list of vectors, in place.
pub fn orthonormalize(vectors: &mut [Vec<C64>]) {
    for k in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(k);
        let v = &mut rest[0];
        for u in done.iter() {
            let c = inner(u, v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        let nv = norm(v);
        for vi in v.iter_mut() {
            *vi /= nv;
        }
    }
}

/// Haar-random unitary from the columns of a complex Gaussian matrix.
///
/// Gram–Schmidt yields the QR factor whose `R` has a positive real
/// diagonal, which is the phase convention that makes `Q` Haar distributed.
pub fn random_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut columns: Vec<Vec<C64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    orthonormalize(&mut columns);
    ComplexMatrix::from_columns(&columns)
}

pub fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    random_unitary_with(d, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// Columns `e^{2πi jk/d} / √d`.
pub fn fourier_matrix(d: usize) -> ComplexMatrix {
    let s = 1.0 / (d as f64).sqrt();
    ComplexMatrix::from_fn(d, |j, k| {
        C64::from_polar(s, 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn eig_identity_and_diagonal() {
        let (vals, vecs) = hermitian_eig(&ComplexMatrix::identity(3)).unwrap();
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(vecs.unitarity_residual() < 1e-12);

        let (vals, vecs) = hermitian_eig(&ComplexMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
        // eigenvector columns are permuted unit vectors
        for (col, row) in [(0, 1), (1, 2), (2, 0)] {
            assert!((vecs[(row, col)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(hermitian_eig(&m).is_err());
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        g.hermitian_part()
    }

    #[test]
    fn random_unitary_examples() {
        let u = random_unitary(1, 3);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        for d in 1..=8 {
            assert!(random_unitary(d, d as u64).unitarity_residual() <= 1e-10);
        }
        assert_eq!(random_unitary(5, 42), random_unitary(5, 42));
        assert_ne!(random_unitary(5, 42), random_unitary(5, 43));
    }

    #[test]
    fn haar_first_entry_moment() {
        // E|U_00|^2 = 1/d for Haar unitaries
        let d = 4;
        let n = 4000;
        let mean: f64 = (0..n)
            .map(|s| random_unitary(d, s).as_slice()[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.015, "{mean}");
    }

    #[test]
    fn fourier_is_unitary() {
        for d in 2..8 {
            assert!(fourier_matrix(d).unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn kron_and_trace() {
        let a = ComplexMatrix::diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::diagonal(&[3.0, 5.0]);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 4);
        assert_eq!(k.trace(), C64::new(3.0 + 5.0 + 6.0 + 10.0, 0.0));
        assert_eq!(k[(3, 3)], C64::new(10.0, 0.0));
    }

    proptest! {
        #[test]
        fn eig_reconstructs(seed in any::<u64>(), n in 1usize..7) {
            let m = random_hermitian(n, seed);
            let (vals, q) = hermitian_eig(&m).unwrap();
            prop_assert!(q.unitarity_residual() <= 1e-9);
            let rebuilt = &(&q * &ComplexMatrix::diagonal(&vals)) * &q.adjoint();
            prop_assert!(rebuilt.max_abs_diff(&m) <= 1e-9);
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
