#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_sensing::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut g))
}

pub fn gaussian_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut g = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut g)).collect()
}

/// Orthonormal columns by modified Gram-Schmidt, run twice.
pub fn orthonormal(rows: usize, cols: usize, seed: u64) -> Matrix {
    let a = gaussian(rows, cols, seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = a.col(j).to_vec();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        q.push(v);
    }
    Matrix::from_cols(&q)
}

/// Determinant by Gaussian elimination with partial pivoting on a copy.
pub fn det_oracle(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i)).collect();
    let mut det = 1.0;
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs()))
            .unwrap();
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..n {
            let l = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    det
}

pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

pub fn frob(a: &Matrix) -> f64 {
    a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// `U diag(σ) Vᵀ` with random orthonormal factors.
pub fn with_spectrum(n: usize, m: usize, sigmas: &[f64], seed: u64) -> Matrix {
    let r = sigmas.len();
    let mut u = orthonormal(n, r, seed);
    let v = orthonormal(m, r, seed.wrapping_add(7919));
    u.scale_cols(sigmas);
    naive_matmul(&u, &v.transpose())
}
