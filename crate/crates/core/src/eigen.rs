//! Ground-state oracle for Pauli Hamiltonians.
//!
//! Small Hilbert spaces are diagonalized densely (real symmetric matrix, or
//! the real `2N × 2N` embedding of a complex Hermitian one). Larger ones, up
//! to [`MAX_ORACLE_QUBITS`], go through Lanczos with full
//! reorthogonalization. Either way the returned pair satisfies
//! `‖Hv − e·v‖ ≤ RESIDUAL_TOL`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Result, VddError};
use crate::exact::StateVector;
use crate::pauli::PauliHamiltonian;
use crate::rng::rng_from_seed;

pub const MAX_ORACLE_QUBITS: usize = 12;
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Real-symmetric problems up to this dimension are solved densely.
const DENSE_REAL_DIM: usize = 1024;
/// Complex problems up to this dimension are solved densely (embedding
/// doubles the size).
const DENSE_COMPLEX_DIM: usize = 512;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;
const LANCZOS_MAX_KRYLOV: usize = 300;
const LANCZOS_RESTARTS: usize = 20;

/// Smallest eigenvalue and a unit eigenvector.
pub fn ground_energy(h: &PauliHamiltonian) -> Result<(f64, StateVector)> {
    check_capacity(h)?;
    let dim = 1usize << h.num_qubits();
    let dense = if h.is_real() {
        dim <= DENSE_REAL_DIM
    } else {
        dim <= DENSE_COMPLEX_DIM
    };
    if dense {
        dense_ground_energy(h)
    } else {
        lanczos_ground_energy(h)
    }
}

fn check_capacity(h: &PauliHamiltonian) -> Result<()> {
    if h.num_qubits() > MAX_ORACLE_QUBITS {
        return Err(VddError::Capacity(format!(
            "exact ground energy supports at most {MAX_ORACLE_QUBITS} qubits, got {}; \
             use VMC mode with a user-supplied reference energy",
            h.num_qubits()
        )));
    }
    Ok(())
}

fn residual(h: &PauliHamiltonian, e: f64, v: &[Complex64]) -> f64 {
    h.apply(v)
        .iter()
        .zip(v)
        .map(|(hv, x)| (hv - x * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn finish(h: &PauliHamiltonian, e: f64, v: Vec<Complex64>) -> Result<(f64, StateVector)> {
    let res = residual(h, e, &v);
    if res > RESIDUAL_TOL {
        return Err(VddError::Capacity(format!(
            "eigensolver residual {res:e} exceeds {RESIDUAL_TOL:e}"
        )));
    }
    Ok((e, StateVector::new(h.num_qubits(), v)?))
}

fn lowest(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> usize {
    eig.eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty spectrum")
}

/// Full dense diagonalization.
pub fn dense_ground_energy(h: &PauliHamiltonian) -> Result<(f64, StateVector)> {
    check_capacity(h)?;
    let m = h.to_dense();
    let dim = m.nrows();
    let (e, v) = if h.is_real() {
        let real = m.map(|z| z.re);
        let eig = SymmetricEigen::new(real);
        let k = lowest(&eig);
        let v: Vec<Complex64> = eig
            .eigenvectors
            .column(k)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        (eig.eigenvalues[k], v)
    } else {
        // [[A, −B], [B, A]] has the spectrum of A + iB, each value twice.
        let mut emb = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = m[(i, j)];
                emb[(i, j)] = z.re;
                emb[(i + dim, j + dim)] = z.re;
                emb[(i, j + dim)] = -z.im;
                emb[(i + dim, j)] = z.im;
            }
        }
        let eig = SymmetricEigen::new(emb);
        let k = lowest(&eig);
        let col = eig.eigenvectors.column(k);
        let mut v: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new(col[i], col[i + dim]))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        (eig.eigenvalues[k], v)
    };
    finish(h, e, v)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    norm
}

/// Lanczos with full reorthogonalization and restarts from the Ritz vector.
pub fn lanczos_ground_energy(h: &PauliHamiltonian) -> Result<(f64, StateVector)> {
    check_capacity(h)?;
    let dim = 1usize << h.num_qubits();
    let mut rng = rng_from_seed(LANCZOS_SEED);
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    normalize(&mut start);

    let mut best = (f64::INFINITY, start.clone());
    for _ in 0..LANCZOS_RESTARTS {
        let (e, v) = lanczos_pass(h, &start);
        let res = residual(h, e, &v);
        if res <= 0.1 * RESIDUAL_TOL {
            return finish(h, e, v);
        }
        best = (e, v.clone());
        start = v;
    }
    finish(h, best.0, best.1)
}

fn lanczos_pass(h: &PauliHamiltonian, start: &[Complex64]) -> (f64, Vec<Complex64>) {
    let dim = start.len();
    let kmax = LANCZOS_MAX_KRYLOV.min(dim);
    let mut basis: Vec<Vec<Complex64>> = vec![start.to_vec()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    loop {
        let k = basis.len() - 1;
        h.apply_into(&basis[k], &mut w);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        // Two rounds of Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // Residual estimate of the current Ritz pair, checked every 10 steps.
        let converged = alpha.len().is_multiple_of(10) && {
            let (_, s) = tridiagonal_lowest(&alpha, &beta);
            (b * s[s.len() - 1]).abs() < 1e-12
        };
        if converged || b < 1e-12 || basis.len() >= kmax {
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        next.iter_mut().for_each(|z| *z /= b);
        basis.push(next);
    }
    let (theta, s) = tridiagonal_lowest(&alpha, &beta);
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    for (coef, q) in s.iter().zip(&basis) {
        v.iter_mut().zip(q).for_each(|(x, y)| *x += y * *coef);
    }
    normalize(&mut v);
    (theta, v)
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let j = lowest(&eig);
    (eig.eigenvalues[j], eig.eigenvectors.column(j).into_owned())
}
