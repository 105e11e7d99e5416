//! Small dense helpers for the 4x4 phase-space problems.

use nalgebra::{Matrix4, SMatrix, SVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat4 = Matrix4<f64>;

/// Symplectic form for the ordering (X_S, P_S, X_M, P_M), `[X, P] = i`.
pub fn symplectic_form() -> Mat4 {
    let mut j = Mat4::zeros();
    j[(0, 1)] = 1.0;
    j[(1, 0)] = -1.0;
    j[(2, 3)] = 1.0;
    j[(3, 2)] = -1.0;
    j
}

/// Largest real part of the eigenvalues.
pub fn spectral_abscissa(a: &Mat4) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Mat4) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn min_eigenvalue_sym(m: &Mat4) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.min()
}

/// Smallest eigenvalue of the Hermitian matrix `Σ + iJ/2`.
///
/// Evaluated through the real 8x8 embedding `[[S, -K], [K, S]]`, whose
/// spectrum is that of `S + iK` with every eigenvalue doubled.
pub fn heisenberg_min_eigenvalue(sigma: &Mat4) -> f64 {
    let s = (sigma + sigma.transpose()) * 0.5;
    let k = symplectic_form() * 0.5;
    let mut big = SMatrix::<f64, 8, 8>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            big[(i, j)] = s[(i, j)];
            big[(i + 4, j + 4)] = s[(i, j)];
            big[(i, j + 4)] = -k[(i, j)];
            big[(i + 4, j)] = k[(i, j)];
        }
    }
    SymmetricEigen::new(big).eigenvalues.min()
}

pub fn symmetrize(m: &Mat4) -> Mat4 {
    (m + m.transpose()) * 0.5
}

const PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).unwrap()
}

/// Solves `A X + X Aᵀ + Q = 0` for symmetric `X`.
///
/// The ten independent entries of `X` are found from one dense linear
/// solve. `A` must be Hurwitz.
pub fn lyapunov(a: &Mat4, q: &Mat4) -> Result<Mat4> {
    let abscissa = spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(Error::Rejected(format!(
            "drift matrix is not Hurwitz (spectral abscissa {abscissa:e})"
        )));
    }
    let q = symmetrize(q);
    let mut lhs = SMatrix::<f64, 10, 10>::zeros();
    let mut rhs = SVector::<f64, 10>::zeros();
    for (row, &(i, j)) in PAIRS.iter().enumerate() {
        for k in 0..4 {
            lhs[(row, pair_index(k, j))] += a[(i, k)];
            lhs[(row, pair_index(i, k))] += a[(j, k)];
        }
        rhs[row] = -q[(i, j)];
    }
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Rejected("singular Lyapunov operator".into()))?;
    let mut out = Mat4::zeros();
    for (row, &(i, j)) in PAIRS.iter().enumerate() {
        out[(i, j)] = x[row];
        out[(j, i)] = x[row];
    }
    Ok(out)
}

/// Residual `A X + X Aᵀ + Q`.
pub fn lyapunov_residual(a: &Mat4, x: &Mat4, q: &Mat4) -> Mat4 {
    a * x + x * a.transpose() + q
}
