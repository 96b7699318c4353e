//! Small dense linear algebra used as an oracle and by the channel simulator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Dense matrices are refused above this many qubits.
pub const MAX_DENSE_QUBITS: usize = 12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(i s H)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &CMatrix, s: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut vd = v.clone();
    for (j, mut col) in vd.column_iter_mut().enumerate() {
        col *= Complex64::from_polar(1.0, s * eig.eigenvalues[j]);
    }
    vd * v.adjoint()
}

fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    ((m + m.adjoint()) * c(0.5, 0.0)).symmetric_eigenvalues()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().fold(0.0f64, |acc, &l| acc.max(l.abs()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().fold(f64::INFINITY, |acc, &l| acc.min(l))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Superoperator of `rho -> U rho U^dag` on column-stacked `rho`.
pub fn unitary_superop(u: &CMatrix) -> CMatrix {
    u.map(|z| z.conj()).kronecker(u)
}

/// Applies a column-stacking superoperator to `rho`.
pub fn apply_superop(s: &CMatrix, rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let v = CVector::from_column_slice(rho.as_slice());
    let out = s * v;
    CMatrix::from_column_slice(d, d, out.as_slice())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `max_ij |a - e^{i g} b|` minimised over the global phase `g`
/// (taken from the overlap `tr(b^† a)`).
pub fn dist_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let overlap: Complex64 = b.iter().zip(a.iter()).map(|(y, x)| y.conj() * x).sum();
    let ph = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        c(1.0, 0.0)
    };
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - ph * y).norm()))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Haar-random pure state from normalised complex Gaussians.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let mut v = CVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        }),
    );
    let norm = v.norm();
    v /= c(norm, 0.0);
    v
}

/// `|v><v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    max_abs(&(m - m.adjoint())) <= tol
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_z() {
        let z = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        let u = expm_i_hermitian(&z, 0.3);
        assert!((u[(0, 0)] - Complex64::from_polar(1.0, 0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let a = CMatrix::identity(4, 4);
        let b = &a * Complex64::from_polar(1.0, 1.1);
        assert!(dist_up_to_phase(&a, &b) < 1e-14);
    }
}
