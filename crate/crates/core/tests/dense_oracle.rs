use hamforge::dense::{c, dist_up_to_phase, expm_i_hermitian, spectral_norm_hermitian, trace_norm_hermitian, CMatrix};
use hamforge::diag::LibraryGroup;
use hamforge::templates::Case;
use hamforge::{Fragment, PauliString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scaling and squaring with a truncated Taylor series.
fn taylor_expm(h: &CMatrix, s: f64) -> CMatrix {
    let n = h.nrows();
    let norm = h.iter().map(|z| z.norm()).sum::<f64>().max(1.0) * s.abs();
    let k = norm.log2().ceil().max(0.0) as i32 + 4;
    let a = h * c(0.0, s / 2f64.powi(k));
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for j in 1..30 {
        term = &term * &a / c(j as f64, 0.0);
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// Heavily degenerate 7-qubit fragment that trips older eigen solvers.
fn degenerate_fragment() -> CMatrix {
    let params = [
        [-0.3376828510952425, 0.8856791070813621, 0.27515190251924526],
        [-0.4331772907570668, 1.0382083431643305, 1.4313619315422748],
    ];
    let paulis: Vec<(f64, PauliString)> = LibraryGroup::G1y
        .members()
        .into_iter()
        .map(|(label, p)| {
            let side = usize::from(!label.starts_with('a'));
            let k: u8 = label[1..].parse().unwrap();
            (Case::I.coefficient(k, params[side]), p)
        })
        .collect();
    Fragment::new("g1y", 1.0, paulis)
        .unwrap()
        .to_hamiltonian()
        .unwrap()
        .to_dense()
        .unwrap()
}

#[test]
fn exponential_matches_taylor_on_a_degenerate_spectrum() {
    let h = degenerate_fragment();
    let t = 1.9709532904730953;
    let d = dist_up_to_phase(&expm_i_hermitian(&h, -t), &taylor_expm(&h, -t));
    assert!(d < 1e-11, "{d:e}");
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let dm = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c(x, 0.0)));
    assert!((&h * v - v * dm).norm() < 1e-11);
}

#[test]
fn exponential_matches_taylor_on_random_hermitians() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for dim in [2, 5, 16, 32] {
        let a = CMatrix::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let s = rng.gen_range(-2.0..2.0);
        let d = (expm_i_hermitian(&h, s) - taylor_expm(&h, s)).norm();
        assert!(d < 1e-10, "dim {dim}: {d:e}");
    }
}

#[test]
fn norms_of_diagonal_matrices() {
    let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(-2.0, 0.0), c(1.0, 0.0)]));
    assert!((spectral_norm_hermitian(&m) - 2.0).abs() < 1e-14);
    assert!((trace_norm_hermitian(&m) - 3.5).abs() < 1e-14);
}
