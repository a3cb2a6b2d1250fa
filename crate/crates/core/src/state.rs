//! Density-matrix constructors and checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ComplexMatrix, C64};
use crate::eigen::hermitian_eigenvalues;
use crate::error::{Error, Result};

/// |i><i| for a 0-based basis index.
pub fn basis_state(dim: usize, index: usize) -> ComplexMatrix {
    ComplexMatrix::outer_basis(dim, index, index)
}

pub fn maximally_mixed(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64)
}

/// |psi><psi| for an (unnormalized) state vector.
pub fn pure_state(psi: &[C64]) -> ComplexMatrix {
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let dim = psi.len();
    let mut m = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] = psi[r] * psi[c].conj() / norm;
        }
    }
    m
}

/// Random full-rank density matrix A A^dagger / tr(A A^dagger), entries of A
/// uniform on the unit square.
pub fn random_density_from<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let data = (0..dim * dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let a = ComplexMatrix::from_row_major(data).expect("square by construction");
    let mut rho = &a * &a.adjoint();
    let tr = rho.trace().re;
    rho = rho.scale_real(1.0 / tr);
    rho.symmetrize();
    rho
}

pub fn random_density(dim: usize, seed: u64) -> ComplexMatrix {
    random_density_from(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Checks Hermiticity, unit trace and positivity to `tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> Result<()> {
    let herm = rho.hermitian_deviation();
    if herm > tol {
        return Err(Error::State(format!(
            "not Hermitian (deviation {herm:.3e})"
        )));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol {
        return Err(Error::State(format!("trace {tr} != 1")));
    }
    let min = hermitian_eigenvalues(rho)[0];
    if min < -tol {
        return Err(Error::State(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_states_are_valid() {
        for seed in 0..20 {
            let rho = random_density(8, seed);
            validate_density(&rho, 1e-12).unwrap();
        }
        assert_eq!(random_density(8, 5), random_density(8, 5));
    }

    #[test]
    fn rejects_invalid() {
        assert!(validate_density(&ComplexMatrix::identity(2), 1e-9).is_err());
        let neg = ComplexMatrix::from_real_diag(&[1.5, -0.5]);
        assert!(validate_density(&neg, 1e-9).is_err());
        let mut off = basis_state(2, 0);
        off[(0, 1)] = C64::new(0.1, 0.0);
        assert!(validate_density(&off, 1e-9).is_err());
    }

    #[test]
    fn pure_superposition() {
        let s = 1.0 / 2f64.sqrt();
        let mut psi = vec![C64::new(0.0, 0.0); 8];
        psi[0] = C64::new(s, 0.0);
        psi[3] = C64::new(s, 0.0);
        let rho = pure_state(&psi);
        validate_density(&rho, 1e-12).unwrap();
        assert!((rho[(0, 3)].re - 0.5).abs() < 1e-15);
    }
}
