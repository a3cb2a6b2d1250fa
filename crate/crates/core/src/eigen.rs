//! Cyclic Jacobi eigenvalue solver for small Hermitian matrices.

use crate::algebra::{ComplexMatrix, C64};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Each rotation first removes the phase of the pivot a_pq with a diagonal
/// unitary and then applies the real symmetric Jacobi rotation.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut m = a.clone();
    m.symmetrize();

    let frob: f64 = m
        .as_slice()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let tol = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|(r, c)| r != c)
            .map(|(r, c)| m[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, p, q);
            }
        }
    }

    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

fn rotate(m: &mut ComplexMatrix, p: usize, q: usize) {
    let n = m.dim();
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;

    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on the (p, q) plane
    let phase = apq.conj() / mag;
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase * -s;
    let u_qq = phase * c;

    for r in 0..n {
        let x = m[(r, p)];
        let y = m[(r, q)];
        m[(r, p)] = x * u_pp + y * u_qp;
        m[(r, q)] = x * u_pq + y * u_qq;
    }
    for col in 0..n {
        let x = m[(p, col)];
        let y = m[(q, col)];
        m[(p, col)] = u_pp.conj() * x + u_qp.conj() * y;
        m[(q, col)] = u_pq.conj() * x + u_qq.conj() * y;
    }
    m[(p, q)] = C64::new(0.0, 0.0);
    m[(q, p)] = C64::new(0.0, 0.0);
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
}

pub fn min_eigenvalue(a: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(a)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{maximally_mixed, pure_state, random_density};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            }
        }
        m.symmetrize();
        m
    }

    fn reference(a: &ComplexMatrix) -> Vec<f64> {
        let n = a.dim();
        let m = DMatrix::from_fn(n, n, |r, c| a[(r, c)]);
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    #[test]
    fn matches_reference_solver() {
        for seed in 0..25 {
            let dim = [2, 3, 4, 8][seed as usize % 4];
            let a = random_hermitian(dim, seed);
            let ours = hermitian_eigenvalues(&a);
            let theirs = reference(&a);
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-11, "seed {seed}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn density_matrix_spectra() {
        let mixed = hermitian_eigenvalues(&maximally_mixed(8));
        assert!(mixed.iter().all(|&e| (e - 0.125).abs() < 1e-15));

        let psi: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let ev = hermitian_eigenvalues(&pure_state(&psi));
        assert!((ev[7] - 1.0).abs() < 1e-13);
        assert!(ev[..7].iter().all(|e| e.abs() < 1e-13));

        let rho = random_density(8, 2);
        let sum: f64 = hermitian_eigenvalues(&rho).iter().sum();
        assert!((sum - 1.0).abs() < 1e-13);
    }

    #[test]
    fn diagonal_input() {
        let d = ComplexMatrix::from_real_diag(&[3.0, -1.0, 2.0]);
        assert_eq!(hermitian_eigenvalues(&d), vec![-1.0, 2.0, 3.0]);
    }
}
