//! System Hamiltonians, the neighbour-shifted transition-frequency operators
//! Omega_k, and thermal-bath rate tables.
//!
//! Units: time in microseconds, angular frequency in rad/us. Values quoted
//! in cyclic MHz are converted with [`mhz`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{site_mask, ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::pulse::Pulse;

/// hbar / k_B in K * us (CODATA 2018 exact values of hbar and k_B).
pub const HBAR_OVER_KB: f64 = 1.054_571_817e-34 / 1.380_649e-23 * 1e6;

/// Converts a cyclic frequency in MHz to an angular frequency in rad/us.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_spins: usize,
    /// Larmor angular frequencies, spin 1 first [rad/us].
    pub omega: Vec<f64>,
    /// First-neighbour Ising coupling J [rad/us].
    pub j1: f64,
    /// Second-neighbour Ising coupling J' [rad/us].
    pub j2: f64,
    /// Rabi frequency of the RF drive [rad/us].
    pub rabi: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n_spins: 3,
            omega: vec![mhz(400.0), mhz(200.0), mhz(100.0)],
            j1: mhz(25.0),
            j2: mhz(1.0),
            rabi: mhz(0.1),
        }
    }
}

impl SystemParams {
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 || self.n_spins > 10 {
            return Err(Error::arg(format!(
                "n_spins = {} outside 1..=10",
                self.n_spins
            )));
        }
        if self.omega.len() != self.n_spins {
            return Err(Error::arg(format!(
                "{} Larmor frequencies for {} spins",
                self.omega.len(),
                self.n_spins
            )));
        }
        for (i, &w) in self.omega.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::arg(format!("omega[{i}] = {w} must be positive")));
            }
            if self.omega[..i].contains(&w) {
                return Err(Error::arg(format!("omega[{i}] = {w} is not distinct")));
            }
        }
        if !(self.j1.is_finite() && self.j2.is_finite()) {
            return Err(Error::arg("couplings must be finite"));
        }
        if !(self.rabi.is_finite() && self.rabi > 0.0) {
            return Err(Error::arg(format!("rabi = {} must be positive", self.rabi)));
        }
        Ok(())
    }

    /// Diagonal of H_0 in basis order.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.energy(i)).collect()
    }

    fn sz(&self, index: usize, k: usize) -> f64 {
        if index & site_mask(k, self.n_spins) == 0 {
            0.5
        } else {
            -0.5
        }
    }

    fn energy(&self, index: usize) -> f64 {
        let n = self.n_spins;
        let mut e = 0.0;
        for k in 1..=n {
            e -= self.omega[k - 1] * self.sz(index, k);
        }
        for k in 1..n {
            e += self.j1 * self.sz(index, k) * self.sz(index, k + 1);
        }
        for k in 1..n.saturating_sub(1) {
            e += self.j2 * self.sz(index, k) * self.sz(index, k + 2);
        }
        e
    }

    /// Eigenvalue of Omega_k (1-based k) on basis state `index`.
    fn omega_k(&self, k: usize, index: usize) -> f64 {
        let n = self.n_spins;
        let mut w = self.omega[k - 1];
        let site = |d: isize| -> Option<usize> {
            let s = k as isize + d;
            (1..=n as isize).contains(&s).then_some(s as usize)
        };
        for d in [-1, 1] {
            if let Some(s) = site(d) {
                w -= self.j1 * self.sz(index, s);
            }
        }
        for d in [-2, 2] {
            if let Some(s) = site(d) {
                w -= self.j2 * self.sz(index, s);
            }
        }
        w
    }

    /// Largest transition frequency max|E_a - E_b| of H_0.
    pub fn max_frequency(&self) -> f64 {
        let e = self.energies();
        let hi = e.iter().cloned().fold(f64::MIN, f64::max);
        let lo = e.iter().cloned().fold(f64::MAX, f64::min);
        hi - lo
    }

    fn check_site(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n_spins {
            return Err(Error::arg(format!(
                "spin index {k} outside 1..={}",
                self.n_spins
            )));
        }
        Ok(())
    }
}

/// H_0 = -sum w_k S_k^z + J sum S_k^z S_{k+1}^z + J' sum S_k^z S_{k+2}^z
pub fn build_h0(p: &SystemParams) -> ComplexMatrix {
    ComplexMatrix::from_real_diag(&p.energies())
}

/// RF Hamiltonian at time `t` for the given pulse, driving every spin:
/// -(Omega/2) sum_k ( e^{i(wt+phi)} S_k^+ + e^{-i(wt+phi)} S_k^- ).
pub fn build_hrf(p: &SystemParams, t: f64, pulse: &Pulse) -> ComplexMatrix {
    let dim = p.dim();
    let mut h = ComplexMatrix::zeros(dim);
    let up = C64::from_polar(-0.5 * pulse.amplitude, pulse.frequency * t + pulse.phase);
    let down = up.conj();
    for k in 1..=p.n_spins {
        let mask = site_mask(k, p.n_spins);
        for col in 0..dim {
            // S^+ takes bit 1 -> 0, S^- takes bit 0 -> 1.
            let row = col ^ mask;
            h[(row, col)] += if col & mask != 0 { up } else { down };
        }
    }
    h
}

/// Diagonal operator Omega_k = w_k - J(S_{k+1}^z + S_{k-1}^z) - J'(S_{k+2}^z + S_{k-2}^z),
/// with out-of-chain sites dropped.
pub fn omega_operator(p: &SystemParams, k: usize) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::from_real_diag(&omega_eigenvalues(p, k)?))
}

pub fn omega_eigenvalues(p: &SystemParams, k: usize) -> Result<Vec<f64>> {
    p.check_site(k)?;
    Ok((0..p.dim()).map(|i| p.omega_k(k, i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Kelvin.
    pub temperature: f64,
    /// Emission rate at each spin's own Larmor frequency [rad/us].
    pub gamma_target: f64,
    pub hbar_over_kb: f64,
}

impl BathParams {
    pub fn new(temperature: f64, gamma_target: f64) -> Self {
        Self {
            temperature,
            gamma_target,
            hbar_over_kb: HBAR_OVER_KB,
        }
    }

    pub fn closed() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::arg(format!(
                "temperature = {} K must be >= 0",
                self.temperature
            )));
        }
        if !(self.gamma_target.is_finite() && self.gamma_target >= 0.0) {
            return Err(Error::arg(format!(
                "gamma = {} must be >= 0",
                self.gamma_target
            )));
        }
        Ok(())
    }

    /// hbar w / k_B T; infinite at T = 0.
    pub fn reduced_energy(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            f64::INFINITY
        } else {
            self.hbar_over_kb * omega / self.temperature
        }
    }
}

/// Bose-Einstein occupation N(w) = 1 / (e^x - 1); exactly 0 at T = 0.
pub fn planck_n(omega: f64, bath: &BathParams) -> Result<f64> {
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::arg(format!("frequency {omega} must be positive")));
    }
    if bath.temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / bath.reduced_energy(omega).exp_m1())
}

/// Emission and absorption rates per spin and basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    /// gamma_k^{(i)}, indexed `[k - 1][i]`.
    pub gamma_emit: Vec<Vec<f64>>,
    /// gamma_k^{dagger(i)}.
    pub gamma_absorb: Vec<Vec<f64>>,
    pub gamma_emit_markov: Vec<f64>,
    pub gamma_absorb_markov: Vec<f64>,
    /// Frequencies at which each entry was evaluated, same layout as `gamma_emit`.
    pub frequencies: Vec<Vec<f64>>,
}

impl RateTable {
    pub fn zeros(p: &SystemParams) -> Self {
        let n = p.n_spins;
        let d = p.dim();
        Self {
            gamma_emit: vec![vec![0.0; d]; n],
            gamma_absorb: vec![vec![0.0; d]; n],
            gamma_emit_markov: vec![0.0; n],
            gamma_absorb_markov: vec![0.0; n],
            frequencies: (1..=n)
                .map(|k| (0..d).map(|i| p.omega_k(k, i)).collect())
                .collect(),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.gamma_emit.len()
    }

    pub fn is_zero(&self) -> bool {
        self.gamma_emit
            .iter()
            .chain(&self.gamma_absorb)
            .flatten()
            .chain(&self.gamma_emit_markov)
            .chain(&self.gamma_absorb_markov)
            .all(|&g| g == 0.0)
    }

    /// Table whose state-indexed rates all equal the Markovian scalars.
    pub fn flattened(&self) -> Self {
        let mut out = self.clone();
        for k in 0..self.n_spins() {
            out.gamma_emit[k].fill(self.gamma_emit_markov[k]);
            out.gamma_absorb[k].fill(self.gamma_absorb_markov[k]);
        }
        out
    }
}

/// Cubic spectral density j(w) = w^3 (N+1), j^dagger(w) = w^3 N, with a
/// per-spin prefactor chosen so the emission rate at the spin's own Larmor
/// frequency equals `bath.gamma_target`.
pub fn build_rate_table(p: &SystemParams, bath: &BathParams) -> Result<RateTable> {
    p.validate()?;
    bath.validate()?;
    let mut table = RateTable::zeros(p);
    if bath.gamma_target == 0.0 {
        return Ok(table);
    }
    for k in 1..=p.n_spins {
        let wk = p.omega[k - 1];
        let nk = planck_n(wk, bath)?;
        let coupling = bath.gamma_target / (wk.powi(3) * (nk + 1.0));
        table.gamma_emit_markov[k - 1] = coupling * wk.powi(3) * (nk + 1.0);
        table.gamma_absorb_markov[k - 1] = coupling * wk.powi(3) * nk;
        for i in 0..p.dim() {
            let w = p.omega_k(k, i);
            let n = planck_n(w, bath).map_err(|_| {
                Error::arg(format!(
                    "transition frequency of spin {k} in state {} is not positive",
                    i + 1
                ))
            })?;
            table.gamma_emit[k - 1][i] = coupling * w.powi(3) * (n + 1.0);
            table.gamma_absorb[k - 1][i] = coupling * w.powi(3) * n;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega: [f64; 3], j1: f64, j2: f64) -> SystemParams {
        SystemParams {
            omega: omega.to_vec(),
            j1,
            j2,
            ..SystemParams::default()
        }
    }

    #[test]
    fn h0_ground_entry_and_gap() {
        let p = SystemParams::default();
        let h = build_h0(&p);
        assert!((h[(0, 0)].re - mhz(-337.25)).abs() < 1e-9);
        let gap = h[(0, 0)].re - h[(2, 2)].re;
        assert!((gap - mhz(-175.0)).abs() < 1e-9);
        assert!(h.is_diagonal(0.0));
    }

    #[test]
    fn h0_decoupled_limit() {
        let p = params([mhz(400.0), mhz(200.0), mhz(100.0)], 0.0, 0.0);
        let h = build_h0(&p);
        assert!((h[(7, 7)].re - mhz(350.0)).abs() < 1e-9);
        assert!((h[(0, 0)].re + mhz(350.0)).abs() < 1e-9);
    }

    #[test]
    fn hrf_examples() {
        let p = SystemParams::default();
        let off = Pulse {
            frequency: mhz(175.0),
            phase: 0.3,
            angle: 1.0,
            amplitude: 0.0,
            start_time: 0.0,
        };
        assert_eq!(build_hrf(&p, 1.7, &off).max_abs(), 0.0);

        let on = Pulse {
            amplitude: 0.8,
            ..off
        };
        for &t in &[0.0, 0.013, 2.5, 17.0] {
            assert!(build_hrf(&p, t, &on).is_hermitian(1e-15));
        }

        let single = SystemParams {
            n_spins: 1,
            omega: vec![1.0],
            j1: 0.0,
            j2: 0.0,
            rabi: 0.8,
        };
        let at_zero = Pulse { phase: 0.0, ..on };
        let h = build_hrf(&single, 0.0, &at_zero);
        assert!((h[(0, 1)] - C64::new(-0.4, 0.0)).norm() < 1e-15);
        assert!((h[(1, 0)] - C64::new(-0.4, 0.0)).norm() < 1e-15);
        assert_eq!(h[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn omega_operator_examples() {
        let p = SystemParams::default();
        let a = omega_eigenvalues(&p, 1).unwrap();
        let b = omega_eigenvalues(&p, 2).unwrap();
        let c = omega_eigenvalues(&p, 3).unwrap();
        assert!((a[0] - mhz(387.0)).abs() < 1e-9);
        assert!((b[0] - mhz(175.0)).abs() < 1e-9);
        assert!((b[2] - mhz(175.0)).abs() < 1e-9);
        assert!((c[2] - mhz(112.0)).abs() < 1e-9);
        assert!((b[1] - mhz(200.0)).abs() < 1e-9);
        assert!((b[3] - mhz(200.0)).abs() < 1e-9);
        assert!((a[3] - mhz(413.0)).abs() < 1e-9);
        assert!((a[7] - mhz(413.0)).abs() < 1e-9);
        assert!(omega_eigenvalues(&p, 4).is_err());

        let free = params([3.0, 2.0, 1.0], 0.0, 0.0);
        for k in 1..=3 {
            for w in omega_eigenvalues(&free, k).unwrap() {
                assert_eq!(w, free.omega[k - 1]);
            }
        }
    }

    #[test]
    fn omega_operators_commute_with_h0() {
        let p = SystemParams::default();
        let h = build_h0(&p);
        for k in 1..=3 {
            let w = omega_operator(&p, k).unwrap();
            let c = crate::algebra::commutator(&w, &h).unwrap();
            assert_eq!(c.max_abs(), 0.0);
        }
    }

    #[test]
    fn omega_is_a_transition_frequency() {
        // Omega_k^{(i)} = E(bit k set) - E(bit k clear)
        let p = SystemParams::default();
        let e = p.energies();
        for k in 1..=3 {
            let mask = site_mask(k, 3);
            let w = omega_eigenvalues(&p, k).unwrap();
            for (i, wi) in w.iter().enumerate() {
                let lo = i & !mask;
                assert!((wi - (e[lo | mask] - e[lo])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn planck_examples() {
        let cold = BathParams::new(0.0, 1.0);
        assert_eq!(planck_n(123.0, &cold).unwrap(), 0.0);
        let room = BathParams::new(300.0, 1.0);
        let n = planck_n(mhz(100.0), &room).unwrap();
        // x = hbar w / k T ~ 1.59974e-5, N ~ 1/x - 1/2
        let x = HBAR_OVER_KB * mhz(100.0) / 300.0;
        assert!((x - 1.59974e-5).abs() < 1e-9);
        assert!((n - (1.0 / x - 0.5)).abs() < 1e-3);
        assert!((n - 6.251e4).abs() < 1.0);
        assert!(planck_n(0.0, &room).is_err());
        assert!(planck_n(-1.0, &room).is_err());
    }

    #[test]
    fn rate_table_examples() {
        let p = SystemParams::default();
        let closed = build_rate_table(&p, &BathParams::new(300.0, 0.0)).unwrap();
        assert!(closed.is_zero());

        let g = 0.37;
        let cold = build_rate_table(&p, &BathParams::new(0.0, g)).unwrap();
        for k in 0..3 {
            assert_eq!(cold.gamma_emit_markov[k], g);
            assert!(cold.gamma_absorb[k].iter().all(|&x| x == 0.0));
        }
        let ratio = cold.gamma_emit[1][0] / g;
        assert!((ratio - (175.0f64 / 200.0).powi(3)).abs() < 1e-12);
        assert!((ratio - 0.6699).abs() < 1e-4);

        assert!(build_rate_table(&p, &BathParams::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn decoupled_rates_match_markovian() {
        let p = params([mhz(400.0), mhz(200.0), mhz(100.0)], 0.0, 0.0);
        let t = build_rate_table(&p, &BathParams::new(4e-3, 0.2)).unwrap();
        for k in 0..3 {
            for i in 0..8 {
                assert_eq!(t.gamma_emit[k][i], t.gamma_emit_markov[k]);
                assert_eq!(t.gamma_absorb[k][i], t.gamma_absorb_markov[k]);
            }
        }
    }

    #[test]
    fn rates_invariant_under_own_bit_flip() {
        let p = SystemParams::default();
        let t = build_rate_table(&p, &BathParams::new(0.01, 1.0)).unwrap();
        for k in 1..=3 {
            let mask = site_mask(k, 3);
            for i in 0..8 {
                assert_eq!(t.gamma_emit[k - 1][i], t.gamma_emit[k - 1][i ^ mask]);
                assert_eq!(t.gamma_absorb[k - 1][i], t.gamma_absorb[k - 1][i ^ mask]);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(SystemParams::default().validate().is_ok());
        let mut p = SystemParams::default();
        p.omega[1] = p.omega[0];
        assert!(p.validate().is_err());
        let p = SystemParams {
            rabi: 0.0,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.omega.pop();
        assert!(p.validate().is_err());
        assert!(BathParams::new(-1.0, 0.1).validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn detailed_balance_holds(w in 1.0f64..5000.0, temp in 1e-4f64..500.0) {
                let bath = BathParams::new(temp, 1.0);
                let n = planck_n(w, &bath).unwrap();
                let expected = (-bath.reduced_energy(w)).exp();
                prop_assert!((n / (n + 1.0) - expected).abs() <= 1e-12 * expected.max(1e-300));
            }

            #[test]
            fn emission_dominates_absorption(temp in 0.0f64..500.0, g in 0.0f64..10.0) {
                let p = SystemParams::default();
                let t = build_rate_table(&p, &BathParams::new(temp, g)).unwrap();
                for k in 0..3 {
                    for i in 0..8 {
                        prop_assert!(t.gamma_absorb[k][i] >= 0.0);
                        prop_assert!(t.gamma_emit[k][i] >= t.gamma_absorb[k][i]);
                    }
                }
            }
        }
    }
}
