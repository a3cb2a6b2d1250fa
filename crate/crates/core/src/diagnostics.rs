//! Derived metrics: purity, distance to the CNOT target, regime comparison
//! and the detailed-balance stationary profile.

use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMatrix;
use crate::config::Scenario;
use crate::dissipator::DissipatorMode;
use crate::error::{Error, Result};
use crate::integrator::TrajectoryRecord;
use crate::model::{RateTable, SystemParams};

/// P = tr(rho^2).
pub fn purity(rho: &ComplexMatrix) -> f64 {
    let d = rho.dim();
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            acc += rho[(a, b)] * rho[(b, a)];
        }
    }
    assert!(
        acc.im.abs() <= 1e-12 * acc.re.abs().max(1.0),
        "purity of a non-Hermitian matrix (imaginary part {:e})",
        acc.im
    );
    acc.re
}

/// |rho_13|, |rho_14|, |rho_34| with 1-based labels; NaN below 4 states.
pub fn tracked_coherences(rho: &ComplexMatrix) -> [f64; 3] {
    if rho.dim() < 4 {
        return [f64::NAN; 3];
    }
    [rho[(0, 2)].norm(), rho[(0, 3)].norm(), rho[(2, 3)].norm()]
}

/// Phase-insensitive distance to (|000> + |011>)/sqrt2:
/// max(|rho_11 - 1/2|, |rho_44 - 1/2|, ||rho_14| - 1/2|).
pub fn cnot_state_error(rho: &ComplexMatrix) -> f64 {
    let r11 = rho[(0, 0)].re;
    let r44 = rho[(3, 3)].re;
    let r14 = rho[(0, 3)].norm();
    (r11 - 0.5)
        .abs()
        .max((r44 - 0.5).abs())
        .max((r14 - 0.5).abs())
}

/// Total population outside |1> and |4>.
pub fn cnot_leakage(rho: &ComplexMatrix) -> f64 {
    (0..rho.dim())
        .filter(|&i| i != 0 && i != 3)
        .map(|i| rho[(i, i)].re)
        .sum()
}

/// Diagonal stationary state of the Markovian rate table. Spins relax
/// independently; spin k sits in its bit-1 state with probability
/// gamma_k / (gamma_k + gamma_k^dagger).
pub fn stationary_profile(p: &SystemParams, rates: &RateTable) -> Result<Vec<f64>> {
    if rates.n_spins() != p.n_spins {
        return Err(Error::arg("rate table does not match the system"));
    }
    let n = p.n_spins;
    let mut up = Vec::with_capacity(n);
    for k in 0..n {
        let g = rates.gamma_emit_markov[k];
        let gd = rates.gamma_absorb_markov[k];
        if g + gd <= 0.0 {
            return Err(Error::arg(format!(
                "spin {} has no dissipation, stationary state undefined",
                k + 1
            )));
        }
        up.push(g / (g + gd));
    }
    Ok((0..p.dim())
        .map(|i| {
            (0..n)
                .map(|k| {
                    let bit = (i >> (n - 1 - k)) & 1;
                    if bit == 1 {
                        up[k]
                    } else {
                        1.0 - up[k]
                    }
                })
                .product()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: f64,
    /// max_i |rho_ii^M - rho_ii^Q|
    pub diag: f64,
    /// max over tracked coherences of ||rho^M| - |rho^Q||
    pub coherence: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonSummary {
    pub fn max_diag(&self) -> f64 {
        self.rows.iter().map(|r| r.diag).fold(0.0, f64::max)
    }

    pub fn max_coherence(&self) -> f64 {
        self.rows.iter().map(|r| r.coherence).fold(0.0, f64::max)
    }

    pub fn max_purity(&self) -> f64 {
        self.rows.iter().map(|r| r.purity).fold(0.0, f64::max)
    }
}

/// Aligns two runs sample by sample. Both must share their sample times.
pub fn compare_records(
    markov: &TrajectoryRecord,
    quasi: &TrajectoryRecord,
) -> Result<ComparisonSummary> {
    if markov.samples.len() != quasi.samples.len() || markov.dim != quasi.dim {
        return Err(Error::arg(format!(
            "records are not aligned ({} vs {} samples)",
            markov.samples.len(),
            quasi.samples.len()
        )));
    }
    let mut rows = Vec::with_capacity(markov.samples.len());
    for (i, (m, q)) in markov.samples.iter().zip(&quasi.samples).enumerate() {
        if m.t != q.t {
            return Err(Error::arg(format!(
                "sample {i} times differ: {} vs {}",
                m.t, q.t
            )));
        }
        let diag = markov.populations[i]
            .iter()
            .zip(&quasi.populations[i])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let coherence = m
            .coherences
            .iter()
            .zip(&q.coherences)
            .map(|(a, b)| (a - b).abs())
            .filter(|d| !d.is_nan())
            .fold(0.0, f64::max);
        rows.push(ComparisonRow {
            t: m.t,
            diag,
            coherence,
            purity: (m.purity - q.purity).abs(),
        });
    }
    Ok(ComparisonSummary { rows })
}

#[derive(Debug, Clone)]
pub struct RegimeComparison {
    pub markov: TrajectoryRecord,
    pub quasi: TrajectoryRecord,
    pub summary: ComparisonSummary,
}

/// Runs the scenario once per dissipator mode, everything else identical.
pub fn compare_regimes(scenario: &Scenario) -> Result<RegimeComparison> {
    let markov = scenario.with_mode(DissipatorMode::Markovian).run()?;
    let quasi = scenario
        .with_mode(DissipatorMode::QuasiNonMarkovian)
        .run()?;
    let summary = compare_records(&markov, &quasi)?;
    Ok(RegimeComparison {
        markov,
        quasi,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::C64;
    use crate::model::{build_rate_table, BathParams};
    use crate::state::{basis_state, maximally_mixed, pure_state};

    #[test]
    fn purity_examples() {
        assert!((purity(&basis_state(8, 3)) - 1.0).abs() < 1e-15);
        assert!((purity(&maximally_mixed(8)) - 0.125).abs() < 1e-15);
        let mut psi = vec![C64::new(0.0, 0.0); 8];
        psi[0] = C64::new(1.0, 0.0);
        psi[3] = C64::new(1.0, 0.0);
        assert!((purity(&pure_state(&psi)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cnot_error_examples() {
        let mut target = ComplexMatrix::zeros(8);
        target[(0, 0)] = C64::new(0.5, 0.0);
        target[(3, 3)] = C64::new(0.5, 0.0);
        let phase = C64::from_polar(0.5, 1.234);
        target[(0, 3)] = phase;
        target[(3, 0)] = phase.conj();
        assert!(cnot_state_error(&target) < 1e-15);
        assert_eq!(cnot_leakage(&target), 0.0);
        assert_eq!(cnot_state_error(&basis_state(8, 0)), 0.5);
        // populations contribute 0.375, the missing coherence 0.5
        assert_eq!(cnot_state_error(&maximally_mixed(8)), 0.5);
    }

    #[test]
    fn stationary_limits() {
        let p = SystemParams::default();
        let cold = build_rate_table(&p, &BathParams::new(0.0, 1.0)).unwrap();
        let prof = stationary_profile(&p, &cold).unwrap();
        assert_eq!(prof[7], 1.0);
        assert!(prof[..7].iter().all(|&x| x == 0.0));

        let hot = build_rate_table(&p, &BathParams::new(300.0, 1.0)).unwrap();
        let prof = stationary_profile(&p, &hot).unwrap();
        assert!((prof.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(prof.iter().all(|&x| (x - 0.125).abs() < 1e-4));
        // detailed balance orders the profile towards |111>
        assert!(prof[7] > prof[0]);

        assert!(stationary_profile(&p, &RateTable::zeros(&p)).is_err());
    }

    #[test]
    fn misaligned_records_rejected() {
        let a = TrajectoryRecord::empty(DissipatorMode::Markovian, 8);
        let mut b = TrajectoryRecord::empty(DissipatorMode::QuasiNonMarkovian, 8);
        assert!(compare_records(&a, &b).unwrap().rows.is_empty());
        b.dim = 4;
        assert!(compare_records(&a, &b).is_err());
    }
}
