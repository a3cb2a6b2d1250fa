//! Dissipation superoperators and the master-equation right-hand side.
//!
//! Two routes compute the same thing:
//!
//! * [`apply_quasi`], [`apply_markovian`] and [`master_rhs`] build the
//!   result from dense spin-operator products. They are the readable
//!   reference form.
//! * [`MasterEquation`] compiles the same generator into index tables
//!   (energy gaps, RF bit flips, decay rates, gain transfers) and is what the
//!   integrator calls ~10^7 times per run.
//!
//! Phase convention: the coherence-transfer terms carry
//! e^{i(Omega_k^{(n)} - Omega_k^{(m)}) t} on rho_{nm} for emission and the
//! conjugate for absorption, i.e. D = U rho U^dagger with U = e^{i Omega_k t}.
//! This is the ordering used by the element-wise equations in
//! [`crate::oracle`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, site_mask, spin_operator, ComplexMatrix, SpinOp, C64, I, ZERO};
use crate::error::{Error, Result};
use crate::model::{build_h0, build_hrf, omega_eigenvalues, RateTable, SystemParams};
use crate::pulse::Pulse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DissipatorMode {
    #[serde(rename = "markov")]
    Markovian,
    #[serde(rename = "quasi")]
    QuasiNonMarkovian,
}

impl DissipatorMode {
    pub const ALL: [DissipatorMode; 2] =
        [DissipatorMode::Markovian, DissipatorMode::QuasiNonMarkovian];

    pub fn as_str(&self) -> &'static str {
        match self {
            DissipatorMode::Markovian => "markov",
            DissipatorMode::QuasiNonMarkovian => "quasi",
        }
    }
}

impl fmt::Display for DissipatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DissipatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" | "markovian" => Ok(DissipatorMode::Markovian),
            "quasi" => Ok(DissipatorMode::QuasiNonMarkovian),
            _ => Err(Error::arg(format!("unknown mode {s:?} (markov|quasi)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Emit,
    Absorb,
}

/// gamma_k^{(m,n)}(t) = e^{i(Omega_k^{(m)} - Omega_k^{(n)}) t}, 0-based state indices.
pub fn phase_factor(omega_k: &[f64], m: usize, n: usize, t: f64) -> C64 {
    C64::from_polar(1.0, (omega_k[m] - omega_k[n]) * t)
}

/// Phase-modulated copy of rho entering the coherence-transfer term of spin `k`:
/// emission D_{nm} = gamma_k^{(n,m)}(t) rho_{nm}, absorption D'_{nm} = gamma_k^{(m,n)}(t) rho_{nm}.
pub fn phase_modulated_state(
    rho: &ComplexMatrix,
    k: usize,
    t: f64,
    direction: Direction,
    p: &SystemParams,
) -> Result<ComplexMatrix> {
    let w = omega_eigenvalues(p, k)?;
    check_dim(rho, p)?;
    let dim = rho.dim();
    let mut out = rho.clone();
    for n in 0..dim {
        for m in 0..dim {
            let phase = match direction {
                Direction::Emit => phase_factor(&w, n, m, t),
                Direction::Absorb => phase_factor(&w, m, n, t),
            };
            out[(n, m)] *= phase;
        }
    }
    Ok(out)
}

fn check_dim(rho: &ComplexMatrix, p: &SystemParams) -> Result<()> {
    if rho.dim() != p.dim() {
        return Err(Error::arg(format!(
            "density matrix has dimension {}, register needs {}",
            rho.dim(),
            p.dim()
        )));
    }
    Ok(())
}

fn check_state(rho: &ComplexMatrix, p: &SystemParams) -> Result<()> {
    check_dim(rho, p)?;
    let dev = rho.hermitian_deviation();
    if dev > 1e-8 * rho.max_abs().max(1.0) {
        return Err(Error::State(format!(
            "density matrix is not Hermitian (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

fn check_rates(rates: &RateTable, p: &SystemParams) -> Result<()> {
    if rates.n_spins() != p.n_spins || rates.gamma_emit.iter().any(|r| r.len() != p.dim()) {
        return Err(Error::arg("rate table does not match the system size"));
    }
    Ok(())
}

struct SiteOps {
    plus: ComplexMatrix,
    minus: ComplexMatrix,
    /// S^+ S^-
    p0: ComplexMatrix,
    /// S^- S^+
    p1: ComplexMatrix,
}

fn site_ops(k: usize, n: usize) -> Result<SiteOps> {
    let plus = spin_operator(SpinOp::Plus, k, n)?;
    let minus = spin_operator(SpinOp::Minus, k, n)?;
    let p0 = &plus * &minus;
    let p1 = &minus * &plus;
    Ok(SiteOps {
        plus,
        minus,
        p0,
        p1,
    })
}

/// Quasi-non-Markovian dissipator with state-indexed rates and time-dependent
/// coherence-transfer phases, from dense operator products.
pub fn apply_quasi(
    rho: &ComplexMatrix,
    t: f64,
    rates: &RateTable,
    p: &SystemParams,
) -> Result<ComplexMatrix> {
    check_state(rho, p)?;
    check_rates(rates, p)?;
    let n = p.n_spins;
    let mut acc = ComplexMatrix::zeros(p.dim());
    for k in 1..=n {
        let ops = site_ops(k, n)?;
        let gamma = ComplexMatrix::from_real_diag(&rates.gamma_emit[k - 1]);
        let gamma_dag = ComplexMatrix::from_real_diag(&rates.gamma_absorb[k - 1]);
        let d_emit = phase_modulated_state(rho, k, t, Direction::Emit, p)?;
        let d_absorb = phase_modulated_state(rho, k, t, Direction::Absorb, p)?;

        let jump_emit = &(&ops.minus * &d_emit) * &ops.plus;
        let jump_absorb = &(&ops.plus * &d_absorb) * &ops.minus;

        let left_emit = &(&ops.p0 * rho) - &jump_emit;
        let right_emit = &(rho * &ops.p0) - &jump_emit;
        let left_absorb = &(&ops.p1 * rho) - &jump_absorb;
        let right_absorb = &(rho * &ops.p1) - &jump_absorb;

        let term = &(&(&gamma * &left_emit) + &(&right_emit * &gamma))
            + &(&(&gamma_dag * &left_absorb) + &(&right_absorb * &gamma_dag));
        acc = &acc + &term.scale_real(0.5);
    }
    Ok(acc.scale_real(-1.0))
}

/// Standard Lindblad dissipator with the scalar Larmor-frequency rates.
pub fn apply_markovian(
    rho: &ComplexMatrix,
    rates: &RateTable,
    p: &SystemParams,
) -> Result<ComplexMatrix> {
    check_state(rho, p)?;
    check_rates(rates, p)?;
    let n = p.n_spins;
    let mut acc = ComplexMatrix::zeros(p.dim());
    for k in 1..=n {
        let ops = site_ops(k, n)?;
        let g = rates.gamma_emit_markov[k - 1];
        let gd = rates.gamma_absorb_markov[k - 1];
        let emit = &(&(&ops.p0 * rho) - &(&(&ops.minus * rho) * &ops.plus).scale_real(2.0))
            + &(rho * &ops.p0);
        let absorb = &(&(&ops.p1 * rho) - &(&(&ops.plus * rho) * &ops.minus).scale_real(2.0))
            + &(rho * &ops.p1);
        acc = &acc + &(&emit.scale_real(0.5 * g) + &absorb.scale_real(0.5 * gd));
    }
    Ok(acc.scale_real(-1.0))
}

/// d rho/dt = -i [H_0 + H_rf(t), rho] + L rho, with H_rf absent when `pulse` is `None`.
pub fn master_rhs(
    rho: &ComplexMatrix,
    t: f64,
    mode: DissipatorMode,
    pulse: Option<&Pulse>,
    p: &SystemParams,
    rates: &RateTable,
) -> Result<ComplexMatrix> {
    check_state(rho, p)?;
    let mut h = build_h0(p);
    if let Some(pulse) = pulse {
        h = &h + &build_hrf(p, t, pulse);
    }
    let unitary = commutator(&h, rho)?.scale(-I);
    let dissipation = match mode {
        DissipatorMode::Markovian => apply_markovian(rho, rates, p)?,
        DissipatorMode::QuasiNonMarkovian => apply_quasi(rho, t, rates, p)?,
    };
    Ok(&unitary + &dissipation)
}

#[derive(Debug, Clone, Copy)]
struct Gain {
    target: u32,
    source: u32,
    weight: f64,
    phase: u32,
}

/// Precompiled generator for one (system, rates, mode) triple.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    dim: usize,
    mode: DissipatorMode,
    energies: Vec<f64>,
    masks: Vec<usize>,
    /// Real decay rate of each element rho_ab, row-major.
    decay: Vec<f64>,
    gains: Vec<Gain>,
    /// Distinct phase frequencies; entry 0 is always 0.
    phase_freqs: Vec<f64>,
    phases: Vec<C64>,
    phase_time: f64,
    /// e^{-i E_a t} for the interaction picture, cached for `frame_time`.
    frame: Vec<C64>,
    frame_time: f64,
    lab: Vec<C64>,
}

impl MasterEquation {
    pub fn new(p: &SystemParams, rates: &RateTable, mode: DissipatorMode) -> Result<Self> {
        p.validate()?;
        check_rates(rates, p)?;
        let n = p.n_spins;
        let dim = p.dim();
        let (rates, phased) = match mode {
            DissipatorMode::Markovian => (rates.flattened(), false),
            DissipatorMode::QuasiNonMarkovian => (rates.clone(), true),
        };

        let mut decay = vec![0.0; dim * dim];
        let mut gains = Vec::new();
        let mut phase_freqs = vec![0.0];
        let mut phase_index = |f: f64| -> u32 {
            if !phased {
                return 0;
            }
            match phase_freqs.iter().position(|&x| x == f) {
                Some(i) => i as u32,
                None => {
                    phase_freqs.push(f);
                    (phase_freqs.len() - 1) as u32
                }
            }
        };

        for k in 1..=n {
            let mask = site_mask(k, n);
            let w = omega_eigenvalues(p, k)?;
            let g = &rates.gamma_emit[k - 1];
            let gd = &rates.gamma_absorb[k - 1];
            for a in 0..dim {
                for b in 0..dim {
                    let target = (a * dim + b) as u32;
                    let (a_up, b_up) = (a & mask == 0, b & mask == 0);
                    let rate = |up: bool, i: usize| if up { g[i] } else { gd[i] };
                    decay[a * dim + b] += 0.5 * (rate(a_up, a) + rate(b_up, b));

                    let (sa, sb) = (a ^ mask, b ^ mask);
                    let source = (sa * dim + sb) as u32;
                    if !a_up && !b_up {
                        let weight = 0.5 * (g[a] + g[b]);
                        if weight != 0.0 {
                            let phase = phase_index(w[sa] - w[sb]);
                            gains.push(Gain {
                                target,
                                source,
                                weight,
                                phase,
                            });
                        }
                    } else if a_up && b_up {
                        let weight = 0.5 * (gd[a] + gd[b]);
                        if weight != 0.0 {
                            let phase = phase_index(w[sb] - w[sa]);
                            gains.push(Gain {
                                target,
                                source,
                                weight,
                                phase,
                            });
                        }
                    }
                }
            }
        }

        let phases = vec![C64::new(1.0, 0.0); phase_freqs.len()];
        Ok(Self {
            dim,
            mode,
            energies: p.energies(),
            masks: (1..=n).map(|k| site_mask(k, n)).collect(),
            decay,
            gains,
            phase_freqs,
            phases,
            phase_time: 0.0,
            frame: vec![C64::new(1.0, 0.0); dim],
            frame_time: 0.0,
            lab: vec![ZERO; dim * dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> DissipatorMode {
        self.mode
    }

    fn refresh_phases(&mut self, t: f64) {
        if t == self.phase_time {
            return;
        }
        for (ph, &f) in self.phases.iter_mut().zip(&self.phase_freqs).skip(1) {
            *ph = C64::from_polar(1.0, f * t);
        }
        self.phase_time = t;
    }

    /// Writes d rho/dt into `out`; both slices are row-major `dim * dim`.
    pub fn rhs_into(&mut self, rho: &[C64], t: f64, pulse: Option<&Pulse>, out: &mut [C64]) {
        self.core_rhs(rho, t, pulse, out, true);
    }

    /// Right-hand side in the interaction picture of H_0:
    /// for rho~ = U^dagger rho U with U = e^{-i H_0 t}, writes
    /// d rho~/dt = U^dagger (L - L_0)(U rho~ U^dagger) U.
    pub fn interaction_rhs_into(
        &mut self,
        rho_tilde: &[C64],
        t: f64,
        pulse: Option<&Pulse>,
        out: &mut [C64],
    ) {
        let d = self.dim;
        self.refresh_frame(t);
        let mut lab = std::mem::take(&mut self.lab);
        for a in 0..d {
            for b in 0..d {
                lab[a * d + b] = rho_tilde[a * d + b] * self.frame[a] * self.frame[b].conj();
            }
        }
        self.core_rhs(&lab, t, pulse, out, false);
        self.lab = lab;
        for a in 0..d {
            for b in 0..d {
                out[a * d + b] *= self.frame[a].conj() * self.frame[b];
            }
        }
    }

    /// e^{-i E_a t} for every basis state.
    pub fn frame_phases(&self, t: f64) -> Vec<C64> {
        self.energies
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * t))
            .collect()
    }

    fn refresh_frame(&mut self, t: f64) {
        if t == self.frame_time {
            return;
        }
        for (u, &e) in self.frame.iter_mut().zip(&self.energies) {
            *u = C64::from_polar(1.0, -e * t);
        }
        self.frame_time = t;
    }

    fn core_rhs(
        &mut self,
        rho: &[C64],
        t: f64,
        pulse: Option<&Pulse>,
        out: &mut [C64],
        with_h0: bool,
    ) {
        let d = self.dim;
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);

        for a in 0..d {
            let ea = if with_h0 { self.energies[a] } else { 0.0 };
            for b in 0..d {
                let idx = a * d + b;
                let gap = if with_h0 { ea - self.energies[b] } else { 0.0 };
                // -i (E_a - E_b) rho_ab - decay_ab rho_ab
                out[idx] = rho[idx] * C64::new(-self.decay[idx], -gap);
            }
        }

        if let Some(pulse) = pulse {
            let up = C64::from_polar(-0.5 * pulse.amplitude, pulse.frequency * t + pulse.phase);
            let down = up.conj();
            for a in 0..d {
                for b in 0..d {
                    let mut acc = ZERO;
                    for &m in &self.masks {
                        let left = if a & m == 0 { up } else { down };
                        let right = if b & m != 0 { up } else { down };
                        acc += left * rho[(a ^ m) * d + b] - rho[a * d + (b ^ m)] * right;
                    }
                    // -i * acc
                    out[a * d + b] += C64::new(acc.im, -acc.re);
                }
            }
        }

        self.refresh_phases(t);
        for g in &self.gains {
            out[g.target as usize] +=
                rho[g.source as usize] * self.phases[g.phase as usize] * g.weight;
        }
    }

    pub fn rhs(&mut self, rho: &ComplexMatrix, t: f64, pulse: Option<&Pulse>) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim);
        self.rhs_into(rho.as_slice(), t, pulse, out.as_mut_slice());
        out
    }

    /// Dissipator alone (no Hamiltonian part).
    pub fn dissipator(&mut self, rho: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let d = self.dim;
        let mut out = self.rhs(rho, t, None);
        for a in 0..d {
            for b in 0..d {
                let gap = self.energies[a] - self.energies[b];
                out[(a, b)] -= rho[(a, b)] * C64::new(0.0, -gap);
            }
        }
        out
    }
}
