//! Hand-transcribed element-wise right-hand sides for the three-spin chain,
//! used as an independent check on the operator-built generator.
//!
//! The unitary table gives [H, rho]_{ab} entry by entry for the upper
//! triangle; it is completed anti-Hermitian and multiplied by -i. The
//! dissipation table gives (L rho)_{ab} directly and is completed Hermitian.
//!
//! Notation inside the tables follows the published element equations:
//! states are 1-based labels (|1> = |000> ... |8> = |111>), `g(s, i)` is
//! gamma_s^{(i)}, `gd(s, i)` is gamma_s^{dagger(i)} and `ph(s, m, n)` is
//! gamma_s^{(mn)}(t) = e^{i(Omega_s^{(m)} - Omega_s^{(n)}) t}.
//!
//! A handful of dissipation entries contain slips (a dagger on the wrong
//! rate, a wrong spin subscript or state index). They are evaluated both as
//! written and corrected; see [`TYPOS`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{commutator, ComplexMatrix, C64, I};
use crate::dissipator::{apply_markovian, apply_quasi};
use crate::error::{Error, Result};
use crate::model::{
    build_h0, build_hrf, build_rate_table, mhz, omega_eigenvalues, BathParams, RateTable,
    SystemParams,
};
use crate::pulse::Pulse;
use crate::state::random_density_from;

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

/// Whether flagged entries are evaluated exactly as printed or with the
/// documented correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transcription {
    AsWritten,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypoEntry {
    /// 1-based (row, col) of the upper-triangle entry.
    pub element: (usize, usize),
    pub citation: &'static str,
    pub correction: &'static str,
}

pub const TYPOS: &[TypoEntry] = &[
    TypoEntry {
        element: (1, 5),
        citation:
            "L rho_15, C gain: (gamma^{dag(1)}_C + gamma^{dag(6)}_C)/2 gamma^{(62)}_C(t) rho_26",
        correction: "state index 6 -> 5 (equal values, Omega_C^(5) = Omega_C^(6))",
    },
    TypoEntry {
        element: (2, 3),
        citation: "L rho_23, C decay: (gamma^{(2)}_C + gamma^{dag(3)}_C)/2",
        correction: "(gamma^{dag(2)}_C + gamma^{(3)}_C)/2",
    },
    TypoEntry {
        element: (2, 4),
        citation: "L rho_24, C gain: (gamma^{dag(2)}_C + gamma^{(4)}_C)/2 gamma^{(13)}_C(t) rho_13",
        correction: "(gamma^{(2)}_C + gamma^{(4)}_C)/2",
    },
    TypoEntry {
        element: (2, 8),
        citation: "L rho_28, C gain: (gamma^{(2)}_C + gamma^{(8)}_C)/2 gamma^{(17)}_A(t) rho_17",
        correction: "phase gamma^{(17)}_C(t)",
    },
    TypoEntry {
        element: (3, 4),
        citation:
            "L rho_34, B gain: (gamma^{dag(3)}_B + gamma^{dag(4)}_A)/2 gamma^{(12)}_B(t) rho_12",
        correction: "(gamma^{(3)}_B + gamma^{(4)}_B)/2",
    },
    TypoEntry {
        element: (3, 5),
        citation:
            "L rho_35, C gain: (gamma^{dag(3)}_C + gamma^{dag(5)}_C)/2 gamma^{(64)}_A(t) rho_46",
        correction: "phase gamma^{(64)}_C(t)",
    },
    TypoEntry {
        element: (3, 8),
        citation:
            "L rho_38, B gain: (gamma^{dag(3)}_B + gamma^{dag(8)}_B)/2 gamma^{(16)}_B(t) rho_16",
        correction: "(gamma^{(3)}_B + gamma^{(8)}_B)/2",
    },
    TypoEntry {
        element: (5, 7),
        citation: "L rho_57, B decay: (gamma^{dag(5)}_B + gamma^{dag(7)}_B)/2",
        correction: "(gamma^{(5)}_B + gamma^{dag(7)}_B)/2",
    },
    TypoEntry {
        element: (6, 7),
        citation: "L rho_67, C decay: (gamma^{(6)}_C + gamma^{dag(7)}_C)/2",
        correction: "(gamma^{dag(6)}_C + gamma^{(7)}_C)/2",
    },
    TypoEntry {
        element: (6, 8),
        citation: "L rho_68, B decay: (gamma^{dag(6)}_B + gamma^{dag(8)}_B)/2",
        correction: "(gamma^{(6)}_B + gamma^{dag(8)}_B)/2",
    },
    TypoEntry {
        element: (7, 8),
        citation: "L rho_78, C decay: (gamma^{(3)}_C + gamma^{dag(8)}_C)/2",
        correction: "(gamma^{(7)}_C + gamma^{dag(8)}_C)/2",
    },
];

pub fn typo_for(row: usize, col: usize) -> Option<&'static TypoEntry> {
    TYPOS.iter().find(|t| t.element == (row, col))
}

fn require_three_spins(p: &SystemParams) -> Result<()> {
    if p.n_spins != 3 {
        return Err(Error::Unsupported(format!(
            "element tables exist for 3 spins only, got {}",
            p.n_spins
        )));
    }
    Ok(())
}

/// Unitary contribution -i[H_0 + H_rf(t), rho] from the element table.
pub fn oracle_vn_rhs(
    rho: &ComplexMatrix,
    t: f64,
    pulse: Option<&Pulse>,
    p: &SystemParams,
) -> Result<ComplexMatrix> {
    require_three_spins(p)?;
    let r = |i: usize, j: usize| rho[(i - 1, j - 1)];
    let (wa, wb, wc) = (p.omega[0], p.omega[1], p.omega[2]);
    let (j, jp) = (p.j1, p.j2);
    let (h, ep) = match pulse {
        Some(pl) => (
            pl.amplitude / 2.0,
            C64::from_polar(1.0, pl.frequency * t + pl.phase),
        ),
        None => (0.0, C64::new(1.0, 0.0)),
    };
    let em = ep.conj();
    let hp = ep * h;
    let hm = em * h;

    let entry = |a: usize, b: usize| -> C64 {
        match (a, b) {
            (1, 1) => -hp * (r(2, 1) + r(3, 1) + r(5, 1)) + hm * (r(1, 2) + r(1, 3) + r(1, 5)),
            (1, 2) => {
                -(wc - j / 2.0 - jp / 2.0) * r(1, 2) - hp * (r(2, 2) + r(3, 2) + r(5, 2) - r(1, 1))
                    + hm * (r(1, 4) + r(1, 6))
            }
            (1, 3) => {
                -(wb - j) * r(1, 3) - hp * (r(2, 3) + r(3, 3) + r(5, 3) - r(1, 1))
                    + hm * (r(1, 4) + r(1, 7))
            }
            (1, 4) => {
                -(wb + wc - j / 2.0 - jp / 2.0) * r(1, 4)
                    - hp * (r(2, 4) + r(3, 4) + r(5, 4) - r(1, 2) - r(1, 3))
                    + hm * r(1, 8)
            }
            (1, 5) => {
                -(wa - j / 2.0 - jp / 2.0) * r(1, 5) - hp * (r(2, 5) + r(3, 5) + r(5, 5) - r(1, 1))
                    + hm * (r(1, 7) + r(1, 6))
            }
            (1, 6) => {
                -(wa + wc - j) * r(1, 6) - hp * (r(2, 6) + r(3, 6) + r(5, 6) - r(1, 2) - r(1, 5))
                    + hm * r(1, 8)
            }
            (1, 7) => {
                -(wa + wb - j / 2.0 - jp / 2.0) * r(1, 7)
                    - hp * (r(2, 7) + r(3, 7) + r(5, 7) - r(1, 3) - r(1, 5))
                    + hm * r(1, 8)
            }
            (1, 8) => {
                -(wa + wb + wc) * r(1, 8)
                    - hp * (r(2, 8) + r(3, 8) + r(5, 8) - r(1, 4) - r(1, 6) - r(1, 7))
            }
            (2, 2) => -hp * (r(4, 2) + r(6, 2) - r(2, 1)) + hm * (-r(1, 2) + r(2, 6) + r(2, 4)),
            (2, 3) => {
                -(wb - wc - j / 2.0 + jp / 2.0) * r(2, 3) - hp * (r(4, 3) + r(6, 3) - r(2, 1))
                    + hm * (-r(1, 3) + r(2, 4) + r(2, 7))
            }
            (2, 4) => {
                -wb * r(2, 4) - hp * (r(4, 4) + r(6, 4) - r(2, 2) - r(2, 3))
                    + hm * (-r(1, 4) + r(2, 8))
            }
            (2, 5) => {
                -(wa - wc) * r(2, 5) - hp * (r(4, 5) + r(6, 5) - r(2, 1))
                    + hm * (-r(1, 5) + r(2, 7) + r(2, 6))
            }
            (2, 6) => {
                -(wa - j / 2.0 + jp / 2.0) * r(2, 6) - hp * (r(4, 6) + r(6, 6) - r(2, 2) - r(2, 5))
                    + hm * (-r(1, 6) + r(2, 8))
            }
            (2, 7) => {
                -(wa + wb - wc) * r(2, 7) - hp * (r(4, 7) + r(6, 7) - r(2, 3) - r(2, 5))
                    + hm * (-r(1, 7) + r(2, 8))
            }
            (2, 8) => {
                -(wa + wb + j / 2.0 + jp / 2.0) * r(2, 8)
                    - hp * (r(4, 8) + r(6, 8) - r(2, 4) - r(2, 6) - r(2, 7))
                    + hm * (-r(1, 8))
            }
            (3, 3) => -hp * (r(4, 3) + r(7, 3) - r(3, 1)) + hm * (-r(1, 3) + r(3, 4) + r(3, 7)),
            (3, 4) => {
                -(wc + j / 2.0 - jp / 2.0) * r(3, 4) - hp * (r(4, 4) + r(7, 4) - r(3, 2) - r(3, 3))
                    + hm * (-r(1, 4) + r(3, 8))
            }
            (3, 5) => {
                -(wa - wb + j / 2.0 - jp / 2.0) * r(3, 5) - hp * (r(4, 5) + r(7, 5) - r(3, 1))
                    + hm * (-r(1, 5) + r(3, 7) + r(3, 6))
            }
            (3, 6) => {
                -(wa - wb + wc) * r(3, 6) - hp * (r(4, 6) + r(7, 6) - r(3, 2) - r(3, 5))
                    + hm * (-r(1, 6) + r(3, 8))
            }
            (3, 7) => {
                -(wa + j / 2.0 - jp / 2.0) * r(3, 7) - hp * (r(4, 7) + r(7, 7) - r(3, 3) - r(3, 5))
                    + hm * (-r(1, 7) + r(3, 8))
            }
            (3, 8) => {
                -(wa + wc + j) * r(3, 8) - hp * (r(4, 8) + r(7, 8) - r(3, 4) - r(3, 6) - r(3, 7))
                    + hm * (-r(1, 8))
            }
            (4, 4) => -hp * (r(8, 4) - r(4, 2) - r(4, 3)) + hm * (-r(2, 4) - r(3, 4) + r(4, 8)),
            (4, 5) => {
                -(wa - wb - wc) * r(4, 5) - hp * (r(8, 5) - r(4, 1))
                    + hm * (-r(2, 5) - r(3, 5) + r(4, 7) + r(4, 6))
            }
            (4, 6) => {
                -(wa - wb - j / 2.0 + jp / 2.0) * r(4, 6) - hp * (r(8, 6) - r(4, 2) - r(4, 5))
                    + hm * (-r(2, 6) - r(3, 6) + r(4, 8))
            }
            (4, 7) => {
                -(wa - wc) * r(4, 7) - hp * (r(8, 7) - r(4, 3) - r(4, 5))
                    + hm * (-r(2, 7) - r(3, 7) + r(4, 8))
            }
            (4, 8) => {
                -(wa + j / 2.0 + jp / 2.0) * r(4, 8) - hp * (r(8, 8) - r(4, 4) - r(4, 6) - r(4, 7))
                    + hm * (-r(2, 8) - r(3, 8))
            }
            (5, 5) => -hp * (r(6, 5) + r(7, 5) - r(5, 1)) + hm * (-r(1, 5) + r(5, 7) + r(5, 6)),
            (5, 6) => {
                -(wc - j / 2.0 + jp / 2.0) * r(5, 6) - hp * (r(6, 6) + r(7, 6) - r(5, 2) - r(5, 5))
                    + hm * (-r(1, 6) + r(5, 8))
            }
            (5, 7) => {
                -wb * r(5, 7) - hp * (r(6, 7) + r(7, 7) - r(5, 3) - r(5, 5))
                    + hm * (-r(1, 7) + r(5, 8))
            }
            (5, 8) => {
                -(wb + wc + j / 2.0 + jp / 2.0) * r(5, 8)
                    - hp * (r(6, 8) + r(7, 8) - r(5, 4) - r(5, 6) - r(5, 7))
                    + hm * (-r(1, 8))
            }
            (6, 6) => -hp * (r(8, 6) - r(6, 2) - r(6, 5)) + hm * (-r(2, 6) - r(5, 6) + r(6, 8)),
            (6, 7) => {
                -(wb - wc + j / 2.0 - jp / 2.0) * r(6, 7) - hp * (r(8, 7) - r(6, 3) - r(6, 5))
                    + hm * (-r(2, 7) - r(5, 7) + r(6, 8))
            }
            (6, 8) => {
                -(wb + j) * r(6, 8) - hp * (r(8, 8) - r(6, 4) - r(6, 6) - r(6, 7))
                    + hm * (-r(2, 8) - r(5, 8))
            }
            (7, 7) => -hp * (r(8, 7) - r(7, 3) - r(7, 5)) + hm * (-r(3, 7) - r(5, 7) + r(7, 8)),
            (7, 8) => {
                -(wc + j / 2.0 + jp / 2.0) * r(7, 8) - hp * (r(8, 8) - r(7, 4) - r(7, 6) - r(7, 7))
                    + hm * (-r(3, 8) - r(5, 8))
            }
            (8, 8) => -hp * (-r(8, 4) - r(8, 6) - r(8, 7)) + hm * (-r(4, 8) - r(6, 8) - r(7, 8)),
            _ => unreachable!("upper triangle only"),
        }
    };

    let mut out = ComplexMatrix::zeros(8);
    for a in 1..=8 {
        for b in a..=8 {
            let v = -I * entry(a, b);
            out[(a - 1, b - 1)] = v;
            out[(b - 1, a - 1)] = v.conj();
        }
    }
    // diagonal of -i[H, rho] is real for Hermitian rho
    for a in 0..8 {
        out[(a, a)] = C64::new(out[(a, a)].re, 0.0);
    }
    Ok(out)
}

/// Rates and phases seen by the dissipation table.
struct TableRates<'a> {
    rates: &'a RateTable,
    omegas: [Vec<f64>; 3],
    t: f64,
    markovian: bool,
}

impl TableRates<'_> {
    fn g(&self, s: usize, i: usize) -> f64 {
        if self.markovian {
            self.rates.gamma_emit_markov[s]
        } else {
            self.rates.gamma_emit[s][i - 1]
        }
    }

    fn gd(&self, s: usize, i: usize) -> f64 {
        if self.markovian {
            self.rates.gamma_absorb_markov[s]
        } else {
            self.rates.gamma_absorb[s][i - 1]
        }
    }

    fn ph(&self, s: usize, m: usize, n: usize) -> C64 {
        if self.markovian {
            return C64::new(1.0, 0.0);
        }
        let w = &self.omegas[s];
        C64::from_polar(1.0, (w[m - 1] - w[n - 1]) * self.t)
    }
}

fn dissipator_table(
    rho: &ComplexMatrix,
    tr: &TableRates<'_>,
    variant: Transcription,
) -> ComplexMatrix {
    let r = |i: usize, j: usize| rho[(i - 1, j - 1)];
    let g = |s, i| tr.g(s, i);
    let gd = |s, i| tr.gd(s, i);
    let ph = |s, m, n| tr.ph(s, m, n);
    let fix = variant == Transcription::Corrected;
    let pick = |written: f64, corrected: f64| if fix { corrected } else { written };
    let half = |x: f64, y: f64| 0.5 * (x + y);

    let entry = |a: usize, b: usize| -> C64 {
        match (a, b) {
            (1, 1) => {
                -(g(A, 1) + g(B, 1) + g(C, 1)) * r(1, 1)
                    + gd(A, 1) * r(5, 5)
                    + gd(B, 1) * r(3, 3)
                    + gd(C, 1) * r(2, 2)
            }
            (1, 2) => {
                -(half(g(A, 1), g(A, 2)) + half(g(B, 1), g(B, 2)) + half(g(C, 1), gd(C, 2)))
                    * r(1, 2)
                    + half(gd(A, 1), gd(A, 2)) * ph(A, 6, 5) * r(5, 6)
                    + half(gd(B, 1), gd(B, 2)) * ph(B, 4, 3) * r(3, 4)
            }
            (1, 3) => {
                -(half(g(A, 1), g(A, 3)) + half(g(B, 1), gd(B, 3)) + half(g(C, 1), g(C, 3)))
                    * r(1, 3)
                    + half(gd(A, 1), gd(A, 3)) * ph(A, 7, 5) * r(5, 7)
                    + half(gd(C, 1), gd(C, 3)) * ph(C, 4, 2) * r(2, 4)
            }
            (1, 4) => {
                -(half(g(A, 1), g(A, 4)) + half(g(B, 1), gd(B, 4)) + half(g(C, 1), gd(C, 4)))
                    * r(1, 4)
                    + half(gd(A, 1), gd(A, 4)) * ph(A, 8, 5) * r(5, 8)
            }
            (1, 5) => {
                -(half(g(A, 1), gd(A, 5)) + half(g(B, 1), g(B, 5)) + half(g(C, 1), g(C, 5)))
                    * r(1, 5)
                    + half(gd(B, 1), gd(B, 5)) * ph(B, 7, 3) * r(3, 7)
                    + half(gd(C, 1), pick(gd(C, 6), gd(C, 5))) * ph(C, 6, 2) * r(2, 6)
            }
            (1, 6) => {
                -(half(g(A, 1), gd(A, 6)) + half(g(B, 1), g(B, 6)) + half(g(C, 1), gd(C, 6)))
                    * r(1, 6)
                    + half(gd(B, 1), gd(B, 6)) * ph(B, 8, 3) * r(3, 8)
            }
            (1, 7) => {
                -(half(g(A, 1), gd(A, 7)) + half(g(B, 1), gd(B, 7)) + half(g(C, 1), g(C, 7)))
                    * r(1, 7)
                    + half(gd(C, 1), gd(C, 7)) * ph(C, 8, 2) * r(2, 8)
            }
            (1, 8) => {
                -(half(g(A, 1), gd(A, 8)) + half(g(B, 1), gd(B, 8)) + half(g(C, 1), gd(C, 8)))
                    * r(1, 8)
            }
            (2, 2) => {
                -(g(A, 2) + g(B, 2) + gd(C, 2)) * r(2, 2)
                    + gd(A, 2) * r(6, 6)
                    + gd(B, 2) * r(4, 4)
                    + g(C, 2) * r(1, 1)
            }
            (2, 3) => {
                let c_decay = pick(half(g(C, 2), gd(C, 3)), half(gd(C, 2), g(C, 3)));
                -(half(g(A, 2), g(A, 3)) + half(g(B, 2), gd(B, 3)) + c_decay) * r(2, 3)
                    + half(gd(A, 2), gd(A, 3)) * ph(A, 7, 6) * r(6, 7)
            }
            (2, 4) => {
                let c_gain = pick(half(gd(C, 2), g(C, 4)), half(g(C, 2), g(C, 4)));
                -(half(g(A, 2), g(A, 4)) + half(g(B, 2), gd(B, 4)) + half(gd(C, 2), gd(C, 4)))
                    * r(2, 4)
                    + half(gd(A, 2), gd(A, 4)) * ph(A, 8, 6) * r(6, 8)
                    + c_gain * ph(C, 1, 3) * r(1, 3)
            }
            (2, 5) => {
                -(half(g(A, 2), gd(A, 5)) + half(g(B, 2), g(B, 5)) + half(gd(C, 2), g(C, 5)))
                    * r(2, 5)
                    + half(gd(B, 2), gd(B, 5)) * ph(B, 7, 4) * r(4, 7)
            }
            (2, 6) => {
                -(half(g(A, 2), gd(A, 6)) + half(g(B, 2), g(B, 6)) + half(gd(C, 2), gd(C, 6)))
                    * r(2, 6)
                    + half(gd(B, 2), gd(B, 6)) * ph(B, 8, 4) * r(4, 8)
                    + half(g(C, 2), g(C, 6)) * ph(C, 1, 5) * r(1, 5)
            }
            (2, 7) => {
                -(half(g(A, 2), gd(A, 7)) + half(g(B, 2), gd(B, 7)) + half(gd(C, 2), g(C, 7)))
                    * r(2, 7)
            }
            (2, 8) => {
                let phase = if fix { ph(C, 1, 7) } else { ph(A, 1, 7) };
                -(half(g(A, 2), gd(A, 8)) + half(g(B, 2), gd(B, 8)) + half(gd(C, 2), gd(C, 8)))
                    * r(2, 8)
                    + half(g(C, 2), g(C, 8)) * phase * r(1, 7)
            }
            (3, 3) => {
                -(g(A, 3) + gd(B, 3) + g(C, 3)) * r(3, 3)
                    + gd(A, 3) * r(7, 7)
                    + g(B, 3) * r(1, 1)
                    + gd(C, 3) * r(4, 4)
            }
            (3, 4) => {
                let b_gain = pick(half(gd(B, 3), gd(A, 4)), half(g(B, 3), g(B, 4)));
                -(half(g(A, 3), g(A, 4)) + half(gd(B, 3), gd(B, 4)) + half(g(C, 3), gd(C, 4)))
                    * r(3, 4)
                    + half(gd(A, 3), gd(A, 4)) * ph(A, 8, 7) * r(7, 8)
                    + b_gain * ph(B, 1, 2) * r(1, 2)
            }
            (3, 5) => {
                let phase = if fix { ph(C, 6, 4) } else { ph(A, 6, 4) };
                -(half(g(A, 3), gd(A, 5)) + half(gd(B, 3), g(B, 5)) + half(g(C, 3), g(C, 5)))
                    * r(3, 5)
                    + half(gd(C, 3), gd(C, 5)) * phase * r(4, 6)
            }
            (3, 6) => {
                -(half(g(A, 3), gd(A, 6)) + half(gd(B, 3), g(B, 6)) + half(g(C, 3), gd(C, 6)))
                    * r(3, 6)
            }
            (3, 7) => {
                -(half(g(A, 3), gd(A, 7)) + half(gd(B, 3), gd(B, 7)) + half(g(C, 3), g(C, 7)))
                    * r(3, 7)
                    + half(g(B, 3), g(B, 7)) * ph(B, 1, 5) * r(1, 5)
                    + half(gd(C, 3), gd(C, 7)) * ph(C, 8, 4) * r(4, 8)
            }
            (3, 8) => {
                let b_gain = pick(half(gd(B, 3), gd(B, 8)), half(g(B, 3), g(B, 8)));
                -(half(g(A, 3), gd(A, 8)) + half(gd(B, 3), gd(B, 8)) + half(g(C, 3), gd(C, 8)))
                    * r(3, 8)
                    + b_gain * ph(B, 1, 6) * r(1, 6)
            }
            (4, 4) => {
                -(g(A, 4) + gd(B, 4) + gd(C, 4)) * r(4, 4)
                    + gd(A, 4) * r(8, 8)
                    + g(B, 4) * r(2, 2)
                    + g(C, 4) * r(3, 3)
            }
            (4, 5) => {
                -(half(g(A, 4), gd(A, 5)) + half(gd(B, 4), g(B, 5)) + half(gd(C, 4), g(C, 5)))
                    * r(4, 5)
            }
            (4, 6) => {
                -(half(g(A, 4), gd(A, 6)) + half(gd(B, 4), g(B, 6)) + half(gd(C, 4), gd(C, 6)))
                    * r(4, 6)
                    + half(g(C, 4), g(C, 6)) * ph(C, 3, 5) * r(3, 5)
            }
            (4, 7) => {
                -(half(g(A, 4), gd(A, 7)) + half(gd(B, 4), gd(B, 7)) + half(gd(C, 4), g(C, 7)))
                    * r(4, 7)
                    + half(g(B, 4), g(B, 7)) * ph(B, 2, 5) * r(2, 5)
            }
            (4, 8) => {
                -(half(g(A, 4), gd(A, 8)) + half(gd(B, 4), gd(B, 8)) + half(gd(C, 4), gd(C, 8)))
                    * r(4, 8)
                    + half(g(B, 4), g(B, 8)) * ph(B, 2, 6) * r(2, 6)
                    + half(g(C, 4), g(C, 8)) * ph(C, 3, 7) * r(3, 7)
            }
            (5, 5) => {
                -(gd(A, 5) + g(B, 5) + g(C, 5)) * r(5, 5)
                    + g(A, 5) * r(1, 1)
                    + gd(B, 5) * r(7, 7)
                    + gd(C, 5) * r(6, 6)
            }
            (5, 6) => {
                -(half(gd(A, 5), gd(A, 6)) + half(g(B, 5), g(B, 6)) + half(g(C, 5), gd(C, 6)))
                    * r(5, 6)
                    + half(g(A, 5), g(A, 6)) * ph(A, 1, 2) * r(1, 2)
                    + half(gd(B, 5), gd(B, 6)) * ph(B, 8, 7) * r(7, 8)
            }
            (5, 7) => {
                let b_decay = pick(half(gd(B, 5), gd(B, 7)), half(g(B, 5), gd(B, 7)));
                -(half(gd(A, 5), gd(A, 7)) + b_decay + half(g(C, 5), g(C, 7))) * r(5, 7)
                    + half(g(A, 5), g(A, 7)) * ph(A, 1, 3) * r(1, 3)
                    + half(gd(C, 5), gd(C, 7)) * ph(C, 8, 6) * r(6, 8)
            }
            (5, 8) => {
                -(half(gd(A, 5), gd(A, 8)) + half(g(B, 5), gd(B, 8)) + half(g(C, 5), gd(C, 8)))
                    * r(5, 8)
                    + half(g(A, 5), g(A, 8)) * ph(A, 1, 4) * r(1, 4)
            }
            (6, 6) => {
                -(gd(A, 6) + g(B, 6) + gd(C, 6)) * r(6, 6)
                    + g(A, 6) * r(2, 2)
                    + gd(B, 6) * r(8, 8)
                    + g(C, 6) * r(5, 5)
            }
            (6, 7) => {
                let c_decay = pick(half(g(C, 6), gd(C, 7)), half(gd(C, 6), g(C, 7)));
                -(half(gd(A, 6), gd(A, 7)) + half(g(B, 6), gd(B, 7)) + c_decay) * r(6, 7)
                    + half(g(A, 6), g(A, 7)) * ph(A, 2, 3) * r(2, 3)
            }
            (6, 8) => {
                let b_decay = pick(half(gd(B, 6), gd(B, 8)), half(g(B, 6), gd(B, 8)));
                -(half(gd(A, 6), gd(A, 8)) + b_decay + half(gd(C, 6), gd(C, 8))) * r(6, 8)
                    + half(g(A, 6), g(A, 8)) * ph(A, 2, 4) * r(2, 4)
                    + half(g(C, 6), g(C, 8)) * ph(C, 5, 7) * r(5, 7)
            }
            (7, 7) => {
                -(gd(A, 7) + gd(B, 7) + g(C, 7)) * r(7, 7)
                    + g(A, 7) * r(3, 3)
                    + g(B, 7) * r(5, 5)
                    + gd(C, 7) * r(8, 8)
            }
            (7, 8) => {
                let c_decay = pick(half(g(C, 3), gd(C, 8)), half(g(C, 7), gd(C, 8)));
                -(half(gd(A, 7), gd(A, 8)) + half(gd(B, 7), gd(B, 8)) + c_decay) * r(7, 8)
                    + half(g(A, 7), g(A, 8)) * ph(A, 3, 4) * r(3, 4)
                    + half(g(B, 7), g(B, 8)) * ph(B, 5, 6) * r(5, 6)
            }
            (8, 8) => {
                -(gd(A, 8) + gd(B, 8) + gd(C, 8)) * r(8, 8)
                    + g(A, 8) * r(4, 4)
                    + g(B, 8) * r(6, 6)
                    + g(C, 8) * r(7, 7)
            }
            _ => unreachable!("upper triangle only"),
        }
    };

    let mut out = ComplexMatrix::zeros(8);
    for a in 1..=8 {
        for b in a..=8 {
            let v = entry(a, b);
            out[(a - 1, b - 1)] = v;
            out[(b - 1, a - 1)] = v.conj();
        }
    }
    out
}

fn table_rates<'a>(
    rates: &'a RateTable,
    p: &SystemParams,
    t: f64,
    markovian: bool,
) -> Result<TableRates<'a>> {
    require_three_spins(p)?;
    if rates.n_spins() != 3 {
        return Err(Error::arg("rate table is not for 3 spins"));
    }
    Ok(TableRates {
        rates,
        omegas: [
            omega_eigenvalues(p, 1)?,
            omega_eigenvalues(p, 2)?,
            omega_eigenvalues(p, 3)?,
        ],
        t,
        markovian,
    })
}

/// Quasi-non-Markovian dissipation from the element table.
pub fn oracle_dissipator_rhs(
    rho: &ComplexMatrix,
    t: f64,
    rates: &RateTable,
    p: &SystemParams,
    variant: Transcription,
) -> Result<ComplexMatrix> {
    let tr = table_rates(rates, p, t, false)?;
    Ok(dissipator_table(rho, &tr, variant))
}

/// Markovian variant of the same table: all phases 1 and the state-indexed
/// rates replaced by the Larmor-frequency scalars.
pub fn oracle_markovian_rhs(
    rho: &ComplexMatrix,
    rates: &RateTable,
    p: &SystemParams,
    variant: Transcription,
) -> Result<ComplexMatrix> {
    let tr = table_rates(rates, p, 0.0, true)?;
    Ok(dissipator_table(rho, &tr, variant))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    VonNeumann,
    Quasi,
    Markovian,
}

impl Term {
    pub fn as_str(&self) -> &'static str {
        match self {
            Term::VonNeumann => "vn",
            Term::Quasi => "dissipator_quasi",
            Term::Markovian => "dissipator_markov",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementDeviation {
    /// 1-based upper-triangle position.
    pub row: usize,
    pub col: usize,
    pub term: Term,
    pub as_written: f64,
    pub corrected: f64,
    pub typo: Option<&'static TypoEntry>,
}

impl ElementDeviation {
    pub fn passes(&self, tol: f64) -> bool {
        match self.typo {
            Some(_) => self.corrected <= tol,
            None => self.as_written <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub n_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub entries: Vec<ElementDeviation>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passes(self.tolerance))
    }

    /// Unflagged entries whose as-written deviation exceeds the tolerance.
    pub fn unexpected(&self) -> impl Iterator<Item = &ElementDeviation> {
        self.entries
            .iter()
            .filter(|e| e.typo.is_none() && e.as_written > self.tolerance)
    }

    pub fn max_unflagged(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.typo.is_none())
            .map(|e| e.as_written)
            .fold(0.0, f64::max)
    }

    pub fn max_flagged_corrected(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.typo.is_some())
            .map(|e| e.corrected)
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "element-table check: {} random states, seed {}, tolerance {:e}",
            self.n_samples, self.seed, self.tolerance
        );
        let _ = writeln!(
            s,
            "max unflagged deviation {:e}; max corrected deviation on flagged entries {:e}",
            self.max_unflagged(),
            self.max_flagged_corrected()
        );
        let _ = writeln!(s, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        let _ = writeln!(s);
        let _ = writeln!(s, "flagged entries:");
        for e in self.entries.iter().filter(|e| e.typo.is_some()) {
            let typo = e.typo.expect("filtered");
            let _ = writeln!(
                s,
                "  rho_{}{} {:<18} as written {:>11.3e}  corrected {:>11.3e}",
                e.row,
                e.col,
                e.term.as_str(),
                e.as_written,
                e.corrected
            );
            let _ = writeln!(s, "      {}", typo.citation);
            let _ = writeln!(s, "      -> {}", typo.correction);
        }
        let unexpected: Vec<_> = self.unexpected().collect();
        let _ = writeln!(s);
        if unexpected.is_empty() {
            let _ = writeln!(s, "no unflagged discrepancies");
        } else {
            let _ = writeln!(s, "unflagged discrepancies:");
            for e in unexpected {
                let _ = writeln!(
                    s,
                    "  rho_{}{} {:<18} {:>11.3e}",
                    e.row,
                    e.col,
                    e.term.as_str(),
                    e.as_written
                );
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record([
            "element",
            "term",
            "deviation",
            "corrected_deviation",
            "flag",
            "citation",
        ])
        .map_err(csv_err)?;
        for e in &self.entries {
            let (flag, citation) = match e.typo {
                Some(t) => ("suspected_typo", t.citation),
                None => ("", ""),
            };
            w.write_record([
                format!("rho_{}{}", e.row, e.col),
                e.term.as_str().to_string(),
                format!("{:e}", e.as_written),
                format!("{:e}", e.corrected),
                flag.to_string(),
                citation.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Bath used by the discrepancy report: cold enough that emission and
/// absorption rates differ by O(1), so a misplaced dagger is visible.
pub fn report_bath() -> BathParams {
    BathParams::new(0.01, 1.0)
}

/// Compares the element tables with the operator-built generator on
/// `n_samples` random states, times and pulses.
pub fn run_discrepancy_report(n_samples: usize, seed: u64) -> Result<OracleReport> {
    run_discrepancy_report_with(&SystemParams::default(), &report_bath(), n_samples, seed)
}

pub fn run_discrepancy_report_with(
    p: &SystemParams,
    bath: &BathParams,
    n_samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    if n_samples == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    require_three_spins(p)?;
    let rates = build_rate_table(p, bath)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0 = build_h0(p);

    // [term][element][as_written, corrected]
    let mut dev = vec![[[0.0f64; 2]; 64]; 3];
    for _ in 0..n_samples {
        let rho = random_density_from(8, &mut rng);
        let t = rng.gen_range(0.0..50.0);
        let pulse = Pulse::new(
            rng.gen_range(mhz(50.0)..mhz(500.0)),
            rng.gen_range(0.0..std::f64::consts::TAU),
            1.0,
            rng.gen_range(mhz(0.05)..mhz(5.0)),
            0.0,
        )?;

        let h = &h0 + &build_hrf(p, t, &pulse);
        let vn_op = commutator(&h, &rho)?.scale(-I);
        let vn_table = oracle_vn_rhs(&rho, t, Some(&pulse), p)?;
        let quasi_op = apply_quasi(&rho, t, &rates, p)?;
        let markov_op = apply_markovian(&rho, &rates, p)?;

        let pairs: [(Term, &ComplexMatrix, [ComplexMatrix; 2]); 3] = [
            (Term::VonNeumann, &vn_op, [vn_table.clone(), vn_table]),
            (
                Term::Quasi,
                &quasi_op,
                [
                    oracle_dissipator_rhs(&rho, t, &rates, p, Transcription::AsWritten)?,
                    oracle_dissipator_rhs(&rho, t, &rates, p, Transcription::Corrected)?,
                ],
            ),
            (
                Term::Markovian,
                &markov_op,
                [
                    oracle_markovian_rhs(&rho, &rates, p, Transcription::AsWritten)?,
                    oracle_markovian_rhs(&rho, &rates, p, Transcription::Corrected)?,
                ],
            ),
        ];
        for (ti, (_, op, tables)) in pairs.iter().enumerate() {
            for a in 0..8 {
                for b in a..8 {
                    for v in 0..2 {
                        let d = (tables[v][(a, b)] - op[(a, b)]).norm();
                        let slot = &mut dev[ti][a * 8 + b][v];
                        *slot = slot.max(d);
                    }
                }
            }
        }
    }

    let mut entries = Vec::new();
    for (ti, term) in [Term::VonNeumann, Term::Quasi, Term::Markovian]
        .into_iter()
        .enumerate()
    {
        for a in 0..8 {
            for b in a..8 {
                let [as_written, corrected] = dev[ti][a * 8 + b];
                let typo = match term {
                    Term::VonNeumann => None,
                    _ => typo_for(a + 1, b + 1),
                };
                entries.push(ElementDeviation {
                    row: a + 1,
                    col: b + 1,
                    term,
                    as_written,
                    corrected,
                    typo,
                });
            }
        }
    }

    Ok(OracleReport {
        n_samples,
        seed,
        tolerance: 1e-10,
        entries,
    })
}
