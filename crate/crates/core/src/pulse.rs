//! RF pulse schedules, in particular the two-pulse CNOT protocol
//! |000> --pi/2--> (|000>+|010>)/sqrt2 --pi--> (|000>+|011>)/sqrt2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::BasisState;
use crate::error::{Error, Result};
use crate::model::SystemParams;

/// A rectangular RF pulse. The drive is e^{i(frequency * t + phase)} in
/// absolute time, so contiguous pulses at one frequency form a continuous drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// rad/us
    pub frequency: f64,
    pub phase: f64,
    /// Rotation angle on the resonant transition.
    pub angle: f64,
    /// Rabi frequency [rad/us].
    pub amplitude: f64,
    /// us
    pub start_time: f64,
}

impl Pulse {
    pub fn new(
        frequency: f64,
        phase: f64,
        angle: f64,
        amplitude: f64,
        start_time: f64,
    ) -> Result<Self> {
        if !(angle > 0.0 && angle.is_finite()) {
            return Err(Error::arg(format!("pulse angle {angle} must be positive")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::arg(format!(
                "pulse amplitude {amplitude} must be positive"
            )));
        }
        Ok(Self {
            frequency,
            phase,
            angle,
            amplitude,
            start_time,
        })
    }

    pub fn duration(&self) -> f64 {
        self.angle / self.amplitude
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sequence {
    pulses: Vec<Pulse>,
}

impl Sequence {
    /// Appends pulses back to back starting at t = 0; start times of the
    /// given pulses are overwritten.
    pub fn contiguous(pulses: impl IntoIterator<Item = Pulse>) -> Self {
        let mut t = 0.0;
        let pulses = pulses
            .into_iter()
            .map(|mut p| {
                p.start_time = t;
                t += p.duration();
                p
            })
            .collect();
        Self { pulses }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().map(Pulse::duration).sum()
    }

    /// Pulse active at time `t`, half-open windows [start, end).
    pub fn active_at(&self, t: f64) -> Option<&Pulse> {
        self.pulses
            .iter()
            .find(|p| t >= p.start_time && t < p.end_time())
    }
}

/// |E_i - E_j| for two states (1-based labels) differing in exactly one spin.
pub fn resonance_frequency(p: &SystemParams, i: usize, j: usize) -> Result<f64> {
    let a = BasisState::from_label(p.n_spins, i)?;
    let b = BasisState::from_label(p.n_spins, j)?;
    let flipped = (a.index() ^ b.index()).count_ones();
    if flipped != 1 {
        return Err(Error::arg(format!(
            "states {i} and {j} differ in {flipped} spins, expected 1"
        )));
    }
    let e = p.energies();
    Ok((e[a.index()] - e[b.index()]).abs())
}

/// pi/2 on 1<->3, pi on 3<->4, then `trailing_pi_pulses` further pi pulses
/// on 3<->4 (a fractional remainder shortens the last one). Phase 0 and
/// amplitude `p.rabi` throughout.
pub fn cnot_sequence(p: &SystemParams, trailing_pi_pulses: f64) -> Result<Sequence> {
    if !(trailing_pi_pulses >= 0.0 && trailing_pi_pulses.is_finite()) {
        return Err(Error::arg(format!(
            "trailing pulse count {trailing_pi_pulses} must be >= 0"
        )));
    }
    if p.n_spins != 3 {
        return Err(Error::Unsupported(format!(
            "CNOT protocol is defined for 3 spins, got {}",
            p.n_spins
        )));
    }
    p.validate()?;
    let w13 = resonance_frequency(p, 1, 3)?;
    let w34 = resonance_frequency(p, 3, 4)?;
    let mut pulses = vec![
        Pulse::new(w13, 0.0, PI / 2.0, p.rabi, 0.0)?,
        Pulse::new(w34, 0.0, PI, p.rabi, 0.0)?,
    ];
    let whole = trailing_pi_pulses.floor() as usize;
    let frac = trailing_pi_pulses - whole as f64;
    for _ in 0..whole {
        pulses.push(Pulse::new(w34, 0.0, PI, p.rabi, 0.0)?);
    }
    if frac > 1e-12 {
        pulses.push(Pulse::new(w34, 0.0, PI * frac, p.rabi, 0.0)?);
    }
    Ok(Sequence::contiguous(pulses))
}

/// Rabi amplitude for which a transition detuned by `detuning` completes
/// `k` full 2pi cycles during a pulse of rotation angle `angle` on resonance:
/// sqrt(Omega^2 + Delta^2) * (angle / Omega) = 2 pi k.
pub fn two_pi_k_amplitude(detuning: f64, angle: f64, k: u32) -> Result<f64> {
    let ratio = 2.0 * PI * k as f64 / angle;
    if k == 0 || ratio <= 1.0 {
        return Err(Error::arg(format!(
            "no 2pi-k amplitude for k = {k} and angle {angle}"
        )));
    }
    Ok(detuning.abs() / (ratio * ratio - 1.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mhz;

    #[test]
    fn resonance_examples() {
        let p = SystemParams::default();
        assert!((resonance_frequency(&p, 1, 3).unwrap() - mhz(175.0)).abs() < 1e-9);
        assert!((resonance_frequency(&p, 3, 4).unwrap() - mhz(112.0)).abs() < 1e-9);
        assert!(resonance_frequency(&p, 1, 4).is_err());
        assert!(resonance_frequency(&p, 2, 2).is_err());

        let free = SystemParams {
            j1: 0.0,
            j2: 0.0,
            ..SystemParams::default()
        };
        assert!((resonance_frequency(&free, 1, 5).unwrap() - free.omega[0]).abs() < 1e-9);
        assert!((resonance_frequency(&free, 6, 8).unwrap() - free.omega[1]).abs() < 1e-9);
        assert!((resonance_frequency(&free, 7, 8).unwrap() - free.omega[2]).abs() < 1e-9);
    }

    #[test]
    fn cnot_default_timing() {
        let p = SystemParams::default();
        let s = cnot_sequence(&p, 2.5).unwrap();
        let d: Vec<f64> = s.pulses().iter().map(Pulse::duration).collect();
        assert_eq!(s.len(), 5);
        assert!((d[0] - 2.5).abs() < 1e-12);
        assert!((d[1] - 5.0).abs() < 1e-12);
        assert!((d[4] - 2.5).abs() < 1e-12);
        assert!((s.total_duration() - 20.0).abs() < 1e-12);
        assert!((s.pulses()[0].frequency - mhz(175.0)).abs() < 1e-9);
        for pulse in &s.pulses()[1..] {
            assert!((pulse.frequency - mhz(112.0)).abs() < 1e-9);
            assert_eq!(pulse.phase, 0.0);
        }
        for w in s.pulses().windows(2) {
            assert!(w[1].start_time > w[0].start_time);
            assert!((w[1].start_time - w[0].end_time()).abs() < 1e-12);
        }
    }

    #[test]
    fn cnot_without_trailing() {
        let s = cnot_sequence(&SystemParams::default(), 0.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(cnot_sequence(&SystemParams::default(), -1.0).is_err());
    }

    #[test]
    fn active_window() {
        let s = cnot_sequence(&SystemParams::default(), 0.0).unwrap();
        assert_eq!(s.active_at(0.0).unwrap().angle, PI / 2.0);
        assert_eq!(s.active_at(2.5).unwrap().angle, PI);
        assert!(s.active_at(7.5).is_none());
    }

    #[test]
    fn two_pi_k() {
        let delta = mhz(1.0);
        let amp = two_pi_k_amplitude(delta, PI, 1).unwrap();
        let t = PI / amp;
        let cycles = (amp * amp + delta * delta).sqrt() * t / (2.0 * PI);
        assert!((cycles - 1.0).abs() < 1e-12);
        assert!(two_pi_k_amplitude(delta, 2.0 * PI, 1).is_err());
    }

    #[test]
    fn pulse_validation() {
        assert!(Pulse::new(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(Pulse::new(1.0, 0.0, 1.0, 0.0, 0.0).is_err());
    }
}
