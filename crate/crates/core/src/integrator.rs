//! Fixed-step RK4 integration of the master equation with invariant monitors.
//!
//! By default the integrated variable is rho~ = U^dagger rho U with
//! U = e^{-i H_0 t}, so the Larmor precession (up to ~4.4e3 rad/us) is carried
//! exactly and RK4 only resolves the drive and the dissipator. Everything
//! recorded is converted back to the lab frame. [`Frame::Lab`] integrates
//! rho itself; at the default step it damps the fastest coherences by
//! ~(w dt)^6 / 144 per step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, C64};
use crate::diagnostics::{purity, tracked_coherences};
use crate::dissipator::{DissipatorMode, MasterEquation};
use crate::eigen::min_eigenvalue;
use crate::error::{Error, Result};
use crate::model::{RateTable, SystemParams};
use crate::pulse::{Pulse, Sequence};
use crate::state::validate_density;

/// Hard limits; crossing one aborts the run.
pub const TRACE_LIMIT: f64 = 1e-6;
pub const MIN_EIG_LIMIT: f64 = -1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Interaction,
    Lab,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Interaction => "interaction",
            Frame::Lab => "lab",
        }
    }
}

impl std::str::FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interaction" => Ok(Frame::Interaction),
            "lab" => Ok(Frame::Lab),
            other => Err(Error::arg(format!(
                "unknown frame '{other}', expected interaction or lab"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// us
    pub dt: f64,
    /// Steps between recorded samples.
    pub sample_stride: usize,
    /// Steps between trace/Hermiticity/eigenvalue checks and re-symmetrization.
    pub monitor_stride: usize,
    pub frame: Frame,
}

impl IntegratorConfig {
    /// One fiftieth of the period of the fastest coherence of H_0.
    pub fn for_system(p: &SystemParams) -> Self {
        Self {
            dt: 2.0 * PI / p.max_frequency() / 50.0,
            sample_stride: 1000,
            monitor_stride: 1000,
            frame: Frame::Interaction,
        }
    }

    /// Largest admissible step: dt * w_max <= 2pi/20.
    pub fn dt_cap(p: &SystemParams) -> f64 {
        2.0 * PI / 20.0 / p.max_frequency()
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::arg(format!("dt = {} must be positive", self.dt)));
        }
        let cap = Self::dt_cap(p);
        if self.dt > cap {
            return Err(Error::arg(format!(
                "dt = {:e} us exceeds the stability cap {:e} us",
                self.dt, cap
            )));
        }
        if self.sample_stride == 0 || self.monitor_stride == 0 {
            return Err(Error::arg("strides must be at least 1"));
        }
        Ok(())
    }
}

/// RK4 stepper with preallocated stage buffers. The state it advances is
/// rho~ in the interaction frame and rho in the lab frame; see
/// [`Stepper::from_lab`] and [`Stepper::to_lab`].
#[derive(Debug, Clone)]
pub struct Stepper {
    eq: MasterEquation,
    frame: Frame,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Stepper {
    pub fn new(
        p: &SystemParams,
        rates: &RateTable,
        mode: DissipatorMode,
        frame: Frame,
    ) -> Result<Self> {
        let eq = MasterEquation::new(p, rates, mode)?;
        let n = eq.dim() * eq.dim();
        Ok(Self {
            eq,
            frame,
            k1: vec![C64::new(0.0, 0.0); n],
            k2: vec![C64::new(0.0, 0.0); n],
            k3: vec![C64::new(0.0, 0.0); n],
            k4: vec![C64::new(0.0, 0.0); n],
            tmp: vec![C64::new(0.0, 0.0); n],
        })
    }

    pub fn dim(&self) -> usize {
        self.eq.dim()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    fn conjugate(&self, m: &ComplexMatrix, t: f64, sign: f64) -> ComplexMatrix {
        match self.frame {
            Frame::Lab => m.clone(),
            Frame::Interaction => {
                let u = self.eq.frame_phases(sign * t);
                let d = m.dim();
                let mut out = m.clone();
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] *= u[a] * u[b].conj();
                    }
                }
                out
            }
        }
    }

    /// Lab-frame rho at time `t` from the integrated variable.
    pub fn to_lab(&self, y: &ComplexMatrix, t: f64) -> ComplexMatrix {
        self.conjugate(y, t, 1.0)
    }

    /// Integrated variable at time `t` from a lab-frame rho.
    pub fn from_lab(&self, rho: &ComplexMatrix, t: f64) -> ComplexMatrix {
        self.conjugate(rho, t, -1.0)
    }

    fn eval(&mut self, which: usize, t: f64, pulse: Option<&Pulse>) {
        let (src, dst) = match which {
            2 => (&self.tmp, &mut self.k2),
            3 => (&self.tmp, &mut self.k3),
            _ => (&self.tmp, &mut self.k4),
        };
        match self.frame {
            Frame::Lab => self.eq.rhs_into(src, t, pulse, dst),
            Frame::Interaction => self.eq.interaction_rhs_into(src, t, pulse, dst),
        }
    }

    /// Advances the integrated variable `y` (row-major) from t to t + dt in place.
    pub fn advance(&mut self, y: &mut [C64], t: f64, dt: f64, pulse: Option<&Pulse>) -> Result<()> {
        let h = 0.5 * dt;
        match self.frame {
            Frame::Lab => self.eq.rhs_into(y, t, pulse, &mut self.k1),
            Frame::Interaction => self.eq.interaction_rhs_into(y, t, pulse, &mut self.k1),
        }
        for ((s, r), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *s = r + k * h;
        }
        self.eval(2, t + h, pulse);
        for ((s, r), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *s = r + k * h;
        }
        self.eval(3, t + h, pulse);
        for ((s, r), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *s = r + k * dt;
        }
        self.eval(4, t + dt, pulse);
        let rho = y;

        let w = dt / 6.0;
        let mut finite = true;
        for (i, r) in rho.iter_mut().enumerate() {
            *r += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
            finite &= r.re.is_finite() && r.im.is_finite();
        }
        if !finite {
            return Err(Error::Numerical {
                t: t + dt,
                reason: "non-finite density matrix entry".into(),
            });
        }
        Ok(())
    }
}

/// One RK4 step of the master equation, lab-frame state in and out.
/// Convenience form; [`run`] keeps a [`Stepper`] alive instead of
/// rebuilding the generator every step.
#[allow(clippy::too_many_arguments)]
pub fn step(
    rho: &ComplexMatrix,
    t: f64,
    dt: f64,
    mode: DissipatorMode,
    frame: Frame,
    pulse: Option<&Pulse>,
    p: &SystemParams,
    rates: &RateTable,
) -> Result<ComplexMatrix> {
    let cap = IntegratorConfig::dt_cap(p);
    if !(dt > 0.0 && dt <= cap) {
        return Err(Error::arg(format!("dt = {dt:e} outside (0, {cap:e}]")));
    }
    if rho.dim() != p.dim() {
        return Err(Error::arg(format!(
            "state dimension {} does not match 2^{}",
            rho.dim(),
            p.n_spins
        )));
    }
    let mut stepper = Stepper::new(p, rates, mode, frame)?;
    let mut y = stepper.from_lab(rho, t);
    stepper.advance(y.as_mut_slice(), t, dt, pulse)?;
    Ok(stepper.to_lab(&y, t + dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// |rho_13|, |rho_14|, |rho_34| (NaN when the register has fewer than 4 states).
    pub coherences: [f64; 3],
    pub purity: f64,
    pub trace_dev: f64,
    pub herm_dev: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakMonitors {
    pub trace_dev: f64,
    pub herm_dev: f64,
    pub min_eig: f64,
}

impl PeakMonitors {
    fn absorb(&mut self, trace_dev: f64, herm_dev: f64, min_eig: f64) {
        self.trace_dev = self.trace_dev.max(trace_dev);
        self.herm_dev = self.herm_dev.max(herm_dev);
        self.min_eig = self.min_eig.min(min_eig);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rho: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub mode: DissipatorMode,
    pub dim: usize,
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<Sample>,
    /// Populations rho_ii, one row of `dim` values per sample.
    pub populations: Vec<Vec<f64>>,
    /// State at the end of each pulse that finished before the horizon.
    pub pulse_ends: Vec<Snapshot>,
    pub final_state: ComplexMatrix,
    pub peak: PeakMonitors,
}

impl TrajectoryRecord {
    pub fn empty(mode: DissipatorMode, dim: usize) -> Self {
        Self {
            mode,
            dim,
            dt: 0.0,
            steps: 0,
            samples: Vec::new(),
            populations: Vec::new(),
            pulse_ends: Vec::new(),
            final_state: ComplexMatrix::zeros(dim),
            peak: PeakMonitors::default(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn final_sample(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

struct Monitor {
    trace_dev: f64,
    herm_dev: f64,
    min_eig: f64,
}

fn measure(rho: &ComplexMatrix) -> Monitor {
    Monitor {
        trace_dev: (rho.trace() - C64::new(1.0, 0.0)).norm(),
        herm_dev: rho.hermitian_deviation(),
        min_eig: min_eigenvalue(rho),
    }
}

fn check_limits(m: &Monitor, t: f64) -> Result<()> {
    if m.trace_dev > TRACE_LIMIT {
        return Err(Error::Integrity {
            t,
            reason: format!("trace drift {:e} exceeds {:e}", m.trace_dev, TRACE_LIMIT),
        });
    }
    if m.min_eig < MIN_EIG_LIMIT {
        return Err(Error::Integrity {
            t,
            reason: format!("eigenvalue {:e} below {:e}", m.min_eig, MIN_EIG_LIMIT),
        });
    }
    Ok(())
}

struct Segment {
    start: f64,
    end: f64,
    pulse: Option<Pulse>,
}

fn segments(sequence: &Sequence, horizon: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut t = 0.0;
    for pulse in sequence.pulses() {
        if t >= horizon {
            break;
        }
        if pulse.start_time > t {
            out.push(Segment {
                start: t,
                end: pulse.start_time.min(horizon),
                pulse: None,
            });
            t = pulse.start_time;
            if t >= horizon {
                break;
            }
        }
        let end = pulse.end_time().min(horizon);
        out.push(Segment {
            start: t,
            end,
            pulse: Some(*pulse),
        });
        t = end;
    }
    if t < horizon {
        out.push(Segment {
            start: t,
            end: horizon,
            pulse: None,
        });
    }
    out
}

/// Integrates `rho0` from t = 0 to `horizon` through `sequence`.
///
/// Every segment (a pulse window or free evolution) is split into a whole
/// number of equal steps no longer than `config.dt`, so pulse edges fall on
/// step boundaries.
pub fn run(
    rho0: &ComplexMatrix,
    sequence: &Sequence,
    horizon: f64,
    mode: DissipatorMode,
    config: &IntegratorConfig,
    p: &SystemParams,
    rates: &RateTable,
) -> Result<TrajectoryRecord> {
    run_observed(
        rho0,
        sequence,
        horizon,
        mode,
        config,
        p,
        rates,
        &mut |_, _| {},
    )
}

/// [`run`], additionally handing the full lab-frame state to `observer` at
/// every sample time.
#[allow(clippy::too_many_arguments)]
pub fn run_observed(
    rho0: &ComplexMatrix,
    sequence: &Sequence,
    horizon: f64,
    mode: DissipatorMode,
    config: &IntegratorConfig,
    p: &SystemParams,
    rates: &RateTable,
    observer: &mut dyn FnMut(f64, &ComplexMatrix),
) -> Result<TrajectoryRecord> {
    config.validate(p)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::arg(format!("horizon {horizon} must be positive")));
    }
    if rho0.dim() != p.dim() {
        return Err(Error::arg(format!(
            "state dimension {} does not match 2^{}",
            rho0.dim(),
            p.n_spins
        )));
    }
    validate_density(rho0, 1e-9)?;

    let mut stepper = Stepper::new(p, rates, mode, config.frame)?;
    let mut y = stepper.from_lab(rho0, 0.0);
    let mut record = TrajectoryRecord::empty(mode, p.dim());
    record.dt = config.dt;

    let mut take_sample =
        |rho: &ComplexMatrix, t: f64, record: &mut TrajectoryRecord| -> Result<()> {
            observer(t, rho);
            let m = measure(rho);
            check_limits(&m, t)?;
            record.peak.absorb(m.trace_dev, m.herm_dev, m.min_eig);
            record.samples.push(Sample {
                t,
                coherences: tracked_coherences(rho),
                purity: purity(rho),
                trace_dev: m.trace_dev,
                herm_dev: m.herm_dev,
                min_eig: m.min_eig,
            });
            record
                .populations
                .push(rho.diag().iter().map(|z| z.re).collect());
            Ok(())
        };

    take_sample(rho0, 0.0, &mut record)?;
    let mut step_count = 0usize;
    let mut last_sampled = 0usize;
    let mut t = 0.0;

    for seg in segments(sequence, horizon) {
        let len = seg.end - seg.start;
        let n = ((len / config.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for i in 0..n {
            t = seg.start + i as f64 * h;
            stepper.advance(y.as_mut_slice(), t, h, seg.pulse.as_ref())?;
            step_count += 1;
            t = seg.start + (i + 1) as f64 * h;

            // trace, Hermiticity and spectrum are frame independent
            if step_count.is_multiple_of(config.monitor_stride) {
                let m = measure(&y);
                record.peak.absorb(m.trace_dev, m.herm_dev, m.min_eig);
                check_limits(&m, t)?;
                y.symmetrize();
            }
            if step_count.is_multiple_of(config.sample_stride) {
                take_sample(&stepper.to_lab(&y, t), t, &mut record)?;
                last_sampled = step_count;
            }
        }
        if let Some(pulse) = seg.pulse {
            if (seg.end - pulse.end_time()).abs() <= 1e-12 * seg.end.max(1.0) {
                record.pulse_ends.push(Snapshot {
                    t: seg.end,
                    rho: stepper.to_lab(&y, seg.end),
                });
            }
        }
    }
    let rho = stepper.to_lab(&y, t);
    if last_sampled != step_count {
        take_sample(&rho, t, &mut record)?;
    }
    record.steps = step_count;
    record.final_state = rho;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_rate_table, mhz, BathParams};
    use crate::pulse::cnot_sequence;
    use crate::state::{basis_state, random_density};

    fn closed_rates(p: &SystemParams) -> RateTable {
        RateTable::zeros(p)
    }

    #[test]
    fn default_dt() {
        let p = SystemParams::default();
        let c = IntegratorConfig::for_system(&p);
        assert!((c.dt - 1.0 / 700.0 / 50.0).abs() < 1e-12);
        c.validate(&p).unwrap();
        let bad = IntegratorConfig { dt: 1e-3, ..c };
        assert!(bad.validate(&p).is_err());
        let zero = IntegratorConfig { dt: 0.0, ..c };
        assert!(zero.validate(&p).is_err());
    }

    #[test]
    fn diagonal_state_is_stationary() {
        let p = SystemParams::default();
        let rates = closed_rates(&p);
        let rho = ComplexMatrix::from_real_diag(&[0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]);
        let dt = IntegratorConfig::for_system(&p).dt;
        let mut stepper = Stepper::new(&p, &rates, DissipatorMode::Markovian, Frame::Lab).unwrap();
        let mut r = rho.clone();
        for i in 0..100 {
            stepper
                .advance(r.as_mut_slice(), i as f64 * dt, dt, None)
                .unwrap();
        }
        assert!(r.max_abs_diff(&rho) <= 1e-14);
    }

    fn free_coherence(frame: Frame, dt: f64) -> C64 {
        let p = SystemParams::default();
        let rates = closed_rates(&p);
        let rho = ComplexMatrix::outer_basis(8, 0, 2);
        let tau = 1.0013;
        let n = (tau / dt).ceil() as usize;
        let h = tau / n as f64;
        let mut stepper = Stepper::new(&p, &rates, DissipatorMode::Markovian, frame).unwrap();
        let mut y = stepper.from_lab(&rho, 0.0);
        for i in 0..n {
            stepper
                .advance(y.as_mut_slice(), i as f64 * h, h, None)
                .unwrap();
        }
        let r = stepper.to_lab(&y, tau);
        let mut rest = r.clone();
        rest[(0, 2)] = C64::new(0.0, 0.0);
        assert_eq!(rest.max_abs(), 0.0);
        r[(0, 2)]
    }

    #[test]
    fn free_coherence_rotates_at_transition_frequency() {
        let p = SystemParams::default();
        let tau = 1.0013;
        let expected = C64::from_polar(1.0, (p.omega[1] - p.j1) * tau);
        let dt = IntegratorConfig::for_system(&p).dt;

        let got = free_coherence(Frame::Interaction, dt);
        assert!((got.norm() - 1.0).abs() <= 1e-9 * tau);
        assert!((got - expected).norm() < 1e-12, "{got} vs {expected}");

        // RK4 on the lab-frame equation shrinks a coherence at frequency w by
        // ~(w dt)^6 / 144 per step, ~1e-7 per us at the default step
        let got = free_coherence(Frame::Lab, dt / 4.0);
        assert!(
            (got.norm() - 1.0).abs() <= 1e-9 * tau,
            "drift {}",
            got.norm() - 1.0
        );
        assert!((got - expected).norm() < 1e-7, "{got} vs {expected}");
    }

    fn richardson(frame: Frame, amplitude: f64, horizon: f64) -> f64 {
        let p = SystemParams::default();
        let rates = closed_rates(&p);
        let seq =
            Sequence::contiguous([Pulse::new(mhz(175.0), 0.3, 10.0, amplitude, 0.0).unwrap()]);
        let rho0 = random_density(8, 11);
        let base = IntegratorConfig::dt_cap(&p);
        let finals: Vec<ComplexMatrix> = [base, base / 2.0, base / 4.0]
            .iter()
            .map(|&dt| {
                let c = IntegratorConfig {
                    dt,
                    sample_stride: 1 << 30,
                    monitor_stride: 1 << 30,
                    frame,
                };
                run(
                    &rho0,
                    &seq,
                    horizon,
                    DissipatorMode::Markovian,
                    &c,
                    &p,
                    &rates,
                )
                .unwrap()
                .final_state
            })
            .collect();
        let e1 = finals[0].max_abs_diff(&finals[1]);
        let e2 = finals[1].max_abs_diff(&finals[2]);
        eprintln!("{frame:?}: e1 {e1:e} e2 {e2:e}");
        (e1 / e2).log2()
    }

    #[test]
    fn richardson_order() {
        let lab = richardson(Frame::Lab, mhz(5.0), 0.2);
        assert!(lab >= 3.5, "lab frame order {lab}");
        let ip = richardson(Frame::Interaction, mhz(40.0), 0.2);
        assert!(ip >= 3.5, "interaction frame order {ip}");
    }

    #[test]
    fn segments_cover_horizon() {
        let p = SystemParams::default();
        let seq = cnot_sequence(&p, 0.0).unwrap();
        let s = segments(&seq, 10.0);
        assert_eq!(s.len(), 3);
        assert!(s[2].pulse.is_none());
        assert_eq!(s[2].end, 10.0);
        let cut = segments(&seq, 4.0);
        assert_eq!(cut.len(), 2);
        assert_eq!(cut[1].end, 4.0);
    }

    #[test]
    fn run_records_pulse_ends_and_samples() {
        let p = SystemParams::default();
        let bath = BathParams::new(0.0, mhz(0.1));
        let rates = build_rate_table(&p, &bath).unwrap();
        let seq = cnot_sequence(&p, 0.0).unwrap();
        let config = IntegratorConfig {
            dt: IntegratorConfig::for_system(&p).dt * 2.0,
            sample_stride: 5000,
            monitor_stride: 500,
            frame: Frame::Interaction,
        };
        let rec = run(
            &basis_state(8, 0),
            &seq,
            8.0,
            DissipatorMode::QuasiNonMarkovian,
            &config,
            &p,
            &rates,
        )
        .unwrap();
        assert_eq!(rec.pulse_ends.len(), 2);
        assert!((rec.pulse_ends[1].t - 7.5).abs() < 1e-12);
        assert_eq!(rec.samples[0].t, 0.0);
        assert!((rec.final_sample().unwrap().t - 8.0).abs() < 1e-12);
        assert_eq!(rec.samples.len(), rec.populations.len());
        assert!(rec.peak.trace_dev < 1e-10);
        assert!(rec.peak.herm_dev < 1e-12);
        for w in rec.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = SystemParams::default();
        let rates = closed_rates(&p);
        let c = IntegratorConfig::for_system(&p);
        let seq = Sequence::default();
        let bad = ComplexMatrix::identity(8);
        assert!(matches!(
            run(&bad, &seq, 1.0, DissipatorMode::Markovian, &c, &p, &rates),
            Err(Error::State(_))
        ));
        let rho = basis_state(8, 0);
        assert!(run(&rho, &seq, 0.0, DissipatorMode::Markovian, &c, &p, &rates).is_err());
        assert!(step(
            &rho,
            0.0,
            1.0,
            DissipatorMode::Markovian,
            Frame::Interaction,
            None,
            &p,
            &rates
        )
        .is_err());
    }

    #[test]
    fn nan_is_numerical_error() {
        let p = SystemParams::default();
        let rates = closed_rates(&p);
        let mut rho = basis_state(8, 0);
        rho[(0, 1)] = C64::new(f64::NAN, 0.0);
        let dt = IntegratorConfig::for_system(&p).dt;
        let err = step(
            &rho,
            0.5,
            dt,
            DissipatorMode::Markovian,
            Frame::Lab,
            None,
            &p,
            &rates,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }
}
