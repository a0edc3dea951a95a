use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::moments;
use crate::error::{Error, Result};
use crate::flow::{flow_particle, FlowStepSpec};
use crate::kernels::{CoagKernelParams, FusionKernelParams};
use crate::mc::sumtree::SumTreeIndex;
use crate::types::{ExponentPair, MomentRecord, ParticleSystem, SimConfig};

/// What to record during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub exponents: Vec<ExponentPair>,
    /// Extra record times besides the regular cadence.
    pub checkpoints: Vec<f64>,
    /// Keep a full copy of the system at each checkpoint.
    pub keep_snapshots: bool,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            exponents: vec![
                ExponentPair::new(0.0, 0.0),
                ExponentPair::new(0.0, 1.0),
                ExponentPair::new(1.0, 0.0),
                ExponentPair::new(0.0, 2.0),
            ],
            checkpoints: Vec::new(),
            keep_snapshots: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub proposed: u64,
    pub accepted: u64,
    pub rejected: u64,
    /// Draws with `i == j` that were redrawn.
    pub redrawn: u64,
    /// Particles seen with negative excess at an event boundary.
    pub iso_violations: u64,
    pub wall_seconds: f64,
}

impl EventLog {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn merge(&mut self, other: &EventLog) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.redrawn += other.redrawn;
        self.iso_violations += other.iso_violations;
        self.wall_seconds += other.wall_seconds;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventSample {
    Accepted(usize, usize),
    Rejected,
}

/// Engine limits that are not part of the physical configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineLimits {
    pub stall_window: u64,
    pub stall_acceptance: f64,
    /// Stop after this many accepted coagulations.
    pub max_events: Option<u64>,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits { stall_window: 1_000_000, stall_acceptance: 1e-4, max_events: None }
    }
}

#[derive(Clone, Debug)]
pub struct McRun {
    pub system: ParticleSystem,
    pub records: Vec<MomentRecord>,
    pub snapshots: Vec<ParticleSystem>,
    pub log: EventLog,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Majorant {
    /// `c (w-_i w+_j + w-_j w+_i)` per pair.
    Separable,
    /// A constant per-pair bound (truncated kernels).
    Uniform(f64),
}

/// Marcus-Lushnikov engine with majorant thinning.
///
/// The majorant depends on volumes only, and fusion never changes a volume,
/// so the exponential clock drawn from the majorant stays exact while areas
/// relax between events. Fusion is therefore applied lazily: each particle
/// carries the time it was last flowed to and is brought up to date only when
/// its kernel is needed or a record is taken.
pub struct McEngine<'a> {
    sys: ParticleSystem,
    coag: &'a CoagKernelParams,
    fus: &'a FusionKernelParams,
    flow: FlowStepSpec,
    index: SumTreeIndex,
    stamps: Vec<f64>,
    log: EventLog,
}

impl<'a> McEngine<'a> {
    /// `flow.dt` is ignored; `flow.lambda` sets the fusion time scale.
    pub fn new(sys: ParticleSystem, coag: &'a CoagKernelParams, fus: &'a FusionKernelParams, flow: FlowStepSpec) -> Self {
        let index = SumTreeIndex::new(sys.particles.iter().map(|p| coag.majorant_weights(p)));
        let stamps = vec![sys.time; sys.len()];
        if coag.beta() >= 0.95 {
            log::warn!("beta = {} is close to 1; sampler behaviour is outside the proven regime", coag.beta());
        }
        McEngine { sys, coag, fus, flow, index, stamps, log: EventLog::default() }
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.sys
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn index(&self) -> &SumTreeIndex {
        &self.index
    }

    fn majorant_kind(&self) -> Majorant {
        let separable = self.coag.c_scale() * self.index.off_diagonal();
        match self.coag.uniform_bound() {
            Some(r) => {
                let n = self.index.len() as f64;
                if r * n * (n - 1.0) < separable {
                    Majorant::Uniform(r)
                } else {
                    Majorant::Separable
                }
            }
            None => Majorant::Separable,
        }
    }

    /// Total proposal rate, `weight * sum over unordered pairs of the pair majorant`.
    pub fn total_majorant_rate(&self) -> f64 {
        let n = self.index.len();
        if n < 2 {
            return 0.0;
        }
        let w = self.sys.weight();
        match self.majorant_kind() {
            Majorant::Separable => w * self.coag.c_scale() * self.index.off_diagonal(),
            Majorant::Uniform(r) => w * r * (n * (n - 1)) as f64 / 2.0,
        }
    }

    /// Brings particle `i` up to time `t`.
    fn refresh(&mut self, i: usize, t: f64) -> Result<()> {
        let dt = t - self.stamps[i];
        if dt > 0.0 && self.sys.particles[i].excess() > 0.0 {
            self.sys.particles[i] = flow_particle(&self.sys.particles[i], self.fus, &self.flow.with_dt(dt))?;
        }
        self.stamps[i] = t;
        if self.sys.particles[i].excess() < 0.0 {
            self.log.iso_violations += 1;
        }
        Ok(())
    }

    /// Flows every particle to `t`.
    pub fn sync(&mut self, t: f64) -> Result<()> {
        let fus = self.fus;
        let flow = self.flow;
        self.sys
            .particles
            .par_iter_mut()
            .zip(self.stamps.par_iter_mut())
            .try_for_each(|(p, stamp)| {
                let dt = t - *stamp;
                if dt > 0.0 && p.excess() > 0.0 {
                    *p = flow_particle(p, fus, &flow.with_dt(dt))?;
                }
                *stamp = t;
                Ok::<_, Error>(())
            })?;
        self.log.iso_violations += self.sys.particles.iter().filter(|p| p.excess() < 0.0).count() as u64;
        self.sys.time = t;
        Ok(())
    }

    /// One thinning proposal at time `t`. Does not modify the population.
    pub fn sample_event<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> Result<EventSample> {
        let n = self.index.len();
        if n < 2 {
            return Ok(EventSample::Rejected);
        }
        let kind = self.majorant_kind();
        let (i, j) = loop {
            let (i, j) = match kind {
                Majorant::Separable => (self.index.sample_minus(rng), self.index.sample_plus(rng)),
                Majorant::Uniform(_) => (rng.gen_range(0..n), rng.gen_range(0..n)),
            };
            if i != j {
                break (i, j);
            }
            self.log.redrawn += 1;
        };
        self.log.proposed += 1;
        self.refresh(i, t)?;
        self.refresh(j, t)?;
        let (p, q) = (&self.sys.particles[i], &self.sys.particles[j]);
        let k = self.coag.rate(p, q);
        let bound = match kind {
            Majorant::Separable => self.coag.majorant(p, q),
            Majorant::Uniform(r) => r,
        };
        if rng.gen::<f64>() * bound < k {
            Ok(EventSample::Accepted(i.min(j), i.max(j)))
        } else {
            self.log.rejected += 1;
            Ok(EventSample::Rejected)
        }
    }

    /// Replaces `i` by the merged particle and removes `j` (`i < j`).
    pub fn apply(&mut self, i: usize, j: usize) {
        debug_assert!(i < j);
        let merged = self.sys.particles[i].coagulate(&self.sys.particles[j]);
        if merged.excess() < 0.0 {
            self.log.iso_violations += 1;
        }
        self.sys.particles[i] = merged;
        self.index.set(i, self.coag.majorant_weights(&merged));
        self.sys.particles.swap_remove(j);
        self.stamps.swap_remove(j);
        self.index.swap_remove(j);
        self.log.accepted += 1;
    }

    fn record(&self, exponents: &[ExponentPair]) -> Result<MomentRecord> {
        moments(&self.sys, exponents)
    }

    /// Event loop up to `cfg.t_end`.
    pub fn run<R: Rng + ?Sized>(
        mut self,
        cfg: &SimConfig,
        probes: &ProbeSpec,
        limits: &EngineLimits,
        rng: &mut R,
    ) -> Result<McRun> {
        let start = Instant::now();
        let clock = RecordClock::new(self.sys.time, cfg.t_end, cfg.record_interval, &probes.checkpoints);
        let mut records = Vec::new();
        let mut snapshots = Vec::new();
        let mut t = self.sys.time;
        let mut window = (0u64, 0u64);

        self.sync(t)?;
        records.push(self.record(&probes.exponents)?);
        if probes.keep_snapshots && clock.is_checkpoint(t) {
            snapshots.push(self.sys.clone());
        }

        'outer: while let Some(t_rec) = clock.next_after(t) {
            loop {
                let rate = self.total_majorant_rate();
                let t_next = if rate > 0.0 {
                    let tau: f64 = Exp1.sample(rng);
                    t + tau / rate
                } else {
                    f64::INFINITY
                };
                if t_next >= t_rec {
                    // memoryless clock: the overshooting draw is discarded
                    t = t_rec;
                    self.sync(t)?;
                    records.push(self.record(&probes.exponents)?);
                    if probes.keep_snapshots && clock.is_checkpoint(t) {
                        snapshots.push(self.sys.clone());
                    }
                    break;
                }
                t = t_next;
                let before = self.log.accepted;
                if let EventSample::Accepted(i, j) = self.sample_event(t, rng)? {
                    self.apply(i, j);
                }
                window.0 += 1;
                window.1 += self.log.accepted - before;
                if window.0 >= limits.stall_window {
                    if (window.1 as f64) < limits.stall_acceptance * window.0 as f64 {
                        return Err(Error::Stalled { accepted: window.1, proposals: window.0 });
                    }
                    window = (0, 0);
                }
                if limits.max_events.is_some_and(|m| self.log.accepted >= m) {
                    self.sync(t)?;
                    records.push(self.record(&probes.exponents)?);
                    break 'outer;
                }
            }
        }
        self.log.wall_seconds = start.elapsed().as_secs_f64();
        Ok(McRun { system: self.sys, records, snapshots, log: self.log })
    }
}

/// Record times: regular cadence, explicit checkpoints and the horizon.
struct RecordClock {
    start: f64,
    t_end: f64,
    interval: f64,
    checkpoints: Vec<f64>,
}

impl RecordClock {
    fn new(start: f64, t_end: f64, interval: f64, checkpoints: &[f64]) -> Self {
        let mut cps: Vec<f64> = checkpoints.iter().copied().filter(|&c| c >= start && c <= t_end).collect();
        cps.sort_by(f64::total_cmp);
        cps.dedup();
        RecordClock { start, t_end, interval, checkpoints: cps }
    }

    fn is_checkpoint(&self, t: f64) -> bool {
        self.checkpoints.iter().any(|&c| c == t)
    }

    fn next_after(&self, t: f64) -> Option<f64> {
        if t >= self.t_end {
            return None;
        }
        let k = ((t - self.start) / self.interval).floor() + 1.0;
        let mut next = (self.start + k * self.interval).min(self.t_end);
        if next <= t {
            next = (self.start + (k + 1.0) * self.interval).min(self.t_end);
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c > t) {
            next = next.min(c);
        }
        Some(next)
    }
}

/// Convenience wrapper: builds an engine and runs it.
pub fn run_mc<R: Rng + ?Sized>(
    sys: ParticleSystem,
    coag: &CoagKernelParams,
    fus: &FusionKernelParams,
    flow: FlowStepSpec,
    cfg: &SimConfig,
    probes: &ProbeSpec,
    limits: &EngineLimits,
    rng: &mut R,
) -> Result<McRun> {
    cfg.validate()?;
    if let Some(p) = sys.particles.iter().find(|p| p.volume() < cfg.v_min) {
        return Err(Error::param("v_min", format!("particle volume {} below v_min = {}", p.volume(), cfg.v_min)));
    }
    let flow = FlowStepSpec { lambda: cfg.lambda, ..flow };
    McEngine::new(sys, coag, fus, flow).run(cfg, probes, limits, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{AreaModulation, TruncationParams};
    use crate::types::Particle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spheres(vs: &[f64], weight: f64) -> ParticleSystem {
        let ps = vs.iter().map(|&v| Particle::sphere(v).unwrap()).collect();
        ParticleSystem::new(ps, weight, 1.0 / weight, 0).unwrap()
    }

    fn no_fusion() -> FusionKernelParams {
        FusionKernelParams::new(1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn majorant_rate_small_systems() {
        let coag = CoagKernelParams::constant(1.0).unwrap();
        let fus = no_fusion();
        let flow = FlowStepSpec::new(f64::INFINITY, 0.0);
        let e = McEngine::new(spheres(&[1.0, 1.0], 1.0), &coag, &fus, flow);
        assert_eq!(e.total_majorant_rate(), 2.0);
        let e = McEngine::new(spheres(&[1.0; 3], 1.0), &coag, &fus, flow);
        assert_eq!(e.total_majorant_rate(), 6.0);
        let e = McEngine::new(spheres(&[1.0], 1.0), &coag, &fus, flow);
        assert_eq!(e.total_majorant_rate(), 0.0);
    }

    #[test]
    fn two_particles_always_accept_without_modulation() {
        let coag = CoagKernelParams::new(1.0, 0.25, 0.5, AreaModulation::None).unwrap();
        let fus = no_fusion();
        let mut e = McEngine::new(spheres(&[1.0, 16.0], 1.0), &coag, &fus, FlowStepSpec::new(f64::INFINITY, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            assert_eq!(e.sample_event(0.0, &mut rng).unwrap(), EventSample::Accepted(0, 1));
        }
    }

    #[test]
    fn uniform_majorant_used_for_tiny_truncation() {
        let t = TruncationParams::new(1e-9, 0.5, 1.0).unwrap();
        let coag = CoagKernelParams::new(1.0, 0.25, 0.5, AreaModulation::None).unwrap().with_truncation(t);
        let fus = no_fusion();
        let e = McEngine::new(spheres(&[1.0; 10], 1.0), &coag, &fus, FlowStepSpec::new(1.0, 0.0));
        assert!((e.total_majorant_rate() - 45e-9).abs() < 1e-20);
    }

    #[test]
    fn record_clock_orders_times() {
        let c = RecordClock::new(0.0, 1.0, 0.4, &[0.25, 0.5, 2.0]);
        let mut t = 0.0;
        let mut seen = vec![];
        while let Some(n) = c.next_after(t) {
            seen.push(n);
            t = n;
        }
        assert_eq!(seen, vec![0.25, 0.4, 0.5, 0.8, 1.0]);
    }

    #[test]
    fn run_conserves_volume_and_stops_at_one() {
        let coag = CoagKernelParams::new(1.0, 0.25, 0.5, AreaModulation::Sphericity { theta: 0.5 }).unwrap();
        let fus = FusionKernelParams::new(1.0, 1.0, 0.0).unwrap();
        let sys = spheres(&[1.0; 50], 1.0 / 50.0);
        let cfg = SimConfig { lambda: 1.0, t_end: 1e6, n_particles: 50, v_min: 0.5, record_interval: 1e5, seed: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let run = run_mc(sys, &coag, &fus, FlowStepSpec::new(1.0, 0.0), &cfg, &ProbeSpec::default(), &EngineLimits::default(), &mut rng)
            .unwrap();
        assert_eq!(run.system.len(), 1);
        assert_eq!(run.log.accepted, 49);
        assert_eq!(run.system.particles[0].volume(), 50.0);
        let last = run.records.last().unwrap();
        assert_eq!(last.time, 1e6);
        assert!((last.get(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
