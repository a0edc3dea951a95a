//! Shared domain vocabulary: particles, ensembles, run configuration and
//! moment records.
//!
//! A particle is stored as `(v, e)` where `e = a - c0 v^(2/3)` is the excess
//! area above the sphere of the same volume. The isoperimetric constraint
//! `a >= c0 v^(2/3)` is then the sign condition `e >= 0`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isoperimetric constant `(36 pi)^(1/3)`: a sphere of volume `v` has area `C0 v^(2/3)`.
pub const C0: f64 = 4.835_975_862_049_409;

/// Relative tolerance for inputs that sit just below the isoperimetric line.
pub const ISO_TOL: f64 = 1e-9;

/// `v^(2/3)`, via `cbrt` for accuracy.
#[inline]
pub fn v_two_thirds(v: f64) -> f64 {
    let c = v.cbrt();
    c * c
}

/// Area of the sphere with volume `v`.
#[inline]
pub fn sphere_area(v: f64) -> f64 {
    C0 * v_two_thirds(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    v: f64,
    e: f64,
}

impl Particle {
    /// Builds a particle from area and volume. Areas within `ISO_TOL`
    /// (relative) below the line are clamped onto it.
    pub fn new(a: f64, v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveVolume(v));
        }
        let min_area = sphere_area(v);
        if !a.is_finite() || a < min_area * (1.0 - ISO_TOL) {
            return Err(Error::Isoperimetric { area: a, volume: v, min_area });
        }
        Ok(Particle { v, e: (a - min_area).max(0.0) })
    }

    pub fn from_excess(e: f64, v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveVolume(v));
        }
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::NegativeExcess(e));
        }
        Ok(Particle { v, e })
    }

    pub fn sphere(v: f64) -> Result<Self> {
        Self::from_excess(0.0, v)
    }

    #[inline]
    pub fn volume(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn excess(&self) -> f64 {
        self.e
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.e + sphere_area(self.v)
    }

    #[inline]
    pub fn is_sphere(&self) -> bool {
        self.e == 0.0
    }

    /// Same volume, new excess area. Callers guarantee `e >= 0`.
    #[inline]
    pub(crate) fn with_excess(self, e: f64) -> Particle {
        debug_assert!(e >= 0.0 && e.is_finite());
        Particle { v: self.v, e }
    }

    /// Contact-point attachment: areas and volumes add.
    ///
    /// The excess of the product picks up the sphere-area defect
    /// `c0 (v^(2/3) + v'^(2/3) - (v+v')^(2/3)) >= 0`.
    pub fn coagulate(&self, other: &Particle) -> Particle {
        let v = self.v + other.v;
        let defect = C0 * (v_two_thirds(self.v) + v_two_thirds(other.v) - v_two_thirds(v));
        Particle { v, e: self.e + other.e + defect.max(0.0) }
    }
}

pub fn make_particle(a: f64, v: f64) -> Result<Particle> {
    Particle::new(a, v)
}

pub fn coagulate(p: &Particle, q: &Particle) -> Particle {
    p.coagulate(q)
}

/// Weighted point-mass ensemble: every simulation particle stands for
/// `weight` particles per unit volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub particles: Vec<Particle>,
    weight: f64,
    sim_volume: f64,
    pub rng_seed: u64,
    pub time: f64,
}

impl ParticleSystem {
    pub fn new(particles: Vec<Particle>, weight: f64, sim_volume: f64, rng_seed: u64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::param("weight", format!("must be positive, got {weight}")));
        }
        if !(sim_volume > 0.0 && sim_volume.is_finite()) {
            return Err(Error::param("sim_volume", format!("must be positive, got {sim_volume}")));
        }
        Ok(ParticleSystem { particles, weight, sim_volume, rng_seed, time: 0.0 })
    }

    /// Marcus-Lushnikov convention: `weight = 1 / V_box`.
    pub fn in_box(particles: Vec<Particle>, sim_volume: f64, rng_seed: u64) -> Result<Self> {
        Self::new(particles, 1.0 / sim_volume, sim_volume, rng_seed)
    }

    #[inline]
    pub fn weight(&self) -> f64 {
        self.weight
    }

    #[inline]
    pub fn sim_volume(&self) -> f64 {
        self.sim_volume
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weight * self.particles.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Fusion time-scale ratio. `f64::INFINITY` switches fusion off.
    pub lambda: f64,
    pub t_end: f64,
    pub n_particles: usize,
    pub v_min: f64,
    pub record_interval: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::param("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::param("t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if !(self.v_min > 0.0 && self.v_min.is_finite()) {
            return Err(Error::param("v_min", format!("must be > 0, got {}", self.v_min)));
        }
        if self.n_particles < 1 {
            return Err(Error::param("n_particles", "must be at least 1"));
        }
        if !(self.record_interval > 0.0) {
            return Err(Error::param("record_interval", "must be > 0"));
        }
        Ok(())
    }

    pub fn fusion_enabled(&self) -> bool {
        self.lambda.is_finite()
    }
}

/// Exponent pair `(k, l)` of the moment `M_{k,l} = sum w a^k v^l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub k: f64,
    pub l: f64,
}

impl ExponentPair {
    pub const fn new(k: f64, l: f64) -> Self {
        ExponentPair { k, l }
    }

    pub fn label(&self) -> String {
        format!("M_{}_{}", self.k, self.l)
    }

    #[inline]
    pub fn eval(&self, a: f64, v: f64) -> f64 {
        pow(a, self.k) * pow(v, self.l)
    }
}

#[inline]
fn pow(x: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else if k == 1.0 {
        x
    } else if k.fract() == 0.0 && k.abs() <= 16.0 {
        x.powi(k as i32)
    } else {
        x.powf(k)
    }
}

impl Eq for ExponentPair {}

impl PartialOrd for ExponentPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExponentPair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k.total_cmp(&other.k).then(self.l.total_cmp(&other.l))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRecord {
    pub time: f64,
    pub entries: BTreeMap<ExponentPair, f64>,
}

impl MomentRecord {
    pub fn get(&self, k: f64, l: f64) -> Option<f64> {
        self.entries.get(&ExponentPair::new(k, l)).copied()
    }
}

impl Serialize for MomentRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.entries.len() + 1))?;
        map.serialize_entry("time", &self.time)?;
        for (p, v) in &self.entries {
            map.serialize_entry(&p.label(), v)?;
        }
        map.end()
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Volume distribution of a generated initial condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VolumeLaw {
    Monodisperse { v0: f64 },
    /// Log-normal truncated to `median * exp(+-4 sigma)`, so the support is compact.
    LogNormal { median: f64, sigma: f64 },
}

/// Initial excess-area assignment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ShapeLaw {
    Spheres,
    /// `e = kappa * v`.
    Ramified { kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub volumes: VolumeLaw,
    pub shape: ShapeLaw,
    /// Total initial number density `M_{0,0}`.
    pub number_density: f64,
}

impl InitialCondition {
    pub fn monodisperse_spheres() -> Self {
        InitialCondition {
            volumes: VolumeLaw::Monodisperse { v0: 1.0 },
            shape: ShapeLaw::Spheres,
            number_density: 1.0,
        }
    }

    pub fn generate<R: Rng>(&self, n: usize, v_min: f64, seed: u64, rng: &mut R) -> Result<ParticleSystem> {
        if n == 0 {
            return Err(Error::param("n_particles", "must be at least 1"));
        }
        if !(self.number_density > 0.0) {
            return Err(Error::param("init.number_density", "must be > 0"));
        }
        let mut particles = Vec::with_capacity(n);
        match self.volumes {
            VolumeLaw::Monodisperse { v0 } => {
                if v0 < v_min {
                    return Err(Error::param("init.v0", format!("{v0} is below v_min = {v_min}")));
                }
                for _ in 0..n {
                    particles.push(self.shaped(v0)?);
                }
            }
            VolumeLaw::LogNormal { median, sigma } => {
                let lo = (median * (-4.0 * sigma).exp()).max(v_min);
                let hi = median * (4.0 * sigma).exp();
                if lo > hi {
                    return Err(Error::param("init.median", "log-normal support lies below v_min"));
                }
                let law = LogNormal::new(median.ln(), sigma)
                    .map_err(|e| Error::param("init.sigma_ln", e.to_string()))?;
                while particles.len() < n {
                    let v: f64 = law.sample(rng);
                    if v >= lo && v <= hi {
                        particles.push(self.shaped(v)?);
                    }
                }
            }
        }
        let weight = self.number_density / n as f64;
        ParticleSystem::new(particles, weight, 1.0 / weight, seed)
    }

    fn shaped(&self, v: f64) -> Result<Particle> {
        match self.shape {
            ShapeLaw::Spheres => Particle::sphere(v),
            ShapeLaw::Ramified { kappa } => Particle::from_excess(kappa * v, v),
        }
    }
}
