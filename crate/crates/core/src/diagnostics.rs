//! Observables: moments, the off-line concentration probe, the area-cutoff
//! volume marginal and a weak distance between marginals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ramp;
use crate::pivot::{Axis, Split};
use crate::smolu1d::Marginal1D;
use crate::types::{CompensatedSum, ExponentPair, MomentRecord, ParticleSystem};

/// `M_{k,l} = weight * sum a^k v^l` for each requested pair.
pub fn moments(sys: &ParticleSystem, pairs: &[ExponentPair]) -> Result<MomentRecord> {
    let w = sys.weight();
    weighted_moments(sys.particles.iter().map(|q| (q.area(), q.volume(), w)), pairs, sys.time)
}

/// `sum w a^k v^l` over raw `(a, v, w)` points.
pub fn weighted_moments(
    points: impl Iterator<Item = (f64, f64, f64)> + Clone,
    pairs: &[ExponentPair],
    time: f64,
) -> Result<MomentRecord> {
    let mut entries = BTreeMap::new();
    for &p in pairs {
        let m = points.clone().map(|(a, v, w)| w * p.eval(a, v)).collect::<CompensatedSum>().value();
        if !m.is_finite() {
            return Err(Error::NonFiniteMoment { k: p.k, l: p.l });
        }
        entries.insert(p, m);
    }
    Ok(MomentRecord { time, entries })
}

/// Volume fraction held by particles with excess area above `delta1`.
pub fn concentration_fraction(sys: &ParticleSystem, delta1: f64) -> Result<f64> {
    if !(delta1 > 0.0) {
        return Err(Error::param("delta1", "must be > 0"));
    }
    let total: CompensatedSum = sys.particles.iter().map(|p| p.volume()).collect();
    if sys.is_empty() || !(total.value() > 0.0) {
        return Err(Error::EmptySystem);
    }
    let off: CompensatedSum = sys.particles.iter().filter(|p| p.excess() > delta1).map(|p| p.volume()).collect();
    Ok((off.value() / total.value()).clamp(0.0, 1.0))
}

/// Area cutoff `chi_eps`: 1 up to `1/eps^2`, 0 from `2/eps^2`, linear between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    epsilon: f64,
}

impl CutoffSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
        }
        Ok(CutoffSpec { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn chi(&self, a: f64) -> f64 {
        let lo = 1.0 / (self.epsilon * self.epsilon);
        ramp(a, lo, 2.0 * lo)
    }
}

/// Histogram of `chi_eps(a) * weight` over the bins of `axis`. Particles
/// outside the edges are dropped.
pub fn cutoff_marginal(sys: &ParticleSystem, spec: &CutoffSpec, axis: &Axis) -> Marginal1D {
    let mut m = Marginal1D::zeros(axis.clone(), sys.time);
    for p in &sys.particles {
        if let Some(k) = axis.locate(p.volume()) {
            m.mass[k] += sys.weight() * spec.chi(p.area());
        }
    }
    m
}

/// Like [`cutoff_marginal`] but deposits `chi_eps(a) * weight` on the bin
/// pivots by the fixed-pivot split, the representation the sectional solvers
/// use. Particles outside the pivot range are dropped.
pub fn cutoff_marginal_pivoted(sys: &ParticleSystem, spec: &CutoffSpec, axis: &Axis) -> Marginal1D {
    let mut m = Marginal1D::zeros(axis.clone(), sys.time);
    for p in &sys.particles {
        if let Split::Inside { lo, w_lo, hi, w_hi } = axis.split(p.volume()) {
            let w = sys.weight() * spec.chi(p.area());
            m.mass[lo] += w * w_lo;
            m.mass[hi] += w * w_hi;
        }
    }
    m
}

const HAT_CENTRES: usize = 16;
const HAT_WIDTHS: [f64; 4] = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];

/// Bounded-Lipschitz style distance over a fixed dictionary of 64 hat
/// functions in `ln v`, each scaled by `1 / max(1, Lip)`. Bin masses sit at
/// the geometric bin centres. Both marginals must share their edges.
pub fn weak_distance(m1: &Marginal1D, m2: &Marginal1D) -> Result<f64> {
    let (e1, e2) = (m1.axis.edges(), m2.axis.edges());
    if e1.len() != e2.len() || e1.iter().zip(e2).any(|(a, b)| a != b) {
        return Err(Error::EdgeMismatch);
    }
    if e1[0] <= 0.0 {
        return Err(Error::param("edges", "weak distance needs positive volume edges"));
    }
    let x: Vec<f64> = e1.windows(2).map(|w| 0.5 * (w[0].ln() + w[1].ln())).collect();
    let diff: Vec<f64> = m1.mass.iter().zip(&m2.mass).map(|(a, b)| a - b).collect();
    let (lo, hi) = (e1[0].ln(), e1[e1.len() - 1].ln());
    let span = hi - lo;
    let mut best: f64 = 0.0;
    for c in 0..HAT_CENTRES {
        let centre = lo + span * (c as f64 + 0.5) / HAT_CENTRES as f64;
        for frac in HAT_WIDTHS {
            let w = frac * span;
            let s: CompensatedSum =
                x.iter().zip(&diff).map(|(xi, d)| d * (1.0 - (xi - centre).abs() / w).max(0.0)).collect();
            best = best.max(s.value().abs() / (1.0 / w).max(1.0));
        }
    }
    Ok(best)
}
