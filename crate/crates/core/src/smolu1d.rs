//! One-dimensional coagulation with the on-line kernel
//! `K_eff(v, v') = K(c0 v^(2/3), v, c0 v'^(2/3), v')`, the fast-fusion limit.
//!
//! Same explicit fixed-pivot scheme as the two-dimensional sectional solver,
//! restricted to the volume coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::CoagKernelParams;
use crate::pivot::{Axis, Split};
use crate::types::{CompensatedSum, Particle};

/// Number density per volume bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal1D {
    pub axis: Axis,
    pub mass: Vec<f64>,
    pub time: f64,
}

impl Marginal1D {
    pub fn zeros(axis: Axis, time: f64) -> Self {
        let n = axis.len();
        Marginal1D { axis, mass: vec![0.0; n], time }
    }

    /// Deposits `(v, weight)` points by the fixed-pivot split, preserving count
    /// and volume for points between the first and last pivot.
    pub fn from_points_pivoted(axis: Axis, points: impl IntoIterator<Item = (f64, f64)>, time: f64) -> Result<Self> {
        let mut m = Self::zeros(axis, time);
        for (v, w) in points {
            match m.axis.split(v) {
                Split::Inside { lo, w_lo, hi, w_hi } => {
                    m.mass[lo] += w * w_lo;
                    m.mass[hi] += w * w_hi;
                }
                _ => return Err(Error::param("marginal", format!("volume {v} outside the pivot range"))),
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().copied().collect::<CompensatedSum>().value()
    }

    /// `sum m_i v_i^l` at the pivots.
    pub fn moment(&self, l: f64) -> f64 {
        self.mass
            .iter()
            .zip(self.axis.pivots())
            .map(|(m, v)| m * v.powf(l))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Moves each bin's mass into the target bin containing its pivot.
    /// Mass whose pivot falls outside the target edges is dropped.
    pub fn rebin(&self, target: &Axis) -> Marginal1D {
        let mut out = Marginal1D::zeros(target.clone(), self.time);
        for (m, &v) in self.mass.iter().zip(self.axis.pivots()) {
            if let Some(k) = target.locate(v) {
                out.mass[k] += m;
            }
        }
        out
    }
}

/// `K` evaluated on two spheres.
pub fn eval_effective_kernel(params: &CoagKernelParams, v: f64, v2: f64) -> Result<f64> {
    Ok(params.eval(&Particle::sphere(v)?, &Particle::sphere(v2)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smolu1dOptions {
    pub max_dt: f64,
    /// Fraction of the stability bound used per step.
    pub safety: f64,
    pub record_times: Vec<f64>,
}

impl Default for Smolu1dOptions {
    fn default() -> Self {
        Smolu1dOptions { max_dt: 1e-3, safety: 0.9, record_times: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct Smolu1dRun {
    /// Initial state, one entry per record time, and the final state.
    pub history: Vec<Marginal1D>,
    pub exit_number: f64,
    pub exit_volume: f64,
}

/// Precomputed on-line kernel matrix for one axis.
pub struct Smolu1dSolver {
    kernel: Vec<f64>,
    n: usize,
}

impl Smolu1dSolver {
    pub fn new(axis: &Axis, params: &CoagKernelParams) -> Result<Self> {
        let n = axis.len();
        let spheres: Vec<Particle> = axis.pivots().iter().map(|&v| Particle::sphere(v)).collect::<Result<_>>()?;
        let mut kernel = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = params.rate(&spheres[i], &spheres[j]);
                kernel[i * n + j] = k;
                kernel[j * n + i] = k;
            }
        }
        Ok(Smolu1dSolver { kernel, n })
    }

    /// Largest stable explicit step, `0.5 / max_i sum_j K_ij m_j`.
    pub fn stability_bound(&self, m: &Marginal1D) -> f64 {
        let occ: Vec<usize> = (0..self.n).filter(|&i| m.mass[i] > 0.0).collect();
        let mut worst: f64 = 0.0;
        for &i in &occ {
            let s: f64 = occ.iter().map(|&j| self.kernel[i * self.n + j] * m.mass[j]).sum();
            worst = worst.max(s);
        }
        if worst > 0.0 {
            0.5 / worst
        } else {
            f64::INFINITY
        }
    }

    /// One explicit Euler step. Returns the `(number, volume)` that left the domain.
    pub fn step(&self, m: &mut Marginal1D, dt: f64) -> Result<(f64, f64)> {
        let bound = self.stability_bound(m);
        if dt > bound {
            return Err(Error::Stability { dt, bound, which: "coagulation" });
        }
        let n = self.n;
        let occ: Vec<usize> = (0..n).filter(|&i| m.mass[i] > 0.0).collect();
        let mut delta = vec![0.0; n];
        let pivots = m.axis.pivots().to_vec();
        let mut exit = (0.0, 0.0);
        for (a, &i) in occ.iter().enumerate() {
            for &j in &occ[a..] {
                let k = self.kernel[i * n + j];
                let r = if i == j { 0.5 * k * m.mass[i] * m.mass[i] } else { k * m.mass[i] * m.mass[j] } * dt;
                delta[i] -= r;
                delta[j] -= r;
                let v = pivots[i] + pivots[j];
                match m.axis.split(v) {
                    Split::Inside { lo, w_lo, hi, w_hi } => {
                        delta[lo] += r * w_lo;
                        delta[hi] += r * w_hi;
                    }
                    _ => {
                        exit.0 += r;
                        exit.1 += r * v;
                    }
                }
            }
        }
        for (x, d) in m.mass.iter_mut().zip(delta) {
            *x = (*x + d).max(0.0);
        }
        m.time += dt;
        Ok(exit)
    }
}

pub fn run_smolu1d(init: &Marginal1D, params: &CoagKernelParams, t_end: f64, opts: &Smolu1dOptions) -> Result<Smolu1dRun> {
    if !(t_end >= init.time) {
        return Err(Error::param("t_end", "must not precede the initial time"));
    }
    if init.mass.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
        return Err(Error::param("marginal", "masses must be finite and non-negative"));
    }
    let solver = Smolu1dSolver::new(&init.axis, params)?;
    let mut m = init.clone();
    let mut history = vec![m.clone()];
    let mut stops: Vec<f64> = opts.record_times.iter().copied().filter(|&t| t > init.time && t < t_end).collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let (mut exit_n, mut exit_v) = (0.0, 0.0);
    for stop in stops {
        while m.time < stop {
            let bound = solver.stability_bound(&m);
            let mut dt = opts.max_dt.min(opts.safety * bound);
            let last = m.time + dt >= stop;
            if last {
                dt = stop - m.time;
            }
            let (en, ev) = solver.step(&mut m, dt)?;
            exit_n += en;
            exit_v += ev;
            if last {
                m.time = stop;
            }
        }
        history.push(m.clone());
    }
    Ok(Smolu1dRun { history, exit_number: exit_n, exit_volume: exit_v })
}
