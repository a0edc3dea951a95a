//! Fusion transport along characteristics.
//!
//! Volume is frozen and the excess area obeys
//!
//! ```text
//! de/dt = -(1/lambda) r(e + c0 v^(2/3), v) e
//! ```
//!
//! For `mu = 0` the rate does not depend on `e` and the flow is an exact
//! exponential. Otherwise we integrate `y = ln e`, whose right-hand side
//! `-(1/lambda) r` stays bounded as `e -> 0`, with the 3-stage Radau IIA
//! method (order 5, L-stable) and step-doubling error control.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::FusionKernelParams;
use crate::types::{sphere_area, Particle, ParticleSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowMethod {
    ClosedForm,
    AdaptiveImplicit,
    /// Closed form when `mu = 0`, adaptive otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowStepSpec {
    pub lambda: f64,
    pub dt: f64,
    pub method: FlowMethod,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl FlowStepSpec {
    pub fn new(lambda: f64, dt: f64) -> Self {
        FlowStepSpec { lambda, dt, method: FlowMethod::Auto, rel_tol: 1e-10, abs_tol: 1e-14 }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        FlowStepSpec { dt, ..self }
    }
}

/// Excess below which a particle is snapped onto the line.
#[inline]
pub fn absorbing_floor(v: f64) -> f64 {
    1e-14 * sphere_area(v).max(1.0)
}

pub fn flow_particle(p: &Particle, fus: &FusionKernelParams, spec: &FlowStepSpec) -> Result<Particle> {
    if !(spec.dt >= 0.0 && spec.dt.is_finite()) {
        return Err(Error::param("flow.dt", format!("must be finite and >= 0, got {}", spec.dt)));
    }
    if !(spec.lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be > 0, got {}", spec.lambda)));
    }
    let e0 = p.excess();
    if e0 == 0.0 || spec.dt == 0.0 || spec.lambda.is_infinite() {
        return Ok(*p);
    }
    let v = p.volume();
    let floor = absorbing_floor(v);
    if e0 < floor {
        return Ok(p.with_excess(0.0));
    }
    let closed = match spec.method {
        FlowMethod::ClosedForm => {
            if fus.linear_coefficient(v).is_none() {
                return Err(Error::ClosedFormUnavailable(fus.mu()));
            }
            true
        }
        FlowMethod::AdaptiveImplicit => false,
        FlowMethod::Auto => fus.mu() == 0.0,
    };
    let e = if closed {
        let k = fus.linear_coefficient(v).unwrap_or_else(|| fus.eval_at(1.0, v)) / spec.lambda;
        e0 * (-k * spec.dt).exp()
    } else {
        integrate_log_excess(e0, v, fus, spec).map_err(|reason| Error::Integrator { v, e: e0, reason })?
    };
    let e = if e < floor { 0.0 } else { e.min(e0) };
    Ok(p.with_excess(e))
}

/// Flows every particle by `spec.dt`. Per-particle work only, so the result
/// does not depend on how rayon schedules it.
pub fn flow_system(sys: &mut ParticleSystem, fus: &FusionKernelParams, spec: &FlowStepSpec) -> Result<()> {
    if spec.dt == 0.0 || spec.lambda.is_infinite() {
        return Ok(());
    }
    sys.particles.par_iter_mut().try_for_each(|p| {
        *p = flow_particle(p, fus, spec)?;
        Ok::<_, Error>(())
    })
}

// Radau IIA, s = 3.
const SQ6: f64 = 2.449_489_742_783_178;
const RADAU_A: [[f64; 3]; 3] = [
    [(88.0 - 7.0 * SQ6) / 360.0, (296.0 - 169.0 * SQ6) / 1800.0, (-2.0 + 3.0 * SQ6) / 225.0],
    [(296.0 + 169.0 * SQ6) / 1800.0, (88.0 + 7.0 * SQ6) / 360.0, (-2.0 - 3.0 * SQ6) / 225.0],
    [(16.0 - SQ6) / 36.0, (16.0 + SQ6) / 36.0, 1.0 / 9.0],
];

struct LogExcessRhs<'a> {
    fus: &'a FusionKernelParams,
    v: f64,
    sphere: f64,
    inv_lambda: f64,
}

impl LogExcessRhs<'_> {
    /// `(g(y), g'(y))` for `dy/dt = g(y) = -(1/lambda) r(e^y + s, v)`.
    #[inline]
    fn eval(&self, y: f64) -> (f64, f64) {
        let e = y.exp();
        let (r, dr) = self.fus.eval_with_slope(e + self.sphere, self.v);
        (-self.inv_lambda * r, -self.inv_lambda * dr * e)
    }
}

fn radau_step(rhs: &LogExcessRhs<'_>, y0: f64, h: f64) -> Option<f64> {
    use nalgebra::{Matrix3, Vector3};
    let (g0, _) = rhs.eval(y0);
    // Stage values Y_i = y0 + h sum_j A_ij g(Y_j); start from the explicit guess.
    let mut z = Vector3::new(y0 + h * g0 * 0.155, y0 + h * g0 * 0.645, y0 + h * g0);
    for _ in 0..25 {
        let mut g = [0.0; 3];
        let mut dg = [0.0; 3];
        for i in 0..3 {
            let (gi, dgi) = rhs.eval(z[i]);
            g[i] = gi;
            dg[i] = dgi;
        }
        let mut res = Vector3::zeros();
        let mut jac = Matrix3::identity();
        for i in 0..3 {
            let mut acc = 0.0;
            for j in 0..3 {
                acc += RADAU_A[i][j] * g[j];
                jac[(i, j)] -= h * RADAU_A[i][j] * dg[j];
            }
            res[i] = z[i] - y0 - h * acc;
        }
        let delta = jac.lu().solve(&res)?;
        z -= delta;
        if !z.iter().all(|x| x.is_finite()) {
            return None;
        }
        let scale = 1.0 + z[2].abs();
        if delta.amax() <= 1e-15 * scale {
            return Some(z[2]);
        }
    }
    None
}

fn integrate_log_excess(
    e0: f64,
    v: f64,
    fus: &FusionKernelParams,
    spec: &FlowStepSpec,
) -> std::result::Result<f64, String> {
    let rhs = LogExcessRhs { fus, v, sphere: sphere_area(v), inv_lambda: 1.0 / spec.lambda };
    let y_floor = absorbing_floor(v).ln();
    let mut y = e0.ln();
    let mut t = 0.0;
    let t_end = spec.dt;
    let (g0, dg0) = rhs.eval(y);
    let mut h = (0.05 / g0.abs().max(dg0.abs()).max(1e-300)).min(t_end);
    let h_min = 1e-14 * t_end.max(1e-300);
    let mut steps = 0u64;

    while t < t_end {
        if y <= y_floor {
            return Ok(0.0);
        }
        steps += 1;
        if steps > 10_000_000 {
            return Err("step budget exhausted".into());
        }
        h = h.min(t_end - t);
        let full = radau_step(&rhs, y, h);
        let half = radau_step(&rhs, y, 0.5 * h).and_then(|m| radau_step(&rhs, m, 0.5 * h));
        let (full, half) = match (full, half) {
            (Some(f), Some(s)) => (f, s),
            _ => {
                h *= 0.5;
                if h < h_min {
                    return Err(format!("step size underflow at t = {t}"));
                }
                continue;
            }
        };
        // y = ln e, so absolute error in y is relative error in e.
        let tol = spec.rel_tol + spec.abs_tol / y.exp();
        let err = (full - half).abs() / 31.0;
        if err <= tol {
            t += h;
            // the flow only decreases e
            y = half.min(y);
            let fac = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(1.0 / 6.0)).clamp(0.2, 4.0) };
            h *= fac;
        } else {
            h *= 0.5;
            if h < h_min {
                return Err(format!("step size underflow at t = {t}"));
            }
        }
    }
    Ok(if y <= y_floor { 0.0 } else { y.exp() })
}
