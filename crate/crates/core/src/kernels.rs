//! Coagulation and fusion kernel families.
//!
//! The coagulation kernel is
//!
//! ```text
//! K(a,v,a',v') = c (v^-alpha v'^beta + v'^-alpha v^beta) * m(a,v,a',v')
//! ```
//!
//! with `m = 1` or the sphericity modulation `m = theta + (1-theta) psi psi'`,
//! `psi = c0 v^(2/3) / a`. Since `psi` lies in `(0, 1]` the kernel sits between
//! `c theta S` and `c S`, `S` being the separable volume factor. That upper bound
//! is what the stochastic engine samples from.
//!
//! The fusion rate is the power law `r(a,v) = R a^mu v^sigma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{sphere_area, Particle};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AreaModulation {
    None,
    Sphericity { theta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoagKernelParams {
    c_scale: f64,
    alpha: f64,
    beta: f64,
    area_mod: AreaModulation,
    relaxed: bool,
    truncation: Option<TruncationParams>,
}

impl CoagKernelParams {
    /// Kernel with `alpha > 0`, `beta in (0,1)` and `beta - alpha in (0,1)`.
    pub fn new(c_scale: f64, alpha: f64, beta: f64, area_mod: AreaModulation) -> Result<Self> {
        Self::build(c_scale, alpha, beta, area_mod, false)
    }

    /// Constant-kernel fixture `K = 2 c_scale` (alpha = beta = 0). Outside the
    /// admissible exponent range; flagged `relaxed`.
    pub fn constant(c_scale: f64) -> Result<Self> {
        Self::build(c_scale, 0.0, 0.0, AreaModulation::None, true)
    }

    pub fn build(c_scale: f64, alpha: f64, beta: f64, area_mod: AreaModulation, relaxed: bool) -> Result<Self> {
        if !(c_scale > 0.0 && c_scale.is_finite()) {
            return Err(Error::param("coag.c_scale", format!("must be > 0, got {c_scale}")));
        }
        let admissible = alpha > 0.0 && beta > 0.0 && beta < 1.0 && beta - alpha > 0.0 && beta - alpha < 1.0;
        if !admissible {
            if !(relaxed && alpha == 0.0 && beta == 0.0) {
                return Err(Error::param(
                    "coag.alpha/coag.beta",
                    format!("need alpha > 0, beta in (0,1), beta - alpha in (0,1); got alpha = {alpha}, beta = {beta}"),
                ));
            }
        }
        if let AreaModulation::Sphericity { theta } = area_mod {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(Error::param("coag.theta", format!("must lie in (0,1], got {theta}")));
            }
        }
        Ok(CoagKernelParams { c_scale, alpha, beta, area_mod, relaxed, truncation: None })
    }

    /// Applies `K_R = min(K, R) * xi_R(v + v')` in [`rate`](Self::rate).
    pub fn with_truncation(mut self, trunc: TruncationParams) -> Self {
        self.truncation = Some(trunc);
        self
    }

    pub fn c_scale(&self) -> f64 {
        self.c_scale
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn area_mod(&self) -> AreaModulation {
        self.area_mod
    }
    pub fn relaxed(&self) -> bool {
        self.relaxed
    }
    pub fn truncation(&self) -> Option<&TruncationParams> {
        self.truncation.as_ref()
    }

    /// Lower bound constant `K1` of the two-sided volume bound.
    pub fn lower_constant(&self) -> f64 {
        match self.area_mod {
            AreaModulation::None => self.c_scale,
            AreaModulation::Sphericity { theta } => self.c_scale * theta,
        }
    }

    /// Upper bound constant `K0`.
    pub fn upper_constant(&self) -> f64 {
        self.c_scale
    }

    /// `(v^-alpha, v^beta)`.
    #[inline]
    pub fn majorant_weights(&self, p: &Particle) -> (f64, f64) {
        self.weights_at(p.volume())
    }

    #[inline]
    pub fn weights_at(&self, v: f64) -> (f64, f64) {
        (powf(v, -self.alpha), powf(v, self.beta))
    }

    /// Separable upper bound `c (w-(p) w+(q) + w-(q) w+(p))`.
    #[inline]
    pub fn majorant(&self, p: &Particle, q: &Particle) -> f64 {
        let (mp, pp) = self.majorant_weights(p);
        let (mq, pq) = self.majorant_weights(q);
        self.c_scale * (mp * pq + mq * pp)
    }

    /// Area modulation factor in `[theta, 1]`.
    #[inline]
    pub fn modulation(&self, p: &Particle, q: &Particle) -> f64 {
        match self.area_mod {
            AreaModulation::None => 1.0,
            AreaModulation::Sphericity { theta } => theta + (1.0 - theta) * sphericity(p) * sphericity(q),
        }
    }

    /// Untruncated kernel value.
    #[inline]
    pub fn eval(&self, p: &Particle, q: &Particle) -> f64 {
        self.majorant(p, q) * self.modulation(p, q)
    }

    /// Kernel used by the solvers: [`eval`](Self::eval), truncated when a
    /// truncation layer is attached.
    #[inline]
    pub fn rate(&self, p: &Particle, q: &Particle) -> f64 {
        let k = self.eval(p, q);
        match &self.truncation {
            None => k,
            Some(t) => t.truncate(k) * t.xi(p.volume() + q.volume()),
        }
    }

    /// Upper bound on [`rate`](Self::rate) independent of the pair, if any.
    pub fn uniform_bound(&self) -> Option<f64> {
        self.truncation.map(|t| t.big_r)
    }
}

/// `psi = c0 v^(2/3) / a`, equal to 1 on spheres.
#[inline]
pub fn sphericity(p: &Particle) -> f64 {
    let s = sphere_area(p.volume());
    s / (s + p.excess())
}

#[inline]
fn powf(x: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else {
        x.powf(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionKernelParams {
    r_scale: f64,
    mu: f64,
    sigma: f64,
    regularizer: Option<TruncationParams>,
}

impl FusionKernelParams {
    pub fn new(r_scale: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(r_scale > 0.0 && r_scale.is_finite()) {
            return Err(Error::param("fusion.r_scale", format!("must be > 0, got {r_scale}")));
        }
        if !(mu >= -1.0 && mu.is_finite()) {
            return Err(Error::param("fusion.mu", format!("must be >= -1, got {mu}")));
        }
        if !sigma.is_finite() {
            return Err(Error::param("fusion.sigma", "must be finite"));
        }
        Ok(FusionKernelParams { r_scale, mu, sigma, regularizer: None })
    }

    /// Replaces `r` by the regularized rate `r_delta` in [`eval_at`](Self::eval_at).
    pub fn with_regularizer(mut self, trunc: TruncationParams) -> Self {
        self.regularizer = Some(trunc);
        self
    }

    pub fn r_scale(&self) -> f64 {
        self.r_scale
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn regularizer(&self) -> Option<&TruncationParams> {
        self.regularizer.as_ref()
    }

    /// Plain power law `R a^mu v^sigma`.
    #[inline]
    pub fn power_law(&self, a: f64, v: f64) -> f64 {
        self.r_scale * powf(a, self.mu) * powf(v, self.sigma)
    }

    #[inline]
    pub fn eval(&self, p: &Particle) -> f64 {
        self.eval_at(p.area(), p.volume())
    }

    #[inline]
    pub fn eval_at(&self, a: f64, v: f64) -> f64 {
        match &self.regularizer {
            None => self.power_law(a, v),
            Some(t) => t.regularized_fusion(self, a, v),
        }
    }

    /// `(r, dr/da)` at `(a, v)`.
    pub fn eval_with_slope(&self, a: f64, v: f64) -> (f64, f64) {
        let r = self.power_law(a, v);
        let dr = self.mu * r / a;
        match &self.regularizer {
            None => (r, dr),
            Some(t) => {
                let vs = powf(v, self.sigma);
                let c = vs.max(t.l_const * t.delta) / vs;
                let am = powf(a, self.mu);
                let den = 1.0 + t.delta * am;
                let dden = t.delta * self.mu * am / a;
                (r * c / den, c * (dr * den - r * dden) / (den * den))
            }
        }
    }

    /// `de/dt = -k(v) e` coefficient times `lambda` when the rate does not depend on `a`.
    pub fn linear_coefficient(&self, v: f64) -> Option<f64> {
        if self.mu == 0.0 {
            Some(self.eval_at(1.0, v))
        } else {
            None
        }
    }
}

/// Solver regularizers: `K_R = min(K, R)`, the volume cutoff `xi_R` and the
/// fusion regularization `r_delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub big_r: f64,
    pub delta: f64,
    pub l_const: f64,
}

impl TruncationParams {
    pub fn new(big_r: f64, delta: f64, l_const: f64) -> Result<Self> {
        if !(big_r > 0.0) {
            return Err(Error::param("trunc.big_r", format!("must be > 0, got {big_r}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("trunc.delta", format!("must lie in (0,1), got {delta}")));
        }
        if !(l_const > 0.0 && l_const.is_finite()) {
            return Err(Error::param("trunc.l_const", format!("must be > 0, got {l_const}")));
        }
        Ok(TruncationParams { big_r, delta, l_const })
    }

    #[inline]
    pub fn truncate(&self, k: f64) -> f64 {
        k.min(self.big_r)
    }

    /// 1 on `(0, R]`, 0 on `[2R, inf)`, linear in between.
    #[inline]
    pub fn xi(&self, v: f64) -> f64 {
        ramp(v, self.big_r, 2.0 * self.big_r)
    }

    /// `r_delta(a,v) = r(a,v) max(v^sigma, L delta) / (v^sigma (1 + delta a^mu))`.
    pub fn regularized_fusion(&self, fus: &FusionKernelParams, a: f64, v: f64) -> f64 {
        let vs = powf(v, fus.sigma);
        fus.power_law(a, v) * vs.max(self.l_const * self.delta) / (vs * (1.0 + self.delta * powf(a, fus.mu)))
    }
}

/// Piecewise-linear cutoff: 1 below `lo`, 0 above `hi`.
#[inline]
pub(crate) fn ramp(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        1.0
    } else if x >= hi {
        0.0
    } else {
        (hi - x) / (hi - lo)
    }
}
