//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, keys are dotted and values
//! are numbers, words, or comma-separated number lists. Every key has a
//! default (the baseline run), unknown keys are rejected, and the resolved
//! table has a canonical text form whose SHA-256 identifies the run.
//!
//! ```text
//! # fast-fusion control
//! sim.lambda = 1e-3
//! coag.theta = 0.5
//! study.fast_lambdas = 1, 0.1, 0.01, 0.001
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::{FlowMethod, FlowStepSpec};
use crate::kernels::{AreaModulation, CoagKernelParams, FusionKernelParams, TruncationParams};
use crate::sectional::Grid2D;
use crate::types::{InitialCondition, ShapeLaw, SimConfig, VolumeLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    /// Float or `auto`.
    FloatAuto,
    /// Float or `off`.
    FloatOff,
    Count,
    Seed,
    Flag,
    Word(&'static [&'static str]),
    FloatList,
}

/// `(key, default, kind, meaning)`.
const SCHEMA: &[(&str, &str, Kind, &str)] = &[
    ("coag.c_scale", "0.25", Kind::Float, "kernel prefactor c"),
    ("coag.alpha", "0.25", Kind::Float, "small-particle exponent"),
    ("coag.beta", "0.5", Kind::Float, "large-particle exponent"),
    ("coag.area_mod", "sphericity", Kind::Word(&["none", "sphericity"]), "area modulation of the kernel"),
    ("coag.theta", "0.5", Kind::Float, "sphericity floor theta"),
    ("coag.relaxed", "false", Kind::Flag, "skip the exponent window checks"),
    ("fusion.r_scale", "1", Kind::Float, "fusion prefactor"),
    ("fusion.mu", "1", Kind::Float, "area exponent of the fusion rate"),
    ("fusion.sigma", "0", Kind::Float, "volume exponent of the fusion rate"),
    ("trunc.big_r", "off", Kind::FloatOff, "kernel truncation level R"),
    ("trunc.delta", "0.01", Kind::Float, "fusion regularization delta"),
    ("trunc.l_const", "1", Kind::Float, "regularization constant L"),
    ("trunc.fusion", "false", Kind::Flag, "also regularize the fusion rate"),
    ("flow.method", "auto", Kind::Word(&["auto", "closed-form", "adaptive"]), "fusion integrator"),
    ("flow.rel_tol", "1e-10", Kind::Float, "integrator relative tolerance"),
    ("flow.abs_tol", "1e-14", Kind::Float, "integrator absolute tolerance"),
    ("sim.lambda", "1", Kind::Float, "fusion time-scale ratio, inf disables fusion"),
    ("sim.t_end", "1", Kind::Float, "horizon"),
    ("sim.n_particles", "10000", Kind::Count, "initial particles per replica"),
    ("sim.v_min", "1", Kind::Float, "smallest admissible volume"),
    ("sim.record_interval", "0.25", Kind::Float, "record cadence"),
    ("sim.seed", "1", Kind::Seed, "base seed"),
    ("sim.replicas", "32", Kind::Count, "replicas per ensemble"),
    ("init.volumes", "monodisperse", Kind::Word(&["monodisperse", "lognormal"]), "volume law"),
    ("init.v0", "1", Kind::Float, "monodisperse volume"),
    ("init.median", "2", Kind::Float, "log-normal median"),
    ("init.sigma_ln", "0.5", Kind::Float, "log-normal shape"),
    ("init.shape", "spheres", Kind::Word(&["spheres", "ramified"]), "initial excess law"),
    ("init.kappa", "1", Kind::Float, "ramified start e = kappa v"),
    ("init.number_density", "1", Kind::Float, "initial M_{0,0}"),
    ("grid.nv", "64", Kind::Count, "volume bins"),
    ("grid.ne", "32", Kind::Count, "excess bins, including the zero bin"),
    ("grid.v_min", "auto", Kind::FloatAuto, "lower volume edge, auto pins the first pivot at sim.v_min"),
    ("grid.v_max", "1000", Kind::Float, "upper volume edge"),
    ("grid.e_min", "0.001", Kind::Float, "upper edge of the zero-excess bin"),
    ("grid.e_max", "1000", Kind::Float, "upper excess edge"),
    ("grid.max_dt", "0.01", Kind::Float, "largest sectional step"),
    ("smolu1d.nv", "256", Kind::Count, "bins of the one-dimensional solver"),
    ("smolu1d.v_max", "1000", Kind::Float, "upper edge of the one-dimensional solver"),
    ("study.fast_lambdas", "1, 0.1, 0.01, 0.001", Kind::FloatList, "fast-fusion sweep"),
    ("study.slow_lambdas", "10, 100, 1000", Kind::FloatList, "slow-fusion sweep"),
    ("study.checkpoints", "0.25, 0.5, 1", Kind::FloatList, "snapshot times"),
    ("study.delta1", "0.1", Kind::Float, "off-line threshold of the concentration probe"),
    ("study.probe_time", "0.5", Kind::Float, "time of the concentration check"),
    ("study.cf_threshold", "0.05", Kind::Float, "concentration bound at the smallest lambda"),
    ("study.eps_max", "0.1", Kind::Float, "largest area-cutoff epsilon"),
];

fn kind_of(key: &str) -> Option<Kind> {
    SCHEMA.iter().find(|s| s.0 == key).map(|s| s.2)
}

fn normalize(key: &str, raw: &str) -> Result<String> {
    let kind = kind_of(key).ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
    let bad = |what: &str| Error::Config(format!("`{key}`: expected {what}, got `{raw}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("a number"));
    let raw = raw.trim();
    Ok(match kind {
        Kind::Float => num(raw)?.to_string(),
        Kind::FloatAuto if raw == "auto" => raw.to_string(),
        Kind::FloatOff if raw == "off" => raw.to_string(),
        Kind::FloatAuto | Kind::FloatOff => num(raw)?.to_string(),
        Kind::Count => raw.parse::<usize>().map_err(|_| bad("a non-negative integer"))?.to_string(),
        Kind::Seed => raw.parse::<u64>().map_err(|_| bad("an unsigned 64-bit integer"))?.to_string(),
        Kind::Flag => raw.parse::<bool>().map_err(|_| bad("true or false"))?.to_string(),
        Kind::Word(options) => {
            if !options.contains(&raw) {
                return Err(bad(&format!("one of {options:?}")));
            }
            raw.to_string()
        }
        Kind::FloatList => {
            let xs = raw.split(',').map(num).collect::<Result<Vec<f64>>>()?;
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
    })
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

impl RunConfig {
    /// The in-repo baseline: every key at its default.
    pub fn baseline() -> Self {
        let values = SCHEMA.iter().map(|(k, d, _, _)| (k.to_string(), normalize(k, d).expect("valid default"))).collect();
        RunConfig { values }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::baseline();
        let mut seen = std::collections::BTreeSet::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: `{k}` assigned twice", no + 1)));
            }
            cfg.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = normalize(key, value)?;
        self.values.insert(key.to_string(), v);
        Ok(())
    }

    /// One `key = value` line per key, sorted.
    pub fn canonical(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// The schema as a commented reference file.
    pub fn documented_defaults() -> String {
        SCHEMA.iter().map(|(k, d, _, what)| format!("# {what}\n{k} = {d}\n")).collect()
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` not in schema"))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.raw(key).parse().expect("validated number")
    }

    fn opt_f64(&self, key: &str) -> Option<f64> {
        self.raw(key).parse().ok()
    }

    pub fn usize(&self, key: &str) -> usize {
        self.raw(key).parse().expect("validated count")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.raw(key) == "true"
    }

    pub fn list(&self, key: &str) -> Vec<f64> {
        self.raw(key).split(',').map(|s| s.trim().parse().expect("validated list")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.raw("sim.seed").parse().expect("validated seed")
    }

    pub fn replicas(&self) -> usize {
        self.usize("sim.replicas")
    }

    pub fn lambda(&self) -> f64 {
        self.f64("sim.lambda")
    }

    pub fn truncation(&self) -> Result<Option<TruncationParams>> {
        match self.opt_f64("trunc.big_r") {
            None => Ok(None),
            Some(r) => Ok(Some(TruncationParams::new(r, self.f64("trunc.delta"), self.f64("trunc.l_const"))?)),
        }
    }

    pub fn coag_kernel(&self) -> Result<CoagKernelParams> {
        let area_mod = match self.raw("coag.area_mod") {
            "sphericity" => AreaModulation::Sphericity { theta: self.f64("coag.theta") },
            _ => AreaModulation::None,
        };
        let k = CoagKernelParams::build(
            self.f64("coag.c_scale"),
            self.f64("coag.alpha"),
            self.f64("coag.beta"),
            area_mod,
            self.flag("coag.relaxed"),
        )?;
        Ok(match self.truncation()? {
            Some(t) => k.with_truncation(t),
            None => k,
        })
    }

    pub fn fusion_kernel(&self) -> Result<FusionKernelParams> {
        let f = FusionKernelParams::new(self.f64("fusion.r_scale"), self.f64("fusion.mu"), self.f64("fusion.sigma"))?;
        match (self.flag("trunc.fusion"), self.truncation()?) {
            (true, Some(t)) => Ok(f.with_regularizer(t)),
            (true, None) => Err(Error::Config("trunc.fusion needs trunc.big_r".into())),
            _ => Ok(f),
        }
    }

    pub fn flow_spec(&self) -> FlowStepSpec {
        let method = match self.raw("flow.method") {
            "closed-form" => FlowMethod::ClosedForm,
            "adaptive" => FlowMethod::AdaptiveImplicit,
            _ => FlowMethod::Auto,
        };
        FlowStepSpec {
            method,
            rel_tol: self.f64("flow.rel_tol"),
            abs_tol: self.f64("flow.abs_tol"),
            ..FlowStepSpec::new(self.lambda(), 0.0)
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            lambda: self.lambda(),
            t_end: self.f64("sim.t_end"),
            n_particles: self.usize("sim.n_particles"),
            v_min: self.f64("sim.v_min"),
            record_interval: self.f64("sim.record_interval"),
            seed: self.seed(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_condition(&self) -> InitialCondition {
        let volumes = match self.raw("init.volumes") {
            "lognormal" => VolumeLaw::LogNormal { median: self.f64("init.median"), sigma: self.f64("init.sigma_ln") },
            _ => VolumeLaw::Monodisperse { v0: self.f64("init.v0") },
        };
        let shape = match self.raw("init.shape") {
            "ramified" => ShapeLaw::Ramified { kappa: self.f64("init.kappa") },
            _ => ShapeLaw::Spheres,
        };
        InitialCondition { volumes, shape, number_density: self.f64("init.number_density") }
    }

    pub fn grid(&self) -> Result<Grid2D> {
        let (nv, ne) = (self.usize("grid.nv"), self.usize("grid.ne"));
        let (v_max, e_min, e_max) = (self.f64("grid.v_max"), self.f64("grid.e_min"), self.f64("grid.e_max"));
        match self.opt_f64("grid.v_min") {
            Some(lo) => Grid2D::new(nv, ne, lo, v_max, e_min, e_max),
            None => Grid2D::anchored(nv, ne, self.f64("sim.v_min"), v_max, e_min, e_max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_builds_everything() {
        let cfg = RunConfig::baseline();
        let k = cfg.coag_kernel().unwrap();
        assert_eq!(k.alpha(), 0.25);
        assert_eq!(k.area_mod(), AreaModulation::Sphericity { theta: 0.5 });
        assert_eq!(cfg.fusion_kernel().unwrap().mu(), 1.0);
        assert_eq!(cfg.sim_config().unwrap().n_particles, 10_000);
        assert_eq!(cfg.replicas(), 32);
        assert!(cfg.truncation().unwrap().is_none());
        let g = cfg.grid().unwrap();
        assert_eq!((g.nv(), g.ne()), (64, 32));
        assert_eq!(g.v.pivots()[0], 1.0);
        assert_eq!(cfg.list("study.fast_lambdas"), vec![1.0, 0.1, 0.01, 0.001]);
    }

    #[test]
    fn parse_overrides_and_comments() {
        let cfg = RunConfig::parse("# header\nsim.lambda = inf  # no fusion\n\ncoag.alpha=0.1\nstudy.checkpoints = 0.5,1\n").unwrap();
        assert!(cfg.lambda().is_infinite());
        assert_eq!(cfg.f64("coag.alpha"), 0.1);
        assert_eq!(cfg.raw("study.checkpoints"), "0.5, 1");
        assert_ne!(cfg.hash(), RunConfig::baseline().hash());
    }

    #[test]
    fn equivalent_spellings_share_a_hash() {
        let a = RunConfig::parse("sim.lambda = 0.10\nstudy.slow_lambdas = 1e1,100 ,  1000").unwrap();
        let b = RunConfig::parse("study.slow_lambdas = 10, 100, 1000\nsim.lambda = 1e-1").unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("nope = 1"), Err(Error::Config(_))));
        assert!(RunConfig::parse("sim.lambda").is_err());
        assert!(RunConfig::parse("sim.lambda = fast").is_err());
        assert!(RunConfig::parse("coag.area_mod = cubic").is_err());
        assert!(RunConfig::parse("sim.seed = -3").is_err());
        assert!(RunConfig::parse("sim.t_end = 1\nsim.t_end = 2").is_err());
        let cfg = RunConfig::parse("coag.alpha = 0.9\ncoag.beta = 0.2").unwrap();
        assert!(cfg.coag_kernel().is_err());
    }

    #[test]
    fn truncation_keys() {
        let cfg = RunConfig::parse("trunc.big_r = 5\ntrunc.fusion = true").unwrap();
        assert_eq!(cfg.coag_kernel().unwrap().uniform_bound(), Some(5.0));
        assert!(cfg.fusion_kernel().unwrap().regularizer().is_some());
        assert!(RunConfig::parse("trunc.fusion = true").unwrap().fusion_kernel().is_err());
    }

    #[test]
    fn documented_defaults_round_trip() {
        let cfg = RunConfig::parse(&RunConfig::documented_defaults()).unwrap();
        assert_eq!(cfg, RunConfig::baseline());
    }
}
