//! Two-component `(area, volume)` coagulation with fusion drift towards the
//! sphere: a Monte Carlo engine, a deterministic sectional solver on the
//! `(v, e)` plane and the one-dimensional on-line limit.

pub mod config;
pub mod diagnostics;
pub mod experiments;
pub mod error;
pub mod flow;
pub mod io;
pub mod kernels;
pub mod mc;
pub mod pivot;
pub mod sectional;
pub mod smolu1d;
pub mod types;

pub use error::{Error, Result};
pub use flow::{flow_particle, flow_system, FlowMethod, FlowStepSpec};
pub use kernels::{AreaModulation, CoagKernelParams, FusionKernelParams, TruncationParams};
pub use types::{
    coagulate, make_particle, ExponentPair, InitialCondition, MomentRecord, Particle, ParticleSystem, ShapeLaw,
    SimConfig, VolumeLaw, C0,
};
