//! Benchmark fixtures shared by the criterion targets.

use coagfuse::types::{Particle, ParticleSystem};

/// `n` particles with volumes cycling through `1..=64` and a mild excess.
pub fn mixed_system(n: usize) -> ParticleSystem {
    let ps = (0..n)
        .map(|i| {
            let v = (i % 64 + 1) as f64;
            Particle::from_excess(0.1 * (i % 7) as f64 * v, v).expect("valid particle")
        })
        .collect();
    ParticleSystem::new(ps, 1.0 / n as f64, n as f64, 0).expect("valid system")
}
