//! CSV and JSON outputs. Floats are written with the shortest representation
//! that parses back to the same value, so files are byte-stable.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sectional::{Grid2D, GridState};
use crate::smolu1d::Marginal1D;
use crate::types::{MomentRecord, Particle, ParticleSystem};

fn f(x: f64) -> String {
    x.to_string()
}

/// `time,M_k_l,...` with the columns of the first record.
pub fn write_moments_csv<W: Write>(out: W, records: &[MomentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let pairs: Vec<_> = records.first().map(|r| r.entries.keys().copied().collect()).unwrap_or_default();
    let mut header = vec!["time".to_string()];
    header.extend(pairs.iter().map(|p| p.label()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![f(r.time)];
        for p in &pairs {
            row.push(r.entries.get(p).map(|&x| f(x)).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `time,v,e,a,weight`, one row per particle.
pub fn write_snapshot_csv<W: Write>(out: W, snapshots: &[ParticleSystem]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "v", "e", "a", "weight"])?;
    for s in snapshots {
        for p in &s.particles {
            w.write_record([f(s.time), f(p.volume()), f(p.excess()), f(p.area()), f(s.weight())])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot file back into one system per distinct time.
pub fn read_snapshot_csv<R: Read>(input: R) -> Result<Vec<ParticleSystem>> {
    #[derive(Deserialize)]
    struct Row {
        time: f64,
        v: f64,
        e: f64,
        #[allow(dead_code)]
        a: f64,
        weight: f64,
    }
    let mut out: Vec<ParticleSystem> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: Row = row?;
        let p = Particle::from_excess(row.e, row.v)?;
        match out.last_mut() {
            Some(s) if s.time == row.time => {
                if s.weight() != row.weight {
                    return Err(Error::Config(format!("mixed weights at time {}", row.time)));
                }
                s.particles.push(p);
            }
            _ => {
                let mut s = ParticleSystem::new(vec![p], row.weight, 1.0 / row.weight, 0)?;
                s.time = row.time;
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// `time,v_lo,v_hi,e_lo,e_hi,density` for occupied cells.
pub fn write_cells_csv<W: Write>(out: W, grid: &Grid2D, states: &[GridState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "v_lo", "v_hi", "e_lo", "e_hi", "density"])?;
    for s in states {
        for (c, &m) in s.mass.iter().enumerate() {
            if m > 0.0 {
                let (iv, ie) = grid.coords(c);
                let (v_lo, v_hi) = grid.v.bin(iv);
                let (e_lo, e_hi) = grid.e.bin(ie);
                w.write_record([f(s.time), f(v_lo), f(v_hi), f(e_lo), f(e_hi), f(m)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `time,v_lo,v_hi,mass`.
pub fn write_marginal_csv<W: Write>(out: W, marginals: &[Marginal1D]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "v_lo", "v_hi", "mass"])?;
    for m in marginals {
        for (k, &x) in m.mass.iter().enumerate() {
            let (lo, hi) = m.axis.bin(k);
            w.write_record([f(m.time), f(lo), f(hi), f(x)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One pass/fail comparison. `pass` is decided by the producer, since some
/// checks are upper bounds and others are windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value >= threshold }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        // the reported threshold is the nearer bound
        let threshold = if (value - lo).abs() < (value - hi).abs() { lo } else { hi };
        Check { name: name.into(), value, threshold, pass: value >= lo && value <= hi }
    }
}

/// JSON run summary.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub config: String,
    pub records: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ExponentPair;

    #[test]
    fn moments_csv_layout() {
        let mut entries = std::collections::BTreeMap::new();
        entries.insert(ExponentPair::new(0.0, 1.0), 0.1 + 0.2);
        entries.insert(ExponentPair::new(0.0, -4.0), 1.0);
        let mut buf = Vec::new();
        write_moments_csv(&mut buf, &[MomentRecord { time: 0.25, entries }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,M_0_-4,M_0_1\n0.25,1,0.30000000000000004\n");
    }

    #[test]
    fn snapshot_round_trip() {
        let ps = vec![Particle::sphere(1.0).unwrap(), Particle::from_excess(0.3, 2.5).unwrap()];
        let mut a = ParticleSystem::new(ps.clone(), 0.125, 8.0, 0).unwrap();
        a.time = 0.5;
        let mut b = ParticleSystem::new(ps[1..].to_vec(), 0.125, 8.0, 0).unwrap();
        b.time = 1.0;
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_snapshot_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].particles, a.particles);
        assert_eq!(back[1].particles, b.particles);
        assert_eq!(back[1].time, 1.0);
        assert_eq!(back[0].weight(), 0.125);
    }

    #[test]
    fn checks_and_summary() {
        assert!(Check::at_most("x", 1.0, 1.0).pass);
        assert!(!Check::at_least("x", 0.5, 1.0).pass);
        let c = Check::within("slope", -1.3, -1.2, -0.8);
        assert!(!c.pass);
        assert_eq!(c.threshold, -1.2);
        let s = Summary {
            config_hash: "ab".into(),
            seed: 3,
            config: String::new(),
            records: serde_json::json!([]),
            checks: vec![c],
        };
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["checks"][0]["name"], "slope");
        assert_eq!(v["seed"], 3);
        assert!(!s.all_pass());
    }
}
