use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pivot::{Axis, Split};
use crate::types::{sphere_area, CompensatedSum, ExponentPair, MomentRecord, ParticleSystem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub v: Axis,
    pub e: Axis,
}

impl Grid2D {
    /// `nv` log bins on `[v_min, v_max]`; `ne` excess bins, the first being
    /// `[0, e_first)` with pivot 0 and the rest log-spaced up to `e_max`.
    pub fn new(nv: usize, ne: usize, v_min: f64, v_max: f64, e_first: f64, e_max: f64) -> Result<Self> {
        Ok(Grid2D { v: Axis::log_spaced(nv, v_min, v_max)?, e: Axis::with_zero_bin(ne, e_first, e_max)? })
    }

    /// Like [`new`](Self::new) but with the first volume pivot pinned at `v_anchor`.
    pub fn anchored(nv: usize, ne: usize, v_anchor: f64, v_max: f64, e_first: f64, e_max: f64) -> Result<Self> {
        Ok(Grid2D { v: Axis::log_anchored(nv, v_anchor, v_max)?, e: Axis::with_zero_bin(ne, e_first, e_max)? })
    }

    #[inline]
    pub fn nv(&self) -> usize {
        self.v.len()
    }

    #[inline]
    pub fn ne(&self) -> usize {
        self.e.len()
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nv() * self.ne()
    }

    #[inline]
    pub fn index(&self, iv: usize, ie: usize) -> usize {
        iv * self.ne() + ie
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.ne(), cell % self.ne())
    }

    /// Representative `(v, e)` of a cell.
    #[inline]
    pub fn pivot(&self, cell: usize) -> (f64, f64) {
        let (iv, ie) = self.coords(cell);
        (self.v.pivots()[iv], self.e.pivots()[ie])
    }

    /// Bilinear fixed-pivot split of a point. `None` when it falls outside the pivot box.
    pub fn split(&self, v: f64, e: f64) -> Option<[(usize, f64); 4]> {
        let (Split::Inside { lo: vl, w_lo: wvl, hi: vh, w_hi: wvh }, Split::Inside { lo: el, w_lo: wel, hi: eh, w_hi: weh }) =
            (self.v.split(v), self.e.split(e))
        else {
            return None;
        };
        Some([
            (self.index(vl, el), wvl * wel),
            (self.index(vl, eh), wvl * weh),
            (self.index(vh, el), wvh * wel),
            (self.index(vh, eh), wvh * weh),
        ])
    }
}

/// Number density per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub mass: Vec<f64>,
    pub time: f64,
}

impl GridState {
    pub fn zeros(grid: &Grid2D) -> Self {
        GridState { mass: vec![0.0; grid.cells()], time: 0.0 }
    }

    /// Deposits particles by the bilinear fixed-pivot split.
    pub fn from_particles(grid: &Grid2D, sys: &ParticleSystem) -> Result<Self> {
        let mut s = Self::zeros(grid);
        s.time = sys.time;
        let w = sys.weight();
        for p in &sys.particles {
            let cells = grid.split(p.volume(), p.excess()).ok_or_else(|| {
                Error::param("grid", format!("particle (v = {}, e = {}) outside the grid", p.volume(), p.excess()))
            })?;
            for (c, f) in cells {
                s.mass[c] += w * f;
            }
        }
        Ok(s)
    }

    pub fn moment(&self, grid: &Grid2D, pair: ExponentPair) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(c, m)| {
                let (v, e) = grid.pivot(c);
                m * pair.eval(e + sphere_area(v), v)
            })
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn moments(&self, grid: &Grid2D, pairs: &[ExponentPair]) -> Result<MomentRecord> {
        let mut entries = std::collections::BTreeMap::new();
        for &p in pairs {
            let m = self.moment(grid, p);
            if !m.is_finite() {
                return Err(Error::NonFiniteMoment { k: p.k, l: p.l });
            }
            entries.insert(p, m);
        }
        Ok(MomentRecord { time: self.time, entries })
    }

    /// Mass per volume column (summed over excess).
    pub fn column_totals(&self, grid: &Grid2D) -> Vec<f64> {
        self.mass.chunks(grid.ne()).map(|c| c.iter().sum()).collect()
    }

    /// Moment `sum n e` over cells.
    pub fn excess_moment(&self, grid: &Grid2D) -> f64 {
        self.mass.iter().enumerate().map(|(c, m)| m * grid.pivot(c).1).sum()
    }
}
