use serde::{Deserialize, Serialize};

use super::grid::{Grid2D, GridState};
use crate::error::{Error, Result};
use crate::kernels::{CoagKernelParams, FusionKernelParams};
use crate::types::{sphere_area, ExponentPair, MomentRecord, Particle};

/// What left the domain through coagulation products beyond the last pivot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExitTally {
    pub number: f64,
    pub volume: f64,
    pub area: f64,
    /// Negative cell mass zeroed after a step. Stays 0 under the step bound.
    pub clamped: f64,
}

impl ExitTally {
    fn add(&mut self, other: &ExitTally) {
        self.number += other.number;
        self.volume += other.volume;
        self.area += other.area;
        self.clamped += other.clamped;
    }
}

fn occupied(state: &GridState) -> Vec<usize> {
    (0..state.mass.len()).filter(|&c| state.mass[c] > 0.0).collect()
}

fn cell_particle(grid: &Grid2D, cell: usize) -> Particle {
    let (v, e) = grid.pivot(cell);
    Particle::from_excess(e, v).expect("grid pivots are valid particles")
}

/// Conservative step bound from the volume-only majorant. Advection never
/// moves mass between volume columns, so the bound holds across a Strang step.
pub fn coag_majorant_bound(grid: &Grid2D, state: &GridState, coag: &CoagKernelParams) -> f64 {
    let cols = state.column_totals(grid);
    let w: Vec<(f64, f64)> = grid.v.pivots().iter().map(|&v| coag.weights_at(v)).collect();
    let cap = coag.uniform_bound().unwrap_or(f64::INFINITY);
    let occ: Vec<usize> = (0..cols.len()).filter(|&i| cols[i] > 0.0).collect();
    let mut worst: f64 = 0.0;
    for &i in &occ {
        let s: f64 = occ
            .iter()
            .map(|&j| (coag.c_scale() * (w[i].0 * w[j].1 + w[j].0 * w[i].1)).min(cap) * cols[j])
            .sum();
        worst = worst.max(s);
    }
    if worst > 0.0 {
        0.5 / worst
    } else {
        f64::INFINITY
    }
}

/// Explicit Euler coagulation step with bilinear fixed-pivot redistribution.
pub fn coag_step(grid: &Grid2D, state: &GridState, coag: &CoagKernelParams, dt: f64) -> Result<(GridState, ExitTally)> {
    let occ = occupied(state);
    let parts: Vec<Particle> = occ.iter().map(|&c| cell_particle(grid, c)).collect();
    let m = occ.len();
    let mut kmat = vec![0.0; m * m];
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in a..m {
            let k = coag.rate(&parts[a], &parts[b]);
            kmat[a * m + b] = k;
            kmat[b * m + a] = k;
        }
    }
    for a in 0..m {
        let s: f64 = (0..m).map(|b| kmat[a * m + b] * state.mass[occ[b]]).sum();
        worst = worst.max(s);
    }
    let bound = if worst > 0.0 { 0.5 / worst } else { f64::INFINITY };
    if dt > bound {
        return Err(Error::Stability { dt, bound, which: "coagulation" });
    }

    let mut delta = vec![0.0; state.mass.len()];
    let mut exit = ExitTally::default();
    for a in 0..m {
        let ca = occ[a];
        for b in a..m {
            let cb = occ[b];
            let k = kmat[a * m + b];
            let r = if a == b { 0.5 * k * state.mass[ca] * state.mass[ca] } else { k * state.mass[ca] * state.mass[cb] } * dt;
            if r == 0.0 {
                continue;
            }
            delta[ca] -= r;
            delta[cb] -= r;
            let prod = parts[a].coagulate(&parts[b]);
            match grid.split(prod.volume(), prod.excess()) {
                Some(cells) => {
                    for (c, f) in cells {
                        delta[c] += r * f;
                    }
                }
                None => {
                    exit.number += r;
                    exit.volume += r * prod.volume();
                    exit.area += r * prod.area();
                }
            }
        }
    }
    let mass = state
        .mass
        .iter()
        .zip(&delta)
        .map(|(x, d)| {
            let y = x + d;
            if y < 0.0 {
                exit.clamped -= y;
            }
            y.max(0.0)
        })
        .collect();
    Ok((GridState { mass, time: state.time + dt }, exit))
}

/// Pivot-to-pivot transfer rate out of cell `(iv, ie)`, `ie >= 1`.
fn transfer_rate(grid: &Grid2D, iv: usize, ie: usize, fus: &FusionKernelParams, lambda: f64) -> f64 {
    let v = grid.v.pivots()[iv];
    let e = grid.e.pivots()[ie];
    let below = grid.e.pivots()[ie - 1];
    let speed = fus.eval_at(e + sphere_area(v), v) * e / lambda;
    speed / (e - below)
}

/// Largest step satisfying the upwind CFL condition on the occupied cells.
pub fn advect_cfl_bound(grid: &Grid2D, state: &GridState, fus: &FusionKernelParams, lambda: f64) -> f64 {
    if lambda.is_infinite() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for c in occupied(state) {
        let (iv, ie) = grid.coords(c);
        if ie > 0 {
            worst = worst.max(transfer_rate(grid, iv, ie, fus, lambda));
        }
    }
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

/// First-order upwind step of the fusion drift `de/dt = -(1/lambda) r e`.
pub fn advect_step(grid: &Grid2D, state: &GridState, fus: &FusionKernelParams, lambda: f64, dt: f64) -> Result<GridState> {
    if lambda.is_infinite() || dt == 0.0 {
        return Ok(GridState { mass: state.mass.clone(), time: state.time + dt });
    }
    let bound = advect_cfl_bound(grid, state, fus, lambda);
    if dt > bound {
        return Err(Error::Stability { dt, bound, which: "advection CFL" });
    }
    let mut mass = state.mass.clone();
    let ne = grid.ne();
    for iv in 0..grid.nv() {
        for ie in 1..ne {
            let c = grid.index(iv, ie);
            let n = state.mass[c];
            if n > 0.0 {
                let moved = n * dt * transfer_rate(grid, iv, ie, fus, lambda);
                mass[c] -= moved;
                mass[c - 1] += moved;
            }
        }
    }
    for x in mass.iter_mut() {
        *x = x.max(0.0);
    }
    Ok(GridState { mass, time: state.time + dt })
}

/// Advects over `dt`, sub-cycling so that each sub-step respects the CFL bound.
fn advect_subcycled(grid: &Grid2D, state: GridState, fus: &FusionKernelParams, lambda: f64, dt: f64, cfl: f64) -> Result<GridState> {
    if lambda.is_infinite() {
        return Ok(GridState { time: state.time + dt, ..state });
    }
    let mut s = state;
    let mut left = dt;
    while left > 0.0 {
        let h = (cfl * advect_cfl_bound(grid, &s, fus, lambda)).min(left);
        s = advect_step(grid, &s, fus, lambda, h)?;
        left -= h;
        if left <= 1e-15 * dt {
            break;
        }
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionalOptions {
    pub lambda: f64,
    pub t_end: f64,
    pub max_dt: f64,
    /// Fraction of the coagulation and CFL bounds actually used.
    pub safety: f64,
    pub record_times: Vec<f64>,
    pub exponents: Vec<ExponentPair>,
}

#[derive(Clone, Debug)]
pub struct SectionalRun {
    /// States at time 0, at each record time and at `t_end`.
    pub history: Vec<GridState>,
    pub records: Vec<MomentRecord>,
    pub exit: ExitTally,
    /// Accumulated `|Delta M_{1,0}|` produced by the pivot split in coagulation steps.
    pub coag_area_defect: f64,
    pub steps: u64,
}

/// Strang composition `A(dt/2) C(dt) A(dt/2)`.
pub fn run_sectional(
    grid: &Grid2D,
    init: &GridState,
    coag: &CoagKernelParams,
    fus: &FusionKernelParams,
    opts: &SectionalOptions,
) -> Result<SectionalRun> {
    if !(opts.lambda > 0.0) || !(opts.t_end > init.time) || !(opts.max_dt > 0.0) {
        return Err(Error::param("sectional", "need lambda > 0, t_end > t0 and max_dt > 0"));
    }
    let area = ExponentPair::new(1.0, 0.0);
    let mut s = init.clone();
    let mut history = vec![s.clone()];
    let mut records = vec![s.moments(grid, &opts.exponents)?];
    let mut exit = ExitTally::default();
    let mut defect = 0.0;
    let mut steps = 0;

    let mut stops: Vec<f64> = opts.record_times.iter().copied().filter(|&t| t > init.time && t < opts.t_end).collect();
    stops.push(opts.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    for stop in stops {
        while s.time < stop {
            let t0 = s.time;
            let mut dt = opts.max_dt.min(opts.safety * coag_majorant_bound(grid, &s, coag));
            let last = t0 + dt >= stop;
            if last {
                dt = stop - t0;
            }
            s = advect_subcycled(grid, s, fus, opts.lambda, 0.5 * dt, opts.safety)?;
            let before = s.moment(grid, area);
            let (next, out) = coag_step(grid, &s, coag, dt)?;
            defect += (next.moment(grid, area) + out.area - before).abs();
            exit.add(&out);
            s = advect_subcycled(grid, next, fus, opts.lambda, 0.5 * dt, opts.safety)?;
            s.time = if last { stop } else { t0 + dt };
            steps += 1;
        }
        records.push(s.moments(grid, &opts.exponents)?);
        history.push(s.clone());
    }
    Ok(SectionalRun { history, records, exit, coag_area_defect: defect, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::AreaModulation;
    use approx::assert_relative_eq;

    fn small_grid() -> Grid2D {
        Grid2D::anchored(24, 12, 1.0, 200.0, 0.01, 200.0).unwrap()
    }

    fn volume(grid: &Grid2D, s: &GridState) -> f64 {
        s.moment(grid, ExponentPair::new(0.0, 1.0))
    }

    #[test]
    fn coag_step_two_cells_by_hand() {
        // Two occupied spheres at v = 1 (pivot 0), constant kernel K = 1.
        let grid = small_grid();
        let k = CoagKernelParams::constant(0.5).unwrap();
        let mut s = GridState::zeros(&grid);
        let c0 = grid.index(0, 0);
        let c1 = grid.index(3, 0);
        s.mass[c0] = 0.6;
        s.mass[c1] = 0.3;
        let dt = 0.05;
        let (next, exit) = coag_step(&grid, &s, &k, dt).unwrap();
        assert_eq!(exit.number, 0.0);
        let r00 = 0.5 * 0.36 * dt;
        let r01 = 0.18 * dt;
        let r11 = 0.5 * 0.09 * dt;
        assert_relative_eq!(next.mass[c0], 0.6 - 2.0 * r00 - r01, max_relative = 1e-14);
        assert_relative_eq!(next.mass[c1], 0.3 - r01 - 2.0 * r11 + gain_into(&grid, c1, &[(0, 0, r00), (0, 3, r01), (3, 3, r11)]), max_relative = 1e-12);
        let total: f64 = next.mass.iter().sum();
        assert_relative_eq!(total, 0.9 - r00 - r01 - r11, max_relative = 1e-14);
        assert_relative_eq!(volume(&grid, &next), volume(&grid, &s), max_relative = 1e-14);
    }

    fn gain_into(grid: &Grid2D, target: usize, pairs: &[(usize, usize, f64)]) -> f64 {
        let mut g = 0.0;
        for &(i, j, r) in pairs {
            let p = cell_particle(grid, grid.index(i, 0));
            let q = cell_particle(grid, grid.index(j, 0));
            let c = p.coagulate(&q);
            for (cell, f) in grid.split(c.volume(), c.excess()).unwrap() {
                if cell == target {
                    g += r * f;
                }
            }
        }
        g
    }

    #[test]
    fn coag_step_refuses_large_dt() {
        let grid = small_grid();
        let k = CoagKernelParams::constant(0.5).unwrap();
        let mut s = GridState::zeros(&grid);
        s.mass[0] = 1.0;
        assert!(matches!(coag_step(&grid, &s, &k, 10.0), Err(Error::Stability { .. })));
    }

    #[test]
    fn coag_step_is_symmetric() {
        let grid = small_grid();
        let k = CoagKernelParams::new(1.0, 0.25, 0.5, AreaModulation::Sphericity { theta: 0.5 }).unwrap();
        let mut s = GridState::zeros(&grid);
        s.mass[grid.index(2, 0)] = 0.4;
        s.mass[grid.index(5, 4)] = 0.4;
        let (a, _) = coag_step(&grid, &s, &k, 0.01).unwrap();
        let mut t = GridState::zeros(&grid);
        t.mass[grid.index(5, 4)] = 0.4;
        t.mass[grid.index(2, 0)] = 0.4;
        let (b, _) = coag_step(&grid, &t, &k, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn advection_keeps_columns_and_line_mass() {
        let grid = small_grid();
        let fus = FusionKernelParams::new(1.0, 1.0, 0.0).unwrap();
        let mut s = GridState::zeros(&grid);
        for iv in 0..5 {
            s.mass[grid.index(iv, 0)] = 0.1;
        }
        let same = advect_step(&grid, &s, &fus, 1.0, 0.01).unwrap();
        assert_eq!(same.mass, s.mass);

        for iv in 0..5 {
            s.mass[grid.index(iv, 6)] = 0.2;
            s.mass[grid.index(iv, 3)] = 0.05;
        }
        let cols = s.column_totals(&grid);
        let dt = 0.5 * advect_cfl_bound(&grid, &s, &fus, 1.0);
        let next = advect_step(&grid, &s, &fus, 1.0, dt).unwrap();
        for (a, b) in cols.iter().zip(next.column_totals(&grid)) {
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }
        assert!(next.moment(&grid, ExponentPair::new(1.0, 0.0)) < s.moment(&grid, ExponentPair::new(1.0, 0.0)));
        assert!(matches!(advect_step(&grid, &s, &fus, 1.0, 4.0 * dt), Err(Error::Stability { .. })));
    }

    #[test]
    fn strang_run_conserves_volume() {
        let grid = small_grid();
        let coag = CoagKernelParams::new(1.0, 0.25, 0.5, AreaModulation::Sphericity { theta: 0.5 }).unwrap();
        let fus = FusionKernelParams::new(1.0, 1.0, 0.0).unwrap();
        let mut s = GridState::zeros(&grid);
        s.mass[0] = 1.0;
        let opts = SectionalOptions {
            lambda: 1.0,
            t_end: 0.5,
            max_dt: 0.02,
            safety: 0.8,
            record_times: vec![0.25],
            exponents: vec![ExponentPair::new(0.0, 1.0)],
        };
        let run = run_sectional(&grid, &s, &coag, &fus, &opts).unwrap();
        assert_eq!(run.records.len(), 3);
        let v0 = run.records[0].get(0.0, 1.0).unwrap();
        let v1 = run.records[2].get(0.0, 1.0).unwrap();
        assert!((v1 + run.exit.volume - v0).abs() <= 1e-12 * v0);
        assert!(run.history.iter().all(|h| h.mass.iter().all(|&m| m >= 0.0)));
    }

    fn single_cell(ne: usize) -> (Grid2D, GridState) {
        let grid = Grid2D::anchored(4, ne, 1.0, 10.0, 0.01, 64.0).unwrap();
        let mut s = GridState::zeros(&grid);
        // the cell whose pivot is closest to e = 4
        let ie = (1..ne).min_by(|&a, &b| {
            let d = |i: usize| (grid.e.pivots()[i].ln() - 4f64.ln()).abs();
            d(a).total_cmp(&d(b))
        });
        s.mass[grid.index(0, ie.unwrap())] = 1.0;
        (grid, s)
    }

    #[test]
    fn linear_rate_decays_excess_moment() {
        let (grid, s) = single_cell(32);
        let fus = FusionKernelParams::new(1.0, 0.0, 0.0).unwrap();
        let e0 = s.excess_moment(&grid);
        let dt = 0.5 * advect_cfl_bound(&grid, &s, &fus, 1.0);
        let one = advect_step(&grid, &s, &fus, 1.0, dt).unwrap();
        assert_relative_eq!(one.excess_moment(&grid), e0 * (1.0 - dt), max_relative = 1e-13);
        assert!((one.excess_moment(&grid) - e0 * (-dt).exp()).abs() <= e0 * dt * dt);
    }

    #[test]
    fn second_moment_error_halves_with_bin_ratio() {
        // The exact solution is a point mass, so any spread in e is scheme error.
        let fus = FusionKernelParams::new(1.0, 0.0, 0.0).unwrap();
        let err = |ne: usize| {
            let (grid, s) = single_cell(ne);
            let e0 = s.excess_moment(&grid);
            let m2 = |st: &GridState| -> f64 { st.mass.iter().enumerate().map(|(c, m)| m * grid.pivot(c).1.powi(2)).sum() };
            let t = 0.5;
            let steps = 20_000;
            let mut st = s;
            for _ in 0..steps {
                st = advect_step(&grid, &st, &fus, 1.0, t / steps as f64).unwrap();
            }
            (m2(&st) - (e0 * (-t).exp()).powi(2)).abs() / (e0 * (-t).exp()).powi(2)
        };
        let coarse = err(17);
        let fine = err(33);
        assert!(coarse / fine >= 1.7, "coarse {coarse} fine {fine}");
    }
}
