//! Deterministic finite-volume solver on a `(v, e)` grid.
//!
//! Coagulation uses an explicit fixed-pivot update whose products are split
//! bilinearly over the four surrounding pivots (count, volume and excess
//! preserved). Fusion is first-order upwind transport in `e` towards the
//! zero-excess bin, which absorbs. The two are composed by Strang splitting.

mod grid;
mod solver;

pub use grid::{Grid2D, GridState};
pub use solver::{
    advect_cfl_bound, advect_step, coag_majorant_bound, coag_step, run_sectional, ExitTally, SectionalOptions, SectionalRun,
};
