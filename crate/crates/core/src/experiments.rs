//! Automated studies of the two limit regimes and the cross-method check.
//!
//! Each study returns a [`StudyReport`]: a numeric table (written as CSV),
//! pass/fail checks and the list of replicas that aborted. An aborted replica
//! is reported and left out of the statistics; the study carries on.

use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{concentration_fraction, cutoff_marginal_pivoted, weak_distance, CutoffSpec};
use crate::error::{Error, Result};
use crate::io::{Check, Summary};
use crate::kernels::{CoagKernelParams, FusionKernelParams};
use crate::mc::{find_stat, summarize, EngineLimits, Ensemble, McRun, MomentStat, ProbeSpec};
use crate::pivot::Axis;
use crate::sectional::{run_sectional, GridState, SectionalOptions, SectionalRun};
use crate::smolu1d::{run_smolu1d, Marginal1D, Smolu1dOptions};
use crate::types::{sphere_area, ExponentPair, MomentRecord};

#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub checks: Vec<Check>,
    pub aborted: Vec<String>,
    /// Negative-excess sightings summed over every MC replica.
    pub iso_violations: u64,
}

impl StudyReport {
    fn new(name: &str, cfg: &RunConfig, columns: &[&str]) -> Self {
        StudyReport {
            name: name.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed(),
            config: cfg.canonical(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            aborted: Vec::new(),
            iso_violations: 0,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.aborted.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Summary {
        let table: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| serde_json::Value::Object(self.columns.iter().cloned().zip(r.iter().map(|&x| serde_json::json!(x))).collect()))
            .collect();
        Summary {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            config: self.config.clone(),
            records: serde_json::json!({
                "study": self.name,
                "table": table,
                "aborted": self.aborted,
                "iso_violations": self.iso_violations,
            }),
            checks: self.checks.clone(),
        }
    }

    /// `<name>.csv` and `<name>.json` in `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{}.csv", self.name)))?)?;
        self.summary().write(std::fs::File::create(dir.join(format!("{}.json", self.name)))?)
    }
}

/// Kernels and flow of a config, with `lambda` substituted.
struct Setup {
    coag: CoagKernelParams,
    fus: FusionKernelParams,
    cfg: RunConfig,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        Ok(Setup { coag: cfg.coag_kernel()?, fus: cfg.fusion_kernel()?, cfg: cfg.clone() })
    }

    fn ensemble(&self, lambda: f64, probes: ProbeSpec) -> Result<Ensemble<'_>> {
        let mut sim = self.cfg.sim_config()?;
        sim.lambda = lambda;
        let mut flow = self.cfg.flow_spec();
        flow.lambda = lambda;
        Ok(Ensemble {
            init: self.cfg.initial_condition(),
            coag: &self.coag,
            fus: &self.fus,
            flow,
            cfg: sim,
            probes,
            limits: EngineLimits::default(),
        })
    }
}

/// Runs the ensemble and splits successes from failures.
fn run_ensemble(ens: &Ensemble, replicas: usize, tag: &str, report: &mut StudyReport) -> Vec<McRun> {
    let mut ok = Vec::with_capacity(replicas);
    for (r, res) in ens.run(replicas).into_iter().enumerate() {
        match res {
            Ok(run) => {
                report.iso_violations += run.log.iso_violations;
                ok.push(run)
            }
            Err(e) => {
                log::warn!("{tag}: replica {r} aborted: {e}");
                report.aborted.push(format!("{tag} replica {r}: {e}"));
            }
        }
    }
    ok
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// Relative change of `M_{k,l}` between the first and last record, worst over runs.
fn worst_drift(runs: &[McRun], k: f64, l: f64) -> f64 {
    runs.iter()
        .map(|r| {
            let m0 = r.records.first().and_then(|x| x.get(k, l)).unwrap_or(f64::NAN);
            let m1 = r.records.last().and_then(|x| x.get(k, l)).unwrap_or(f64::NAN);
            ((m1 - m0) / m0).abs()
        })
        .fold(0.0, f64::max)
}

/// The monotone-within-noise rendering: each step may rise by at most
/// `2 sqrt(se_a^2 + se_b^2)`. Returns the worst excess rise (<= 0 passes).
fn worst_rise(series: &[(f64, f64)]) -> f64 {
    series
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) - 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Pooled initial volume marginal of an ensemble, deposited on `axis` by the pivot split.
fn initial_marginal(ens: &Ensemble, replicas: usize, axis: &Axis) -> Result<Marginal1D> {
    let mut pts = Vec::new();
    for r in 0..replicas as u64 {
        let sys = ens.initial_system(r)?;
        let w = sys.weight() / replicas as f64;
        pts.extend(sys.particles.iter().map(|p| (p.volume(), w)));
    }
    Marginal1D::from_points_pivoted(axis.clone(), pts, 0.0)
}

/// Distance from the ensemble-mean marginal to `reference`, with a
/// delete-one jackknife standard error.
fn pooled_distance(marginals: &[Marginal1D], reference: &Marginal1D) -> Result<(f64, f64)> {
    let n = marginals.len();
    if n == 0 {
        return Ok((f64::NAN, f64::NAN));
    }
    let mut total = Marginal1D::zeros(reference.axis.clone(), reference.time);
    for m in marginals {
        for (a, x) in total.mass.iter_mut().zip(&m.mass) {
            *a += x;
        }
    }
    let mean_of = |skip: Option<usize>| {
        let k = if skip.is_some() { n - 1 } else { n } as f64;
        let mut out = total.clone();
        for (b, a) in out.mass.iter_mut().enumerate() {
            *a = (*a - skip.map_or(0.0, |i| marginals[i].mass[b])) / k;
        }
        out
    };
    let full = weak_distance(&mean_of(None), reference)?;
    if n < 2 {
        return Ok((full, 0.0));
    }
    let loo: Vec<f64> = (0..n).map(|i| weak_distance(&mean_of(Some(i)), reference)).collect::<Result<_>>()?;
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok((full, var.sqrt()))
}

/// Fast fusion: concentration on the line and distance to the 1-D limit
/// across a decreasing sweep of lambda.
pub fn study_fast_fusion(cfg: &RunConfig) -> Result<StudyReport> {
    let setup = Setup::new(cfg)?;
    let mut lambdas = cfg.list("study.fast_lambdas");
    lambdas.sort_by(|a, b| b.total_cmp(a));
    if lambdas.len() < 2 || lambdas[0] / lambdas[lambdas.len() - 1] < 1e3 - 1e-9 || lambdas[0] > 1.0 {
        return Err(Error::Config("study.fast_lambdas must span at least 3 decades at or below 1".into()));
    }
    let replicas = cfg.replicas();
    let delta1 = cfg.f64("study.delta1");
    let probe_t = cfg.f64("study.probe_time");
    let mut times = cfg.list("study.checkpoints");
    if !times.iter().any(|&t| same_time(t, probe_t)) {
        times.push(probe_t);
    }
    times.sort_by(f64::total_cmp);

    let axis = Axis::log_anchored(cfg.usize("smolu1d.nv"), cfg.f64("sim.v_min"), cfg.f64("smolu1d.v_max"))?;
    let probes = ProbeSpec {
        exponents: vec![ExponentPair::new(0.0, 0.0), ExponentPair::new(0.0, 1.0), ExponentPair::new(1.0, 0.0)],
        checkpoints: times.clone(),
        keep_snapshots: true,
    };

    // the 1-D limit from the matched initial volume marginal
    let init = initial_marginal(&setup.ensemble(lambdas[0], probes.clone())?, replicas, &axis)?;
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let opts = Smolu1dOptions { record_times: times.clone(), ..Default::default() };
    let limit = run_smolu1d(&init, &setup.coag, t_end, &opts)?;
    let limit_at = |t: f64| limit.history.iter().find(|m| same_time(m.time, t));
    let limit_volume = limit.history.last().map(|m| m.moment(1.0)).unwrap_or(f64::NAN) + limit.exit_volume;

    let mut columns = vec!["lambda".to_string(), "epsilon".into(), "cf_mean".into(), "cf_se".into()];
    for t in &times {
        columns.push(format!("wd_{t}_mean"));
        columns.push(format!("wd_{t}_se"));
    }
    columns.push("volume".into());
    let mut report = StudyReport::new("fast_fusion", cfg, &[]);
    report.columns = columns;

    let mut cf_series = Vec::new();
    let mut wd_series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); times.len()];
    let mut volumes = Vec::new();
    for &lambda in &lambdas {
        let ens = setup.ensemble(lambda, probes.clone())?;
        let runs = run_ensemble(&ens, replicas, &format!("lambda={lambda}"), &mut report);
        let eps = CutoffSpec::new(lambda.min(cfg.f64("study.eps_max")))?;
        let snap = |run: &McRun, t: f64| run.snapshots.iter().find(|s| same_time(s.time, t)).cloned();

        let cf: Vec<f64> = runs
            .iter()
            .filter_map(|r| snap(r, probe_t))
            .map(|s| concentration_fraction(&s, delta1))
            .collect::<Result<_>>()?;
        let (cf_m, cf_se) = mean_se(&cf);
        cf_series.push((cf_m, cf_se));
        let mut row = vec![lambda, eps.epsilon(), cf_m, cf_se];

        for (k, &t) in times.iter().enumerate() {
            let reference = limit_at(t).ok_or_else(|| Error::Config(format!("no 1-D record at t = {t}")))?;
            let per_replica: Vec<Marginal1D> =
                runs.iter().filter_map(|r| snap(r, t)).map(|s| cutoff_marginal_pivoted(&s, &eps, &axis)).collect();
            let (m, se) = pooled_distance(&per_replica, reference)?;
            wd_series[k].push((m, se));
            row.push(m);
            row.push(se);
        }
        let stats = summarize(&runs.iter().collect::<Vec<_>>());
        let vol = find_stat(&stats, t_end, 0.0, 1.0).map(|s| s.mean).unwrap_or(f64::NAN);
        volumes.push(vol);
        row.push(vol);
        report.rows.push(row);
    }

    report.checks.push(Check::at_most("concentration_fraction non-increasing (excess over 2 SE)", worst_rise(&cf_series), 0.0));
    for (k, t) in times.iter().enumerate() {
        report.checks.push(Check::at_most(
            format!("weak_distance t={t} non-increasing (excess over 2 SE)"),
            worst_rise(&wd_series[k]),
            0.0,
        ));
    }
    let threshold = cfg.f64("study.cf_threshold");
    let last = cf_series.last().map(|x| x.0).unwrap_or(f64::NAN);
    report.checks.push(Check::at_most(format!("concentration_fraction at lambda={}", lambdas[lambdas.len() - 1]), last, threshold));
    report.checks.push(Check::at_least(format!("control concentration_fraction at lambda={}", lambdas[0]), cf_series[0].0, threshold));
    let spread = volumes.iter().map(|v| ((v - limit_volume) / limit_volume).abs()).fold(0.0, f64::max);
    report.checks.push(Check::at_most("volume matches the 1-D limit", spread, 1e-10));
    Ok(report)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slow fusion: area-moment drift against lambda, plus the no-fusion limit.
pub fn study_slow_fusion(cfg: &RunConfig) -> Result<StudyReport> {
    let setup = Setup::new(cfg)?;
    let mut lambdas = cfg.list("study.slow_lambdas");
    lambdas.sort_by(f64::total_cmp);
    if lambdas.len() < 2 || lambdas[0] < 1.0 {
        return Err(Error::Config("study.slow_lambdas needs at least two values >= 1".into()));
    }
    let replicas = cfg.replicas();
    let probes = ProbeSpec {
        exponents: vec![ExponentPair::new(0.0, 0.0), ExponentPair::new(0.0, 1.0), ExponentPair::new(1.0, 0.0)],
        checkpoints: Vec::new(),
        keep_snapshots: false,
    };
    let mut report =
        StudyReport::new("slow_fusion", cfg, &["lambda", "area_drift", "area_drift_se", "volume_drift_max", "area_mean_t0", "area_mean_tend"]);

    let mut points = Vec::new();
    let mut worst_volume: f64 = 0.0;
    for &lambda in lambdas.iter().chain(std::iter::once(&f64::INFINITY)) {
        let ens = setup.ensemble(lambda, probes.clone())?;
        let runs = run_ensemble(&ens, replicas, &format!("lambda={lambda}"), &mut report);
        let drifts: Vec<f64> = runs
            .iter()
            .map(|r| {
                let a0 = r.records.first().and_then(|x| x.get(1.0, 0.0)).unwrap_or(f64::NAN);
                let a1 = r.records.last().and_then(|x| x.get(1.0, 0.0)).unwrap_or(f64::NAN);
                (a1 - a0).abs() / a0
            })
            .collect();
        let (d, se) = mean_se(&drifts);
        let vd = worst_drift(&runs, 0.0, 1.0);
        worst_volume = worst_volume.max(vd);
        let stats = summarize(&runs.iter().collect::<Vec<_>>());
        let t_end = ens.cfg.t_end;
        let a0 = find_stat(&stats, 0.0, 1.0, 0.0).map(|s| s.mean).unwrap_or(f64::NAN);
        let a1 = find_stat(&stats, t_end, 1.0, 0.0).map(|s| s.mean).unwrap_or(f64::NAN);
        report.rows.push(vec![lambda, d, se, vd, a0, a1]);
        if lambda.is_finite() {
            points.push((lambda, d));
        } else {
            report.checks.push(Check::at_most("no fusion: area moment drift", worst_drift(&runs, 1.0, 0.0), 1e-10));
            report.checks.push(Check::at_most("no fusion: volume moment drift", vd, 1e-10));
        }
    }
    report.checks.push(Check::within("area drift log-log slope vs lambda", log_log_slope(&points), -1.2, -0.8));
    report.checks.push(Check::at_most("volume moment drift, all lambda", worst_volume, 1e-10));
    Ok(report)
}

fn sectional_options(cfg: &RunConfig, lambda: f64, times: &[f64], exponents: &[ExponentPair]) -> Result<SectionalOptions> {
    Ok(SectionalOptions {
        lambda,
        t_end: cfg.f64("sim.t_end"),
        max_dt: cfg.f64("grid.max_dt"),
        safety: 0.8,
        record_times: times.to_vec(),
        exponents: exponents.to_vec(),
    })
}

/// Pooled initial ensemble deposited on the sectional grid.
fn initial_grid_state(cfg: &RunConfig, ens: &Ensemble, replicas: usize) -> Result<GridState> {
    let grid = cfg.grid()?;
    let mut acc = GridState::zeros(&grid);
    for r in 0..replicas as u64 {
        let s = GridState::from_particles(&grid, &ens.initial_system(r)?)?;
        for (a, x) in acc.mass.iter_mut().zip(s.mass) {
            *a += x / replicas as f64;
        }
    }
    Ok(acc)
}

fn sectional_at(run: &SectionalRun, t: f64) -> Option<&MomentRecord> {
    run.records.iter().find(|r| same_time(r.time, t))
}

/// MC ensemble against the sectional oracle on matched initial data, then a
/// fusion-only variant against the closed-form flow.
pub fn study_cross_validation(cfg: &RunConfig) -> Result<StudyReport> {
    let pairs = [ExponentPair::new(0.0, 0.0), ExponentPair::new(0.0, 2.0), ExponentPair::new(1.0, 0.0)];
    let mut exponents = pairs.to_vec();
    exponents.push(ExponentPair::new(0.0, 1.0));
    let mut times = cfg.list("study.checkpoints");
    times.retain(|&t| t > 0.0 && t <= cfg.f64("sim.t_end"));
    times.sort_by(f64::total_cmp);
    let mut report = StudyReport::new(
        "cross_validation",
        cfg,
        &["time", "k", "l", "mc_mean", "mc_se", "sectional", "rel_diff", "tolerance"],
    );

    let setup = Setup::new(cfg)?;
    let lambda = cfg.lambda();
    let replicas = cfg.replicas();
    let probes = ProbeSpec { exponents: exponents.clone(), checkpoints: times.clone(), keep_snapshots: false };
    let ens = setup.ensemble(lambda, probes)?;
    let runs = run_ensemble(&ens, replicas, "baseline", &mut report);
    let stats = summarize(&runs.iter().collect::<Vec<_>>());

    let grid = cfg.grid()?;
    let init = initial_grid_state(cfg, &ens, replicas)?;
    let sec = run_sectional(&grid, &init, &setup.coag, &setup.fus, &sectional_options(cfg, lambda, &times, &exponents)?)?;

    let compare = |t: f64, p: ExponentPair, stats: &[MomentStat], tol_rel: f64, report: &mut StudyReport| -> Result<()> {
        let mc = find_stat(stats, t, p.k, p.l).ok_or_else(|| Error::Config(format!("no MC record at t = {t}")))?;
        let s = sectional_at(&sec, t).and_then(|r| r.entries.get(&p).copied()).unwrap_or(f64::NAN);
        let rel = (mc.mean - s).abs() / s.abs();
        let tol = if tol_rel > 0.0 { tol_rel.max(3.0 * mc.std_err / s.abs()) } else { 1e-9 };
        report.rows.push(vec![t, p.k, p.l, mc.mean, mc.std_err, s, rel, tol]);
        report.checks.push(Check::at_most(format!("{} at t={t}: MC vs sectional", p.label()), rel, tol));
        Ok(())
    };
    for p in pairs {
        compare(0.0, p, &stats, 0.0, &mut report)?;
    }
    for &t in &times {
        for p in pairs {
            compare(t, p, &stats, 0.05, &mut report)?;
        }
    }
    report.checks.push(Check::at_most(
        "sectional volume conservation incl. exit tally",
        {
            let v0 = sec.records[0].get(0.0, 1.0).unwrap_or(f64::NAN);
            let v1 = sec.records.last().and_then(|r| r.get(0.0, 1.0)).unwrap_or(f64::NAN);
            (v1 + sec.exit.volume - v0).abs() / v0
        },
        1e-8 * cfg.f64("sim.t_end"),
    ));

    fusion_only_checks(cfg, &times, &mut report)?;
    Ok(report)
}

/// Coagulation switched off through the truncation layer (`R` tiny makes
/// `xi_R = 0` for every pair), linear fusion, ramified start `e = v`.
/// Every particle then follows `e(t) = e0 exp(-r_scale t / lambda)`.
fn fusion_only_checks(cfg: &RunConfig, times: &[f64], report: &mut StudyReport) -> Result<()> {
    let mut c = cfg.clone();
    for (k, v) in [
        ("trunc.big_r", "1e-12"),
        ("trunc.fusion", "false"),
        ("fusion.mu", "0"),
        ("fusion.sigma", "0"),
        ("init.volumes", "monodisperse"),
        ("init.shape", "ramified"),
        ("init.kappa", "1"),
        ("sim.lambda", "1"),
        ("grid.max_dt", "0.001"),
    ] {
        c.set(k, v)?;
    }
    let setup = Setup::new(&c)?;
    let v0 = c.f64("init.v0");
    let rate = setup.fus.r_scale();
    let n0 = c.f64("init.number_density");
    let exact = |t: f64| n0 * (sphere_area(v0) + v0 * (-rate * t).exp());
    let area = [ExponentPair::new(1.0, 0.0), ExponentPair::new(0.0, 1.0)];
    let probes = ProbeSpec { exponents: area.to_vec(), checkpoints: times.to_vec(), keep_snapshots: false };
    let ens = setup.ensemble(1.0, probes)?;
    let replicas = c.replicas().min(4);
    let runs = run_ensemble(&ens, replicas, "fusion-only", report);
    let stats = summarize(&runs.iter().collect::<Vec<_>>());

    let grid = c.grid()?;
    let init = initial_grid_state(&c, &ens, replicas)?;
    let sec = run_sectional(&grid, &init, &setup.coag, &setup.fus, &sectional_options(&c, 1.0, times, &area)?)?;
    for &t in times {
        let want = exact(t);
        let mc = find_stat(&stats, t, 1.0, 0.0).map(|s| s.mean).unwrap_or(f64::NAN);
        let s = sectional_at(&sec, t).and_then(|r| r.get(1.0, 0.0)).unwrap_or(f64::NAN);
        report.checks.push(Check::at_most(format!("fusion-only M_1_0 at t={t}: MC vs closed form"), ((mc - want) / want).abs(), 1e-10));
        report.checks.push(Check::at_most(
            format!("fusion-only M_1_0 at t={t}: sectional vs closed form"),
            ((s - want) / want).abs(),
            1e-3,
        ));
    }
    Ok(())
}

/// Record times: the cadence `sim.record_interval` plus `study.checkpoints`, below `sim.t_end`.
pub fn record_times(cfg: &RunConfig) -> Vec<f64> {
    let (dt, t_end) = (cfg.f64("sim.record_interval"), cfg.f64("sim.t_end"));
    let mut ts: Vec<f64> = (1..).map(|k| k as f64 * dt).take_while(|&t| t < t_end * (1.0 - 1e-12)).collect();
    ts.extend(cfg.list("study.checkpoints").into_iter().filter(|&t| t > 0.0 && t < t_end));
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| same_time(*a, *b));
    ts
}

/// The default probes plus the moments bounded by the existence theory,
/// `M_{mu+3,0}`, `M_{0,mu+3}` and `M_{0,-mu-3}`.
pub fn moment_probes(cfg: &RunConfig) -> Vec<ExponentPair> {
    let q = cfg.f64("fusion.mu") + 3.0;
    let mut ex = ProbeSpec::default().exponents;
    ex.extend([ExponentPair::new(q, 0.0), ExponentPair::new(0.0, q), ExponentPair::new(0.0, -q)]);
    ex.sort();
    ex.dedup();
    ex
}

/// MC ensemble for a config, one result per replica in replica order.
pub fn run_mc_config(cfg: &RunConfig, keep_snapshots: bool) -> Result<Vec<Result<McRun>>> {
    let setup = Setup::new(cfg)?;
    let probes = ProbeSpec { exponents: moment_probes(cfg), checkpoints: cfg.list("study.checkpoints"), keep_snapshots };
    Ok(setup.ensemble(cfg.lambda(), probes)?.run(cfg.replicas()))
}

/// Sectional solve for a config, started from the pooled replica initial data.
pub fn run_sectional_config(cfg: &RunConfig) -> Result<(crate::sectional::Grid2D, SectionalRun)> {
    let setup = Setup::new(cfg)?;
    let ens = setup.ensemble(cfg.lambda(), ProbeSpec::default())?;
    let grid = cfg.grid()?;
    let init = initial_grid_state(cfg, &ens, cfg.replicas())?;
    let opts = sectional_options(cfg, cfg.lambda(), &record_times(cfg), &moment_probes(cfg))?;
    let run = run_sectional(&grid, &init, &setup.coag, &setup.fus, &opts)?;
    Ok((grid, run))
}

/// One-dimensional solve for a config from the pooled initial volume marginal.
pub fn run_smolu1d_config(cfg: &RunConfig) -> Result<crate::smolu1d::Smolu1dRun> {
    let setup = Setup::new(cfg)?;
    let ens = setup.ensemble(cfg.lambda(), ProbeSpec::default())?;
    let axis = Axis::log_anchored(cfg.usize("smolu1d.nv"), cfg.f64("sim.v_min"), cfg.f64("smolu1d.v_max"))?;
    let init = initial_marginal(&ens, cfg.replicas(), &axis)?;
    let opts = Smolu1dOptions { record_times: record_times(cfg), ..Default::default() };
    run_smolu1d(&init, &setup.coag, cfg.f64("sim.t_end"), &opts)
}
