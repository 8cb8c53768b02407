//! Streaming analysis of a long run.
//!
//! The solver thread hands every snapshot to a bounded queue drained by a
//! small pool of workers. Analysis snapshots get the full set of
//! diagnostics; the stencil snapshots at `t ± h` only contribute their
//! packet profile, from which `∂_t γ` and the remainder `R` are formed
//! after the run. Results are ordered by time before anything is written.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::asymptotics::{extract_w, scattering_errors, ScatteringErrors, ScatteringProfile};
use crate::error::{Error, Result};
use crate::evolve::{run_streaming, Abort, SimConfig};
use crate::exact::free_propagate;
use crate::grid::{derivative, Field};
use crate::invariants::ConservedReport;
use crate::norms::lp_norm;
use crate::packets::{
    difference_report, profile, profile_fourier, relative_profile_gap, remainder_from_profiles, velocity_grid,
    DifferenceReport, PacketConfig, PacketProfile,
};
use crate::vector_field::{ks_gap, VectorFieldReport};

use super::config::ExperimentConfig;
use super::snapshot;

/// Relative tolerance for matching snapshot times.
const TIME_TOL: f64 = 1e-9;

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_TOL * a.abs().max(1.0)
}

/// Snapshot schedule of an analysed run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Times receiving the full analysis, starting at 0.
    pub analysis: Vec<f64>,
    /// Every snapshot time handed to the solver.
    pub all: Vec<f64>,
    /// Run length, `t_end + h`, so the last analysis time has a right neighbour.
    pub t_end: f64,
}

impl Schedule {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let h = cfg.analysis.stencil;
        let mut analysis: Vec<f64> = std::iter::once(0.0).chain(cfg.sim.snapshot_times.iter().copied()).collect();
        analysis.dedup_by(|a, b| same_time(*a, *b));
        let mut all = analysis.clone();
        for &t in &analysis {
            if t >= cfg.analysis.t_min && t - h > 0.0 {
                all.push(t - h);
                all.push(t + h);
            }
        }
        all.extend(cfg.analysis.snapshot_files.iter().copied());
        all.retain(|&t| t > 0.0);
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| same_time(*a, *b));
        let t_end = all.last().copied().unwrap_or(0.0).max(cfg.sim.t_end);
        Schedule { analysis, all, t_end }
    }

    fn is_analysis(&self, t: f64) -> bool {
        self.analysis.iter().any(|&s| same_time(s, t))
    }
}

/// Diagnostics at one analysis time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeRecord {
    pub time: f64,
    pub sup: f64,
    pub ux_sup: f64,
    /// `‖e^{it∂²}u₀‖_∞`, the free evolution of the same data.
    pub linear_sup: f64,
    pub vector_field: Option<VectorFieldReport>,
    pub ks_gap: Option<f64>,
    /// Relative gap between the physical and Fourier profiles.
    pub fourier_gap: Option<f64>,
    pub difference: Option<DifferenceReport>,
    pub scattering: Option<ScatteringErrors>,
}

/// Everything extracted from one run.
#[derive(Debug, Clone)]
pub struct RunAnalysis {
    pub sim: SimConfig,
    pub epsilon: f64,
    pub initial_l1: f64,
    pub records: Vec<TimeRecord>,
    pub conserved: Vec<ConservedReport>,
    /// Physical profiles at every snapshot with `t > 0`.
    pub profiles: BTreeMap<OrderedTime, PacketProfile>,
    /// `W` extracted at every analysis time `t > 1`.
    pub scattering_profiles: BTreeMap<OrderedTime, ScatteringProfile>,
    /// `(t, sup_v |R(t, v)|)` at analysis times with both neighbours.
    pub remainder: Vec<(f64, f64)>,
    pub aborted: Option<Abort>,
    /// Non-fatal problems met during the analysis, one line each.
    pub notes: Vec<String>,
    pub snapshot_paths: Vec<PathBuf>,
}

/// `f64` key with a total order, for time-indexed maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderedTime(pub f64);

impl Eq for OrderedTime {}

impl PartialOrd for OrderedTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl RunAnalysis {
    pub fn is_accepted(&self) -> bool {
        self.aborted.is_none()
    }

    /// `(t, value)` pairs of one quantity over the analysis records.
    pub fn series(&self, value: impl Fn(&TimeRecord) -> Option<f64>) -> Vec<(f64, f64)> {
        self.records.iter().filter_map(|r| value(r).map(|v| (r.time, v))).collect()
    }

    pub fn scattering_profile_at(&self, t: f64) -> Option<&ScatteringProfile> {
        self.scattering_profiles.iter().find(|(k, _)| same_time(k.0, t)).map(|(_, p)| p)
    }
}

enum Outcome {
    Analysis(Box<TimeRecord>, Option<PacketProfile>, Option<ScatteringProfile>, Vec<String>),
    Stencil(PacketProfile),
}

struct Context {
    sigma: f64,
    velocities: Vec<f64>,
    packet: PacketConfig,
    initial: Field,
}

fn analyse_full(f: &Field, cx: &Context) -> Result<Outcome> {
    let t = f.time();
    let mut notes = Vec::new();
    let ux_sup = derivative(f, 1)?.sup_norm();
    let linear_sup = free_propagate(&cx.initial, t - cx.initial.time())?.sup_norm();
    let mut record = TimeRecord {
        time: t,
        sup: f.sup_norm(),
        ux_sup,
        linear_sup,
        vector_field: None,
        ks_gap: None,
        fourier_gap: None,
        difference: None,
        scattering: None,
    };
    if t <= 0.0 {
        return Ok(Outcome::Analysis(Box::new(record), None, None, notes));
    }
    record.vector_field = Some(VectorFieldReport::measure(f)?);
    record.ks_gap = Some(ks_gap(f)?);
    let phys = profile(f, &cx.velocities, &cx.packet)?;
    let four = profile_fourier(f, &cx.velocities, &cx.packet)?;
    record.fourier_gap = Some(if phys.gamma.iter().all(|g| g.norm() == 0.0) { 0.0 } else { relative_profile_gap(&phys, &four)? });
    record.difference = Some(difference_report(f, &phys)?);
    let mut w = None;
    if t > 1.0 && cx.sigma >= 1.0 {
        let prof = extract_w(&phys, cx.sigma)?;
        match scattering_errors(f, &prof) {
            Ok(e) => record.scattering = Some(e),
            Err(Error::Coverage(msg)) => notes.push(msg),
            Err(e) => return Err(e),
        }
        w = Some(prof);
    }
    Ok(Outcome::Analysis(Box::new(record), Some(phys), w, notes))
}

fn worker(rx: Arc<Mutex<Receiver<(Field, bool)>>>, cx: &Context) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    loop {
        let next = rx.lock().expect("queue lock poisoned").recv();
        let Ok((f, full)) = next else { break };
        if full {
            out.push(analyse_full(&f, cx)?);
        } else {
            out.push(Outcome::Stencil(profile(&f, &cx.velocities, &cx.packet)?));
        }
    }
    Ok(out)
}

/// Run `cfg` and analyse it. Snapshot files are written under `snapshot_dir`
/// when one is given.
pub fn analyse_run(cfg: &ExperimentConfig, snapshot_dir: Option<&std::path::Path>) -> Result<RunAnalysis> {
    let schedule = Schedule::new(cfg);
    let mut sim = cfg.sim.clone();
    sim.snapshot_times = schedule.all.clone();
    sim.t_end = schedule.t_end;
    sim.validate()?;
    let u0 = cfg.initial_data()?;
    let cx = Context {
        sigma: sim.sigma,
        velocities: velocity_grid(cfg.analysis.v_max, cfg.analysis.velocities)?,
        packet: cfg.packet,
        initial: u0.clone(),
    };
    let workers = std::thread::available_parallelism().map_or(2, |n| n.get()).clamp(1, 4);
    let (tx, rx) = sync_channel::<(Field, bool)>(2 * workers);
    let rx = Arc::new(Mutex::new(rx));
    let mut snapshot_paths = Vec::new();

    let (summary, outcomes) = std::thread::scope(|scope| -> Result<_> {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let rx = Arc::clone(&rx);
                let cx = &cx;
                scope.spawn(move || worker(rx, cx))
            })
            .collect();
        let summary = run_streaming(&u0, &sim, |f| {
            let t = f.time();
            if let Some(dir) = snapshot_dir {
                if cfg.analysis.snapshot_files.iter().any(|&s| same_time(s, t)) {
                    let path = dir.join(format!("snapshot_t{t:010.4}.gdnl"));
                    snapshot::write(&path, &f, sim.sigma)?;
                    snapshot_paths.push(path);
                }
            }
            let full = schedule.is_analysis(t);
            if !full && !(t > 0.0) {
                return Ok(());
            }
            tx.send((f, full)).map_err(|_| Error::Consistency("analysis workers stopped early".into()))
        });
        drop(tx);
        let mut outcomes = Vec::new();
        let mut first_error = None;
        for h in handles {
            match h.join().expect("analysis worker panicked") {
                Ok(o) => outcomes.extend(o),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        if let Some(e) = first_error {
            return Err(e);
        }
        Ok((summary?, outcomes))
    })?;

    let mut records = Vec::new();
    let mut profiles = BTreeMap::new();
    let mut scattering_profiles = BTreeMap::new();
    let mut notes = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Analysis(r, p, w, n) => {
                if let Some(p) = p {
                    profiles.insert(OrderedTime(r.time), p);
                }
                if let Some(w) = w {
                    scattering_profiles.insert(OrderedTime(r.time), w);
                }
                notes.extend(n.into_iter().map(|m| format!("t = {}: {m}", r.time)));
                records.push(*r);
            }
            Outcome::Stencil(p) => {
                profiles.insert(OrderedTime(p.time), p);
            }
        }
    }
    records.sort_by(|a, b| a.time.total_cmp(&b.time));
    notes.sort();
    let remainder = remainder_series(&records, &profiles, sim.sigma)?;
    snapshot_paths.sort();
    Ok(RunAnalysis {
        initial_l1: lp_norm(&u0, 1.0)?,
        sim,
        epsilon: cfg.epsilon,
        records,
        conserved: summary.reports,
        profiles,
        scattering_profiles,
        remainder,
        aborted: summary.aborted,
        notes,
        snapshot_paths,
    })
}

fn remainder_series(
    records: &[TimeRecord],
    profiles: &BTreeMap<OrderedTime, PacketProfile>,
    sigma: f64,
) -> Result<Vec<(f64, f64)>> {
    let keyed: Vec<&PacketProfile> = profiles.values().collect();
    let mut out = Vec::new();
    for r in records {
        let Some(i) = keyed.iter().position(|p| same_time(p.time, r.time)) else { continue };
        if i == 0 || i + 1 >= keyed.len() {
            continue;
        }
        let rem = remainder_from_profiles([keyed[i - 1], keyed[i], keyed[i + 1]], sigma)?;
        out.push((r.time, rem.iter().map(|z| z.norm()).fold(0.0, f64::max)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::config::parse_config_str;

    fn small() -> ExperimentConfig {
        parse_config_str(
            "name = \"E2\"\nsigma = 1.0\nepsilon = 0.05\n\
             [sim]\nn = 2048\nt_end = 4.0\ndt = 0.01\n\
             [analysis]\nvelocities = 65\nper_octave = 2\nfit_window = [1.0, 4.0]\nsnapshot_files = [4.0]\n",
        )
        .unwrap()
    }

    #[test]
    fn schedule_adds_stencil_neighbours() {
        let cfg = small();
        let s = Schedule::new(&cfg);
        assert_eq!(s.analysis.len(), 6);
        assert!((s.t_end - 4.01).abs() < 1e-12);
        assert_eq!(s.all.len(), 5 * 3);
        assert!(s.all.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn short_run_is_analysed_in_time_order() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        let a = analyse_run(&cfg, Some(dir.path())).unwrap();
        assert!(a.is_accepted());
        assert_eq!(a.records.len(), 6);
        assert!(a.records.windows(2).all(|w| w[1].time > w[0].time));
        assert_eq!(a.profiles.len(), 15);
        assert_eq!(a.remainder.len(), 5);
        assert_eq!(a.scattering_profiles.len(), 4);
        assert_eq!(a.snapshot_paths.len(), 1);
        let (f, sigma) = snapshot::read(&a.snapshot_paths[0]).unwrap();
        assert_eq!((f.time(), sigma), (4.0, 1.0));
        for r in &a.records[1..] {
            assert!(r.fourier_gap.unwrap() < 1e-6, "{r:?}");
            assert!(r.ks_gap.unwrap() <= 1.0 + 1e-6);
        }
        // A second run reproduces every record bit for bit.
        let b = analyse_run(&cfg, None).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.remainder, b.remainder);
    }
}
