//! The ten acceptance criteria, each evaluated into one named row.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{dispersive_constant_series, fit_decay, profile_distance};
use crate::error::{Error, Result};
use crate::evolve::{run, Scheme, SimConfig};
use crate::exact::{
    degenerate_speeds, gaussian_sup, mass_formula, soliton_field, soliton_integrals, soliton_orbit, soliton_test_set,
    SolitonParams,
};
use crate::grid::{Complex, Field, Grid1D};
use crate::norms::{lorentz_norm, lp_norm};
use crate::packets::{packet_residual, wave_packet, PacketConfig};
use crate::vector_field::{japanese_bracket, lu_growth_fit_series};
use crate::NonlinearForm;

use super::analysis::RunAnalysis;
use super::config::dyadic_times;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    AtMost,
    AtLeast,
    /// `|measured − threshold| ≤ tolerance`.
    Within { tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
}

impl Check {
    pub fn new(quantity: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        Check { quantity: quantity.into(), measured, relation, threshold }
    }

    pub fn passed(&self) -> bool {
        let m = self.measured;
        match self.relation {
            Relation::Below => m < self.threshold,
            Relation::AtMost => m <= self.threshold,
            Relation::AtLeast => m >= self.threshold,
            Relation::Within { tolerance } => (m - self.threshold).abs() <= tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, rhs) = match self.relation {
            Relation::Below => ("<", format!("{:.3e}", self.threshold)),
            Relation::AtMost => ("<=", format!("{:.3e}", self.threshold)),
            Relation::AtLeast => (">=", format!("{:.3e}", self.threshold)),
            Relation::Within { tolerance } => ("=", format!("{} ± {tolerance}", self.threshold)),
        };
        write!(f, "{} = {:.4e} ({op} {rhs})", self.quantity, self.measured)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: String,
    pub checks: Vec<Check>,
    /// Logged measurements that are not asserted.
    pub notes: Vec<String>,
}

impl Criterion {
    pub fn new(id: u8, name: impl Into<String>) -> Self {
        Criterion { id, name: name.into(), checks: Vec::new(), notes: Vec::new() }
    }

    pub fn check(mut self, quantity: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        self.checks.push(Check::new(quantity, measured, relation, threshold));
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed() && c.measured.is_finite())
    }

    /// One-line summary, `PASS`/`FAIL` first.
    pub fn line(&self) -> String {
        let checks: Vec<String> = self.checks.iter().map(|c| c.to_string()).collect();
        format!(
            "{} C{} {}: {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            checks.join("; ")
        )
    }
}

fn sup_diff(a: &Field, b: &Field) -> f64 {
    a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn final_state(u0: &Field, cfg: &SimConfig) -> Result<Field> {
    let traj = run(u0, cfg)?;
    if let Some(a) = traj.aborted {
        return Err(Error::Consistency(format!("soliton run stopped at t = {}: {}", a.time, a.reason)));
    }
    Ok(traj.snapshots.fields().last().expect("initial snapshot").clone())
}

/// Settings of the soliton oracle run.
#[derive(Debug, Clone, Copy)]
pub struct SolverOracle {
    pub soliton: SolitonParams,
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    /// Coarsest step of the order study, which runs to `t = 1`.
    pub order_dt0: f64,
}

/// C1: soliton orbit error and observed temporal order.
pub fn solver_correctness(o: &SolverOracle, max_error: f64, min_order: f64) -> Result<Criterion> {
    let p = o.soliton;
    let u0 = soliton_field(&p, o.grid)?;
    let exact = soliton_orbit(&p, o.t_end, o.grid)?;
    let base = SimConfig::new(p.sigma, o.grid, o.dt, o.t_end).with_form(p.form);
    let err = sup_diff(&final_state(&u0, &base)?, &exact);
    let err_if = sup_diff(&final_state(&u0, &base.clone().with_scheme(Scheme::IfRk4))?, &exact);

    let order_cfg = |dt: f64| SimConfig::new(p.sigma, o.grid, dt, 1.0).with_form(p.form);
    let reference = final_state(&u0, &order_cfg(o.order_dt0 / 16.0))?;
    let errors = (0..3)
        .into_par_iter()
        .map(|k| Ok(sup_diff(&final_state(&u0, &order_cfg(o.order_dt0 / 2f64.powi(k)))?, &reference)))
        .collect::<Result<Vec<f64>>>()?;
    let order = errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    Ok(Criterion::new(1, "solver correctness")
        .check("soliton sup error", err, Relation::Below, max_error)
        .check("observed order", order, Relation::AtLeast, min_order)
        .note(format!("integrating-factor RK4 sup error {err_if:.3e}"))
        .note(format!("halving errors {:?}", errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>())))
}

/// C2: mass and energy drift over `t ≤ horizon`. Energy is only conserved
/// for `σ = 1`, so other runs contribute their mass drift alone.
pub fn conservation(runs: &[&RunAnalysis], horizon: f64, mass_tol: f64, energy_tol: f64) -> Criterion {
    let mut dm = 0.0_f64;
    let mut de = 0.0_f64;
    let mut c = Criterion::new(2, "conservation");
    for r in runs {
        if !r.is_accepted() {
            c = c.note(format!("σ = {} run not accepted; excluded", r.sim.sigma));
            continue;
        }
        for rep in r.conserved.iter().filter(|rep| rep.time <= horizon) {
            dm = dm.max(rep.relative_mass_drift);
            if r.sim.sigma == 1.0 {
                de = de.max(rep.relative_energy_drift);
            }
        }
    }
    c.check("mass drift", dm, Relation::Below, mass_tol).check("energy drift", de, Relation::Below, energy_tol)
}

/// C3: the free Gaussian's sup-norm exponent, from the closed form.
pub fn linear_decay_baseline(window: (f64, f64), target: f64, tol: f64) -> Result<Criterion> {
    let series: Vec<(f64, f64)> =
        dyadic_times(window.0, window.1, 8).into_iter().skip(1).map(|t| (t, gaussian_sup(1.0, t))).collect();
    let fit = fit_decay(&series, window)?;
    Ok(Criterion::new(3, "linear decay baseline").check(
        "sup-norm exponent",
        fit.exponent,
        Relation::Within { tolerance: tol },
        target,
    ))
}

/// C4: dispersive decay of a σ ≥ 2 small-data run.
pub fn dispersive_regime(r: &RunAnalysis, window: (f64, f64), exponent_tol: f64) -> Result<Criterion> {
    let mut c = Criterion::new(4, "dispersive regime");
    if r.initial_l1 == 0.0 {
        return Ok(c
            .check("dispersive constant", 0.0, Relation::AtMost, 0.0)
            .check("max sup norm", r.records.iter().map(|x| x.sup).fold(0.0, f64::max), Relation::AtMost, 0.0)
            .note("zero data"));
    }
    let sup = r.series(|x| Some(x.sup));
    let lin = r.series(|x| Some(x.linear_sup));
    let constant = dispersive_constant_series(r.initial_l1, &sup)?;
    let linear = dispersive_constant_series(r.initial_l1, &lin)?;
    let weighted: Vec<f64> = sup
        .iter()
        .filter(|&&(t, _)| t >= window.0 && t <= window.1)
        .map(|&(t, s)| japanese_bracket(t).sqrt() * s)
        .collect();
    let spread = weighted.iter().copied().fold(0.0, f64::max) / weighted.iter().copied().fold(f64::INFINITY, f64::min);
    let fit = fit_decay(&sup, window)?;
    c = c
        .check("dispersive constant", constant, Relation::Below, f64::INFINITY)
        .check("<t>^1/2 sup spread", spread, Relation::Below, 2.0)
        .check("sup-norm exponent", fit.exponent, Relation::Within { tolerance: exponent_tol }, -0.5)
        .note(format!("linear constant {linear:.6e}, ratio {:.4}", constant / linear));
    if !r.is_accepted() {
        c = c.check("run accepted", 0.0, Relation::AtLeast, 1.0);
    }
    Ok(c)
}

/// C5: vector-field bounds on a σ = 1 run and boundedness on a σ > 1 run.
pub fn vector_field_bounds(
    main: &RunAnalysis,
    companion: Option<&RunAnalysis>,
    sup_factor: f64,
    growth_main: f64,
    growth_companion: f64,
) -> Result<Criterion> {
    let eps = main.epsilon;
    let mut c = Criterion::new(5, "vector-field bounds");
    let ku = main.records.iter().map(|x| japanese_bracket(x.time).sqrt() * x.sup / eps).fold(0.0, f64::max);
    let kux = main.records.iter().map(|x| japanese_bracket(x.time).sqrt() * x.ux_sup / eps.sqrt()).fold(0.0, f64::max);
    c = c
        .check("max <t>^1/2 |u|_inf / eps", ku, Relation::AtMost, sup_factor)
        .check("max <t>^1/2 |u_x|_inf / sqrt(eps)", kux, Relation::AtMost, sup_factor);
    let growth = |r: &RunAnalysis| lu_growth_fit_series(&r.series(|x| x.vector_field.map(|v| v.lu_h1)));
    c = c.check(format!("Lu H1 growth exponent (σ = {})", main.sim.sigma), growth(main)?.exponent, Relation::AtMost, growth_main);
    match companion {
        Some(comp) => {
            c = c.check(
                format!("Lu H1 growth exponent (σ = {})", comp.sim.sigma),
                growth(comp)?.exponent,
                Relation::AtMost,
                growth_companion,
            );
        }
        None => c = c.note("no companion run"),
    }
    for r in std::iter::once(main).chain(companion) {
        if !r.is_accepted() {
            c = c.check(format!("σ = {} run accepted", r.sim.sigma), 0.0, Relation::AtLeast, 1.0);
        }
    }
    Ok(c)
}

/// `‖(i∂_t + ∂²)Φ_v‖_{L¹} / ‖Φ_v‖_{L¹}` at the given times.
pub fn packet_residual_ratios(v: f64, times: &[f64], cfg: &PacketConfig) -> Result<Vec<(f64, f64)>> {
    let t_max = times.iter().copied().fold(1.0, f64::max);
    let half = 2.0 * (v.abs() * t_max + t_max.sqrt()) + 8.0;
    let grid = Grid1D::new(1 << 15, 2.0 * half)?;
    times
        .par_iter()
        .map(|&t| {
            let res = packet_residual(v, t, grid, cfg)?;
            let pk = wave_packet(v, t, grid, cfg)?;
            Ok((t, lp_norm(&res, 1.0)? / lp_norm(&pk, 1.0)?))
        })
        .collect()
}

/// C6: physical and Fourier profiles agree, and the packet residual ratio
/// decays like `1/t`.
pub fn packet_consistency(r: &RunAnalysis, cfg: &PacketConfig, gap_tol: f64, slope_tol: f64) -> Result<Criterion> {
    let gap = r.records.iter().filter_map(|x| x.fourier_gap).fold(0.0, f64::max);
    let analysed = r.records.iter().filter(|x| x.fourier_gap.is_some()).count();
    let sweep = dyadic_times(1.0, 128.0, 2).into_iter().skip(1).collect::<Vec<_>>();
    let ratios = packet_residual_ratios(1.0, &sweep, cfg)?;
    let fit = fit_decay(&ratios, (1.0, 128.0))?;
    Ok(Criterion::new(6, "wave-packet consistency")
        .check("max physical/Fourier profile gap", gap, Relation::Below, gap_tol)
        .check("packet residual L1-ratio slope", fit.exponent, Relation::Within { tolerance: slope_tol }, -1.0)
        .note(format!("{analysed} snapshots compared")))
}

/// C7: decay of `sup_v |R(t, v)|`.
pub fn remainder_decay(r: &RunAnalysis, window: (f64, f64), max_slope: f64) -> Result<Criterion> {
    let fit = fit_decay(&r.remainder, window)?;
    Ok(Criterion::new(7, "profile-equation remainder")
        .check("sup_v |R| slope", fit.exponent, Relation::AtMost, max_slope)
        .note(format!("r² = {:.4}, {} points", fit.r_squared, fit.points)))
}

/// C8: stabilization of `W` and decay of the scattering errors.
pub fn modified_scattering(
    r: &RunAnalysis,
    pair: (f64, f64),
    constant: f64,
    window: (f64, f64),
    max_slope_x: f64,
    max_slope_xi: f64,
) -> Result<Criterion> {
    let at = |t: f64| {
        r.scattering_profile_at(t).ok_or_else(|| Error::InsufficientData(format!("no extracted profile at t = {t}")))
    };
    let cauchy = profile_distance(at(pair.0)?, at(pair.1)?)?;
    let bound = constant * pair.0.powf(-0.2);
    let ex = fit_decay(&r.series(|x| x.scattering.map(|s| s.err_x_sup)), window)?;
    let exi = fit_decay(&r.series(|x| x.scattering.map(|s| s.err_xi_l2)), window)?;
    let mut c = Criterion::new(8, "modified scattering")
        .check(format!("|W({}) - W({})|_inf", pair.0, pair.1), cauchy, Relation::AtMost, bound)
        .check("err_x sup slope", ex.exponent, Relation::AtMost, max_slope_x)
        .check("err_xi L2 slope", exi.exponent, Relation::AtMost, max_slope_xi)
        .note(format!("Cauchy constant C = {constant}, measured ratio {:.4}", cauchy / pair.0.powf(-0.2)));
    for n in &r.notes {
        c = c.note(n.clone());
    }
    Ok(c)
}

/// Rows of the virial-identity table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialRow {
    pub sigma: f64,
    pub omega: f64,
    pub c: f64,
    pub mass: f64,
    pub gradient: f64,
    pub relative_error: f64,
}

pub fn virial_table(form: NonlinearForm) -> Result<Vec<VirialRow>> {
    soliton_test_set(form)
        .par_iter()
        .map(|p| {
            let ints = soliton_integrals(p)?;
            Ok(VirialRow {
                sigma: p.sigma,
                omega: p.omega,
                c: p.c,
                mass: ints.mass,
                gradient: ints.gradient,
                relative_error: (ints.virial_ratio(p.omega) - 1.0).abs(),
            })
        })
        .collect()
}

/// One point of the mass and H¹ curve along `c_k → −2√ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerateRow {
    pub sigma: f64,
    pub k: u32,
    pub c: f64,
    pub mass: f64,
    pub h1_norm: f64,
}

pub fn degenerate_curve(sigma: f64, omega: f64, count: u32, form: NonlinearForm) -> Result<Vec<DegenerateRow>> {
    degenerate_speeds(omega, count)
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let p = SolitonParams::with_form(sigma, omega, c, form)?;
            Ok(DegenerateRow { sigma, k: k as u32 + 1, c, mass: mass_formula(&p)?, h1_norm: soliton_integrals(&p)?.h1_norm() })
        })
        .collect()
}

/// C9: virial identity, mass formula and the degenerate-speed H¹ trend.
pub fn soliton_identities(virial_tol: f64, mass_tol: f64) -> Result<Criterion> {
    let virial = virial_table(NonlinearForm::Transport)?;
    let worst_virial = virial.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    let worst_mass = soliton_test_set(NonlinearForm::Divergence)
        .par_iter()
        .map(|p| {
            let formula = mass_formula(p)?;
            Ok((soliton_integrals(p)?.mass - formula).abs() / formula)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut increases = 0usize;
    let mut notes = Vec::new();
    for sigma in [1.0, 1.5] {
        let curve = degenerate_curve(sigma, 1.0, 8, NonlinearForm::Divergence)?;
        increases += curve.windows(2).filter(|w| !(w[1].h1_norm < w[0].h1_norm)).count();
        let norms: Vec<String> = curve.iter().map(|r| format!("{:.6}", r.h1_norm)).collect();
        notes.push(format!("σ = {sigma}: H1 norms {}", norms.join(", ")));
    }
    let mut c = Criterion::new(9, "soliton identities")
        .check("worst virial relative error", worst_virial, Relation::Below, virial_tol)
        .check("worst mass-formula relative error", worst_mass, Relation::Below, mass_tol)
        .check("H1 non-decreasing steps", increases as f64, Relation::AtMost, 0.0);
    c.notes = notes;
    Ok(c)
}

fn random_step(rng: &mut ChaCha8Rng, grid: Grid1D) -> Result<Field> {
    let pieces = rng.gen_range(1..=12usize);
    let n = grid.n();
    let mut samples = vec![Complex::new(0.0, 0.0); n];
    for _ in 0..pieces {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(a..n.min(a + n / 4) + 1).min(n);
        let z = Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        samples[a..b].iter_mut().for_each(|s| *s = z);
    }
    Field::new(grid, 0.0, samples)
}

/// C10: the Lorentz-norm engine on step data. Returns the largest Hölder
/// ratio `‖fg‖ / (K‖f‖‖g‖)` among the notes.
pub fn norm_engine(seed: u64, pairs: usize, identity_tol: f64) -> Result<Criterion> {
    let grid = Grid1D::new(256, 16.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_identity = 0.0_f64;
    for _ in 0..50 {
        let f = random_step(&mut rng, grid)?;
        for p in [1.0, 1.5, 2.0, 3.0, 7.5] {
            let (a, b) = (lorentz_norm(&f, p, p)?, lp_norm(&f, p)?);
            if b > 0.0 {
                worst_identity = worst_identity.max((a - b).abs() / b);
            }
        }
    }
    let mut worst_indicator = 0.0_f64;
    for cells in [1usize, 7, 64, 200] {
        let samples = (0..grid.n()).map(|j| Complex::new(if j < cells { 1.0 } else { 0.0 }, 0.0)).collect();
        let f = Field::new(grid, 0.0, samples)?;
        let m = cells as f64 * grid.dx();
        for (p, q) in [(1.0, 1.0), (2.0, 1.0), (2.0, 4.0), (3.0, 1.5), (1.5, f64::INFINITY)] {
            let exact = if q.is_infinite() { m.powf(1.0 / p) } else { (p / q).powf(1.0 / q) * m.powf(1.0 / p) };
            worst_indicator = worst_indicator.max((lorentz_norm(&f, p, q)? - exact).abs() / exact);
        }
    }
    let mut violations = 0usize;
    let mut worst_ratio = 0.0_f64;
    for _ in 0..pairs {
        let f = random_step(&mut rng, grid)?;
        let g = random_step(&mut rng, grid)?;
        let (p1, p2) = (rng.gen_range(2.0..6.0), rng.gen_range(2.0..6.0));
        let (q1, q2) = (rng.gen_range(2.0..8.0), rng.gen_range(2.0..8.0));
        let p = 1.0 / (1.0 / p1 + 1.0 / p2);
        let q = 1.0 / (1.0 / q1 + 1.0 / q2);
        let fg = f.zip_with(&g, |a, b| a * b)?;
        let rhs = 2f64.powf(1.0 / p) * lorentz_norm(&f, p1, q1)? * lorentz_norm(&g, p2, q2)?;
        let lhs = lorentz_norm(&fg, p, q)?;
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok(Criterion::new(10, "norm engine")
        .check("max |L^{p,p} - L^p| / L^p", worst_identity, Relation::AtMost, identity_tol)
        .check("max indicator relative error", worst_indicator, Relation::AtMost, identity_tol)
        .check("Hölder violations", violations as f64, Relation::AtMost, 0.0)
        .note(format!("Hölder constant K = 2^(1/p); largest observed ratio {worst_ratio:.4}")))
}
