use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gdnls::asymptotics::fit_decay;
use gdnls::evolve::run;
use gdnls::exact::{mass_formula, soliton_field, soliton_grid, soliton_integrals, SolitonParams};
use gdnls::lab::output::{format_f64, Table};
use gdnls::lab::{parse_config_with_overrides, run_experiment, snapshot, ExperimentConfig};
use gdnls::norms::{lorentz_norm, lp_norm, sobolev_norm};
use gdnls::packets::{profile, profile_fourier, relative_profile_gap, velocity_grid, PacketConfig};
use gdnls::{Error, NonlinearForm, SobolevKind};

/// Pseudospectral laboratory for the generalized derivative NLS.
#[derive(Parser)]
#[command(name = "gdnls", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured initial data and write conserved quantities
    /// and snapshot files.
    Simulate(ConfigArgs),
    /// Tabulate a solitary wave and its integrals.
    Soliton(SolitonArgs),
    /// Packet profile γ(t, v) of a snapshot file.
    Packet(PacketArgs),
    /// Log-log decay fit of one column of a CSV file.
    Fit(FitArgs),
    /// Lebesgue, Sobolev and Lorentz norms of a snapshot file.
    Norms(NormsArgs),
    /// Run an experiment (E1..E5) and check its acceptance criteria.
    Experiment(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment file (TOML). Without one, the defaults of `--name` apply.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Experiment name [config key: name]
    #[arg(long)]
    name: Option<String>,
    /// Power σ of the nonlinearity [config key: sigma]
    #[arg(long)]
    sigma: Option<f64>,
    /// Size of the initial data [config key: epsilon]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Grid points [config key: sim.n]
    #[arg(long)]
    n: Option<usize>,
    /// Box length [config key: sim.length]
    #[arg(long)]
    length: Option<f64>,
    /// Time step [config key: sim.dt]
    #[arg(long)]
    dt: Option<f64>,
    /// Final time [config key: sim.t_end]
    #[arg(long)]
    t_end: Option<f64>,
    /// Report directory [config key: output_dir]
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Any other key, as `dotted.key=value` with a TOML value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut o: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        put("name", self.name.as_ref().map(|s| format!("{s:?}")));
        put("sigma", self.sigma.map(|v| format!("{v:?}")));
        put("epsilon", self.epsilon.map(|v| format!("{v:?}")));
        put("sim.n", self.n.map(|v| v.to_string()));
        put("sim.length", self.length.map(|v| format!("{v:?}")));
        put("sim.dt", self.dt.map(|v| format!("{v:?}")));
        put("sim.t_end", self.t_end.map(|v| format!("{v:?}")));
        put("output_dir", self.output_dir.as_ref().map(|p| format!("{:?}", p.display().to_string())));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config { key: kv.clone(), message: "expected KEY=VALUE".into() })?;
            o.push((k.trim().to_string(), v.trim().to_string()));
        }
        parse_config_with_overrides(&text, &o)
    }
}

#[derive(Args)]
struct SolitonArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// `divergence` or `transport`
    #[arg(long, default_value = "divergence")]
    form: String,
    /// Write the sampled profile (x, re, im, abs) here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the sampled profile as a snapshot file here
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct PacketArgs {
    /// Snapshot file
    snapshot: PathBuf,
    /// Half-width of the velocity grid [config key: analysis.v_max]
    #[arg(long, default_value_t = 4.0)]
    v_max: f64,
    /// Number of velocities [config key: analysis.velocities]
    #[arg(long, default_value_t = 129)]
    velocities: usize,
    /// Output CSV (v, physical re/im, Fourier re/im)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV file with a header row
    csv: PathBuf,
    /// Column to fit
    #[arg(long)]
    column: String,
    /// Time column
    #[arg(long, default_value = "t")]
    time_column: String,
    /// Window start [config key: analysis.fit_window]
    #[arg(long)]
    t_min: f64,
    /// Window end [config key: analysis.fit_window]
    #[arg(long)]
    t_max: f64,
}

#[derive(Args)]
struct NormsArgs {
    /// Snapshot file
    snapshot: PathBuf,
    /// Lebesgue and Lorentz exponent p
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Lorentz exponent q (`inf` allowed)
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Sobolev order s
    #[arg(long, default_value_t = 1.0)]
    s: f64,
}

fn form_from(s: &str) -> Result<NonlinearForm, Error> {
    match s {
        "divergence" => Ok(NonlinearForm::Divergence),
        "transport" => Ok(NonlinearForm::Transport),
        other => Err(Error::Config { key: "form".into(), message: format!("unknown form `{other}`") }),
    }
}

fn simulate(args: &ConfigArgs) -> Result<ExitCode, Error> {
    let cfg = args.load()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let u0 = cfg.initial_data()?;
    let traj = run(&u0, &cfg.sim)?;
    let mut t = Table::new(["t", "mass", "energy", "mass_drift", "energy_drift", "sup"]);
    for (r, f) in traj.reports.iter().zip(traj.snapshots.fields()) {
        t.push(vec![r.time, r.mass, r.energy, r.relative_mass_drift, r.relative_energy_drift, f.sup_norm()])?;
    }
    t.write_csv(&cfg.output_dir.join("conserved.csv"))?;
    if let Some(last) = traj.snapshots.fields().last() {
        snapshot::write(&cfg.output_dir.join("final.gdnl"), last, cfg.sim.sigma)?;
    }
    match traj.aborted {
        Some(a) => {
            eprintln!("run stopped at t = {}: {}", a.time, a.reason);
            Ok(ExitCode::from(2))
        }
        None => {
            println!("reached t = {} in {} snapshots", cfg.sim.t_end, traj.snapshots.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn soliton(args: &SolitonArgs) -> Result<ExitCode, Error> {
    let p = SolitonParams::with_form(args.sigma, args.omega, args.c, form_from(&args.form)?)?;
    let ints = soliton_integrals(&p)?;
    println!("mass (formula)   {}", format_f64(mass_formula(&p)?));
    println!("mass (quadrature) {}", format_f64(ints.mass));
    println!("gradient         {}", format_f64(ints.gradient));
    println!("virial ratio     {}", format_f64(ints.virial_ratio(p.omega)));
    println!("H1 norm          {}", format_f64(ints.h1_norm()));
    if args.csv.is_some() || args.snapshot.is_some() {
        let f = soliton_field(&p, soliton_grid(&p)?)?;
        if let Some(path) = &args.csv {
            let mut t = Table::new(["x", "re", "im", "abs"]);
            for (j, z) in f.samples().iter().enumerate() {
                t.push(vec![f.grid().x(j), z.re, z.im, z.norm()])?;
            }
            t.write_csv(path)?;
        }
        if let Some(path) = &args.snapshot {
            snapshot::write(path, &f, p.sigma)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn packet(args: &PacketArgs) -> Result<ExitCode, Error> {
    let (f, _) = snapshot::read(&args.snapshot)?;
    let cfg = PacketConfig::default();
    let vs = velocity_grid(args.v_max, args.velocities)?;
    let phys = profile(&f, &vs, &cfg)?;
    let four = profile_fourier(&f, &vs, &cfg)?;
    println!("t = {}, physical/Fourier gap {:.3e}", f.time(), relative_profile_gap(&phys, &four)?);
    if let Some(path) = &args.output {
        let mut t = Table::new(["v", "physical_re", "physical_im", "fourier_re", "fourier_im"]);
        for (k, &v) in vs.iter().enumerate() {
            t.push(vec![v, phys.gamma[k].re, phys.gamma[k].im, four.gamma[k].re, four.gamma[k].im])?;
        }
        t.write_csv(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn column(t: &Table, name: &str, file: &Path) -> Result<Vec<f64>, Error> {
    t.column(name).ok_or_else(|| Error::InvalidData(format!("{} has no column `{name}`", file.display())))
}

fn fit(args: &FitArgs) -> Result<ExitCode, Error> {
    let t = Table::read_csv(&args.csv)?;
    let ts = column(&t, &args.time_column, &args.csv)?;
    let vs = column(&t, &args.column, &args.csv)?;
    let series: Vec<(f64, f64)> = ts.into_iter().zip(vs).filter(|p| p.1.is_finite()).collect();
    let fit = fit_decay(&series, (args.t_min, args.t_max))?;
    println!("exponent  {}", format_f64(fit.exponent));
    println!("amplitude {}", format_f64(fit.amplitude));
    println!("r_squared {}", format_f64(fit.r_squared));
    println!("points    {}", fit.points);
    Ok(ExitCode::SUCCESS)
}

fn norms(args: &NormsArgs) -> Result<ExitCode, Error> {
    let (f, sigma) = snapshot::read(&args.snapshot)?;
    println!("t = {}, sigma = {sigma}, n = {}, L = {}", f.time(), f.grid().n(), f.grid().length());
    println!("L^{}        {}", args.p, format_f64(lp_norm(&f, args.p)?));
    println!("L^inf      {}", format_f64(f.sup_norm()));
    println!("L^({},{})  {}", args.p, args.q, format_f64(lorentz_norm(&f, args.p, args.q)?));
    println!("H^{}        {}", args.s, format_f64(sobolev_norm(&f, args.s, SobolevKind::Inhomogeneous)?));
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: &ConfigArgs) -> Result<ExitCode, Error> {
    let cfg = args.load()?;
    let report = run_experiment(&cfg)?;
    for c in &report.criteria {
        println!("{}", c.line());
        for n in &c.notes {
            println!("    {n}");
        }
    }
    for f in &report.failures {
        eprintln!("σ = {} run stopped at t = {}: {}", f.sigma, f.abort.time, f.abort.reason);
    }
    println!("report written to {}", cfg.output_dir.display());
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Soliton(a) => soliton(a),
        Command::Packet(a) => packet(a),
        Command::Fit(a) => fit(a),
        Command::Norms(a) => norms(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
