use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use annulus_vm::config::{parse_config, RunConfig};
use annulus_vm::diagnostics::sci;
use annulus_vm::domain::{AnnulusSpec, FieldState};
use annulus_vm::io::{check_snapshot, read_final_fields, run_to_dir, FINAL_FIELDS_FILE};
use annulus_vm::potential::{
    confinement_radius_bound, moving_bar, psi_base_eval, ExternalPotential, NormBundle, PotentialSpec,
    TheoryConstants,
};
use annulus_vm::simulation::setup_from_config;
use annulus_vm::vlasov::{
    trace_particle, CharState, ExternalSampler, FieldSampler, SnapshotSampler, TraceOptions, VacuumSampler,
};
use annulus_vm::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "annulus-vm", version, about = "Axisymmetric Vlasov-Maxwell runs in an annulus")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for perturbed initial data, overriding `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Allow `time.cfl != 1` (testing only).
    #[arg(long, global = true)]
    force_unit_cfl_off: bool,
    /// Diagnostics cadence in steps, overriding `output.cadence`.
    #[arg(long, global = true)]
    cadence: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FieldMode {
    Vacuum,
    ExternalOnly,
    Snapshot,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation and write its CSV artifacts.
    Run,
    /// Trace one characteristic.
    Trace {
        #[arg(long)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        pr: f64,
        #[arg(long, allow_hyphen_values = true)]
        ptheta: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value_t = FieldMode::Vacuum)]
        mode: FieldMode,
        /// Snapshot directory for `--mode snapshot` (defaults to the output dir).
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        sample_every: usize,
        /// Annulus radii when no config is given.
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 3.0)]
        r2: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tabulate the base and truncated potentials at one time.
    Potential {
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 401)]
        samples: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Timeline of the a-priori constants.
    Bounds {
        /// Explicit evaluation times; overrides the timeline.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 11)]
        samples: usize,
        /// Every norm one, `lambda = 0`, `M0 = 1`.
        #[arg(long)]
        unit_norms: bool,
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 3.0)]
        r2: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute the diagnostics of a stored final snapshot.
    Check {
        /// Snapshot directory (defaults to the output dir).
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<Option<RunConfig>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(c) = cli.cadence {
        cfg.output.cadence = c;
    }
    Ok(Some(cfg))
}

fn need_config(cfg: Option<RunConfig>, what: &str) -> Result<RunConfig> {
    cfg.ok_or_else(|| Error::Snapshot(format!("`{what}` needs --config")))
}

fn sink(output: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn csv_writer(output: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(output)?))
}

fn constants_for(cfg: &RunConfig) -> Result<(PotentialSpec, TheoryConstants)> {
    let setup = setup_from_config(cfg, true)?;
    let mut tc = TheoryConstants::new(cfg.annulus_spec(), NormBundle::from_initial(&setup.init));
    if setup.options.freeze_constants {
        tc = tc.frozen_at(setup.options.t_end);
    }
    let spec = setup
        .potential
        .ok_or_else(|| Error::InvalidPotential("config has potential.kind = \"none\"".into()))?;
    Ok((spec, tc))
}

fn cmd_run(cfg: RunConfig, force_off: bool) -> Result<ExitCode> {
    let dir = PathBuf::from(&cfg.output.dir);
    let rep = run_to_dir(&cfg, &dir, force_off)?;
    let s = &rep.stats;
    println!("steps            {}", s.steps);
    println!("final time       {}", sci(rep.final_time));
    println!("leaks            {}", s.leaks);
    println!("momentum clips   {}", s.momentum_clips);
    println!("max step drift   {}", sci(s.max_step_drift));
    println!("raw drift (sum)  {}", sci(s.raw_drift_abs_sum));
    println!("min margin       {}", sci(s.min_margin));
    println!("min distance     {}", sci(s.min_distance));
    println!("max energy gap   {}", sci(s.max_energy_gap));
    if let Some(o) = &rep.oracle {
        println!("oracle max error {} ({} of sup f0)", sci(o.max_abs_error), sci(o.relative()));
    }
    for v in &s.violated {
        eprintln!("violated: {v}");
    }
    println!("artifacts in {}", dir.display());
    Ok(ExitCode::from(rep.exit_code() as u8))
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace(
    cfg: Option<RunConfig>,
    out_dir: Option<&Path>,
    ic: CharState,
    (t0, t1): (f64, f64),
    dt: Option<f64>,
    mode: FieldMode,
    snapshot: Option<PathBuf>,
    sample_every: usize,
    (r1, r2): (f64, f64),
    output: Option<PathBuf>,
) -> Result<ExitCode> {
    let sampler: Box<dyn FieldSampler> = match mode {
        FieldMode::Vacuum => {
            let (r1, r2) = match &cfg {
                Some(c) => (c.annulus.r1, c.annulus.r2),
                None => (r1, r2),
            };
            AnnulusSpec::new(r1, r2, 0.25 * (r2 - r1), 0.125 * (r2 - r1))?;
            Box::new(VacuumSampler { r1, r2 })
        }
        FieldMode::ExternalOnly => {
            let (spec, tc) = constants_for(&need_config(cfg, "trace --mode external-only")?)?;
            Box::new(ExternalSampler {
                potential: ExternalPotential::new(spec, tc),
            })
        }
        FieldMode::Snapshot => {
            let cfg = need_config(cfg, "trace --mode snapshot")?;
            let dir = snapshot
                .or_else(|| out_dir.map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let setup = setup_from_config(&cfg, true)?;
            let grid = setup.grid().clone();
            let (fields, _): (FieldState, _) =
                read_final_fields(&dir.join(FINAL_FIELDS_FILE), grid.radial.len(), setup.init.lambda)?;
            let external = match (&setup.potential, setup.options.fields) {
                (Some(_), true) => {
                    let (spec, tc) = constants_for(&cfg)?;
                    Some(ExternalPotential::new(spec, tc))
                }
                _ => None,
            };
            Box::new(SnapshotSampler {
                fields,
                r1: grid.annulus.r1,
                dr: grid.dr(),
                r2: grid.annulus.r2,
                external,
            })
        }
    };
    let opts = TraceOptions {
        dt,
        sample_every,
        ..TraceOptions::default()
    };
    let traj = trace_particle(ic, sampler.as_ref(), t0, t1, opts)?;
    let mut w = csv_writer(&output)?;
    w.write_record(["t", "r", "pr", "ptheta", "p_abs", "r_ptheta"])?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        w.write_record([sci(*t), sci(s.r), sci(s.pr), sci(s.pt), sci(s.p_abs()), sci(s.r * s.pt)])?;
    }
    w.flush()?;
    if let Some(c) = traj.contact {
        eprintln!("trajectory left the annulus after t = {}", sci(c.t));
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_potential(cfg: RunConfig, t: f64, samples: usize, output: Option<PathBuf>) -> Result<ExitCode> {
    let (spec, tc) = constants_for(&cfg)?;
    let ext = ExternalPotential::new(spec.clone(), tc.clone());
    let frozen = ext.at(t);
    let l_bar = moving_bar(&spec, &tc, t);
    let c_s = confinement_radius_bound(&spec, &tc, t).map(|b| b.c_s).unwrap_or(f64::NAN);
    let a = spec.annulus;
    let n = samples.max(3);
    let mut w = csv_writer(&output)?;
    w.write_record(["t", "r", "psi_base", "psi_ext", "B_ext", "L_bar", "C_s"])?;
    for i in 1..n - 1 {
        let r = a.r1 + (a.r2 - a.r1) * i as f64 / (n - 1) as f64;
        w.write_record([
            sci(t),
            sci(r),
            sci(psi_base_eval(&spec, r)?),
            sci(frozen.psi_ext(r)?),
            sci(frozen.b_ext(r)?),
            sci(l_bar),
            sci(c_s),
        ])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    cfg: Option<RunConfig>,
    times: Vec<f64>,
    t_end: Option<f64>,
    samples: usize,
    unit_norms: bool,
    (r1, r2): (f64, f64),
    output: Option<PathBuf>,
) -> Result<ExitCode> {
    let (tc, t_default) = match (&cfg, unit_norms) {
        (Some(c), false) => {
            let setup = setup_from_config(c, true)?;
            (
                TheoryConstants::new(c.annulus_spec(), NormBundle::from_initial(&setup.init)),
                c.time.t_end,
            )
        }
        (Some(c), true) => (TheoryConstants::new(c.annulus_spec(), NormBundle::unit()), c.time.t_end),
        (None, _) => {
            let w = r2 - r1;
            let a = AnnulusSpec::new(r1, r2, 0.25 * w, 0.125 * w)?;
            (TheoryConstants::new(a, NormBundle::unit()), 1.0)
        }
    };
    let times = if times.is_empty() {
        let te = t_end.unwrap_or(t_default);
        let n = samples.max(2);
        (0..n).map(|i| te * i as f64 / (n - 1) as f64).collect()
    } else {
        times
    };
    let mut w = csv_writer(&output)?;
    w.write_record(["t", "C", "C_tilde", "K"])?;
    for t in times {
        let s = tc.snapshot(t);
        w.write_record([sci(t), sci(s.c), sci(s.c_tilde), sci(s.k)])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(cfg: RunConfig, dir: PathBuf) -> Result<ExitCode> {
    let chk = check_snapshot(&cfg, &dir)?;
    println!("t               {}", sci(chk.time));
    println!("total charge    {}", sci(chk.total_charge));
    println!("total energy    {}", sci(chk.total_energy));
    println!("distance        {}", sci(chk.measured.distance));
    for (name, m) in chk.margins.all() {
        println!("margin {name:<14} {}", sci(m));
    }
    Ok(if chk.healthy() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli)?;
    let out = cli.out.clone();
    match cli.command {
        Command::Run => cmd_run(need_config(cfg, "run")?, cli.force_unit_cfl_off),
        Command::Trace {
            r,
            pr,
            ptheta,
            t0,
            t1,
            dt,
            mode,
            snapshot,
            sample_every,
            r1,
            r2,
            output,
        } => cmd_trace(
            cfg,
            out.as_deref(),
            CharState::new(r, pr, ptheta),
            (t0, t1),
            dt,
            mode,
            snapshot,
            sample_every,
            (r1, r2),
            output,
        ),
        Command::Potential { t, samples, output } => cmd_potential(need_config(cfg, "potential")?, t, samples, output),
        Command::Bounds {
            t,
            t_end,
            samples,
            unit_norms,
            r1,
            r2,
            output,
        } => cmd_bounds(cfg, t, t_end, samples, unit_norms, (r1, r2), output),
        Command::Check { snapshot } => {
            let cfg = need_config(cfg, "check")?;
            let dir = snapshot.or(out).unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            cmd_check(cfg, dir)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
