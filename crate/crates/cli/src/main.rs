use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use halfspace::green::{
    green_exact_from, green_linear_solve, green_monte_carlo, green_series, lattice_point, log_asymptotics_experiment,
    renewal_audit, BoxDomain, ExactConfig, Kernel, KernelKind, MonteCarloConfig,
};
use halfspace::martin::{default_tilt, kernel_traces, nonradial_experiment, ratio_limit_probe, Rounding, TracePolicy};
use halfspace::report::{self, Provenance, Table};
use halfspace::{reference, WalkModel};

/// Martin boundary, quasi-potentials and Green's functions of reflected
/// random walks on a half-space.
#[derive(Debug, Parser)]
#[command(name = "halfspace", version, arg_required_else_help = true)]
struct Cli {
    /// Model file (JSON or TOML); the built-in reference walk when absent.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 20_240_601)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads, also the Monte Carlo stream count.
    #[arg(long, global = true, env = "HALFSPACE_THREADS", default_value_t = 4)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the hypotheses on the model.
    Validate {
        /// Model file, overriding --model.
        path: Option<PathBuf>,
    },
    /// The interval Theta and a sweep of the lower boundary over it.
    Geometry {
        #[arg(long, default_value_t = 21)]
        samples: usize,
    },
    /// The boundary point a-hat(q) with I(0, q) and gamma_q.
    Ahat(DirectionArg),
    /// The breakpoint gamma_q and the coefficients of q in the normal cone.
    Gamma(DirectionArg),
    /// I(0, q), I+(0, q) and the decomposition through gamma_q.
    Quasipotential(DirectionArg),
    /// a-hat over sampled directions, with fans of directions sharing one point.
    Atlas {
        #[arg(long, default_value_t = 181)]
        samples: usize,
    },
    /// Harmonicity residual of h_{a-hat(q)} on [-w, w]^{d-1} x [0, w].
    HarmonicCheck {
        #[command(flatten)]
        dir: DirectionArg,
        #[arg(long, default_value_t = 8)]
        window: i64,
    },
    /// One Green's function value.
    Green(GreenArgs),
    /// Both sides of the renewal equation and its principal part.
    Renewal {
        #[command(flatten)]
        dir: DirectionArg,
        #[arg(long, default_value = "20")]
        r: Floats,
        #[arg(long, default_value_t = 0.15)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
        z: Ints,
    },
    /// Growth rate of log G along a direction.
    Asymptotics {
        #[command(flatten)]
        dir: DirectionArg,
        #[arg(long, default_value = "10,20,30,45,60")]
        radii: Floats,
        #[arg(long, value_enum, default_value_t = KindArg::Reflected)]
        kernel: KindArg,
        #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
        z0: Ints,
    },
    /// Martin kernel G(z, z_n) / G(z0, z_n) along z_n ~ r q.
    Martin {
        #[command(flatten)]
        dir: DirectionArg,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Martin kernels along two directions of one fan.
    Nonradial {
        #[arg(long, allow_hyphen_values = true)]
        q1: Floats,
        #[arg(long, allow_hyphen_values = true)]
        q2: Floats,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Ratios of Green's functions of the tilted walk.
    RatioLimit {
        /// Tilt on the lower boundary of D; a-bar of a-hat(q) when absent.
        #[arg(long, allow_hyphen_values = true)]
        tilt: Option<Floats>,
        #[command(flatten)]
        dir: DirectionArg,
        #[command(flatten)]
        trace: TraceArgs,
    },
}

#[derive(Debug, Args)]
struct DirectionArg {
    /// Direction, comma separated.
    #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
    q: Floats,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Probe site; repeat for several.
    #[arg(long = "z", allow_hyphen_values = true, default_value = "1,2")]
    probes: Vec<Ints>,
    #[arg(long, allow_hyphen_values = true, default_value = "0,1")]
    z0: Ints,
    #[arg(long, default_value = "10,20,30,45,60")]
    radii: Floats,
    /// Round r q down instead of to the nearest site.
    #[arg(long)]
    floor: bool,
    /// Fall back to Monte Carlo with this many paths when a box solve
    /// cannot certify its accuracy.
    #[arg(long)]
    mc_paths: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Reflected,
    Killed,
    Free,
}

impl From<KindArg> for KernelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Reflected => KernelKind::Reflected,
            KindArg::Killed => KernelKind::Killed,
            KindArg::Free => KernelKind::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Series,
    Solve,
    Mc,
}

#[derive(Debug, Args)]
struct GreenArgs {
    #[arg(long, allow_hyphen_values = true)]
    from: Ints,
    #[arg(long, allow_hyphen_values = true)]
    to: Ints,
    #[arg(long, value_enum, default_value_t = MethodArg::Solve)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = KindArg::Reflected)]
    kernel: KindArg,
    /// Lower corner of a box on leaving which the walk is killed.
    #[arg(long, allow_hyphen_values = true, requires = "box_hi")]
    box_lo: Option<Ints>,
    #[arg(long, allow_hyphen_values = true, requires = "box_lo")]
    box_hi: Option<Ints>,
    /// Horizon of the series method.
    #[arg(long, default_value_t = 2000)]
    horizon: usize,
    #[arg(long, default_value_t = 200_000)]
    paths: u64,
    /// Step cap of a Monte Carlo path; capped paths are flagged.
    #[arg(long, default_value_t = 10_000)]
    path_cap: u64,
    /// Relative truncation target of the exact solve.
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
}

/// Comma separated reals.
#[derive(Debug, Clone)]
struct Floats(Vec<f64>);

/// Comma separated integers.
#[derive(Debug, Clone)]
struct Ints(Vec<i64>);

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|x| x.trim().parse::<T>().map_err(|e| format!("`{x}`: {e}"))).collect()
}

impl FromStr for Floats {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(Floats)
    }
}

impl FromStr for Ints {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(Ints)
    }
}

type Outcome = Result<(Table, bool), halfspace::Error>;

fn load_model(path: Option<&PathBuf>) -> Result<WalkModel, halfspace::Error> {
    match path {
        Some(p) => WalkModel::load(p),
        None => Ok(reference::walk()),
    }
}

fn green(model: &WalkModel, a: &GreenArgs, seed: u64, workers: usize) -> Outcome {
    let kernel = Kernel::new(model, a.kernel.into())?;
    let domain = match (&a.box_lo, &a.box_hi) {
        (Some(lo), Some(hi)) => Some(BoxDomain::new(lo.0.clone(), hi.0.clone())?.clipped(&kernel)?),
        _ => None,
    };
    let (from, to) = (&a.from.0, &a.to.0);
    let targets = vec![to.clone()];
    let est = match a.method {
        MethodArg::Series => green_series(model, &kernel, from, &targets, a.horizon, domain.as_ref())?.remove(0),
        MethodArg::Solve => match &domain {
            Some(b) => green_linear_solve(&kernel, from, b)?.estimate(to, None),
            None => {
                let cfg = ExactConfig { rel_tol: a.rel_tol, ..Default::default() };
                green_exact_from(model, &kernel, from, &targets, &cfg)?.0.remove(0)
            }
        },
        MethodArg::Mc => {
            let cfg = MonteCarloConfig { n_paths: a.paths, path_cap: a.path_cap, seed, workers };
            green_monte_carlo(&kernel, from, &targets, domain.as_ref(), &cfg)?.estimates.remove(0)
        }
    };
    Ok((report::estimates_table(&[est]), true))
}

fn renewal(model: &WalkModel, q: &[f64], radii: &[f64], delta: f64, z: &[i64]) -> Outcome {
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let unit: Vec<f64> = q.iter().map(|x| x / qn).collect();
    let audits = radii
        .iter()
        .map(|&r| renewal_audit(model, z, &lattice_point(&unit, r, 1), &unit, delta, &ExactConfig::default()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((report::renewal_table(&audits), true))
}

fn policy(a: &TraceArgs, seed: u64, workers: usize) -> TracePolicy {
    TracePolicy {
        rounding: if a.floor { Rounding::Floor } else { Rounding::Nearest },
        monte_carlo: a.mc_paths.map(|n| MonteCarloConfig { n_paths: n, path_cap: 10_000, seed, workers }),
        ..Default::default()
    }
}

fn probes(a: &TraceArgs) -> Vec<Vec<i64>> {
    a.probes.iter().map(|p| p.0.clone()).collect()
}

fn run(cli: &Cli) -> Outcome {
    if let Command::Validate { path } = &cli.command {
        let model = load_model(path.as_ref().or(cli.model.as_ref()))?;
        return Ok(report::hypothesis_table(&model));
    }
    let m = load_model(cli.model.as_ref())?;
    m.ensure_accepted()?;
    let (seed, w) = (cli.seed, cli.threads);
    let done = |t: Table| Ok((t, true));
    match &cli.command {
        Command::Validate { .. } => unreachable!(),
        Command::Geometry { samples } => done(report::theta_sweep_table(&m, *samples)?),
        Command::Ahat(d) => done(report::a_hat_table(&m, &d.q.0)?),
        Command::Gamma(d) => done(report::gamma_table(&m, &d.q.0)?),
        Command::Quasipotential(d) => done(report::quasi_potential_table(&m, &d.q.0)?),
        Command::Atlas { samples } => done(report::atlas_table(&m, *samples)?),
        Command::HarmonicCheck { dir, window } => report::harmonic_table(&m, &dir.q.0, *window),
        Command::Green(a) => green(&m, a, seed, w),
        Command::Renewal { dir, r, delta, z } => renewal(&m, &dir.q.0, &r.0, *delta, &z.0),
        Command::Asymptotics { dir, radii, kernel, z0 } => {
            let tab = log_asymptotics_experiment(&m, (*kernel).into(), &dir.q.0, &radii.0, &z0.0, &ExactConfig::default())?;
            done(report::asymptotics_table(&tab))
        }
        Command::Martin { dir, trace } => {
            let traces = kernel_traces(&m, &probes(trace), &trace.z0.0, &dir.q.0, &trace.radii.0, &policy(trace, seed, w))?;
            done(report::traces_table(&[("q", &traces)]))
        }
        Command::Nonradial { q1, q2, trace } => {
            let p = policy(trace, seed, w);
            let rep = nonradial_experiment(&m, &q1.0, &q2.0, &probes(trace), &trace.z0.0, &trace.radii.0, &p)?;
            Ok((report::traces_table(&[("q1", &rep.traces1), ("q2", &rep.traces2)]), rep.all_agree()))
        }
        Command::RatioLimit { tilt, dir, trace } => {
            let tilt = match tilt {
                Some(v) => v.0.clone(),
                None => default_tilt(&m, &dir.q.0)?,
            };
            let pairs: Vec<(Vec<i64>, Vec<i64>)> = probes(trace).into_iter().map(|z| (z, trace.z0.0.clone())).collect();
            let rep = ratio_limit_probe(&m, &tilt, &dir.q.0, &pairs, &trace.radii.0, &policy(trace, seed, w))?;
            done(report::ratio_limit_table(&rep))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(2);
    }
    // Only fails when a pool already exists, which cannot happen here.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    let model = match load_model(match &cli.command {
        Command::Validate { path: Some(p) } => Some(p),
        _ => cli.model.as_ref(),
    }) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let (table, pass) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let provenance = Provenance::new(&model, cli.seed);
    let rendered = match cli.format {
        Format::Csv => table.to_csv(&provenance),
        Format::Text => Ok(table.to_text(&provenance)),
    };
    let written = rendered.map_err(io::Error::other).and_then(|text| match &cli.output {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush())
        }
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_parse() {
        assert_eq!("-2, 0".parse::<Ints>().unwrap().0, vec![-2, 0]);
        assert!("1,x".parse::<Floats>().is_err());
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
