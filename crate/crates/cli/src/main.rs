use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mcf_core::config::DtSetting;
use mcf_core::flow::Scheme;
use mcf_core::{emit_outputs, execute, parse_config, Command, PhiSpec, RunConfig};

const EXIT_VERIFICATION_FAILED: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "mcfsolve", version, about = "Mean curvature flow with a prescribed contact angle")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; without it the report is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SchemeArg {
    Explicit,
    SemiImplicit,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Explicit => Scheme::Explicit,
            SchemeArg::SemiImplicit => Scheme::SemiImplicit,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Compute the translating soliton and its speed.
    Soliton {
        #[command(flatten)]
        common: Common,
        /// Contact angle, `const:<v>` or `fourier:<a0,a1,b1,...>`.
        #[arg(long)]
        phi: Option<PhiSpec>,
        /// Newton residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the flow and record its history.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        phi: Option<PhiSpec>,
        #[arg(long)]
        t_end: Option<f64>,
        /// `auto` or a fixed step.
        #[arg(long)]
        dt: Option<DtSetting>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long)]
        snapshot_every: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the existence hypotheses for the geometry and angle.
    Check {
        #[command(flatten)]
        common: Common,
        /// Constant contact angle replacing the configured one.
        #[arg(long)]
        phi0: Option<f64>,
    },
    /// Check convergence of the flow to the soliton and two-solution contraction.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Tolerance of the convergence verdicts.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid refinement study with observed orders of accuracy.
    Study {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
    },
}

fn apply<T>(slot: &mut T, value: Option<impl Into<T>>) {
    if let Some(v) = value {
        *slot = v.into();
    }
}

/// Loads the configuration and folds the command-line overrides into it.
fn prepare(sub: Sub) -> Result<(Command, RunConfig, Option<PathBuf>)> {
    let load = |c: &Common| parse_config(&c.config).with_context(|| format!("loading {}", c.config.display()));
    let (command, config, out) = match sub {
        Sub::Soliton { common, phi, tol } => {
            let mut c = load(&common)?;
            apply(&mut c.angle.phi, phi);
            apply(&mut c.solver.tol, tol);
            (Command::Soliton, c, common.out)
        }
        Sub::Flow {
            common,
            phi,
            t_end,
            dt,
            scheme,
            snapshot_every,
            seed,
        } => {
            let mut c = load(&common)?;
            apply(&mut c.angle.phi, phi);
            if t_end.is_some() {
                c.flow.t_end = t_end;
            }
            apply(&mut c.solver.dt, dt);
            apply(&mut c.solver.scheme, scheme);
            if snapshot_every.is_some() {
                c.flow.snapshot_every = snapshot_every;
            }
            apply(&mut c.seed, seed);
            (Command::Flow, c, common.out)
        }
        Sub::Check { common, phi0 } => {
            let mut c = load(&common)?;
            apply(&mut c.angle.phi, phi0.map(PhiSpec::Constant));
            (Command::Check, c, common.out)
        }
        Sub::Verify {
            common,
            tol,
            t_end,
            scheme,
            seed,
        } => {
            let mut c = load(&common)?;
            apply(&mut c.diagnostics.tol, tol);
            if t_end.is_some() {
                c.flow.t_end = t_end;
            }
            apply(&mut c.solver.scheme, scheme);
            apply(&mut c.seed, seed);
            (Command::Verify, c, common.out)
        }
        Sub::Study { common, levels } => {
            let mut c = load(&common)?;
            apply(&mut c.diagnostics.levels, levels);
            (Command::Study, c, common.out)
        }
    };
    config.validate().context("invalid command-line override")?;
    Ok((command, config, out))
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MCF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("MCF_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        bail!("MCF_THREADS must be a positive integer, got `{raw}`");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let (command, config, out) = prepare(cli.command)?;
    let output = execute(command, &config).with_context(|| format!("{command} run failed"))?;
    match &out {
        Some(dir) => {
            let written = emit_outputs(&output, dir)?;
            eprintln!("{command}: wrote {} files to {}", written.len(), dir.display());
        }
        None => print!("{}", String::from_utf8_lossy(&output.report)),
    }
    if !output.passed {
        eprintln!("{command}: verification failed");
    }
    Ok(output.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFICATION_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
