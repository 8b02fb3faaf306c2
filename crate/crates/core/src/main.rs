use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pendubot_agat::acceptance;
use pendubot_agat::scenario::{self, Overrides, ScenarioSource};

#[derive(Parser)]
#[command(version, about = "Pendubot tracking simulations and acceptance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trajectory as CSV.
    Run(RunArgs),
    /// Run an acceptance suite and print one line per criterion.
    Check {
        #[arg(long, default_value = "full")]
        suite: String,
    },
    /// List the built-in scenarios.
    List,
    /// Print a built-in scenario in config-file form.
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario name (s1 to s5).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// Scenario config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Integrator step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time in seconds.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Record every n-th step.
    #[arg(long)]
    stride: Option<usize>,
    /// Proportional gain.
    #[arg(long)]
    kp: Option<f64>,
    /// Diagonal of Fd as `a,b`.
    #[arg(long, value_parser = pair, allow_hyphen_values = true)]
    fd: Option<(f64, f64)>,
    /// Diagonal of P as `c1,c2`.
    #[arg(long, value_parser = pair)]
    p: Option<(f64, f64)>,
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn run(args: RunArgs) -> u8 {
    let source = match (&args.scenario, &args.config) {
        (Some(name), _) => ScenarioSource::Builtin(name),
        (None, Some(path)) => ScenarioSource::Config(path),
        (None, None) => unreachable!("clap requires one of --scenario or --config"),
    };
    let overrides = Overrides {
        dt: args.dt,
        t_end: args.t_end,
        stride: args.stride,
        kp: args.kp,
        fd: args.fd,
        p: args.p,
    };
    match scenario::run(&source, &overrides, &args.out) {
        Ok(s) => {
            println!(
                "{}: {} rows, final E_11 {:.6}, final psi {:.3e}, max|omega1| {:.3}",
                s.scenario, s.rows, s.final_e11, s.final_psi, s.max_abs_omega1
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

fn check(suite: &str) -> u8 {
    let reports = match acceptance::run_suite(suite) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code() as u8;
        }
    };
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", reports.len() - failed);
    u8::from(failed > 0)
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Check { suite } => check(&suite),
        Command::List => {
            for s in scenario::builtin_scenarios() {
                println!("{}", s.name);
            }
            0
        }
        Command::Show { name } => match scenario::find_scenario(&name) {
            Ok(s) => {
                print!("{}", scenario::to_config(&s));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code() as u8
            }
        },
    };
    ExitCode::from(code)
}
