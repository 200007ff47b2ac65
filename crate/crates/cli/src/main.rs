use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtransport_cli::commands::{self, run_members, run_validate};
use qtransport_cli::config::KEY_REFERENCE;
use qtransport_cli::error::exit;
use qtransport_cli::{scenarios, CliError, Member, ScenarioConfig, Sweep};

#[derive(Parser)]
#[command(name = "qtransport", version, about = "Dissipative dynamics of coupled quantum oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Hamiltonian, dissipation and diffusion constraints.
    Validate(RunArgs),
    /// Propagate the moments and write a trajectory CSV plus summary JSON.
    Simulate(RunArgs),
    /// Penetration probability P(t) and optional density frames.
    Tunnel(RunArgs),
    /// Built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// List the built-in scenarios.
    List,
    /// Print the TOML source of a built-in scenario.
    Show { name: String },
    /// Print the accepted config keys.
    Keys,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name (see `scenarios list`).
    #[arg(long)]
    scenario: Option<String>,
    /// Sweep a parameter key: <key>=<v1,v2,...>; replaces any sweep in the config.
    #[arg(long)]
    sweep: Option<String>,
    /// Drop the cross-mode entries of the diffusion matrix.
    #[arg(long = "zero-offdiag-D")]
    zero_offdiag_d: bool,
    /// Number of time samples.
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory [default: out]; `validate` writes JSON only when given.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulate even when validation fails.
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut config = match (&self.config, &self.scenario) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => scenarios::load(name)?,
            (None, None) => return Err(CliError::Usage("pass --config or --scenario".into())),
        };
        if let Some(s) = &self.sweep {
            config.set_sweep(Sweep::parse(s)?)?;
        }
        if let Some(g) = self.grid {
            if g < 2 {
                return Err(CliError::Usage("--grid needs at least 2 points".into()));
            }
            config.time.points = g;
        }
        config.zero_offdiag_d |= self.zero_offdiag_d;
        for w in &config.warnings {
            eprintln!("warning: {w}");
        }
        Ok(config)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn members(&self) -> Result<Vec<Member>, CliError> {
        Ok(self.load()?.members()?)
    }
}

fn validate(args: &RunArgs) -> Result<u8, CliError> {
    let members = args.members()?;
    let mut code = exit::SUCCESS;
    for m in &members {
        let report = run_validate(&m.config)?;
        println!("== {} ==", m.stem());
        println!("{report}");
        if let Some(dir) = &args.out {
            let path = commands::write_validation(m, &report, dir)?;
            println!("wrote {}", path.display());
        }
        if !report.passed() {
            code = exit::VALIDATION;
        }
    }
    Ok(code)
}

fn simulate(args: &RunArgs) -> Result<u8, CliError> {
    let members = args.members()?;
    if !args.force {
        commands::require_valid(&members)?;
    }
    let runs = run_members(&members, commands::simulate)?;
    for run in &runs {
        for path in commands::write_simulation(run, &args.out_dir())? {
            println!("wrote {}", path.display());
        }
    }
    Ok(exit::SUCCESS)
}

fn tunnel(args: &RunArgs) -> Result<u8, CliError> {
    let members = args.members()?;
    if !args.force {
        commands::require_valid(&members)?;
    }
    let runs = run_members(&members, commands::tunnel)?;
    for run in &runs {
        for path in commands::write_tunnel(run, &args.out_dir())? {
            println!("wrote {}", path.display());
        }
        println!(
            "{}: P(0) = {:e}, P(end) = {:e}",
            run.stem, run.summary.p_initial, run.summary.p_final
        );
    }
    Ok(exit::SUCCESS)
}

fn scenarios_cmd(action: &ScenarioAction) -> Result<u8, CliError> {
    match action {
        ScenarioAction::List => {
            for b in scenarios::BUILT_INS {
                let c = scenarios::load(b.name)?;
                let cmd = if c.tunnel.is_some() { "tunnel" } else { "simulate" };
                println!("{:<6} {:<8} {}", b.name, cmd, c.description);
            }
        }
        ScenarioAction::Show { name } => {
            let b = scenarios::find(name)
                .ok_or_else(|| CliError::Usage(format!("unknown scenario `{name}`")))?;
            print!("{}", b.source);
        }
        ScenarioAction::Keys => print!("{KEY_REFERENCE}"),
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::VALIDATION } else { exit::SUCCESS });
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Simulate(a) => simulate(a),
        Command::Tunnel(a) => tunnel(a),
        Command::Scenarios { action } => scenarios_cmd(action),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Validation { report, .. } = &e {
                for c in report.failures() {
                    eprintln!("  failed: {} (measured {:e}, bound {:e})", c.name, c.measured, c.bound);
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
