use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ergocount_core::harness::{
    run_scenario_partial, ConvergenceReport, Experiment, Format, Scenario, SiegelKind, ThetaPolicy,
};
use ergocount_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "ergocount",
    version,
    about = "Counting experiments in thinning regions"
)]
struct Cli {
    /// Run the scenario described in this TOML file
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// |Aq - p| <= b |q|^{-n/m} for uniform random A
    Forms(Common),
    /// |Aq - p - w| <= b |q|^{-n/m} for uniform random A, w
    AffineForms(Common),
    /// Shrinking targets for a random translation of the torus
    Toral {
        #[command(flatten)]
        common: Common,
        /// Last time N (default 2^log2T)
        #[arg(long)]
        max_n: Option<u64>,
        /// Aim at a random target instead of 0
        #[arg(long)]
        inhomogeneous: bool,
    },
    /// Random unimodular lattices in R^2
    Lattice {
        #[command(flatten)]
        common: Common,
        /// Count primitive vectors only
        #[arg(long)]
        primitive: bool,
    },
    /// Random translates of random unimodular lattices in R^2
    AffineLattice(Common),
    /// Siegel transform averaged over random lattices
    Siegel {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = VariantArg::Plain)]
        variant: VariantArg,
    },
    /// Saddle connections of a square-tiled surface
    Origami {
        #[command(flatten)]
        common: Common,
        /// Surface file: N, then h, then v (1-indexed). Default: the 3-square L
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ThetaArg::Zero)]
        theta: ThetaArg,
        /// Count each holonomy vector once
        #[arg(long)]
        distinct_holonomies: bool,
    },
    /// Region volume against Monte Carlo integration
    VolumeCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ThetaArg::Zero)]
        theta: ThetaArg,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    samples: u64,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long = "log2T", default_value_t = 10)]
    log2_t: u32,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    n: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ThetaArg {
    Zero,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VariantArg {
    Plain,
    Primitive,
    Affine,
}

impl Common {
    fn scenario(&self, experiment: Experiment) -> Scenario {
        let mut s = Scenario::new(experiment);
        s.seed = self.seed;
        s.samples = self.samples;
        s.output = self.out.clone();
        s.format = match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        s.log2_t = self.log2_t;
        s.b = self.b;
        s.m = self.m;
        s.n = self.n;
        s
    }
}

fn theta(t: ThetaArg) -> ThetaPolicy {
    match t {
        ThetaArg::Zero => ThetaPolicy::Zero,
        ThetaArg::Random => ThetaPolicy::Random,
    }
}

fn build_scenario(command: Command) -> Scenario {
    match command {
        Command::Forms(c) => c.scenario(Experiment::Forms),
        Command::AffineForms(c) => c.scenario(Experiment::AffineForms),
        Command::Toral {
            common,
            max_n,
            inhomogeneous,
        } => {
            let mut s = common.scenario(Experiment::Toral);
            s.max_n = max_n;
            s.inhomogeneous = inhomogeneous;
            s
        }
        Command::Lattice { common, primitive } => {
            let mut s = common.scenario(Experiment::Lattice);
            s.primitive = primitive;
            s
        }
        Command::AffineLattice(c) => c.scenario(Experiment::AffineLattice),
        Command::Siegel { common, variant } => {
            let mut s = common.scenario(Experiment::Siegel);
            s.variant = match variant {
                VariantArg::Plain => SiegelKind::Plain,
                VariantArg::Primitive => SiegelKind::Primitive,
                VariantArg::Affine => SiegelKind::Affine,
            };
            s
        }
        Command::Origami {
            common,
            file,
            theta: t,
            distinct_holonomies,
        } => {
            let mut s = common.scenario(Experiment::Origami);
            s.origami_file = file;
            s.theta = theta(t);
            s.distinct_holonomies = distinct_holonomies;
            s
        }
        Command::VolumeCheck { common, theta: t } => {
            let mut s = common.scenario(Experiment::VolumeCheck);
            s.theta = theta(t);
            s
        }
    }
}

/// Run failures other than an exhausted budget are problems with the
/// requested scenario (bad parameters, unreadable or malformed inputs).
fn exit_code(e: &Error) -> u8 {
    if e.is_budget() {
        EXIT_BUDGET
    } else {
        EXIT_VALIDATION
    }
}

fn emit(report: &ConvergenceReport, scenario: &Scenario) -> std::io::Result<()> {
    let text = report.render(scenario.format);
    match &scenario.output {
        Some(path) => fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ERGOCOUNT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("ERGOCOUNT_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let scenario = match (cli.scenario, cli.command) {
        (Some(path), None) => {
            let parsed = fs::read_to_string(&path)
                .map_err(Error::from)
                .and_then(|t| Scenario::from_toml(&t));
            match parsed {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(exit_code(&e));
                }
            }
        }
        (None, Some(cmd)) => build_scenario(cmd),
        (Some(_), Some(_)) => {
            eprintln!("error: give either --scenario or a subcommand, not both");
            return ExitCode::from(EXIT_VALIDATION);
        }
        (None, None) => {
            eprintln!("error: nothing to run; pass a subcommand or --scenario (see --help)");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };

    match run_scenario_partial(&scenario) {
        Ok(report) => match emit(&report, &scenario) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: writing report: {e}");
                ExitCode::from(EXIT_FAILURE)
            }
        },
        Err(failure) => {
            if let Some(partial) = &failure.partial {
                if let Err(e) = emit(partial, &scenario) {
                    eprintln!("error: writing partial report: {e}");
                }
                eprintln!(
                    "partial report: {} samples completed before the failure",
                    partial.rows.iter().map(|r| r.sample + 1).max().unwrap_or(0)
                );
            }
            eprintln!("error: {}", failure.error);
            ExitCode::from(exit_code(&failure.error))
        }
    }
}
