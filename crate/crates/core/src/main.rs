use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use visplan::allocator::{TokenSet, DEFAULT_MAX_FRAMES};
use visplan::context_ops::{SelectionSpec, SpatialMode, TemporalMode};
use visplan::harness::{
    cmd_apply, cmd_fit, cmd_plan, cmd_table, curve_csv, frame_sweep, generate_synthetic,
    joint_grid, load_loss_log, load_scores, params_from_report, token_sweep, HarnessError,
    LogFormat, ReportDocument,
};
use visplan::scaling_fit::{Family, FitOptions, JointParams};

#[derive(Parser)]
#[command(name = "visplan", version, about = "Fit loss laws and plan frame/token budgets for video models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ParamSource {
    /// Joint-law parameters `c_m,alpha,c_t,beta,floor`.
    #[arg(long, value_name = "C_M,ALPHA,C_T,BETA,FLOOR")]
    params: Option<String>,
    /// A structured fit report of the joint family.
    #[arg(long, value_name = "PATH")]
    from_report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Tokens,
    Frames,
    Joint,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a loss law to a loss log.
    Fit {
        log: PathBuf,
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        allow_duplicates: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Also write `(x, predicted, observed)` rows for plotting.
        #[arg(long)]
        curve_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form and integer allocations for one or more windows.
    Plan {
        #[command(flatten)]
        source: ParamSource,
        #[arg(long = "budget", required = true)]
        budgets: Vec<u64>,
        /// Comma-separated perfect squares; defaults to pooled sizes of a 27×27 grid.
        #[arg(long)]
        token_set: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_FRAMES)]
        max_frames: u32,
        /// Ranked configurations to list per window.
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Averages and best markers for a benchmark score table.
    Table {
        scores: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Apply frame and token selection to a tensor fixture.
    Apply {
        tensor: PathBuf,
        #[arg(long, value_enum)]
        spatial: SpatialArg,
        /// Samples per side (`sample`) or pooling stride (`pool`).
        #[arg(long)]
        spatial_param: usize,
        #[arg(long, value_enum)]
        temporal: TemporalArg,
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value_t = 128)]
        max_frames: usize,
        /// Write the selected context here.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Generate a synthetic loss log from a joint law.
    Synth {
        #[arg(long, value_name = "C_M,ALPHA,C_T,BETA,FLOOR")]
        params: String,
        #[arg(long, value_enum, default_value = "joint")]
        grid: Grid,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `text` writes CSV, `structured` writes JSON.
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpatialArg {
    Sample,
    Pool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TemporalArg {
    Sample,
    Pool,
    Pool3d,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_params(s: &str) -> Result<JointParams, HarnessError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Usage(format!("--params `{s}`: {e}")))?;
    let [c_m, alpha, c_t, beta, floor] = v[..] else {
        return Err(HarnessError::Usage(format!("--params needs 5 values, got {}", v.len())));
    };
    Ok(JointParams::new(c_m, alpha, c_t, beta, floor)?)
}

fn parse_token_set(s: &str) -> Result<TokenSet, HarnessError> {
    let v: Vec<u32> = s
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Usage(format!("--token-set `{s}`: {e}")))?;
    Ok(TokenSet::new(v)?)
}

fn write(output: &Output, text: &str) -> Result<(), HarnessError> {
    match &output.out {
        Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io { path: p.clone(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(output: &Output, doc: &ReportDocument) -> Result<(), HarnessError> {
    let text = match output.format {
        Format::Text => doc.to_text(),
        Format::Structured => doc.to_json(),
    };
    write(output, &text)
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Fit { log, family, allow_duplicates, seed, starts, curve_out, output } => {
            let loss_log = load_loss_log(&log, LogFormat::from_path(&log), allow_duplicates)?;
            let options = FitOptions { seed, starts, ..FitOptions::default() };
            let doc = cmd_fit(&loss_log, &log.display().to_string(), family, &options)?;
            if let Some(path) = curve_out {
                let result = &doc.fit.as_ref().expect("fit section").result;
                std::fs::write(&path, curve_csv(&loss_log, result))
                    .map_err(|e| HarnessError::Io { path, source: e })?;
            }
            emit(&output, &doc)
        }
        Command::Plan { source, budgets, token_set, max_frames, top, output } => {
            let params = match (source.params, source.from_report) {
                (Some(p), _) => parse_params(&p)?,
                (None, Some(path)) => params_from_report(&read(&path)?)?,
                (None, None) => unreachable!("clap requires one parameter source"),
            };
            let tokens = match token_set {
                Some(s) => parse_token_set(&s)?,
                None => TokenSet::default(),
            };
            emit(&output, &cmd_plan(&params, &budgets, &tokens, max_frames, Some(top))?)
        }
        Command::Table { scores, output } => emit(&output, &cmd_table(&load_scores(&scores)?)?),
        Command::Apply { tensor, spatial, spatial_param, temporal, frames, max_frames, dump, output } => {
            let spec = SelectionSpec {
                spatial_mode: match spatial {
                    SpatialArg::Sample => SpatialMode::Sample,
                    SpatialArg::Pool => SpatialMode::Pool,
                },
                spatial_param,
                temporal_mode: match temporal {
                    TemporalArg::Sample => TemporalMode::Sample,
                    TemporalArg::Pool => TemporalMode::Pool,
                    TemporalArg::Pool3d => TemporalMode::Pool3d,
                },
                target_frames: frames,
                max_frames,
            };
            emit(&output, &cmd_apply(&tensor, &spec, dump.as_deref())?)
        }
        Command::Synth { params, grid, sigma, seed, output } => {
            let params = parse_params(&params)?;
            let configs = match grid {
                Grid::Tokens => token_sweep(),
                Grid::Frames => frame_sweep(),
                Grid::Joint => joint_grid(),
            };
            let log = generate_synthetic(&params, &configs, sigma, seed)?;
            let text = match output.format {
                Format::Text => log.to_csv(),
                Format::Structured => log.to_json(),
            };
            write(&output, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
