use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use acceptgen::gherkin::validate_feature;
use acceptgen::navmap::{to_dot, to_edge_list};
use acceptgen::pageobject::{lint_page_object, LintContext};
use acceptgen::pipeline::{self, Mode, Overrides, PipelineConfig, PipelineError, RunOptions};

#[derive(Parser)]
#[command(name = "acceptgen", version, about = "Generate acceptance-test artifacts for an issue")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Pipeline configuration (TOML).
    #[arg(long, short = 'c', default_value = "acceptgen.toml")]
    config: PathBuf,
    /// Maximum path length.
    #[arg(long)]
    depth: Option<usize>,
    /// Entry page id, e.g. VehicleTabPage.
    #[arg(long)]
    entry: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage for one issue.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        /// Issue record (JSON).
        #[arg(long)]
        issue: PathBuf,
        /// Change set (JSON) or newline-separated list of changed paths.
        #[arg(long)]
        changes: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Write only the report and a manifest of would-be artifacts.
        #[arg(long)]
        dry_run: bool,
        /// Copy page objects and tests into the test root.
        #[arg(long)]
        install: bool,
        /// Keep prompt and response texts out of the audit log.
        #[arg(long)]
        redact: bool,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the navigation paths from the entry page to a target page.
    Explain {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        target: String,
    },
    /// Navigation-map utilities.
    Navmap {
        #[command(subcommand)]
        command: NavmapCommand,
    },
    /// Check a Kotlin page object against the house conventions.
    LintPo { file: PathBuf },
    /// Check the keyword structure of a Gherkin feature file.
    ValidateFeature { file: PathBuf },
}

#[derive(Subcommand)]
enum NavmapCommand {
    /// Print the whole navigation map.
    Export {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Stub,
    Live,
    Record,
    Replay,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Stub => Mode::Stub,
            ModeArg::Live => Mode::Live,
            ModeArg::Record => Mode::Record,
            ModeArg::Replay => Mode::Replay,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Dot,
}

fn load_config(args: &ConfigArgs, extra: Overrides) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    cfg.apply(&Overrides { depth_limit: args.depth, entry_page: args.entry.clone(), ..extra });
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn fail(e: PipelineError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { common, issue, changes, mode, dry_run, install, redact, out } => {
            let overrides = Overrides { mode: mode.map(Mode::from), redact, output_dir: out, ..Overrides::default() };
            let cfg = match load_config(&common, overrides) {
                Ok(c) => c,
                Err(e) => return Ok(fail(e)),
            };
            let (issue_doc, changes_doc) = match (read(&issue), read(&changes)) {
                (Ok(i), Ok(c)) => (i, c),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e:#}");
                    return Ok(ExitCode::from(3));
                }
            };
            match pipeline::run_pipeline(&cfg, &issue_doc, &changes_doc, RunOptions { dry_run, install }) {
                Ok(run) => {
                    let c = run.report.counts;
                    println!(
                        "{}: {} page objects, {} of {} scenarios, {} of {} tests -> {}",
                        run.report.issue_key,
                        c.page_objects,
                        c.scenarios_retained,
                        c.scenarios_generated,
                        c.tests_retained,
                        c.tests_generated,
                        run.out_dir.display()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Ok(fail(e)),
            }
        }
        Command::Explain { common, target } => {
            match load_config(&common, Overrides::default()).and_then(|cfg| pipeline::explain(&cfg, &target)) {
                Ok(text) => {
                    print!("{text}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Ok(fail(e)),
            }
        }
        Command::Navmap { command: NavmapCommand::Export { common, format } } => {
            let model = load_config(&common, Overrides::default()).and_then(|cfg| {
                cfg.validate()?;
                pipeline::build_app_model(&cfg)
            });
            match model {
                Ok(m) => {
                    match format {
                        Format::Text => print!("{}", to_edge_list(&m.map)),
                        Format::Dot => print!("{}", to_dot(&m.map)),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Ok(fail(e)),
            }
        }
        Command::LintPo { file } => {
            let text = read(&file)?;
            let ctx = LintContext::from_config(&Default::default());
            let violations = lint_page_object(&text, &ctx);
            for v in &violations {
                println!("{}:{}: {}: {}", file.display(), v.line, v.rule, v.message);
            }
            Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ValidateFeature { file } => {
            let text = read(&file)?;
            match validate_feature(&text) {
                Ok(f) => {
                    println!("{}: valid, {} scenario(s)", file.display(), f.scenarios.len());
                    Ok(ExitCode::SUCCESS)
                }
                Err(violations) => {
                    for v in &violations {
                        match v.scenario {
                            Some(s) => println!("{}:{}: scenario {}: {}", file.display(), v.line, s, v.kind),
                            None => println!("{}:{}: {}", file.display(), v.line, v.kind),
                        }
                    }
                    Ok(ExitCode::FAILURE)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
