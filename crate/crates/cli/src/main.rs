//! `delta-lca`: extract inventories, estimate footprints and compare designs.
//!
//! Exit status: 0 on success or a proven comparison, 2 when a comparison is
//! inconclusive, 1 on errors, 64 on bad usage.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use delta_lca_core::config::Config;
use delta_lca_core::eda::Format;
use delta_lca_core::footprint::total_footprint;
use delta_lca_core::pipeline::Direction;
use delta_lca_core::report::ComparisonReport;
use delta_lca_core::rules::UserRule;
use delta_lca_core::solver::Verdict;
use delta_lca_core::{DesignInventory, Engine};
use delta_lca_service::{AppState, SessionStore};

const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Config file picked up from the working directory when `--config` is absent.
const LOCAL_CONFIG: &str = "delta-lca.toml";

#[derive(Parser, Debug)]
#[command(name = "delta-lca", version, about = "Comparative embodied-carbon assessment of PCB designs")]
struct Cli {
    /// Configuration file (factor tables, catalog provider, solver budget).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Never query a live catalog; use the fixture directory instead.
    #[arg(long, global = true)]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and enrich a design, then print its inventory as JSON.
    Inventory {
        file: PathBuf,
        #[arg(long, default_value = "auto")]
        format: Format,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Partial embodied-carbon total of a design.
    Footprint {
        file: PathBuf,
        #[arg(long, default_value = "auto")]
        format: Format,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Try to prove that one design has at least the footprint of the other.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "auto")]
        format: Format,
        #[arg(long, default_value = "auto")]
        direction: Direction,
        /// JSON list of user rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Write the JSON comparison report here (`-` for stdout).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the raw match result JSON here (`-` for stdout).
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Run the local HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory for session snapshots; sessions are kept in memory only
        /// when absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Address to bind; loopback unless set.
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None if Path::new(LOCAL_CONFIG).is_file() => {
            Config::load(Path::new(LOCAL_CONFIG)).with_context(|| format!("loading {LOCAL_CONFIG}"))
        }
        None => Ok(Config::builtin()),
    }
}

fn engine(cli: &Cli) -> Result<Engine> {
    let config = load_config(cli.config.as_deref())?;
    let engine = if cli.offline {
        Engine::offline(config, None)?
    } else {
        Engine::new(config)?
    };
    Ok(engine)
}

fn build(engine: &Engine, path: &Path, format: Format) -> Result<DesignInventory> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let built = engine
        .build_inventory(&bytes, format, &name)
        .with_context(|| format!("building inventory for {}", path.display()))?;
    for w in &built.warnings {
        log::warn!("{name}: {w}");
    }
    Ok(built.inventory)
}

fn emit(target: &Path, text: &str) -> Result<()> {
    if target == Path::new("-") {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.write_all(b"\n")?;
        Ok(())
    } else {
        fs::write(target, text).with_context(|| format!("writing {}", target.display()))
    }
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Inventory { file, format, output } => {
            let inv = build(&engine(&cli)?, file, *format)?;
            emit(output.as_deref().unwrap_or(Path::new("-")), &inv.to_json_pretty())?;
            Ok(0)
        }
        Command::Footprint { file, format, json } => {
            let inv = build(&engine(&cli)?, file, *format)?;
            let total = total_footprint(&inv);
            if *json {
                emit(Path::new("-"), &serde_json::to_string_pretty(&total)?)?;
            } else {
                println!("{}: {:.3} g CO2-eq ({:.0}% of parts covered)", inv.design_id, total.total, total.coverage() * 100.0);
                for p in &inv.parts {
                    let fp = p.known_footprint().map_or("unknown".to_string(), |g| format!("{g:.3}"));
                    println!("  {:<24} {:>4} x {:<22} {fp}", p.part_id.as_str(), p.quantity, p.category.to_string());
                }
            }
            Ok(0)
        }
        Command::Compare {
            a,
            b,
            format,
            direction,
            rules,
            report,
            result,
        } => {
            let engine = engine(&cli)?;
            let inv_a = build(&engine, a, *format)?;
            let inv_b = build(&engine, b, *format)?;
            let rules: Vec<UserRule> = match rules {
                Some(p) => {
                    let text = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_slice(&text).with_context(|| format!("parsing rules in {}", p.display()))?
                }
                None => Vec::new(),
            };
            let c = engine.compare_directed(&inv_a, &inv_b, &rules, *direction, None)?;
            let rendered = ComparisonReport::new(&c, &inv_a, &inv_b, &rules, Vec::new());
            if let Some(path) = result {
                emit(path, &c.result.to_json_pretty())?;
            }
            if let Some(path) = report {
                emit(path, &rendered.to_json_pretty())?;
            }
            if report.as_deref() != Some(Path::new("-")) && result.as_deref() != Some(Path::new("-")) {
                print!("{}", rendered.to_text());
            }
            Ok(match c.result.verdict {
                Verdict::Proven => 0,
                Verdict::Inconclusive => EXIT_INCONCLUSIVE,
            })
        }
        Command::Serve { port, data_dir, host } => {
            let engine = engine(&cli)?;
            let store = match data_dir {
                Some(dir) => SessionStore::open(dir).with_context(|| format!("opening {}", dir.display()))?,
                None => SessionStore::in_memory(),
            };
            let state = AppState::new(engine, store);
            let addr = std::net::SocketAddr::new(*host, *port);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                delta_lca_service::serve(listener, state).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
