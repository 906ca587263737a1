use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use v2v_core::analytics::{csv_tables, usage_report, AnalyticsLog, ReportOptions, UsageReport, DEFAULT_TOP_FRACTION};
use v2v_core::model::validate_corpus;
use v2v_core::store::{Dataset, FileBackend, ImportBundle, ImportMode, StoreError};
use v2v_core::Execution;

use crate::api::{router, AppState, StaticDirs};
use crate::geocoder::geocoder_from_env;

#[derive(Debug, Parser)]
#[command(name = "v2v", version, about = "Community input portal: API server and data tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataDir {
    /// Directory holding dataset.json, analytics.ndjson and feedback.ndjson.
    #[arg(long, env = "DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "BIND", default_value = "0.0.0.0")]
        bind: std::net::IpAddr,
        #[command(flatten)]
        data: DataDir,
        /// Built web client to serve at `/`.
        #[arg(long, env = "STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
    /// Load a bundle into the data directory.
    Import {
        #[arg(long)]
        file: PathBuf,
        /// Upsert by id instead of replacing the dataset.
        #[arg(long)]
        merge: bool,
        #[command(flatten)]
        data: DataDir,
    },
    /// Write the current dataset as a bundle.
    Export {
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        data: DataDir,
    },
    /// Check a bundle without loading it. Exits non-zero on errors.
    Validate {
        #[arg(long)]
        file: PathBuf,
    },
    /// Usage metrics over the analytics log.
    Report {
        /// First day included (YYYY-MM-DD, UTC).
        #[arg(long)]
        from: Option<NaiveDate>,
        /// Last day included (YYYY-MM-DD, UTC).
        #[arg(long)]
        to: Option<NaiveDate>,
        #[arg(long)]
        no_outlier_filter: bool,
        #[arg(long, default_value_t = DEFAULT_TOP_FRACTION)]
        top_fraction: f64,
        /// Read records from this NDJSON file instead of the data directory.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
        /// Also write feature_usage.csv, transitions.csv and devices.csv here.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[command(flatten)]
        data: DataDir,
    },
    /// Fill in coordinates for voices that only have location text.
    Geocode {
        #[command(flatten)]
        data: DataDir,
    },
}

fn open_dataset(dir: &Path) -> anyhow::Result<Dataset> {
    Ok(Dataset::open(FileBackend::new(dir)?)?)
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Serve { port, bind, data, static_dir } => {
            let token = std::env::var("AUTH_PLANNER_TOKEN").ok().filter(|t| !t.is_empty());
            if token.is_none() {
                tracing::warn!("AUTH_PLANNER_TOKEN is not set; planner routes are unreachable");
            }
            std::fs::create_dir_all(&data.data_dir)?;
            let state = AppState::open(&data.data_dir, token)?;
            let media = data.data_dir.join("media");
            let dirs = StaticDirs { web: static_dir, media: media.is_dir().then_some(media) };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(SocketAddr::new(bind, port)).await?;
                tracing::info!("listening on {}", listener.local_addr()?);
                axum::serve(listener, router(state, dirs))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Import { file, merge, data } => {
            let ds = open_dataset(&data.data_dir)?;
            let mode = if merge { ImportMode::Merge } else { ImportMode::Replace };
            match ds.import_text(&read(&file)?, mode) {
                Ok(report) => {
                    for (collection, c) in &report.counts {
                        println!(
                            "{collection}: {} in bundle, {} created, {} updated, {} unchanged",
                            c.in_bundle, c.created, c.updated, c.unchanged
                        );
                    }
                    for w in &report.warnings {
                        eprintln!("warning: {}/{}: {}", w.collection, w.id, w.message);
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(StoreError::Validation(report)) => {
                    for e in &report.errors {
                        eprintln!("error: {}/{}: {}", e.collection, e.id, e.message);
                    }
                    eprintln!("import rejected; dataset unchanged");
                    Ok(ExitCode::FAILURE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Export { out, data } => {
            let text = open_dataset(&data.data_dir)?.export_bundle().to_text();
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { file } => {
            let corpus = match ImportBundle::parse(&read(&file)?).and_then(|b| {
                b.check_version()?;
                b.into_corpus()
            }) {
                Ok(c) => c,
                Err(StoreError::Validation(report)) => {
                    for e in &report.errors {
                        eprintln!("error: {}/{}: {}", e.collection, e.id, e.message);
                    }
                    return Ok(ExitCode::FAILURE);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Ok(ExitCode::FAILURE);
                }
            };
            let report = validate_corpus(&corpus);
            for w in &report.warnings {
                eprintln!("warning: {}/{}: {}", w.collection, w.id, w.message);
            }
            for e in &report.errors {
                eprintln!("error: {}/{}: {}", e.collection, e.id, e.message);
            }
            println!("{} error(s), {} warning(s)", report.errors.len(), report.warnings.len());
            Ok(if report.is_valid() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Report { from, to, no_outlier_filter, top_fraction, log, json, csv_dir, data } => {
            let records = match log {
                Some(path) => {
                    let mem = AnalyticsLog::in_memory();
                    let ingest = mem.ingest_ndjson(&read(&path)?, None)?;
                    for r in &ingest.rejected {
                        eprintln!("warning: {}:{}: {}", path.display(), r.line, r.reason);
                    }
                    mem.records()
                }
                None => AnalyticsLog::open(&data.data_dir)?.records(),
            };
            let dataset_file = data.data_dir.join(FileBackend::FILE_NAME);
            let dataset = if dataset_file.exists() { Some(open_dataset(&data.data_dir)?) } else { None };
            let snap = dataset.as_ref().map(|d| d.snapshot());
            let corpus = snap.as_ref().filter(|s| s.is_loaded()).map(|s| s.corpus());
            let opts = ReportOptions { from, to, outlier_filter: !no_outlier_filter, top_fraction };
            let report = usage_report(&records, corpus, &opts, Execution::default())?;
            if let Some(dir) = csv_dir {
                std::fs::create_dir_all(&dir)?;
                for (name, table) in csv_tables(&report)? {
                    std::fs::write(dir.join(name), table)?;
                }
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", render_report(&report));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Geocode { data } => {
            let ds = open_dataset(&data.data_dir)?;
            if !ds.snapshot().is_loaded() {
                anyhow::bail!(StoreError::NoDataset);
            }
            let geocoder = geocoder_from_env()?;
            let s = ds.geocode_missing(&geocoder)?;
            println!(
                "{} attempted, {} resolved, {} unresolved, {} tagged with a sub-geography",
                s.attempted, s.resolved, s.unresolved, s.tagged_sub_geography
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

pub fn render_report(r: &UsageReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "records: {}", r.n_records);
    let _ = writeln!(
        s,
        "sessions: {} raw, {} kept, {} removed as outliers",
        r.n_sessions_raw,
        r.n_sessions_after_filter,
        r.removed_session_ids.len()
    );
    let _ = writeln!(s, "session duration: {:.2} ± {:.2} min", r.duration_minutes_mean, r.duration_minutes_sd);
    let _ = writeln!(s, "voice card viewers: {}", pct(r.voice_card_view_share));
    let _ = writeln!(s, "goal card clickers: {}", pct(r.goal_card_click_share));
    let _ = writeln!(s, "translate users: {} ({})", r.translate_user_count, pct(r.translate_user_share));
    let _ = writeln!(s, "mobile or tablet: {}", pct(r.mobile_or_tablet_share));
    let _ = writeln!(s, "transitions: {}", r.total_transitions);
    let mut transitions: Vec<_> = r.transitions.iter().collect();
    transitions.sort_by(|a, b| b.count.cmp(&a.count).then((a.from, a.to).cmp(&(b.from, b.to))));
    for t in transitions {
        let _ = writeln!(s, "  {} -> {}: {}", t.from, t.to, t.count);
    }
    let _ = writeln!(s, "feature usage (share of sessions, mean ± sd per session):");
    for u in r.feature_usage.iter().filter(|u| u.sessions > 0) {
        let _ = writeln!(s, "  {}: {} ({:.2} ± {:.2})", u.kind, pct(u.share), u.mean_per_session, u.sd_per_session);
    }
    let _ = writeln!(s, "devices:");
    for d in &r.device_shares {
        let _ = writeln!(s, "  {}: {} ({})", d.device, d.sessions, pct(d.share));
    }
    if let Some(c) = &r.citation_expansion {
        let _ = writeln!(
            s,
            "citation expansions on uncited voices: {} of {} ({}) vs {} uncited in corpus",
            c.on_uncited,
            c.expansions,
            pct(c.uncited_expansion_share),
            pct(c.corpus_uncited_share)
        );
    }
    s
}
