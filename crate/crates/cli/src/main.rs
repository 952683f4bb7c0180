use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kanapad::commands;
use kanapad::service::{router, AppState, SystemClock};

#[derive(Parser)]
#[command(name = "kanapad", version, about = "Twelve-key Japanese kana entry tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a dictionary into a binary index.
    Compile {
        #[arg(long)]
        dict: PathBuf,
        /// Layout file; the built-in layout when omitted.
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay an event tape against an index and print the transcript.
    Simulate {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        tape: PathBuf,
    },
    /// Compare keystroke costs of the entry methods over a corpus.
    Eval {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Serve sessions over HTTP.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Seconds of inactivity before a session expires.
        #[arg(long, default_value_t = 900)]
        idle_secs: u64,
    },
}

fn serve(index: PathBuf, bind: String, idle_secs: u64) -> Result<()> {
    let (trie, layout) = commands::load_index(&index)?;
    let state = AppState::new(
        trie,
        layout,
        Arc::new(SystemClock::new()),
        Duration::from_secs(idle_secs),
    )?;
    let state = Arc::new(state);
    let app = router(state.clone());
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .with_context(|| format!("binding {bind}"))?;
        eprintln!("listening on {}", listener.local_addr()?);
        let sweeper = tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(30));
            loop {
                tick.tick().await;
                state.sweep();
            }
        });
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        sweeper.abort();
        Ok(())
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile { dict, layout, out } => {
            let summary = commands::compile(&dict, layout.as_deref(), &out)?;
            println!("entries: {}", summary.entries);
            println!("index_bytes: {}", summary.bytes);
        }
        Command::Simulate { index, tape } => print!("{}", commands::simulate(&index, &tape)?),
        Command::Eval { index, corpus } => print!("{}", commands::eval(&index, &corpus)?),
        Command::Serve { index, bind, idle_secs } => serve(index, bind, idle_secs)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
