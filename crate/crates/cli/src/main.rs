use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hedgeplay::analysis::{
    build_cross_table, cross_table_from_csv, cross_table_to_csv, league_grade,
    perfect_hedger_projection, ranking_from_csv, ranking_to_csv, render_report, Ranking,
};
use hedgeplay::config::parse_config;
use hedgeplay::game::{generate_random_games, GameSet};
use hedgeplay::tournament::{match_log, run_experiment};

#[derive(Parser)]
#[command(
    name = "hedgeplay",
    version,
    about = "Tournaments of learning players on random repeated matrix games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random games and write them as an RMG1 file.
    Gen {
        #[arg(long)]
        games: usize,
        #[arg(long, default_value_t = 3)]
        actions: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Play these games instead of drawing new ones.
        #[arg(long)]
        games_file: Option<PathBuf>,
        /// Write one line per match to this file.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Add a perfect hedger to an existing cross-table.
    Project {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "H")]
        name: String,
    },
    /// Print the league grade of a player from a ranking file.
    Grade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        player: String,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            games,
            actions,
            seed,
            out,
        } => {
            let set = generate_random_games(games, actions, seed)?;
            write(&out, &set.to_rmg1())?;
        }
        Command::Run {
            config,
            games_file,
            log,
            output_dir,
        } => {
            let cfg = parse_config(&read(&config)?)
                .with_context(|| format!("in {}", config.display()))?;
            let games = match games_file {
                Some(path) => GameSet::from_rmg1(&read(&path)?)
                    .with_context(|| format!("in {}", path.display()))?,
                None => generate_random_games(cfg.games, cfg.actions, cfg.seed)?,
            };
            let roster = cfg.roster()?;
            let report = run_experiment(&roster, &games, cfg.steps, &cfg.elimination, cfg.seed)?;
            let table = build_cross_table(&report.ledger.with_all_active(), &report.names)?;
            let specs: Vec<String> = roster.iter().map(|p| p.spec.to_string()).collect();

            let dir = output_dir.unwrap_or(cfg.output_dir);
            fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
            write(&dir.join("crosstable.csv"), &cross_table_to_csv(&table))?;
            write(
                &dir.join("ranking.csv"),
                &ranking_to_csv(&Ranking::from_report(&report)),
            )?;
            write(
                &dir.join("report.md"),
                &render_report(&report, &table, &specs),
            )?;
            if let Some(path) = log {
                write(&path, &match_log(&report))?;
            }
            println!("wrote {}", dir.display());
        }
        Command::Project { input, out, name } => {
            let base = cross_table_from_csv(&read(&input)?)
                .with_context(|| format!("in {}", input.display()))?;
            if base.index_of(&name).is_some() {
                bail!("the table already has a player named `{name}`");
            }
            write(
                &out,
                &cross_table_to_csv(&perfect_hedger_projection(&base, &name)?),
            )?;
        }
        Command::Grade { input, player } => {
            let ranking = ranking_from_csv(&read(&input)?)
                .with_context(|| format!("in {}", input.display()))?;
            let rank = ranking
                .rank_of(&player)
                .with_context(|| format!("`{player}` does not appear in {}", input.display()))?;
            let leader_clear = ranking.rows.first().is_some_and(|r| r.margin_significant);
            println!("{}", league_grade(rank, leader_clear, ranking.len())?);
        }
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
