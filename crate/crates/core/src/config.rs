//! Experiment configuration files.
//!
//! ```text
//! # a small league
//! players = U, G, S, HSUGS
//! games = 200
//! actions = 3
//! steps = 10000
//! seed = 7
//! elimination = false
//! output_dir = out/hsugs
//! ```
//!
//! Player expressions are separated by commas outside parentheses and
//! braces. Missing keys take their defaults; `players` is required.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::expr::{parse_player_expr, PlayerSpec};
use crate::tournament::{EliminationConfig, NamedPlayer};

pub const DEFAULT_STEPS: u64 = 100_000;
pub const DEFAULT_GAMES: usize = 1_000;
pub const DEFAULT_ACTIONS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Expressions as written in the file.
    pub players: Vec<String>,
    pub games: usize,
    pub actions: usize,
    pub steps: u64,
    pub seed: u64,
    pub elimination: EliminationConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parsed roster; each player is named by its expression as written.
    pub fn roster(&self) -> Result<Vec<NamedPlayer>> {
        self.players
            .iter()
            .map(|text| {
                let spec: PlayerSpec = parse_player_expr(text)
                    .map_err(|e| Error::Config(format!("player `{text}`: {e}")))?;
                Ok(NamedPlayer {
                    name: text.clone(),
                    spec,
                })
            })
            .collect()
    }
}

const KEYS: [&str; 10] = [
    "players",
    "games",
    "actions",
    "steps",
    "seed",
    "elimination",
    "min_games",
    "significance_k",
    "stagnation_window",
    "output_dir",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut values: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Format {
                line: line_no,
                msg: format!("unknown key `{key}`"),
            });
        }
        if let Some((first, _)) = values.insert(key, (line_no, value.trim())) {
            return Err(Error::Format {
                line: line_no,
                msg: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
    }

    fn number<T: std::str::FromStr>(
        values: &BTreeMap<&str, (usize, &str)>,
        key: &str,
        default: T,
    ) -> Result<T> {
        match values.get(key) {
            None => Ok(default),
            Some(&(line, v)) => v.parse().map_err(|_| Error::Format {
                line,
                msg: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }

    let (players_line, players_text) = *values
        .get("players")
        .ok_or_else(|| Error::Config("the configuration does not list any players".into()))?;
    let players = split_top_level(players_text);
    if players.iter().any(String::is_empty) {
        return Err(Error::Format {
            line: players_line,
            msg: "empty player expression".into(),
        });
    }
    let defaults = EliminationConfig::default();
    let elimination = EliminationConfig {
        enabled: number(&values, "elimination", false)?,
        min_games: number(&values, "min_games", defaults.min_games)?,
        significance_k: number(&values, "significance_k", defaults.significance_k)?,
        stagnation_window: number(&values, "stagnation_window", defaults.stagnation_window)?,
    };
    let cfg = ExperimentConfig {
        players,
        games: number(&values, "games", DEFAULT_GAMES)?,
        actions: number(&values, "actions", DEFAULT_ACTIONS)?,
        steps: number(&values, "steps", DEFAULT_STEPS)?,
        seed: number(&values, "seed", 0)?,
        elimination,
        output_dir: values
            .get("output_dir")
            .map_or_else(|| PathBuf::from("out"), |(_, v)| PathBuf::from(v)),
    };
    if cfg.players.len() < 2 {
        return Err(Error::Config(
            "an experiment needs at least two players".into(),
        ));
    }
    if cfg.games < 1 {
        return Err(Error::Config("games must be at least 1".into()));
    }
    if cfg.steps < 1 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    if cfg.actions < 2 {
        return Err(Error::Config("actions must be at least 2".into()));
    }
    cfg.elimination.validate()?;
    cfg.roster()?;
    Ok(cfg)
}

/// Splits on commas that are not inside parentheses or braces.
fn split_top_level(text: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(current.trim().to_owned());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    parts.push(current.trim().to_owned());
    parts
}
