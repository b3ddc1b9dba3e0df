//! Matches, round-robin tournaments and full experiments, with or without the
//! elimination mechanism.
//!
//! Every match gets its seed from `(master seed, game, row id, col id)`, so
//! matches can run in any order and on any number of threads without
//! changing a single number. The [`ScoreLedger`] always sums in key order
//! for the same reason.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::PlayerSpec;
use crate::game::{GameSet, Matrix, MatrixGame, Role};
use crate::hedging::{build_player, validate_hedge_spec, DEFAULT_MAX_DEPTH};
use crate::players::{MatchClock, Observation, Player};
use crate::seed::derive_seed;

/// Position of a player in the experiment's roster.
pub type PlayerId = usize;

/// One repeated-game match between two seats.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub game_index: usize,
    pub row_player: PlayerId,
    pub col_player: PlayerId,
    pub total_row: f64,
    pub total_col: f64,
    pub steps: u64,
}

impl MatchResult {
    pub fn key(&self) -> (usize, PlayerId, PlayerId) {
        (self.game_index, self.row_player, self.col_player)
    }

    pub fn mean_row(&self) -> f64 {
        self.total_row / self.steps as f64
    }

    pub fn mean_col(&self) -> f64 {
        self.total_col / self.steps as f64
    }
}

/// Drives two players through a repeated game one simultaneous step at a
/// time, filtering each observation to what the receiving player declared
/// it needs.
pub struct MatchRunner<'g> {
    game: &'g MatrixGame,
    row: Box<dyn Player>,
    col: Box<dyn Player>,
    row_counterfactuals: Matrix,
    clock: MatchClock,
    total_row: f64,
    total_col: f64,
}

impl<'g> MatchRunner<'g> {
    pub fn new(
        row_spec: &PlayerSpec,
        col_spec: &PlayerSpec,
        game: &'g MatrixGame,
        seed: u64,
    ) -> Result<Self> {
        let k = game.n_actions();
        let seat = |spec: &PlayerSpec, role: Role, salt: u64| {
            let view = spec.needs().needs_matrix.then(|| game.view(role));
            build_player(spec, k, view.as_ref(), derive_seed(seed, &[salt]))
        };
        let row = seat(row_spec, Role::Row, 0)?;
        let col = seat(col_spec, Role::Col, 1)?;
        Ok(Self::from_players(row, col, game))
    }

    pub fn from_players(row: Box<dyn Player>, col: Box<dyn Player>, game: &'g MatrixGame) -> Self {
        MatchRunner {
            game,
            row,
            col,
            row_counterfactuals: game.payoff_row().transpose(),
            clock: MatchClock::start(game.n_actions()),
            total_row: 0.0,
            total_col: 0.0,
        }
    }

    pub fn row_player(&self) -> &dyn Player {
        self.row.as_ref()
    }

    pub fn col_player(&self) -> &dyn Player {
        self.col.as_ref()
    }

    pub fn clock(&self) -> MatchClock {
        self.clock
    }

    /// Both players commit to an action without seeing the other's.
    pub fn select(&mut self) -> (usize, usize) {
        let a = self.row.select_action(self.clock);
        let b = self.col.select_action(self.clock);
        (a, b)
    }

    /// Pays out the joint action chosen by [`select`](Self::select) and
    /// advances the clock.
    pub fn settle(&mut self, a: usize, b: usize) -> Result<(f64, f64)> {
        let (ra, rb) = self.game.payoffs(a, b);
        let row_obs = Observation {
            own_action: a,
            reward: ra,
            opponent_action: Some(b),
            counterfactual_rewards: Some(self.row_counterfactuals.row(b)),
        };
        let col_obs = Observation {
            own_action: b,
            reward: rb,
            opponent_action: Some(a),
            counterfactual_rewards: Some(self.game.payoff_col().row(a)),
        };
        self.row.observe(&row_obs.filtered(self.row.needs()))?;
        self.col.observe(&col_obs.filtered(self.col.needs()))?;
        self.total_row += ra;
        self.total_col += rb;
        self.clock.tick();
        Ok((ra, rb))
    }

    pub fn step(&mut self) -> Result<(usize, usize)> {
        let (a, b) = self.select();
        self.settle(a, b)?;
        Ok((a, b))
    }

    pub fn totals(&self) -> (f64, f64) {
        (self.total_row, self.total_col)
    }

    pub fn steps_played(&self) -> u64 {
        self.clock.t - 1
    }
}

/// Plays `steps` repetitions of `game` between fresh instances of the two
/// specs. The result is tagged with game 0 and ids 0/1; tournaments retag.
pub fn play_match(
    row_spec: &PlayerSpec,
    col_spec: &PlayerSpec,
    game: &MatrixGame,
    steps: u64,
    seed: u64,
) -> Result<MatchResult> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "a match needs at least one step".into(),
        ));
    }
    let mut runner = MatchRunner::new(row_spec, col_spec, game, seed)?;
    for _ in 0..steps {
        runner.step()?;
    }
    let (total_row, total_col) = runner.totals();
    Ok(MatchResult {
        game_index: 0,
        row_player: 0,
        col_player: 1,
        total_row,
        total_col,
        steps,
    })
}

/// Seed of the match `(row, col)` on game `game_index`.
pub fn match_seed(master_seed: u64, game_index: usize, row: PlayerId, col: PlayerId) -> u64 {
    derive_seed(master_seed, &[game_index as u64, row as u64, col as u64])
}

/// Every ordered pair of `active` players plus self-play, on one game.
pub fn run_tournament(
    specs: &[PlayerSpec],
    active: &[PlayerId],
    game: &MatrixGame,
    game_index: usize,
    steps: u64,
    master_seed: u64,
) -> Result<Vec<MatchResult>> {
    let pairs: Vec<(PlayerId, PlayerId)> = active
        .iter()
        .flat_map(|&i| active.iter().map(move |&j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| {
            let seed = match_seed(master_seed, game_index, i, j);
            play_match(&specs[i], &specs[j], game, steps, seed).map(|r| MatchResult {
                game_index,
                row_player: i,
                col_player: j,
                ..r
            })
        })
        .collect()
}

/// Round robin of all `specs` on one game (game index 0).
pub fn run_round_robin(
    specs: &[PlayerSpec],
    game: &MatrixGame,
    steps: u64,
    master_seed: u64,
) -> Result<Vec<MatchResult>> {
    if specs.len() < 2 {
        return Err(Error::InvalidArgument(
            "a round robin needs at least two players".into(),
        ));
    }
    let ids: Vec<PlayerId> = (0..specs.len()).collect();
    run_tournament(specs, &ids, game, 0, steps, master_seed)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    returns: f64,
    steps: u64,
}

impl Tally {
    fn mean(self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.returns / self.steps as f64
        }
    }
}

/// All match results of an experiment, and the running totals of each
/// active player over the matches whose two participants are both active.
#[derive(Debug, Clone)]
pub struct ScoreLedger {
    n_players: usize,
    results: BTreeMap<(usize, PlayerId, PlayerId), MatchResult>,
    active: BTreeSet<PlayerId>,
    totals: Vec<Tally>,
}

impl ScoreLedger {
    pub fn new(n_players: usize) -> Self {
        ScoreLedger {
            n_players,
            results: BTreeMap::new(),
            active: (0..n_players).collect(),
            totals: vec![Tally::default(); n_players],
        }
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn add_results(&mut self, results: impl IntoIterator<Item = MatchResult>) -> Result<()> {
        for r in results {
            if r.row_player >= self.n_players || r.col_player >= self.n_players {
                return Err(Error::InvalidArgument(format!(
                    "match result names player outside the roster of {}",
                    self.n_players
                )));
            }
            self.results.insert(r.key(), r);
        }
        self.refresh();
        Ok(())
    }

    /// Drops `p` from the active set; everything earned with or against `p`
    /// stops counting for everyone.
    pub fn remove_player(&mut self, p: PlayerId) -> Result<()> {
        if !self.active.remove(&p) {
            return Err(Error::InvalidArgument(format!("player {p} is not active")));
        }
        self.refresh();
        Ok(())
    }

    /// Copy of this ledger with every player active again.
    pub fn with_all_active(&self) -> ScoreLedger {
        let mut all = self.clone();
        all.active = (0..self.n_players).collect();
        all.refresh();
        all
    }

    pub fn is_active(&self, p: PlayerId) -> bool {
        self.active.contains(&p)
    }

    pub fn active(&self) -> Vec<PlayerId> {
        self.active.iter().copied().collect()
    }

    pub fn results(&self) -> impl Iterator<Item = &MatchResult> {
        self.results.values()
    }

    /// Results whose two participants are both active, in key order.
    pub fn retained(&self) -> impl Iterator<Item = &MatchResult> {
        self.results
            .values()
            .filter(|r| self.active.contains(&r.row_player) && self.active.contains(&r.col_player))
    }

    pub fn result(&self, game: usize, row: PlayerId, col: PlayerId) -> Option<&MatchResult> {
        self.results.get(&(game, row, col))
    }

    /// Sum of the per-step returns of `p` over retained matches.
    pub fn total(&self, p: PlayerId) -> f64 {
        self.totals[p].returns
    }

    pub fn steps(&self, p: PlayerId) -> u64 {
        self.totals[p].steps
    }

    /// Mean per-step return of `p` over retained matches.
    pub fn mean_return(&self, p: PlayerId) -> f64 {
        self.totals[p].mean()
    }

    /// Game indices with at least one retained result.
    pub fn games(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.retained().map(|r| r.game_index).collect();
        set.into_iter().collect()
    }

    /// Mean per-step return of `p` on each game, over retained matches.
    pub fn per_game_means(&self, p: PlayerId) -> BTreeMap<usize, f64> {
        let mut per_game: BTreeMap<usize, Tally> = BTreeMap::new();
        for r in self.retained() {
            if r.row_player == p {
                let t = per_game.entry(r.game_index).or_default();
                t.returns += r.total_row;
                t.steps += r.steps;
            }
            if r.col_player == p {
                let t = per_game.entry(r.game_index).or_default();
                t.returns += r.total_col;
                t.steps += r.steps;
            }
        }
        per_game.into_iter().map(|(g, t)| (g, t.mean())).collect()
    }

    /// Active players by decreasing mean return; ties by id.
    pub fn ranking(&self) -> Vec<(PlayerId, f64)> {
        let mut order: Vec<(PlayerId, f64)> = self
            .active
            .iter()
            .map(|&p| (p, self.mean_return(p)))
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        order
    }

    fn refresh(&mut self) {
        let mut totals = vec![Tally::default(); self.n_players];
        for r in self.retained() {
            totals[r.row_player].returns += r.total_row;
            totals[r.row_player].steps += r.steps;
            totals[r.col_player].returns += r.total_col;
            totals[r.col_player].steps += r.steps;
        }
        self.totals = totals;
    }
}

/// Thresholds of the elimination mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationConfig {
    pub enabled: bool,
    /// Games that must have been played before the significance rule applies.
    pub min_games: usize,
    /// Standard-error multiplier of the significance rule.
    pub significance_k: f64,
    /// Consecutive games with an unchanged ranking that also trigger removal.
    pub stagnation_window: usize,
}

impl Default for EliminationConfig {
    fn default() -> Self {
        EliminationConfig {
            enabled: false,
            min_games: 30,
            significance_k: 2.0,
            stagnation_window: 50,
        }
    }
}

impl EliminationConfig {
    pub fn enabled() -> Self {
        EliminationConfig {
            enabled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_games < 2 {
            return Err(Error::Config("min_games must be at least 2".into()));
        }
        if self.stagnation_window < 1 {
            return Err(Error::Config("stagnation_window must be at least 1".into()));
        }
        if !(self.significance_k.is_finite() && self.significance_k >= 0.0) {
            return Err(Error::Config(
                "significance_k must be a non-negative number".into(),
            ));
        }
        Ok(())
    }
}

/// Orderings observed after each game, for the stagnation rule.
#[derive(Debug, Clone, Default)]
pub struct RankingHistory {
    last: Option<Vec<PlayerId>>,
    streak: usize,
}

impl RankingHistory {
    pub fn record(&mut self, order: Vec<PlayerId>) {
        if self.last.as_ref() == Some(&order) {
            self.streak += 1;
        } else {
            self.last = Some(order);
            self.streak = 1;
        }
    }

    /// Number of consecutive records (including the last) with the same
    /// ordering.
    pub fn unchanged_for(&self) -> usize {
        self.streak
    }

    pub fn clear(&mut self) {
        *self = RankingHistory::default();
    }
}

/// Paired comparison of two players over the games where both have retained
/// results: the mean per-game difference `ahead - behind` and its standard
/// error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedGap {
    pub games: usize,
    pub mean_diff: f64,
    pub std_error: f64,
}

pub fn paired_gap(ledger: &ScoreLedger, ahead: PlayerId, behind: PlayerId) -> PairedGap {
    let a = ledger.per_game_means(ahead);
    let b = ledger.per_game_means(behind);
    let diffs: Vec<f64> = a
        .iter()
        .filter_map(|(g, x)| b.get(g).map(|y| x - y))
        .collect();
    let n = diffs.len();
    if n == 0 {
        return PairedGap {
            games: 0,
            mean_diff: 0.0,
            std_error: f64::INFINITY,
        };
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let std_error = if n < 2 {
        f64::INFINITY
    } else {
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    PairedGap {
        games: n,
        mean_diff: mean,
        std_error,
    }
}

/// Whether `ahead` leads `behind` by more than `k` paired standard errors
/// after at least `min_games` games.
pub fn lead_is_significant(
    ledger: &ScoreLedger,
    ahead: PlayerId,
    behind: PlayerId,
    k: f64,
    min_games: usize,
) -> bool {
    let gap = paired_gap(ledger, ahead, behind);
    let lead = ledger.mean_return(ahead) - ledger.mean_return(behind);
    gap.games >= min_games && lead > 0.0 && lead > k * gap.std_error
}

/// The player to remove after the latest game, if any: the last-ranked
/// player when it trails the before-last significantly, or when the full
/// ordering has not moved for `stagnation_window` games.
pub fn eliminate_check(
    ledger: &ScoreLedger,
    history: &RankingHistory,
    cfg: &EliminationConfig,
) -> Option<PlayerId> {
    let ranking = ledger.ranking();
    if ranking.len() < 2 {
        return None;
    }
    let worst = ranking[ranking.len() - 1].0;
    let before_last = ranking[ranking.len() - 2].0;
    let significant = lead_is_significant(
        ledger,
        before_last,
        worst,
        cfg.significance_k,
        cfg.min_games,
    );
    let stagnant = history.unchanged_for() >= cfg.stagnation_window;
    (significant || stagnant).then_some(worst)
}

/// Removes `p`; see [`ScoreLedger::remove_player`].
pub fn remove_player(ledger: &mut ScoreLedger, p: PlayerId) -> Result<()> {
    ledger.remove_player(p)
}

/// A roster entry: display name and the expression it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPlayer {
    pub name: String,
    pub spec: PlayerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub player: PlayerId,
    /// Index of the game after which the player was removed.
    pub after_game: usize,
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub player: PlayerId,
    pub mean_return: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub names: Vec<String>,
    pub steps: u64,
    pub games_played: usize,
    pub elimination: bool,
    /// Final ledger; in elimination mode only survivors are active.
    pub ledger: ScoreLedger,
    pub eliminations: Vec<Elimination>,
    /// Best first. With elimination: survivors by mean return, then the
    /// eliminated in reverse order of removal with their mean at removal. A
    /// lone survivor carries its mean from the moment its last opponent left.
    pub ranking: Vec<RankEntry>,
    /// Whether the leader's margin over the runner-up passes the paired test.
    pub leader_margin_significant: bool,
}

impl ExperimentReport {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.ranking
            .iter()
            .position(|e| self.names[e.player] == name)
            .map(|i| i + 1)
    }
}

/// Runs one tournament per game. Without elimination every game is played
/// by the whole roster; with elimination the worst player may be removed
/// after each game until one remains or the games run out.
pub fn run_experiment(
    players: &[NamedPlayer],
    game_set: &GameSet,
    steps: u64,
    cfg: &EliminationConfig,
    master_seed: u64,
) -> Result<ExperimentReport> {
    if players.len() < 2 {
        return Err(Error::Config(
            "an experiment needs at least two players".into(),
        ));
    }
    if game_set.is_empty() {
        return Err(Error::Config(
            "an experiment needs at least one game".into(),
        ));
    }
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    cfg.validate()?;
    let mut seen = BTreeSet::new();
    for p in players {
        if !seen.insert(p.name.as_str()) {
            return Err(Error::Config(format!(
                "player name `{}` appears twice",
                p.name
            )));
        }
        validate_hedge_spec(&p.spec, DEFAULT_MAX_DEPTH.max(p.spec.depth()))?;
    }
    let specs: Vec<PlayerSpec> = players.iter().map(|p| p.spec.clone()).collect();
    let names: Vec<String> = players.iter().map(|p| p.name.clone()).collect();
    let mut ledger = ScoreLedger::new(players.len());

    if !cfg.enabled {
        let ids: Vec<PlayerId> = (0..players.len()).collect();
        let results: Vec<Vec<MatchResult>> = game_set
            .games
            .par_iter()
            .enumerate()
            .map(|(g, game)| run_tournament(&specs, &ids, game, g, steps, master_seed))
            .collect::<Result<_>>()?;
        ledger.add_results(results.into_iter().flatten())?;
        let ranking: Vec<RankEntry> = ledger
            .ranking()
            .into_iter()
            .map(|(player, mean_return)| RankEntry {
                player,
                mean_return,
            })
            .collect();
        let leader_margin_significant = leader_significant(&ledger, &ranking, cfg);
        return Ok(ExperimentReport {
            names,
            steps,
            games_played: game_set.len(),
            elimination: false,
            ledger,
            eliminations: Vec::new(),
            ranking,
            leader_margin_significant,
        });
    }

    let mut history = RankingHistory::default();
    let mut eliminations = Vec::new();
    let mut games_played = 0;
    // survivor's mean and margin when the last opponent left
    let mut final_duel: Option<(f64, bool)> = None;
    for (g, game) in game_set.games.iter().enumerate() {
        if ledger.active.len() < 2 {
            break;
        }
        let active = ledger.active();
        ledger.add_results(run_tournament(
            &specs,
            &active,
            game,
            g,
            steps,
            master_seed,
        )?)?;
        games_played += 1;
        history.record(ledger.ranking().into_iter().map(|(p, _)| p).collect());
        if let Some(worst) = eliminate_check(&ledger, &history, cfg) {
            if let [(winner, mean), _] = ledger.ranking()[..] {
                let clear =
                    lead_is_significant(&ledger, winner, worst, cfg.significance_k, cfg.min_games);
                final_duel = Some((mean, clear));
            }
            eliminations.push(Elimination {
                player: worst,
                after_game: g,
                mean_return: ledger.mean_return(worst),
            });
            ledger.remove_player(worst)?;
            history.clear();
        }
    }

    let survivors = ledger.ranking();
    let mut ranking: Vec<RankEntry> = survivors
        .iter()
        .map(|&(player, mean_return)| RankEntry {
            player,
            mean_return,
        })
        .collect();
    let mut leader_margin_significant = leader_significant(&ledger, &ranking, cfg);
    if let (Some((mean, clear)), [winner]) = (final_duel, &mut ranking[..]) {
        winner.mean_return = mean;
        leader_margin_significant = clear;
    }
    ranking.extend(eliminations.iter().rev().map(|e| RankEntry {
        player: e.player,
        mean_return: e.mean_return,
    }));
    Ok(ExperimentReport {
        names,
        steps,
        games_played,
        elimination: true,
        ledger,
        eliminations,
        ranking,
        leader_margin_significant,
    })
}

fn leader_significant(
    ledger: &ScoreLedger,
    ranking: &[RankEntry],
    cfg: &EliminationConfig,
) -> bool {
    match ranking {
        [first, second, ..] => lead_is_significant(
            ledger,
            first.player,
            second.player,
            cfg.significance_k,
            cfg.min_games,
        ),
        _ => false,
    }
}

/// One line per match:
/// `game=<g> row=<name> col=<name> steps=<T> total_row=<r> total_col=<c>`.
pub fn match_log(report: &ExperimentReport) -> String {
    let mut out = String::new();
    for r in report.ledger.results() {
        out.push_str(&format!(
            "game={} row={} col={} steps={} total_row={} total_col={}\n",
            r.game_index,
            report.names[r.row_player],
            report.names[r.col_player],
            r.steps,
            r.total_row,
            r.total_col
        ));
    }
    out
}
