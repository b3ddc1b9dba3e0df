//! Cross-tables, rankings, league grades and the perfect-hedger projection,
//! with their CSV and markdown renderings.

use std::fmt;

use crate::error::{Error, Result};
use crate::tournament::{ExperimentReport, PlayerId, ScoreLedger};

/// Per ordered pair, the mean per-step returns of the row player and of the
/// column player. Aggregates are always derived from the cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTable {
    pub players: Vec<String>,
    /// `cells[i][j]` = (return of `i` playing rows, return of `j` playing
    /// columns) in the match `i` vs `j`.
    pub cells: Vec<Vec<(f64, f64)>>,
}

impl CrossTable {
    pub fn new(players: Vec<String>, cells: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        let n = players.len();
        if cells.len() != n || cells.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "cross-table over {n} players must be {n}x{n}"
            )));
        }
        Ok(CrossTable { players, cells })
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.players.iter().position(|p| p == name)
    }

    /// Row total: what `i` earns playing rows against everyone.
    pub fn rt(&self, i: usize) -> f64 {
        self.cells[i].iter().map(|c| c.0).sum()
    }

    /// Column total: what `j` earns playing columns against everyone.
    pub fn ct(&self, j: usize) -> f64 {
        self.cells.iter().map(|row| row[j].1).sum()
    }

    pub fn total(&self, i: usize) -> f64 {
        self.rt(i) + self.ct(i)
    }

    /// Players by decreasing T; ties by position.
    pub fn by_total(&self) -> Vec<(usize, f64)> {
        let mut order: Vec<(usize, f64)> = (0..self.len()).map(|i| (i, self.total(i))).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        order
    }
}

/// Cross-table of the active players of `ledger`, each cell averaged over
/// the games in which the pair met.
pub fn build_cross_table(ledger: &ScoreLedger, names: &[String]) -> Result<CrossTable> {
    if names.len() != ledger.n_players() {
        return Err(Error::InvalidArgument(format!(
            "{} names for a ledger of {} players",
            names.len(),
            ledger.n_players()
        )));
    }
    let active = ledger.active();
    let pos = |p: PlayerId| active.iter().position(|&a| a == p);
    let n = active.len();
    let mut sums = vec![vec![(0.0, 0.0, 0usize); n]; n];
    for r in ledger.retained() {
        let (Some(i), Some(j)) = (pos(r.row_player), pos(r.col_player)) else {
            continue;
        };
        let cell = &mut sums[i][j];
        cell.0 += r.mean_row();
        cell.1 += r.mean_col();
        cell.2 += 1;
    }
    let mut cells = vec![vec![(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let (a, b, count) = sums[i][j];
            if count == 0 {
                return Err(Error::IncompleteData(format!(
                    "no retained match with {} as row and {} as column",
                    names[active[i]], names[active[j]]
                )));
            }
            cells[i][j] = (a / count as f64, b / count as f64);
        }
    }
    CrossTable::new(active.iter().map(|&p| names[p].clone()).collect(), cells)
}

/// Extends `base` with an idealized player `name` that, against each
/// opponent and in each seat, plays like the best base player for that
/// situation; in self-play it takes the base cell with the largest sum.
pub fn perfect_hedger_projection(base: &CrossTable, name: &str) -> Result<CrossTable> {
    let n = base.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "projection needs at least two base players".into(),
        ));
    }
    let first_max = |values: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in values {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best.unwrap().0
    };
    let mut cells = base.cells.clone();
    for (l, row) in cells.iter_mut().enumerate() {
        let c = first_max(&mut (0..n).map(|c| (c, base.cells[l][c].1)));
        row.push(base.cells[l][c]);
    }
    let mut h_row: Vec<(f64, f64)> = (0..n)
        .map(|c| {
            let r = first_max(&mut (0..n).map(|r| (r, base.cells[r][c].0)));
            base.cells[r][c]
        })
        .collect();
    let best = first_max(&mut (0..n * n).map(|k| {
        let cell = base.cells[k / n][k % n];
        (k, cell.0 + cell.1)
    }));
    h_row.push(base.cells[best / n][best % n]);
    cells.push(h_row);
    let mut players = base.players.clone();
    players.push(name.to_owned());
    CrossTable::new(players, cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub player: String,
    pub mean_return: f64,
    /// Set on the first row only: whether its lead over the second passes
    /// the paired standard-error test.
    pub margin_significant: bool,
}

/// Best first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    pub rows: Vec<RankingRow>,
}

impl Ranking {
    pub fn from_report(report: &ExperimentReport) -> Self {
        let rows = report
            .ranking
            .iter()
            .enumerate()
            .map(|(i, e)| RankingRow {
                player: report.names[e.player].clone(),
                mean_return: e.mean_return,
                margin_significant: i == 0 && report.leader_margin_significant,
            })
            .collect();
        Ranking { rows }
    }

    /// 1-based rank of `player`.
    pub fn rank_of(&self, player: &str) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.player == player)
            .map(|i| i + 1)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Active players of `ledger` by decreasing mean per-step return.
pub fn ranking(ledger: &ScoreLedger) -> Vec<(PlayerId, f64)> {
    ledger.ranking()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeagueGrade {
    /// Neither first nor runner-up.
    Behind,
    /// Runner-up.
    RunnerUp,
    /// First.
    First,
    /// First with a significant margin.
    FirstClear,
}

impl fmt::Display for LeagueGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeagueGrade::Behind => "--",
            LeagueGrade::RunnerUp => "=",
            LeagueGrade::First => "+",
            LeagueGrade::FirstClear => "++",
        })
    }
}

/// Grade with the runner-up band covering ranks `2..=ceil(n/3)`.
pub fn league_grade(
    rank: usize,
    margin_significant: bool,
    league_size: usize,
) -> Result<LeagueGrade> {
    league_grade_with_band(
        rank,
        margin_significant,
        league_size,
        league_size.div_ceil(3),
    )
}

/// Grade with the runner-up band covering ranks `2..=band_end`.
pub fn league_grade_with_band(
    rank: usize,
    margin_significant: bool,
    league_size: usize,
    band_end: usize,
) -> Result<LeagueGrade> {
    if league_size < 3 {
        return Err(Error::InvalidArgument(format!(
            "grading needs a league of at least 3 players, got {league_size}"
        )));
    }
    if rank == 0 || rank > league_size {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={league_size}"
        )));
    }
    Ok(match rank {
        1 if margin_significant => LeagueGrade::FirstClear,
        1 => LeagueGrade::First,
        r if r <= band_end => LeagueGrade::RunnerUp,
        _ => LeagueGrade::Behind,
    })
}

fn fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    // no "-0.00"
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_owned()
    } else {
        s
    }
}

pub fn cross_table_to_csv(t: &CrossTable) -> String {
    let mut out = String::from("player");
    for p in &t.players {
        out.push(',');
        out.push_str(p);
    }
    out.push_str(",rt,T\n");
    for (i, p) in t.players.iter().enumerate() {
        out.push_str(p);
        for c in &t.cells[i] {
            out.push_str(&format!(",{};{}", fixed(c.0, 2), fixed(c.1, 2)));
        }
        out.push_str(&format!(
            ",{},{}\n",
            fixed(t.rt(i), 2),
            fixed(t.total(i), 2)
        ));
    }
    out.push_str("ct");
    for j in 0..t.len() {
        out.push_str(&format!(",{}", fixed(t.ct(j), 2)));
    }
    out.push_str(",,\n");
    out
}

/// Reads a table written by [`cross_table_to_csv`]. The rt, ct and T
/// columns are ignored; they follow from the cells.
pub fn cross_table_from_csv(text: &str) -> Result<CrossTable> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let err = |line: usize, msg: String| Error::Format { line, msg };
    let header: Vec<&str> = lines
        .first()
        .ok_or_else(|| err(1, "empty file".into()))?
        .split(',')
        .collect();
    if header.len() < 3 || header[0] != "player" || header[header.len() - 2..] != ["rt", "T"] {
        return Err(err(1, "expected header `player,<names>,rt,T`".into()));
    }
    let players: Vec<String> = header[1..header.len() - 2]
        .iter()
        .map(|s| s.trim().to_owned())
        .collect();
    let n = players.len();
    if lines.len() != n + 2 {
        return Err(err(
            lines.len(),
            format!("expected {n} player rows and a ct row"),
        ));
    }
    let mut cells = Vec::with_capacity(n);
    for (i, line) in lines[1..=n].iter().enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 3 {
            return Err(err(
                lineno,
                format!("expected {} fields, found {}", n + 3, fields.len()),
            ));
        }
        if fields[0].trim() != players[i] {
            return Err(err(
                lineno,
                format!(
                    "row `{}` out of order, expected `{}`",
                    fields[0], players[i]
                ),
            ));
        }
        let row = fields[1..=n]
            .iter()
            .map(|f| {
                let (a, b) = f
                    .split_once(';')
                    .ok_or_else(|| err(lineno, format!("cell `{f}` is not `first;second`")))?;
                let num = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| err(lineno, format!("invalid number `{s}`")))
                };
                Ok((num(a)?, num(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    if !lines[n + 1].starts_with("ct,") {
        return Err(err(n + 2, "expected the ct row".into()));
    }
    CrossTable::new(players, cells)
}

pub fn cross_table_to_markdown(t: &CrossTable) -> String {
    let mut out = String::from("| |");
    for p in &t.players {
        out.push_str(&format!(" {p} |"));
    }
    out.push_str(" rt | T |\n|---|");
    out.push_str(&"---|".repeat(t.len() + 2));
    out.push('\n');
    for (i, p) in t.players.iter().enumerate() {
        out.push_str(&format!("| {p} |"));
        for c in &t.cells[i] {
            out.push_str(&format!(" {}  {} |", fixed(c.0, 2), fixed(c.1, 2)));
        }
        out.push_str(&format!(
            " {} | {} |\n",
            fixed(t.rt(i), 2),
            fixed(t.total(i), 2)
        ));
    }
    out.push_str("| ct |");
    for j in 0..t.len() {
        out.push_str(&format!(" {} |", fixed(t.ct(j), 2)));
    }
    out.push_str(" | |\n");
    out
}

pub fn ranking_to_csv(r: &Ranking) -> String {
    let mut out = String::from("rank,player,mean_return,margin_significant\n");
    for (i, row) in r.rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            row.player,
            fixed(row.mean_return, 4),
            row.margin_significant
        ));
    }
    out
}

pub fn ranking_from_csv(text: &str) -> Result<Ranking> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "rank,player,mean_return,margin_significant" => {}
        _ => {
            return Err(Error::Format {
                line: 1,
                msg: "expected header `rank,player,mean_return,margin_significant`".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let err = |msg: String| Error::Format { line: lineno, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        if fields[0].parse::<usize>().ok() != Some(rows.len() + 1) {
            return Err(err(format!(
                "expected rank {}, found `{}`",
                rows.len() + 1,
                fields[0]
            )));
        }
        let mean_return = fields[2]
            .parse::<f64>()
            .map_err(|_| err(format!("invalid number `{}`", fields[2])))?;
        let margin_significant = fields[3]
            .parse::<bool>()
            .map_err(|_| err(format!("invalid flag `{}`", fields[3])))?;
        rows.push(RankingRow {
            player: fields[1].to_owned(),
            mean_return,
            margin_significant,
        });
    }
    Ok(Ranking { rows })
}

pub fn ranking_to_markdown(r: &Ranking) -> String {
    let mut out = String::from("| rank | player | av. return |\n|---|---|---|\n");
    for (i, row) in r.rows.iter().enumerate() {
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            i + 1,
            row.player,
            fixed(row.mean_return, 3)
        ));
    }
    out
}

/// Human-readable summary of an experiment.
pub fn render_report(report: &ExperimentReport, table: &CrossTable, specs: &[String]) -> String {
    let mut out = String::from("# Experiment report\n\n");
    out.push_str(&format!(
        "{} games, {} steps per match, elimination {}.\n\n## Players\n\n",
        report.games_played,
        report.steps,
        if report.elimination { "on" } else { "off" }
    ));
    for (name, spec) in report.names.iter().zip(specs) {
        if name == spec {
            out.push_str(&format!("- {name}\n"));
        } else {
            out.push_str(&format!("- {name} = {spec}\n"));
        }
    }
    out.push_str("\n## Cross-table\n\n");
    out.push_str(&cross_table_to_markdown(table));
    out.push_str("\n## Ranking\n\n");
    let ranking = Ranking::from_report(report);
    out.push_str(&ranking_to_markdown(&ranking));
    if report.elimination {
        out.push_str("\n## Eliminations\n\n");
        if report.eliminations.is_empty() {
            out.push_str("none\n");
        }
        for e in &report.eliminations {
            out.push_str(&format!(
                "- {} after game {} with {}\n",
                report.names[e.player],
                e.after_game + 1,
                fixed(e.mean_return, 3)
            ));
        }
    }
    if ranking.len() >= 2 {
        out.push_str(&format!(
            "\nLeader's margin over the runner-up is {}significant.\n",
            if report.leader_margin_significant {
                ""
            } else {
                "not "
            }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tournament::MatchResult;

    pub(crate) fn table1() -> CrossTable {
        CrossTable::new(
            vec!["U".into(), "G".into(), "S".into()],
            vec![
                vec![(4.45, 4.42), (4.11, 4.48), (5.77, 4.33)],
                vec![(4.53, 4.07), (3.12, 3.04), (4.59, 4.35)],
                vec![(4.15, 5.86), (4.35, 4.77), (4.85, 4.99)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn table1_aggregates() {
        let t = table1();
        assert!((t.rt(0) - 14.33).abs() < 1e-9);
        assert!((t.ct(0) - 14.35).abs() < 1e-9);
        assert!((t.total(0) - 28.68).abs() < 1e-9);
        let md = cross_table_to_markdown(&t);
        let rts: Vec<f64> = md
            .lines()
            .skip(2)
            .take(3)
            .map(|l| l.split('|').nth(5).unwrap().trim().parse().unwrap())
            .collect();
        // the printed 13.34 comes from unrounded cells; the rounded ones sum to 13.35
        for (got, printed) in rts.iter().zip([14.33, 12.24, 13.34]) {
            assert!((got - printed).abs() <= 0.01 + 1e-9, "{got} vs {printed}");
        }
    }

    #[test]
    fn projection_cells() {
        let h = perfect_hedger_projection(&table1(), "H").unwrap();
        assert_eq!(h.cells[0][3], (4.11, 4.48));
        assert_eq!(h.cells[3][0], (4.53, 4.07));
        assert_eq!(h.cells[3][3], (5.77, 4.33));
        assert!((h.total(3) - 39.44).abs() < 0.005);
        assert!(perfect_hedger_projection(
            &CrossTable::new(vec!["A".into()], vec![vec![(1.0, 1.0)]]).unwrap(),
            "H"
        )
        .is_err());
    }

    #[test]
    fn ties_take_first_in_order() {
        let t = CrossTable::new(
            vec!["A".into(), "B".into()],
            vec![vec![(1.0, 2.0), (3.0, 2.0)], vec![(1.0, 0.0), (0.0, 0.0)]],
        )
        .unwrap();
        let h = perfect_hedger_projection(&t, "H").unwrap();
        assert_eq!(h.cells[0][2], (1.0, 2.0));
        assert_eq!(h.cells[2][0], (1.0, 2.0));
    }

    #[test]
    fn zero_self_play_table() {
        let mut ledger = ScoreLedger::new(1);
        ledger
            .add_results([MatchResult {
                game_index: 0,
                row_player: 0,
                col_player: 0,
                total_row: 0.0,
                total_col: 0.0,
                steps: 10,
            }])
            .unwrap();
        let t = build_cross_table(&ledger, &["R".into()]).unwrap();
        assert_eq!(t.cells[0][0], (0.0, 0.0));
        assert_eq!((t.rt(0), t.ct(0), t.total(0)), (0.0, 0.0, 0.0));
        let empty = ScoreLedger::new(2);
        assert!(matches!(
            build_cross_table(&empty, &["A".into(), "B".into()]),
            Err(Error::IncompleteData(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let text = cross_table_to_csv(&table1());
        assert!(
            text.starts_with("player,U,G,S,rt,T\nU,4.45;4.42,4.11;4.48,5.77;4.33,14.33,28.68\n")
        );
        assert!(text.ends_with("ct,14.35,12.29,13.67,,\n"));
        let parsed = cross_table_from_csv(&text).unwrap();
        assert_eq!(cross_table_to_csv(&parsed), text);
        let messy = CrossTable::new(
            vec!["A".into(), "B".into()],
            vec![vec![(1.004, -0.001), (2.0 / 3.0, 1.0)]; 2],
        )
        .unwrap();
        let once = cross_table_to_csv(&cross_table_from_csv(&cross_table_to_csv(&messy)).unwrap());
        assert_eq!(
            cross_table_to_csv(&cross_table_from_csv(&once).unwrap()),
            once
        );
        assert!(!once.contains("-0.00"));
        assert!(matches!(
            cross_table_from_csv("player,A,rt,T\nA,1;x,1,2\nct,1,,\n"),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn ranking_csv() {
        assert_eq!(
            ranking_to_csv(&Ranking::default()),
            "rank,player,mean_return,margin_significant\n"
        );
        let r = Ranking {
            rows: vec![
                RankingRow {
                    player: "HSUM".into(),
                    mean_return: 4.88,
                    margin_significant: true,
                },
                RankingRow {
                    player: "R".into(),
                    mean_return: -2.78,
                    margin_significant: false,
                },
            ],
        };
        let text = ranking_to_csv(&r);
        assert_eq!(ranking_from_csv(&text).unwrap(), r);
        assert_eq!(r.rank_of("R"), Some(2));
    }

    #[test]
    fn grades() {
        assert_eq!(league_grade(1, true, 6).unwrap(), LeagueGrade::FirstClear);
        assert_eq!(league_grade(1, false, 6).unwrap(), LeagueGrade::First);
        assert_eq!(league_grade(2, true, 6).unwrap(), LeagueGrade::RunnerUp);
        assert_eq!(league_grade(3, false, 6).unwrap(), LeagueGrade::Behind);
        assert_eq!(league_grade(4, false, 10).unwrap(), LeagueGrade::RunnerUp);
        assert_eq!(league_grade(5, false, 10).unwrap(), LeagueGrade::Behind);
        assert!(league_grade(1, false, 2).is_err());
        assert!(league_grade(0, false, 5).is_err());
        assert_eq!(LeagueGrade::FirstClear.to_string(), "++");
        assert_eq!(LeagueGrade::Behind.to_string(), "--");
    }
}
