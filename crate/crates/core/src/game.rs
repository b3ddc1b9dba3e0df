//! Two-player matrix games and the bits of game theory the players lean on:
//! pure best responses, the mixed maximin (security) strategy and the bully
//! action.
//!
//! Matrices are always square. When a matrix is handed to a player it is in
//! that player's own orientation: rows are its own actions, columns the
//! opponent's.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest payoff a generated game can contain.
pub const R_MIN: f64 = -9.0;
/// Highest payoff a generated game can contain.
pub const R_MAX: f64 = 9.0;

/// Dense row-major K×K matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    k: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "matrix must have at least one row".into(),
            ));
        }
        let mut data = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { k, data })
    }

    pub fn filled(k: usize, value: f64) -> Self {
        Matrix {
            k,
            data: vec![value; k * k],
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.k).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let k = self.k;
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                data[j * k + i] = self.data[i * k + j];
            }
        }
        Matrix { k, data }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.k)
    }
}

/// A two-player game given by the row player's and the column player's payoff
/// matrices. `payoff_col[i][j]` is the column player's return for joint
/// action `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    payoff_row: Matrix,
    payoff_col: Matrix,
}

/// Which side of the matrix a player sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Row,
    Col,
}

/// A game seen from one player's seat: `own[a][b]` and `opp[a][b]` are the
/// returns of this player and of its opponent when this player plays `a` and
/// the opponent plays `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameView {
    pub own: Matrix,
    pub opp: Matrix,
}

impl MatrixGame {
    pub fn new(payoff_row: Matrix, payoff_col: Matrix) -> Result<Self> {
        let k = payoff_row.size();
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "games need at least 2 actions, got {k}"
            )));
        }
        if payoff_col.size() != k {
            return Err(Error::InvalidArgument(format!(
                "payoff matrices differ in size ({k} vs {})",
                payoff_col.size()
            )));
        }
        for m in [&payoff_row, &payoff_col] {
            if m.data.iter().any(|v| !(R_MIN..=R_MAX).contains(v)) {
                return Err(Error::InvalidArgument(format!(
                    "payoffs must lie in [{R_MIN}, {R_MAX}]"
                )));
            }
        }
        Ok(MatrixGame {
            payoff_row,
            payoff_col,
        })
    }

    pub fn from_rows(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(row)?, Matrix::from_rows(col)?)
    }

    pub fn n_actions(&self) -> usize {
        self.payoff_row.size()
    }

    pub fn payoff_row(&self) -> &Matrix {
        &self.payoff_row
    }

    pub fn payoff_col(&self) -> &Matrix {
        &self.payoff_col
    }

    /// Returns of (row, column) for the joint action `(i, j)`.
    #[inline]
    pub fn payoffs(&self, i: usize, j: usize) -> (f64, f64) {
        (self.payoff_row.get(i, j), self.payoff_col.get(i, j))
    }

    pub fn view(&self, role: Role) -> GameView {
        match role {
            Role::Row => GameView {
                own: self.payoff_row.clone(),
                opp: self.payoff_col.clone(),
            },
            Role::Col => GameView {
                own: self.payoff_col.transpose(),
                opp: self.payoff_row.transpose(),
            },
        }
    }
}

/// An ordered list of games drawn from one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSet {
    pub games: Vec<MatrixGame>,
    pub seed: u64,
    pub n_actions: usize,
}

impl GameSet {
    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    /// Serializes to the `RMG1` text format (6 fractional digits per payoff).
    pub fn to_rmg1(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "RMG1 games={} actions={} seed={}",
            self.games.len(),
            self.n_actions,
            self.seed
        );
        for (g, game) in self.games.iter().enumerate() {
            let _ = writeln!(out, "game {g}");
            for m in [game.payoff_row(), game.payoff_col()] {
                for row in m.rows() {
                    let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                    let _ = writeln!(out, "{}", line.join(" "));
                }
            }
        }
        out
    }

    pub fn from_rmg1(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (_, header) = lines.next().ok_or(Error::Format {
            line: 1,
            msg: "empty games file".into(),
        })?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("RMG1") {
            return Err(Error::Format {
                line: 1,
                msg: "missing RMG1 magic".into(),
            });
        }
        let mut n = None;
        let mut k = None;
        let mut seed = None;
        for f in fields {
            let (key, value) = f.split_once('=').ok_or_else(|| Error::Format {
                line: 1,
                msg: format!("bad header field `{f}`"),
            })?;
            let bad = || Error::Format {
                line: 1,
                msg: format!("bad value in `{f}`"),
            };
            match key {
                "games" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "actions" => k = Some(value.parse::<usize>().map_err(|_| bad())?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad())?),
                _ => {
                    return Err(Error::Format {
                        line: 1,
                        msg: format!("unknown header key `{key}`"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::Format {
            line: 1,
            msg: format!("header lacks `{what}`"),
        };
        let n = n.ok_or_else(|| missing("games"))?;
        let k = k.ok_or_else(|| missing("actions"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;

        let mut games = Vec::with_capacity(n);
        for g in 0..n {
            let (ln, line) = lines.next().ok_or(Error::Format {
                line: 0,
                msg: format!("missing game {g}"),
            })?;
            if line != format!("game {g}") {
                return Err(Error::Format {
                    line: ln,
                    msg: format!("expected `game {g}`"),
                });
            }
            let mut read_matrix = || -> Result<Matrix> {
                let mut rows = Vec::with_capacity(k);
                for _ in 0..k {
                    let (ln, line) = lines.next().ok_or(Error::Format {
                        line: 0,
                        msg: "truncated matrix".into(),
                    })?;
                    let row = line
                        .split_whitespace()
                        .map(|v| v.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::Format {
                            line: ln,
                            msg: e.to_string(),
                        })?;
                    if row.len() != k {
                        return Err(Error::Format {
                            line: ln,
                            msg: format!("expected {k} values, found {}", row.len()),
                        });
                    }
                    rows.push(row);
                }
                Matrix::from_rows(&rows)
            };
            let row = read_matrix()?;
            let col = read_matrix()?;
            games.push(MatrixGame::new(row, col)?);
        }
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(Error::Format {
                line: ln,
                msg: format!("trailing content `{extra}`"),
            });
        }
        Ok(GameSet {
            games,
            seed,
            n_actions: k,
        })
    }
}

/// Draws `n` games with `k` actions per player, every payoff uniform on
/// `[R_MIN, R_MAX]`.
pub fn generate_random_games(n: usize, k: usize, seed: u64) -> Result<GameSet> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need k >= 2 actions, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| Matrix {
        k,
        data: (0..k * k).map(|_| rng.gen_range(R_MIN..=R_MAX)).collect(),
    };
    let games = (0..n)
        .map(|_| {
            let row = draw(&mut rng);
            let col = draw(&mut rng);
            MatrixGame {
                payoff_row: row,
                payoff_col: col,
            }
        })
        .collect();
    Ok(GameSet {
        games,
        seed,
        n_actions: k,
    })
}

/// Probability vector over K actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "probabilities must be non-negative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(MixedStrategy { probs })
    }

    pub fn pure(k: usize, action: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[action] = 1.0;
        MixedStrategy { probs }
    }

    pub fn uniform(k: usize) -> Self {
        MixedStrategy {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Inverse-CDF draw; falls back to the last action with positive mass
    /// when rounding leaves `u` past the cumulative sum.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

/// Security level and a strategy that attains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximinSolution {
    pub value: f64,
    pub strategy: MixedStrategy,
}

/// All own actions that maximize the payoff against `opponent_action`.
pub fn best_response_pure(own_payoffs: &Matrix, opponent_action: usize) -> Result<Vec<usize>> {
    let k = own_payoffs.size();
    if opponent_action >= k {
        return Err(Error::InvalidArgument(format!(
            "opponent action {opponent_action} out of range for {k} actions"
        )));
    }
    Ok(argmax_set(
        (0..k).map(|i| own_payoffs.get(i, opponent_action)),
    ))
}

/// Indices attaining the maximum of `values` (exact comparison).
pub(crate) fn argmax_set(values: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut set = Vec::new();
    for (i, v) in values.into_iter().enumerate() {
        if v > best {
            best = v;
            set.clear();
            set.push(i);
        } else if v == best {
            set.push(i);
        }
    }
    set
}

/// `Σ_ij σ_row[i] σ_col[j] m[i][j]`.
pub fn expected_payoff(
    matrix: &Matrix,
    sigma_row: &MixedStrategy,
    sigma_col: &MixedStrategy,
) -> Result<f64> {
    let k = matrix.size();
    if sigma_row.len() != k || sigma_col.len() != k {
        return Err(Error::InvalidArgument(format!(
            "strategy lengths ({}, {}) do not match a {k}x{k} matrix",
            sigma_row.len(),
            sigma_col.len()
        )));
    }
    let mut total = 0.0;
    for (i, pi) in sigma_row.probs.iter().enumerate() {
        for (j, pj) in sigma_col.probs.iter().enumerate() {
            total += pi * pj * matrix.get(i, j);
        }
    }
    Ok(total)
}

/// Row action the bully commits to: the row maximizing its own payoff when
/// the opponent best-responds. Among the opponent's best responses we assume
/// the one that hurts us most; remaining ties go to the lowest row.
pub fn bully_action(own_payoffs: &Matrix, opp_payoffs: &Matrix) -> usize {
    let k = own_payoffs.size();
    let mut best_action = 0;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..k {
        let replies = argmax_set(opp_payoffs.row(i).iter().copied());
        let value = replies
            .iter()
            .map(|&j| own_payoffs.get(i, j))
            .fold(f64::INFINITY, f64::min);
        if value > best_value {
            best_value = value;
            best_action = i;
        }
    }
    best_action
}

const PIVOT_EPS: f64 = 1e-12;

/// Mixed maximin strategy of the row player of `own_payoffs`.
///
/// The payoffs are shifted to be strictly positive, after which the column
/// player's problem `max Σy  s.t. B y <= 1, y >= 0` is solved with a dense
/// simplex (Bland's rule, so it terminates on degenerate games). The row
/// strategy is read off the slack columns of the final objective row.
pub fn maximin_solve(own_payoffs: &Matrix) -> MaximinSolution {
    let k = own_payoffs.size();
    let shift = 1.0 - own_payoffs.min();
    let width = 2 * k + 1; // k structural, k slack, rhs
    let mut tab = vec![0.0; (k + 1) * width];
    for i in 0..k {
        let row = &mut tab[i * width..(i + 1) * width];
        for (j, cell) in row[..k].iter_mut().enumerate() {
            *cell = own_payoffs.get(i, j) + shift;
        }
        row[k + i] = 1.0;
        row[2 * k] = 1.0;
    }
    let obj = k * width;
    for j in 0..k {
        tab[obj + j] = -1.0;
    }
    let mut basis: Vec<usize> = (k..2 * k).collect();

    while let Some(enter) = (0..2 * k).find(|&c| tab[obj + c] < -PIVOT_EPS) {
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..k {
            let a = tab[r * width + enter];
            if a > PIVOT_EPS {
                let ratio = tab[r * width + 2 * k] / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best_ratio - PIVOT_EPS
                            || (ratio <= best_ratio + PIVOT_EPS && basis[r] < basis[l])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(r);
                }
            }
        }
        // B > 0 keeps the problem bounded, so an entering column always has a
        // positive entry.
        let r = leave.expect("maximin LP is bounded");
        pivot(&mut tab, width, r, enter);
        basis[r] = enter;
    }

    let mut u: Vec<f64> = (0..k).map(|i| tab[obj + k + i].max(0.0)).collect();
    let total: f64 = u.iter().sum();
    for p in &mut u {
        *p /= total;
    }
    let value = 1.0 / tab[obj + 2 * k] - shift;
    MaximinSolution {
        value,
        strategy: MixedStrategy { probs: u },
    }
}

fn pivot(tab: &mut [f64], width: usize, r: usize, c: usize) {
    let p = tab[r * width + c];
    for v in &mut tab[r * width..(r + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = tab[r * width..(r + 1) * width].to_vec();
    let rows = tab.len() / width;
    for rr in 0..rows {
        if rr == r {
            continue;
        }
        let f = tab[rr * width + c];
        if f != 0.0 {
            for (v, pv) in tab[rr * width..(rr + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
}

/// Worst-case expected payoff of `strategy` over the opponent's pure actions.
pub fn security_level(own_payoffs: &Matrix, strategy: &MixedStrategy) -> f64 {
    let k = own_payoffs.size();
    (0..k)
        .map(|j| {
            (0..k)
                .map(|i| strategy.probs[i] * own_payoffs.get(i, j))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn generation_edge_cases() {
        assert!(generate_random_games(0, 3, 7).unwrap().is_empty());
        assert!(generate_random_games(3, 1, 7).is_err());
        let set = generate_random_games(2, 3, 42).unwrap();
        assert_eq!(set.len(), 2);
        let n = set
            .games
            .iter()
            .flat_map(|g| g.payoff_row().rows().chain(g.payoff_col().rows()))
            .flatten()
            .inspect(|v| assert!((-9.0..=9.0).contains(*v)))
            .count();
        assert_eq!(n, 36);
        assert_eq!(
            generate_random_games(5, 3, 42),
            generate_random_games(5, 3, 42)
        );
    }

    #[test]
    fn best_response_ties() {
        let own = m(&[&[2.0, 0.0, 0.0], &[5.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]]);
        assert_eq!(best_response_pure(&own, 0).unwrap(), vec![1]);
        let own = m(&[&[3.0, 0.0, 0.0], &[3.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(best_response_pure(&own, 0).unwrap(), vec![0, 1]);
        assert_eq!(
            best_response_pure(&Matrix::filled(4, 1.0), 2).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert!(best_response_pure(&own, 3).is_err());
    }

    #[test]
    fn maximin_examples() {
        let s = maximin_solve(&m(&[&[9.0, -9.0], &[-9.0, 9.0]]));
        assert!(s.value.abs() < 1e-9);
        assert!((s.strategy.probs()[0] - 0.5).abs() < 1e-9);

        let s = maximin_solve(&m(&[&[2.0, -1.0], &[-1.0, 1.0]]));
        assert!((s.value - 0.2).abs() < 1e-9);
        assert!((s.strategy.probs()[0] - 0.4).abs() < 1e-9);
        assert!((s.strategy.probs()[1] - 0.6).abs() < 1e-9);

        let s = maximin_solve(&m(&[&[5.0, 4.0], &[3.0, 2.0]]));
        assert!((s.value - 4.0).abs() < 1e-9);
        assert!((s.strategy.probs()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn maximin_degenerate_constant() {
        let s = maximin_solve(&Matrix::filled(3, -2.5));
        assert!((s.value + 2.5).abs() < 1e-12);
        assert!((s.strategy.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bully_examples() {
        let own = m(&[&[3.0, 0.0], &[5.0, 1.0]]);
        let opp = m(&[&[3.0, 5.0], &[0.0, 1.0]]);
        assert_eq!(bully_action(&own, &opp), 1);
        let id = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(bully_action(&id, &id), 0);
        let own = m(&[&[9.0, -9.0], &[-9.0, 9.0]]);
        let opp = m(&[&[-9.0, 9.0], &[9.0, -9.0]]);
        assert_eq!(bully_action(&own, &opp), 0);
    }

    #[test]
    fn bully_pessimistic_opponent_tie() {
        // opponent indifferent in row 0; we assume it picks the column worst for us
        let own = m(&[&[8.0, -3.0], &[1.0, 2.0]]);
        let opp = m(&[&[4.0, 4.0], &[0.0, 1.0]]);
        assert_eq!(bully_action(&own, &opp), 1);
    }

    #[test]
    fn expected_payoff_examples() {
        let a = m(&[&[2.0, -1.0], &[-1.0, 1.0]]);
        let v =
            expected_payoff(&a, &MixedStrategy::pure(2, 1), &MixedStrategy::pure(2, 0)).unwrap();
        assert_eq!(v, -1.0);
        let c = Matrix::filled(3, 1.75);
        let u = MixedStrategy::uniform(3);
        assert!((expected_payoff(&c, &u, &u).unwrap() - 1.75).abs() < 1e-15);
        let s = MixedStrategy::new(vec![0.4, 0.6]).unwrap();
        let v = expected_payoff(&a, &s, &MixedStrategy::pure(2, 0)).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert!(expected_payoff(&a, &u, &s).is_err());
    }

    #[test]
    fn column_view_is_transposed() {
        let g = MatrixGame::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            &[vec![5.0, 6.0], vec![7.0, 8.0]],
        )
        .unwrap();
        let v = g.view(Role::Col);
        // column player plays 1, row player plays 0 -> joint (0, 1)
        assert_eq!(v.own.get(1, 0), 6.0);
        assert_eq!(v.opp.get(1, 0), 2.0);
    }

    #[test]
    fn rmg1_round_trip() {
        let set = generate_random_games(3, 3, 11).unwrap();
        let text = set.to_rmg1();
        assert!(text.starts_with("RMG1 games=3 actions=3 seed=11\ngame 0\n"));
        let back = GameSet::from_rmg1(&text).unwrap();
        assert_eq!(back.to_rmg1(), text);
        assert_eq!(back.len(), 3);
        assert!(GameSet::from_rmg1("RMG1 games=1 actions=2 seed=0\ngame 0\n1 2\n").is_err());
        assert!(GameSet::from_rmg1("RMG2 games=0 actions=2 seed=0\n").is_err());
    }

    #[test]
    fn rejects_out_of_range_payoffs() {
        assert!(MatrixGame::from_rows(
            &[vec![10.0, 0.0], vec![0.0, 0.0]],
            &[vec![0.0, 0.0], vec![0.0, 0.0]]
        )
        .is_err());
    }
}
