#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

use hedgeplay::expr::PlayerSpec;
use hedgeplay::game::{MatrixGame, R_MAX, R_MIN};
use hedgeplay::players::{Algorithm, BaseSpec};
use hedgeplay::tournament::MatchRunner;

pub fn random_game<R: Rng>(rng: &mut R, k: usize) -> MatrixGame {
    let mut m = || -> Vec<Vec<f64>> {
        (0..k)
            .map(|_| (0..k).map(|_| rng.gen_range(R_MIN..=R_MAX)).collect())
            .collect()
    };
    let row = m();
    let col = m();
    MatrixGame::from_rows(&row, &col).unwrap()
}

fn random_params<R: Rng>(rng: &mut R, base: &BaseSpec) -> BTreeMap<String, f64> {
    let mut params = BTreeMap::new();
    for &key in base.algorithm.parameter_keys() {
        if !rng.gen_bool(0.3) || (key == "window" && !base.window) {
            continue;
        }
        let value = match (base.algorithm, key) {
            (Algorithm::U, "C") => rng.gen_range(0.0..200.0),
            (Algorithm::S, "alpha") => rng.gen_range(-9.0..20.0),
            (Algorithm::M3, "lambda") => rng.gen_range(0.0..0.1),
            (_, "gamma") if base.algorithm == Algorithm::Exp3 => rng.gen_range(0.0001..0.5),
            _ => rng.gen_range(0.001..0.999),
        };
        params.insert(key.to_owned(), value);
    }
    params
}

pub fn random_base<R: Rng>(rng: &mut R, reward_only: bool) -> PlayerSpec {
    let pool: Vec<Algorithm> = Algorithm::ALL
        .into_iter()
        .filter(|a| !reward_only || a.needs().is_reward_only())
        .collect();
    let algorithm = *pool.choose(rng).unwrap();
    let mut base = BaseSpec::plain(algorithm);
    if algorithm.supports_heuristics() {
        base.window = rng.gen_bool(0.4);
        base.state = !reward_only && rng.gen_bool(0.4);
    }
    base.params = random_params(rng, &base);
    PlayerSpec::Base(base)
}

/// Random valid tree with hedges nested at most `max_depth` deep.
pub fn random_spec<R: Rng>(rng: &mut R, max_depth: usize) -> PlayerSpec {
    if max_depth == 0 || rng.gen_bool(0.4) {
        return random_base(rng, false);
    }
    let top = random_base(rng, true);
    let n = rng.gen_range(2..=4);
    let experts = (0..n).map(|_| random_spec(rng, max_depth - 1)).collect();
    PlayerSpec::hedge(top, experts)
}

/// Random tree that is a hedge at the root.
pub fn random_hedge<R: Rng>(rng: &mut R, max_depth: usize) -> PlayerSpec {
    loop {
        let spec = random_spec(rng, max_depth);
        if spec.depth() >= 1 {
            return spec;
        }
    }
}

fn is_hedge(snap: &Value) -> bool {
    snap.get("experts").is_some() && snap.get("top").is_some()
}

/// Walks the chosen path of a hedge tree; every expert off the path must be
/// identical before and after the step.
fn check_frozen(before: &Value, mid: &Value, after: &Value, path: &str) -> Result<(), String> {
    if !is_hedge(mid) {
        return Ok(());
    }
    let chosen = mid["last_chosen"]
        .as_u64()
        .ok_or(format!("{path}: no expert chosen"))? as usize;
    let experts = before["experts"].as_array().unwrap();
    for e in 0..experts.len() {
        let (b, a) = (&before["experts"][e], &after["experts"][e]);
        if e == chosen {
            check_frozen(b, &mid["experts"][e], a, &format!("{path}/{e}"))?;
        } else if b != a {
            return Err(format!(
                "{path}/{e} changed while expert {chosen} was playing"
            ));
        }
    }
    Ok(())
}

/// Plays `steps` steps and checks the freeze invariant for both seats after
/// every step. Returns the number of hedge-node checks performed.
pub fn freeze_violations(runner: &mut MatchRunner<'_>, steps: usize) -> Result<usize, String> {
    let mut checks = 0;
    for step in 0..steps {
        let before = (
            runner.row_player().snapshot(),
            runner.col_player().snapshot(),
        );
        let (a, b) = runner.select();
        let mid = (
            runner.row_player().snapshot(),
            runner.col_player().snapshot(),
        );
        runner.settle(a, b).map_err(|e| e.to_string())?;
        let after = (
            runner.row_player().snapshot(),
            runner.col_player().snapshot(),
        );
        check_frozen(&before.0, &mid.0, &after.0, &format!("step {step} row"))?;
        check_frozen(&before.1, &mid.1, &after.1, &format!("step {step} col"))?;
        checks += usize::from(is_hedge(&mid.0)) + usize::from(is_hedge(&mid.1));
    }
    Ok(checks)
}
