//! Basic players: random, greedy, bully, maximin, fictitious play, J, Q,
//! satisficing, UCB, Exp3 and M3, plus the window (`+w`) and state (`+s`)
//! heuristics for U, Q and J.
//!
//! Every player is driven through [`Player`]: it is built for one match from
//! only the information its [`InformationNeeds`] declare, asked for an action
//! once per step and then told what happened.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameView;

mod bandit;
mod baseline;
pub mod formulas;
mod learners;

pub use bandit::{Exp3, Ucb};
pub use baseline::{Bully, Greedy, MinMax, Uniform};
pub use learners::{FictitiousPlay, JointReturns, QLearner, Satisficer, M3};

/// Which parts of an observation (and of the game) a player may see.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformationNeeds {
    pub needs_matrix: bool,
    pub needs_opponent_action: bool,
    pub needs_counterfactuals: bool,
}

impl InformationNeeds {
    pub const REWARD_ONLY: InformationNeeds = InformationNeeds {
        needs_matrix: false,
        needs_opponent_action: false,
        needs_counterfactuals: false,
    };

    pub fn union(self, other: InformationNeeds) -> InformationNeeds {
        InformationNeeds {
            needs_matrix: self.needs_matrix || other.needs_matrix,
            needs_opponent_action: self.needs_opponent_action || other.needs_opponent_action,
            needs_counterfactuals: self.needs_counterfactuals || other.needs_counterfactuals,
        }
    }

    pub fn is_reward_only(self) -> bool {
        self == Self::REWARD_ONLY
    }
}

/// What a player is told after a simultaneous step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<'a> {
    pub own_action: usize,
    pub reward: f64,
    pub opponent_action: Option<usize>,
    /// Own payoff for each of our actions against the opponent's actual
    /// action; entry `own_action` equals `reward`.
    pub counterfactual_rewards: Option<&'a [f64]>,
}

impl<'a> Observation<'a> {
    pub fn reward_only(own_action: usize, reward: f64) -> Self {
        Observation {
            own_action,
            reward,
            opponent_action: None,
            counterfactual_rewards: None,
        }
    }

    /// Drops every field `needs` does not ask for.
    pub fn filtered(&self, needs: InformationNeeds) -> Observation<'a> {
        Observation {
            own_action: self.own_action,
            reward: self.reward,
            opponent_action: self.opponent_action.filter(|_| needs.needs_opponent_action),
            counterfactual_rewards: self
                .counterfactual_rewards
                .filter(|_| needs.needs_counterfactuals),
        }
    }
}

/// Step counter of the current match (`t` starts at 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchClock {
    pub t: u64,
    pub n_actions: usize,
}

impl MatchClock {
    pub fn start(n_actions: usize) -> Self {
        MatchClock { t: 1, n_actions }
    }

    pub fn tick(&mut self) {
        self.t += 1;
    }
}

/// Previous joint action `(i, j)` encoded as `i*K + j`, with `K*K` reserved
/// for "no step played yet".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateIndex(pub usize);

impl StateIndex {
    pub fn initial(k: usize) -> Self {
        StateIndex(k * k)
    }

    pub fn joint(own: usize, opp: usize, k: usize) -> Self {
        StateIndex(own * k + opp)
    }

    pub fn count(k: usize) -> usize {
        k * k + 1
    }
}

/// Behavioral contract every player follows.
pub trait Player: Send {
    fn needs(&self) -> InformationNeeds;

    fn select_action(&mut self, clock: MatchClock) -> usize;

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()>;

    /// Full internal state, random generator included.
    fn snapshot(&self) -> serde_json::Value;
}

/// The basic algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    R,
    G,
    B,
    MinMax,
    F,
    J,
    Q,
    S,
    U,
    Exp3,
    M3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::R,
        Algorithm::G,
        Algorithm::B,
        Algorithm::MinMax,
        Algorithm::F,
        Algorithm::J,
        Algorithm::Q,
        Algorithm::S,
        Algorithm::U,
        Algorithm::Exp3,
        Algorithm::M3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::R => "R",
            Algorithm::G => "G",
            Algorithm::B => "B",
            Algorithm::MinMax => "MinMax",
            Algorithm::F => "F",
            Algorithm::J => "J",
            Algorithm::Q => "Q",
            Algorithm::S => "S",
            Algorithm::U => "U",
            Algorithm::Exp3 => "Exp3",
            Algorithm::M3 => "M3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Information the plain algorithm (no heuristics) uses.
    pub fn needs(self) -> InformationNeeds {
        let mut needs = InformationNeeds::REWARD_ONLY;
        match self {
            Algorithm::G | Algorithm::B | Algorithm::MinMax | Algorithm::M3 => {
                needs.needs_matrix = true
            }
            Algorithm::F => needs.needs_opponent_action = true,
            Algorithm::J => needs.needs_counterfactuals = true,
            Algorithm::R | Algorithm::Q | Algorithm::S | Algorithm::U | Algorithm::Exp3 => {}
        }
        needs
    }

    /// Whether the `+w` / `+s` heuristics apply.
    pub fn supports_heuristics(self) -> bool {
        matches!(self, Algorithm::U | Algorithm::Q | Algorithm::J)
    }

    /// Parameter names accepted in `{key=value}` overrides.
    pub fn parameter_keys(self) -> &'static [&'static str] {
        match self {
            Algorithm::Q => &["gamma", "window"],
            Algorithm::S => &["alpha", "lambda"],
            Algorithm::M3 => &["gamma", "alpha", "lambda"],
            Algorithm::U => &["C", "window"],
            Algorithm::Exp3 => &["gamma"],
            Algorithm::J => &["window"],
            _ => &[],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A basic algorithm with its heuristics and parameter overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSpec {
    pub algorithm: Algorithm,
    pub window: bool,
    pub state: bool,
    pub params: BTreeMap<String, f64>,
}

impl BaseSpec {
    pub fn plain(algorithm: Algorithm) -> Self {
        BaseSpec {
            algorithm,
            window: false,
            state: false,
            params: BTreeMap::new(),
        }
    }

    pub fn needs(&self) -> InformationNeeds {
        let mut needs = self.algorithm.needs();
        // the state heuristic indexes statistics by the last joint action
        if self.state {
            needs.needs_opponent_action = true;
        }
        needs
    }

    pub fn validate(&self) -> Result<()> {
        if (self.window || self.state) && !self.algorithm.supports_heuristics() {
            return Err(Error::Config(format!(
                "heuristics +w/+s are only available for U, Q and J, not {}",
                self.algorithm
            )));
        }
        AlgorithmParams::resolve(self).map(|_| ())
    }
}

/// Tunable constants of the basic algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    pub q_gamma: f64,
    pub s_aspiration: f64,
    pub s_lambda: f64,
    pub m3_gamma: f64,
    pub m3_alpha: f64,
    pub m3_lambda: f64,
    pub ucb_c: f64,
    pub exp3_gamma: f64,
    pub window_rate: f64,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            q_gamma: 0.95,
            s_aspiration: 12.0,
            s_lambda: 0.99,
            m3_gamma: 0.95,
            m3_alpha: 0.1,
            m3_lambda: 0.01,
            ucb_c: 100.0,
            exp3_gamma: 0.001,
            window_rate: 0.01,
        }
    }
}

impl AlgorithmParams {
    /// Defaults with the overrides of `spec` applied and range-checked.
    pub fn resolve(spec: &BaseSpec) -> Result<Self> {
        let mut p = AlgorithmParams::default();
        let alg = spec.algorithm;
        for (key, &value) in &spec.params {
            if !alg.parameter_keys().contains(&key.as_str()) {
                return Err(Error::Config(format!("{alg} has no parameter `{key}`")));
            }
            let check = |ok: bool, range: &str| {
                if ok && value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::Config(format!(
                        "{alg}: `{key}` = {value} must be in {range}"
                    )))
                }
            };
            match (alg, key.as_str()) {
                (_, "window") => {
                    if !spec.window {
                        return Err(Error::Config(format!(
                            "{alg}: `window` override requires the +w heuristic"
                        )));
                    }
                    p.window_rate = check(value > 0.0 && value <= 1.0, "(0, 1]")?;
                }
                (Algorithm::Q, "gamma") => {
                    p.q_gamma = check((0.0..1.0).contains(&value), "[0, 1)")?
                }
                (Algorithm::S, "alpha") => p.s_aspiration = check(true, "the reals")?,
                (Algorithm::S, "lambda") => {
                    p.s_lambda = check((0.0..=1.0).contains(&value), "[0, 1]")?
                }
                (Algorithm::M3, "gamma") => {
                    p.m3_gamma = check((0.0..1.0).contains(&value), "[0, 1)")?
                }
                (Algorithm::M3, "alpha") => {
                    p.m3_alpha = check(value > 0.0 && value <= 1.0, "(0, 1]")?
                }
                (Algorithm::M3, "lambda") => p.m3_lambda = check(value >= 0.0, "[0, inf)")?,
                (Algorithm::U, "C") => p.ucb_c = check(value >= 0.0, "[0, inf)")?,
                (Algorithm::Exp3, "gamma") => {
                    p.exp3_gamma = check(value > 0.0 && value <= 1.0, "(0, 1]")?
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }
        Ok(p)
    }
}

/// Instantiates a basic player for one match. `view` must be present exactly
/// when the algorithm needs the matrix.
pub fn build_base(
    spec: &BaseSpec,
    n_actions: usize,
    view: Option<&GameView>,
    seed: u64,
) -> Result<Box<dyn Player>> {
    spec.validate()?;
    if n_actions < 2 {
        return Err(Error::Config(format!(
            "players need at least 2 actions, got {n_actions}"
        )));
    }
    let params = AlgorithmParams::resolve(spec)?;
    let window = spec.window.then_some(params.window_rate);
    let matrix = || {
        view.ok_or_else(|| {
            Error::Config(format!(
                "{} needs the payoff matrix but none was provided",
                spec.algorithm
            ))
        })
    };
    if let Some(v) = view {
        if v.own.size() != n_actions {
            return Err(Error::Config(
                "game view does not match the action count".into(),
            ));
        }
    }
    Ok(match spec.algorithm {
        Algorithm::R => Box::new(Uniform::new(n_actions, seed)),
        Algorithm::G => Box::new(Greedy::new(matrix()?, seed)),
        Algorithm::B => Box::new(Bully::new(matrix()?)),
        Algorithm::MinMax => Box::new(MinMax::new(matrix()?, seed)),
        Algorithm::F => Box::new(FictitiousPlay::new(n_actions, seed)),
        Algorithm::J => Box::new(JointReturns::new(n_actions, window, spec.state, seed)),
        Algorithm::Q => Box::new(QLearner::new(
            n_actions,
            params.q_gamma,
            window,
            spec.state,
            seed,
        )),
        Algorithm::S => Box::new(Satisficer::new(
            n_actions,
            params.s_aspiration,
            params.s_lambda,
            seed,
        )),
        Algorithm::U => Box::new(Ucb::new(n_actions, params.ucb_c, window, spec.state, seed)),
        Algorithm::Exp3 => Box::new(Exp3::new(n_actions, params.exp3_gamma, seed)),
        Algorithm::M3 => Box::new(M3::new(matrix()?, &params, seed)),
    })
}

/// Argmax with uniform random tie-breaking, without allocating.
pub(crate) fn argmax_random<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut ties = 0usize;
    for &v in values {
        if v > best {
            best = v;
            ties = 1;
        } else if v == best {
            ties += 1;
        }
    }
    if ties <= 1 {
        return values.iter().position(|&v| v == best).unwrap_or(0);
    }
    let pick = rng.gen_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap()
}

pub(crate) fn require_opponent(obs: &Observation<'_>, who: &str) -> Result<usize> {
    obs.opponent_action
        .ok_or_else(|| Error::Config(format!("{who} needs the opponent's action")))
}

pub(crate) fn to_snapshot<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("player state serializes")
}
