use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::formulas::{
    epsilon_schedule, infer_opponent_action, m3_fallback_probability, q_update, s_step,
};
use super::{
    argmax_random, require_opponent, to_snapshot, Algorithm, AlgorithmParams, InformationNeeds,
    MatchClock, Observation, Player, StateIndex,
};
use crate::error::{Error, Result};
use crate::game::{maximin_solve, GameView, Matrix, MaximinSolution, R_MAX};

/// `Q`: ε-greedy Q-learning with `α = 1/t` (or the window rate with `+w`).
/// Single-state unless `+s`, in which case states are previous joint
/// actions and `t` is the visit count of the current state.
#[derive(Debug, Clone, Serialize)]
pub struct QLearner {
    k: usize,
    gamma: f64,
    window: Option<f64>,
    stateful: bool,
    q: Vec<f64>,
    visits: Vec<u64>,
    state: usize,
    last_t: u64,
    rng: ChaCha8Rng,
}

impl QLearner {
    pub fn new(k: usize, gamma: f64, window: Option<f64>, stateful: bool, seed: u64) -> Self {
        let states = if stateful { StateIndex::count(k) } else { 1 };
        QLearner {
            k,
            gamma,
            window,
            stateful,
            q: vec![0.0; states * k],
            visits: vec![0; states],
            state: if stateful {
                StateIndex::initial(k).0
            } else {
                0
            },
            last_t: 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }
}

impl Player for QLearner {
    fn needs(&self) -> InformationNeeds {
        let mut needs = Algorithm::Q.needs();
        needs.needs_opponent_action = self.stateful;
        needs
    }

    fn select_action(&mut self, clock: MatchClock) -> usize {
        let s = self.state;
        let t = if self.stateful {
            self.visits[s] + 1
        } else {
            clock.t
        };
        self.last_t = t;
        let explore: f64 = self.rng.gen();
        if explore < epsilon_schedule(t, self.k) {
            self.rng.gen_range(0..self.k)
        } else {
            argmax_random(&self.q[s * self.k..(s + 1) * self.k], &mut self.rng)
        }
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let s = self.state;
        let next = if self.stateful {
            StateIndex::joint(obs.own_action, require_opponent(obs, "Q+s")?, self.k).0
        } else {
            0
        };
        let alpha = self.window.unwrap_or(1.0 / self.last_t as f64);
        q_update(
            &mut self.q,
            self.k,
            s,
            obs.own_action,
            obs.reward,
            next,
            alpha,
            self.gamma,
        );
        self.visits[s] += 1;
        self.state = next;
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `S`: satisficing play with a decaying aspiration level.
#[derive(Debug, Clone, Serialize)]
pub struct Satisficer {
    k: usize,
    aspiration: f64,
    lambda: f64,
    current: usize,
    rng: ChaCha8Rng,
}

impl Satisficer {
    pub fn new(k: usize, aspiration: f64, lambda: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current = rng.gen_range(0..k);
        Satisficer {
            k,
            aspiration,
            lambda,
            current,
            rng,
        }
    }

    pub fn aspiration(&self) -> f64 {
        self.aspiration
    }

    pub fn current_action(&self) -> usize {
        self.current
    }
}

impl Player for Satisficer {
    fn needs(&self) -> InformationNeeds {
        Algorithm::S.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        self.current
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let (next, aspiration) = s_step(
            self.aspiration,
            obs.own_action,
            obs.reward,
            self.lambda,
            self.k,
            &mut self.rng,
        );
        self.current = next;
        self.aspiration = aspiration;
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `F`: fictitious play over learned payoffs. Unseen joint actions are
/// assumed worth `R_MAX`; one observation fixes an entry for good.
#[derive(Debug, Clone, Serialize)]
pub struct FictitiousPlay {
    k: usize,
    counts: Vec<u64>,
    total: u64,
    estimates: Vec<f64>,
    #[serde(skip)]
    values: Vec<f64>,
    rng: ChaCha8Rng,
}

impl FictitiousPlay {
    pub fn new(k: usize, seed: u64) -> Self {
        FictitiousPlay {
            k,
            counts: vec![0; k],
            total: 0,
            estimates: vec![R_MAX; k * k],
            values: vec![0.0; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }

    pub fn estimate(&self, own: usize, opp: usize) -> f64 {
        self.estimates[own * self.k + opp]
    }
}

impl Player for FictitiousPlay {
    fn needs(&self) -> InformationNeeds {
        Algorithm::F.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        if self.total == 0 {
            return self.rng.gen_range(0..self.k);
        }
        let total = self.total as f64;
        for i in 0..self.k {
            self.values[i] = (0..self.k)
                .map(|j| self.counts[j] as f64 / total * self.estimates[i * self.k + j])
                .sum();
        }
        argmax_random(&self.values, &mut self.rng)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let opp = require_opponent(obs, "F")?;
        self.counts[opp] += 1;
        self.total += 1;
        self.estimates[obs.own_action * self.k + opp] = obs.reward;
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `J`: plays the action with the best cumulative (or, with `+w`,
/// exponentially averaged) counterfactual return.
#[derive(Debug, Clone, Serialize)]
pub struct JointReturns {
    k: usize,
    window: Option<f64>,
    stateful: bool,
    scores: Vec<f64>,
    state: usize,
    rng: ChaCha8Rng,
}

impl JointReturns {
    pub fn new(k: usize, window: Option<f64>, stateful: bool, seed: u64) -> Self {
        let states = if stateful { StateIndex::count(k) } else { 1 };
        JointReturns {
            k,
            window,
            stateful,
            scores: vec![0.0; states * k],
            state: if stateful {
                StateIndex::initial(k).0
            } else {
                0
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores[self.state * self.k..(self.state + 1) * self.k]
    }
}

impl Player for JointReturns {
    fn needs(&self) -> InformationNeeds {
        let mut needs = Algorithm::J.needs();
        needs.needs_opponent_action = self.stateful;
        needs
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        let s = self.state;
        argmax_random(&self.scores[s * self.k..(s + 1) * self.k], &mut self.rng)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let cf = obs
            .counterfactual_rewards
            .ok_or_else(|| Error::Config("J needs the counterfactual returns".into()))?;
        if cf.len() != self.k {
            return Err(Error::Config(format!(
                "J got {} counterfactual returns for {} actions",
                cf.len(),
                self.k
            )));
        }
        let s = self.state;
        let row = &mut self.scores[s * self.k..(s + 1) * self.k];
        match self.window {
            Some(rate) => {
                for (v, r) in row.iter_mut().zip(cf) {
                    *v = (1.0 - rate) * *v + rate * r;
                }
            }
            None => {
                for (v, r) in row.iter_mut().zip(cf) {
                    *v += r;
                }
            }
        }
        if self.stateful {
            let opp = require_opponent(obs, "J+s")?;
            self.state = StateIndex::joint(obs.own_action, opp, self.k).0;
        }
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `M3`: optimistic Q-learning over previous joint actions with a maximin
/// fallback. The fallback fires with probability `λ · shortfall`, where the
/// shortfall is how far the cumulative reward trails the security level
/// times the number of steps played.
#[derive(Debug, Clone, Serialize)]
pub struct M3 {
    k: usize,
    gamma: f64,
    alpha: f64,
    lambda: f64,
    q: Vec<f64>,
    state: usize,
    security: MaximinSolution,
    #[serde(skip)]
    own: Matrix,
    cum_reward: f64,
    steps: u64,
    rng: ChaCha8Rng,
}

impl M3 {
    pub fn new(view: &GameView, params: &AlgorithmParams, seed: u64) -> Self {
        let k = view.own.size();
        let init = R_MAX / (1.0 - params.m3_gamma);
        M3 {
            k,
            gamma: params.m3_gamma,
            alpha: params.m3_alpha,
            lambda: params.m3_lambda,
            q: vec![init; StateIndex::count(k) * k],
            state: StateIndex::initial(k).0,
            security: maximin_solve(&view.own),
            own: view.own.clone(),
            cum_reward: 0.0,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn fallback_probability(&self) -> f64 {
        m3_fallback_probability(
            self.security.value,
            self.steps,
            self.cum_reward,
            self.lambda,
        )
    }
}

impl Player for M3 {
    fn needs(&self) -> InformationNeeds {
        Algorithm::M3.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        let beta = self.fallback_probability();
        let u: f64 = self.rng.gen();
        if u < beta {
            self.security.strategy.sample(&mut self.rng)
        } else {
            let s = self.state;
            argmax_random(&self.q[s * self.k..(s + 1) * self.k], &mut self.rng)
        }
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let opp = infer_opponent_action(&self.own, obs.own_action, obs.reward);
        let next = StateIndex::joint(obs.own_action, opp, self.k).0;
        q_update(
            &mut self.q,
            self.k,
            self.state,
            obs.own_action,
            obs.reward,
            next,
            self.alpha,
            self.gamma,
        );
        self.state = next;
        self.cum_reward += obs.reward;
        self.steps += 1;
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}
