use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::formulas::{exp3_probabilities, exp3_update, mean_update, ucb_index};
use super::{
    argmax_random, require_opponent, to_snapshot, Algorithm, InformationNeeds, MatchClock,
    Observation, Player, StateIndex,
};
use crate::error::Result;

/// `U`: UCB over the player's own actions. With `+s` every statistic,
/// including the step counter fed to the log term, is kept per previous
/// joint action.
#[derive(Debug, Clone, Serialize)]
pub struct Ucb {
    k: usize,
    c: f64,
    window: Option<f64>,
    stateful: bool,
    means: Vec<f64>,
    counts: Vec<u64>,
    visits: Vec<u64>,
    state: usize,
    #[serde(skip)]
    scores: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Ucb {
    pub fn new(k: usize, c: f64, window: Option<f64>, stateful: bool, seed: u64) -> Self {
        let states = if stateful { StateIndex::count(k) } else { 1 };
        Ucb {
            k,
            c,
            window,
            stateful,
            means: vec![0.0; states * k],
            counts: vec![0; states * k],
            visits: vec![0; states],
            state: if stateful {
                StateIndex::initial(k).0
            } else {
                0
            },
            scores: vec![0.0; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// UCB scores the player would use right now at step `t` (per-state
    /// clock substituted when `+s` is on).
    pub fn current_indices(&self, clock: MatchClock) -> Vec<f64> {
        let s = self.state;
        let t = if self.stateful {
            self.visits[s] + 1
        } else {
            clock.t
        };
        (0..self.k)
            .map(|a| {
                ucb_index(
                    self.means[s * self.k + a],
                    self.counts[s * self.k + a],
                    t,
                    self.c,
                )
            })
            .collect()
    }
}

impl Player for Ucb {
    fn needs(&self) -> InformationNeeds {
        let mut needs = Algorithm::U.needs();
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
        for a in 0..self.k {
            let i = s * self.k + a;
            self.scores[a] = ucb_index(self.means[i], self.counts[i], t, self.c);
        }
        argmax_random(&self.scores, &mut self.rng)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let s = self.state;
        let i = s * self.k + obs.own_action;
        let (mean, n) = mean_update(self.means[i], self.counts[i], obs.reward, self.window);
        self.means[i] = mean;
        self.counts[i] = n;
        self.visits[s] += 1;
        if self.stateful {
            let opp = require_opponent(obs, "U+s")?;
            self.state = StateIndex::joint(obs.own_action, opp, self.k).0;
        }
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `Exp3` with rewards rescaled to `[0, 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct Exp3 {
    gamma: f64,
    weights: Vec<f64>,
    probs: Vec<f64>,
    rng: ChaCha8Rng,
}

/// Weights are divided by their maximum past this size; probabilities only
/// depend on ratios.
const WEIGHT_CEILING: f64 = 1e200;

impl Exp3 {
    pub fn new(k: usize, gamma: f64, seed: u64) -> Self {
        let weights = vec![1.0; k];
        let probs = exp3_probabilities(&weights, gamma);
        Exp3 {
            gamma,
            weights,
            probs,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        exp3_probabilities(&self.weights, self.gamma)
    }
}

impl Player for Exp3 {
    fn needs(&self) -> InformationNeeds {
        Algorithm::Exp3.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        self.probs = exp3_probabilities(&self.weights, self.gamma);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (a, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        self.probs.len() - 1
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        debug_assert!(
            self.weights.iter().all(|w| *w > 0.0),
            "Exp3 weights must stay positive"
        );
        exp3_update(
            &mut self.weights,
            &self.probs,
            self.gamma,
            obs.own_action,
            obs.reward,
        );
        let top = self.weights.iter().copied().fold(0.0, f64::max);
        if top > WEIGHT_CEILING {
            for w in &mut self.weights {
                *w /= top;
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ucb_tries_every_arm_first() {
        for seed in 0..50 {
            let mut u = Ucb::new(4, 100.0, None, false, seed);
            let mut clock = MatchClock::start(4);
            let mut seen = [false; 4];
            for _ in 0..4 {
                let a = u.select_action(clock);
                assert!(!seen[a]);
                seen[a] = true;
                u.observe(&Observation::reward_only(a, 1.0)).unwrap();
                clock.tick();
            }
        }
    }

    #[test]
    fn ucb_state_tables_are_isolated() {
        let mut u = Ucb::new(3, 100.0, Some(0.01), true, 5);
        let clock = MatchClock::start(3);
        // hammer the initial state, then move to state (0, 0)
        let a = u.select_action(clock);
        let obs = Observation {
            own_action: a,
            reward: 2.0,
            opponent_action: Some(0),
            counterfactual_rewards: None,
        };
        u.observe(&obs).unwrap();
        let here = StateIndex::joint(a, 0, 3).0;
        assert_eq!(u.state, here);
        assert!(u.current_indices(clock).iter().all(|v| v.is_infinite()));
        let before: Vec<f64> = u.means[9 * 3..].to_vec();
        let b = u.select_action(clock);
        u.observe(&Observation {
            own_action: b,
            opponent_action: Some(1),
            ..obs
        })
        .unwrap();
        assert_eq!(&u.means[9 * 3..], &before[..]);
        assert_eq!(u.means[here * 3 + b], 2.0);
    }

    #[test]
    fn exp3_probabilities_stay_valid() {
        let mut p = Exp3::new(3, 0.001, 8);
        let mut clock = MatchClock::start(3);
        for step in 0..5000 {
            let a = p.select_action(clock);
            let probs = p.probabilities();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|x| *x >= 0.001 / 3.0));
            let r = if a == 2 {
                9.0
            } else {
                -4.0 + (step % 7) as f64
            };
            p.observe(&Observation::reward_only(a, r)).unwrap();
            clock.tick();
        }
        assert!(p.probabilities()[2] > 0.5);
    }
}
