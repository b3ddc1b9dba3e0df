use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::formulas::infer_opponent_action;
use super::{
    argmax_random, to_snapshot, Algorithm, InformationNeeds, MatchClock, Observation, Player,
};
use crate::error::Result;
use crate::game::{bully_action, maximin_solve, GameView, Matrix, MixedStrategy};

/// `R`: uniform random play.
#[derive(Debug, Clone, Serialize)]
pub struct Uniform {
    k: usize,
    rng: ChaCha8Rng,
}

impl Uniform {
    pub fn new(k: usize, seed: u64) -> Self {
        Uniform {
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Player for Uniform {
    fn needs(&self) -> InformationNeeds {
        Algorithm::R.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        self.rng.gen_range(0..self.k)
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `G`: best response to the opponent's previous action, which it reads off
/// the matrix from its own action and reward.
#[derive(Debug, Clone, Serialize)]
pub struct Greedy {
    own: Matrix,
    last_opponent: Option<usize>,
    column: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Greedy {
    pub fn new(view: &GameView, seed: u64) -> Self {
        let k = view.own.size();
        Greedy {
            own: view.own.clone(),
            last_opponent: None,
            column: vec![0.0; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Player for Greedy {
    fn needs(&self) -> InformationNeeds {
        Algorithm::G.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        let k = self.own.size();
        match self.last_opponent {
            None => self.rng.gen_range(0..k),
            Some(j) => {
                for i in 0..k {
                    self.column[i] = self.own.get(i, j);
                }
                argmax_random(&self.column, &mut self.rng)
            }
        }
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        self.last_opponent = Some(infer_opponent_action(&self.own, obs.own_action, obs.reward));
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(&(&self.last_opponent, &self.rng))
    }
}

/// `B`: commits to the bully action for the whole match.
#[derive(Debug, Clone, Serialize)]
pub struct Bully {
    action: usize,
}

impl Bully {
    pub fn new(view: &GameView) -> Self {
        Bully {
            action: bully_action(&view.own, &view.opp),
        }
    }
}

impl Player for Bully {
    fn needs(&self) -> InformationNeeds {
        Algorithm::B.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        self.action
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

/// `MinMax`: samples its maximin strategy every step.
#[derive(Debug, Clone, Serialize)]
pub struct MinMax {
    strategy: MixedStrategy,
    rng: ChaCha8Rng,
}

impl MinMax {
    pub fn new(view: &GameView, seed: u64) -> Self {
        MinMax {
            strategy: maximin_solve(&view.own).strategy,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Player for MinMax {
    fn needs(&self) -> InformationNeeds {
        Algorithm::MinMax.needs()
    }

    fn select_action(&mut self, _clock: MatchClock) -> usize {
        self.strategy.sample(&mut self.rng)
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        to_snapshot(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(own: &[&[f64]], opp: &[&[f64]]) -> GameView {
        let m = |rows: &[&[f64]]| {
            Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
        };
        GameView {
            own: m(own),
            opp: m(opp),
        }
    }

    #[test]
    fn greedy_best_responds_to_last_action() {
        let v = view(
            &[&[2.0, 0.0, 0.0], &[5.0, 1.0, 0.0], &[-1.0, 0.5, 3.0]],
            &[&[0.0; 3], &[0.0; 3], &[0.0; 3]],
        );
        let mut g = Greedy::new(&v, 4);
        let clock = MatchClock::start(3);
        g.select_action(clock);
        // we played 2 and got 0.5, so the opponent played 1
        g.observe(&Observation::reward_only(2, 0.5)).unwrap();
        assert_eq!(g.select_action(clock), 1);
        // we played 0 and got 2, so the opponent played 0
        g.observe(&Observation::reward_only(0, 2.0)).unwrap();
        for _ in 0..10 {
            assert_eq!(g.select_action(clock), 1);
        }
    }

    #[test]
    fn greedy_starts_uniform() {
        let v = view(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[0.0, 0.0], &[0.0, 0.0]]);
        let mut counts = [0; 2];
        for seed in 0..400 {
            let mut g = Greedy::new(&v, seed);
            counts[g.select_action(MatchClock::start(2))] += 1;
        }
        assert!((150..250).contains(&counts[0]), "{counts:?}");
    }

    #[test]
    fn bully_is_constant() {
        let v = view(&[&[3.0, 0.0], &[5.0, 1.0]], &[&[3.0, 5.0], &[0.0, 1.0]]);
        let mut b = Bully::new(&v);
        let mut clock = MatchClock::start(2);
        for _ in 0..20 {
            assert_eq!(b.select_action(clock), 1);
            b.observe(&Observation::reward_only(1, 1.0)).unwrap();
            clock.tick();
        }
    }

    #[test]
    fn minmax_frequency_on_matching_pennies() {
        let v = view(&[&[9.0, -9.0], &[-9.0, 9.0]], &[&[-9.0, 9.0], &[9.0, -9.0]]);
        let mut p = MinMax::new(&v, 17);
        let clock = MatchClock::start(2);
        let zeros = (0..10_000).filter(|_| p.select_action(clock) == 0).count();
        let freq = zeros as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }
}
