//! Pure update rules shared by the learning players. Each is a direct
//! transcription of one rule so it can be checked in isolation.

use rand::Rng;

use crate::game::{Matrix, R_MAX, R_MIN};

/// UCB score `mean + sqrt(C ln t / n)`; untried arms score `+inf`.
pub fn ucb_index(mean: f64, n: u64, t: u64, c: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    mean + (c * (t as f64).ln() / n as f64).sqrt()
}

/// Running mean, or an exponential average with constant rate `window` when
/// the window heuristic is on. The first sample always becomes the mean.
pub fn mean_update(mean: f64, n: u64, reward: f64, window: Option<f64>) -> (f64, u64) {
    if n == 0 {
        return (reward, 1);
    }
    let next = match window {
        Some(rate) => (1.0 - rate) * mean + rate * reward,
        None => (mean * n as f64 + reward) / (n + 1) as f64,
    };
    (next, n + 1)
}

/// Exploration probability `1 / sqrt(t / n_a)`, clamped to 1.
pub fn epsilon_schedule(t: u64, n_actions: usize) -> f64 {
    (1.0 / (t as f64 / n_actions as f64).sqrt()).min(1.0)
}

/// One Q-learning backup on a row-major `states × k` table.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut [f64],
    k: usize,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    alpha: f64,
    gamma: f64,
) {
    let next_best = q[next_state * k..(next_state + 1) * k]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let cell = &mut q[state * k + action];
    *cell += alpha * (reward + gamma * next_best - *cell);
}

/// Satisficing step: keep the action if the reward met the aspiration,
/// otherwise move to a uniformly drawn different action. The aspiration
/// always relaxes toward the reward at rate `1 - lambda`.
pub fn s_step<R: Rng + ?Sized>(
    aspiration: f64,
    current: usize,
    reward: f64,
    lambda: f64,
    n_actions: usize,
    rng: &mut R,
) -> (usize, f64) {
    let next = if reward >= aspiration {
        current
    } else {
        let draw = rng.gen_range(0..n_actions - 1);
        if draw >= current {
            draw + 1
        } else {
            draw
        }
    };
    (next, lambda * aspiration + (1.0 - lambda) * reward)
}

/// Exp3 mixing: `(1 - gamma) w_j / Σw + gamma / K`.
pub fn exp3_probabilities(weights: &[f64], gamma: f64) -> Vec<f64> {
    let k = weights.len() as f64;
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| (1.0 - gamma) * w / total + gamma / k)
        .collect()
}

/// Exp3 importance-weighted update of the chosen arm. Rewards are mapped
/// from `[R_MIN, R_MAX]` onto `[0, 1]` first.
pub fn exp3_update(weights: &mut [f64], probs: &[f64], gamma: f64, action: usize, reward: f64) {
    let k = weights.len() as f64;
    let scaled = ((reward - R_MIN) / (R_MAX - R_MIN)).clamp(0.0, 1.0);
    let estimate = scaled / probs[action];
    weights[action] *= (gamma * estimate / k).exp();
}

/// Probability that M3 falls back to its maximin strategy: `lambda` times
/// the shortfall of the cumulative reward below the security level `v·t`.
pub fn m3_fallback_probability(security: f64, steps: u64, cum_reward: f64, lambda: f64) -> f64 {
    let shortfall = (security * steps as f64 - cum_reward).max(0.0);
    (lambda * shortfall).min(1.0)
}

/// Recovers the opponent's action from our own action and reward, for
/// players that know the matrix but are not told the opponent's move.
/// Picks the closest entry of our row; lowest index on ties.
pub fn infer_opponent_action(own: &Matrix, own_action: usize, reward: f64) -> usize {
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (j, v) in own.row(own_action).iter().enumerate() {
        let gap = (v - reward).abs();
        if gap < best_gap {
            best_gap = gap;
            best = j;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ucb_examples() {
        assert_eq!(ucb_index(-3.0, 0, 5, 100.0), f64::INFINITY);
        let expected = 1.0 + (100.0 * 4f64.ln()).sqrt();
        assert!((ucb_index(1.0, 1, 4, 100.0) - expected).abs() < 1e-12);
        assert!((ucb_index(1.0, 1, 4, 100.0) - 12.7741).abs() < 1e-4);
        assert_eq!(ucb_index(1.0, 3, 1, 100.0), 1.0);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_update(2.0, 1, 4.0, None), (3.0, 2));
        let (m, n) = mean_update(2.0, 5, 4.0, Some(0.01));
        assert!((m - 2.02).abs() < 1e-12);
        assert_eq!(n, 6);
        assert_eq!(mean_update(0.0, 0, -5.0, None), (-5.0, 1));
        assert_eq!(mean_update(0.0, 0, -5.0, Some(0.01)), (-5.0, 1));
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_schedule(1, 4), 1.0);
        assert!((epsilon_schedule(400, 4) - 0.1).abs() < 1e-12);
        assert_eq!(epsilon_schedule(3, 3), 1.0);
    }

    #[test]
    fn q_examples() {
        let mut q = vec![0.0; 3];
        q_update(&mut q, 3, 0, 1, 1.0, 0, 1.0, 0.95);
        assert_eq!(q[1], 1.0);

        // state 0 holds q(s,a)=2, state 1 has max 3
        let mut q = vec![2.0, 0.0, 1.0, 3.0];
        q_update(&mut q, 2, 0, 0, 0.0, 1, 0.1, 0.95);
        assert!((q[0] - 2.085).abs() < 1e-12);

        let mut q = vec![2.0, 5.0];
        q_update(&mut q, 2, 0, 0, 7.0, 0, 0.0, 0.95);
        assert_eq!(q, vec![2.0, 5.0]);
    }

    #[test]
    fn s_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (next, asp) = s_step(12.0, 1, 5.0, 0.99, 3, &mut rng);
        assert_ne!(next, 1);
        assert!((asp - 11.93).abs() < 1e-12);
        let (next, _) = s_step(3.0, 2, 5.0, 0.99, 3, &mut rng);
        assert_eq!(next, 2);
        let (_, asp) = s_step(7.5, 0, -9.0, 1.0, 3, &mut rng);
        assert_eq!(asp, 7.5);
    }

    #[test]
    fn s_switch_covers_every_other_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = [0usize; 4];
        for _ in 0..4000 {
            let (next, _) = s_step(12.0, 2, 0.0, 0.99, 4, &mut rng);
            seen[next] += 1;
        }
        assert_eq!(seen[2], 0);
        for a in [0, 1, 3] {
            assert!((1200..1470).contains(&seen[a]), "{seen:?}");
        }
    }

    #[test]
    fn exp3_examples() {
        let p = exp3_probabilities(&[2.5, 2.5, 2.5], 0.3);
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let mut w = vec![1.0, 1.0];
        exp3_update(&mut w, &[0.5, 0.5], 0.001, 0, -9.0);
        assert_eq!(w, vec![1.0, 1.0]);

        let p = exp3_probabilities(&w, 0.001);
        assert!((p[0] - 0.5).abs() < 1e-15);
        exp3_update(&mut w, &p, 0.001, 0, 9.0);
        assert!((w[0] - 0.001f64.exp()).abs() < 1e-12);
        assert!((w[0] - 1.0010005).abs() < 1e-7);
        assert_eq!(w[1], 1.0);
    }

    #[test]
    fn m3_examples() {
        assert!((m3_fallback_probability(0.0, 17, -10.0, 0.01) - 0.1).abs() < 1e-12);
        assert_eq!(m3_fallback_probability(1.0, 10, 12.0, 0.01), 0.0);
        assert_eq!(m3_fallback_probability(5.0, 1000, -9000.0, 0.01), 1.0);
        assert!((9.0 / (1.0 - 0.95) - 180.0f64).abs() < 1e-9);
    }

    #[test]
    fn infers_opponent_from_reward() {
        let own = Matrix::from_rows(&[
            vec![1.0, -2.0, 3.5],
            vec![0.0, 0.0, 0.0],
            vec![4.0, 4.0, 4.0],
        ])
        .unwrap();
        assert_eq!(infer_opponent_action(&own, 0, 3.5), 2);
        assert_eq!(infer_opponent_action(&own, 0, -2.0), 1);
        assert_eq!(infer_opponent_action(&own, 2, 4.0), 0);
    }
}
