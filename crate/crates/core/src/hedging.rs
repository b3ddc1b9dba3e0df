//! Hedging: a top-level player whose actions are experts. Each step the top
//! picks one expert, that expert picks the elementary action, and after the
//! step only the top and the chosen expert learn anything. Experts may be
//! hedges themselves.

use serde_json::json;

use crate::error::{Error, Result};
use crate::expr::PlayerSpec;
use crate::game::GameView;
use crate::players::{build_base, InformationNeeds, MatchClock, Observation, Player};
use crate::seed::derive_seed;

/// Deepest hedge nesting accepted unless configured otherwise.
pub const DEFAULT_MAX_DEPTH: usize = 3;

/// Checks that every hedge node has at least two experts, a basic top that
/// learns from rewards alone, and that nesting stays within `max_depth`.
pub fn validate_hedge_spec(spec: &PlayerSpec, max_depth: usize) -> Result<()> {
    if spec.depth() > max_depth {
        return Err(Error::Config(format!(
            "`{spec}` nests {} levels of hedging, more than the maximum of {max_depth}",
            spec.depth()
        )));
    }
    validate_node(spec)
}

fn validate_node(spec: &PlayerSpec) -> Result<()> {
    match spec {
        PlayerSpec::Base(b) => b.validate(),
        PlayerSpec::Hedge { top, experts } => {
            if experts.len() < 2 {
                return Err(Error::Config(format!(
                    "`{spec}` needs at least two experts"
                )));
            }
            match top.as_ref() {
                PlayerSpec::Base(b) => {
                    b.validate()?;
                    let needs = b.needs();
                    if !needs.is_reward_only() {
                        return Err(Error::Config(format!(
                            "`{top}` cannot be the top of `{spec}`: a top only observes its own rewards \
                             (it would need {})",
                            describe_needs(needs)
                        )));
                    }
                }
                PlayerSpec::Hedge { .. } => {
                    return Err(Error::Config(format!(
                        "the top of `{spec}` must be a basic player, not a hedge"
                    )))
                }
            }
            experts.iter().try_for_each(validate_node)
        }
    }
}

fn describe_needs(needs: InformationNeeds) -> String {
    let mut parts = Vec::new();
    if needs.needs_matrix {
        parts.push("the payoff matrix");
    }
    if needs.needs_opponent_action {
        parts.push("opponent actions");
    }
    if needs.needs_counterfactuals {
        parts.push("counterfactual returns");
    }
    parts.join(", ")
}

/// Builds any player tree for one match. `view` is passed down only to the
/// nodes that need the matrix.
pub fn build_player(
    spec: &PlayerSpec,
    n_actions: usize,
    view: Option<&GameView>,
    seed: u64,
) -> Result<Box<dyn Player>> {
    match spec {
        PlayerSpec::Base(b) => {
            let view = if b.needs().needs_matrix { view } else { None };
            build_base(b, n_actions, view, seed)
        }
        PlayerSpec::Hedge { top, experts } => {
            validate_node(spec)?;
            let top = build_player(top, experts.len(), None, derive_seed(seed, &[0]))?;
            let experts = experts
                .iter()
                .enumerate()
                .map(|(i, e)| build_player(e, n_actions, view, derive_seed(seed, &[i as u64 + 1])))
                .collect::<Result<Vec<_>>>()?;
            Ok(Box::new(HedgePlayer::new(top, experts)?))
        }
    }
}

/// Runtime state of one hedge node.
pub struct HedgePlayer {
    top: Box<dyn Player>,
    experts: Vec<Box<dyn Player>>,
    expert_needs: Vec<InformationNeeds>,
    /// Steps each expert has played; an expert's own clock only advances
    /// when it is chosen.
    expert_steps: Vec<u64>,
    last_chosen: Option<usize>,
}

impl HedgePlayer {
    pub fn new(top: Box<dyn Player>, experts: Vec<Box<dyn Player>>) -> Result<Self> {
        if experts.len() < 2 {
            return Err(Error::Config("a hedge needs at least two experts".into()));
        }
        if !top.needs().is_reward_only() {
            return Err(Error::Config(
                "the top of a hedge must learn from rewards only".into(),
            ));
        }
        let expert_needs = experts.iter().map(|e| e.needs()).collect();
        Ok(HedgePlayer {
            top,
            expert_steps: vec![0; experts.len()],
            experts,
            expert_needs,
            last_chosen: None,
        })
    }

    pub fn last_chosen(&self) -> Option<usize> {
        self.last_chosen
    }

    pub fn n_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn expert_snapshot(&self, i: usize) -> serde_json::Value {
        self.experts[i].snapshot()
    }

    pub fn top_snapshot(&self) -> serde_json::Value {
        self.top.snapshot()
    }
}

impl Player for HedgePlayer {
    fn needs(&self) -> InformationNeeds {
        self.expert_needs
            .iter()
            .fold(InformationNeeds::REWARD_ONLY, |acc, n| acc.union(*n))
    }

    fn select_action(&mut self, clock: MatchClock) -> usize {
        let top_clock = MatchClock {
            t: clock.t,
            n_actions: self.experts.len(),
        };
        let k = self.top.select_action(top_clock);
        self.last_chosen = Some(k);
        let expert_clock = MatchClock {
            t: self.expert_steps[k] + 1,
            n_actions: clock.n_actions,
        };
        self.experts[k].select_action(expert_clock)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let k = self
            .last_chosen
            .take()
            .ok_or_else(|| Error::Protocol("hedge observed a step it did not select".into()))?;
        self.top.observe(&Observation::reward_only(k, obs.reward))?;
        self.experts[k].observe(&obs.filtered(self.expert_needs[k]))?;
        self.expert_steps[k] += 1;
        Ok(())
    }

    fn snapshot(&self) -> serde_json::Value {
        json!({
            "top": self.top.snapshot(),
            "experts": self.experts.iter().map(|e| e.snapshot()).collect::<Vec<_>>(),
            "expert_steps": self.expert_steps,
            "last_chosen": self.last_chosen,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_player_expr;
    use crate::game::generate_random_games;
    use crate::game::Role;
    use crate::players::{Algorithm, BaseSpec, Satisficer};

    fn spec(text: &str) -> PlayerSpec {
        parse_player_expr(text).unwrap()
    }

    #[test]
    fn validation_rules() {
        assert!(validate_hedge_spec(&spec("hedge(S,U,M3)"), 3).is_ok());
        assert!(validate_hedge_spec(&spec("hedge(S,hedge(S,U,M3),M3)"), 3).is_ok());
        for top in ["R", "Q", "U", "Exp3", "S", "U+w"] {
            let h = PlayerSpec::hedge(spec(top), vec![spec("U"), spec("M3")]);
            assert!(validate_hedge_spec(&h, 3).is_ok(), "{top}");
        }
        for top in ["J", "F", "G", "B", "MinMax", "M3", "U+s"] {
            let h = PlayerSpec::hedge(spec(top), vec![spec("U"), spec("M3")]);
            let err = validate_hedge_spec(&h, 3).unwrap_err();
            assert!(err.to_string().contains(top), "{err}");
        }
        let single = PlayerSpec::hedge(spec("S"), vec![spec("U")]);
        assert!(validate_hedge_spec(&single, 3).is_err());
        let deep = PlayerSpec::hedge(spec("S"), vec![spec("HHHUMM"), spec("M3")]);
        assert_eq!(deep.depth(), 4);
        assert!(validate_hedge_spec(&deep, 3).is_err());
        assert!(validate_hedge_spec(&deep, 4).is_ok());
        let hedge_top = PlayerSpec::hedge(spec("HSSS"), vec![spec("U"), spec("S")]);
        assert!(validate_hedge_spec(&hedge_top, 3).is_err());
    }

    #[test]
    fn observe_requires_select() {
        let mut h = build_player(&spec("HSSS"), 3, None, 1).unwrap();
        assert!(matches!(
            h.observe(&Observation::reward_only(0, 1.0)),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn hsugs_master_starts_with_full_aspiration() {
        let g = &generate_random_games(1, 3, 5).unwrap().games[0];
        let view = g.view(Role::Row);
        let seed = 77;
        let h = build_player(&spec("HSUGS"), 3, Some(&view), seed).unwrap();
        let snap = h.snapshot();
        assert_eq!(snap["top"]["aspiration"], 12.0);
        // the master is an S over three meta-actions, seeded from position 0
        let reference = Satisficer::new(3, 12.0, 0.99, derive_seed(seed, &[0]));
        assert_eq!(snap["top"]["current"], reference.current_action());
        assert!(reference.current_action() < 3);
    }

    #[test]
    fn duplicate_experts_are_independent() {
        let mut h = build_player(&spec("HSSS"), 3, None, 9).unwrap();
        let mut clock = MatchClock::start(3);
        for _ in 0..50 {
            let a = h.select_action(clock);
            h.observe(&Observation::reward_only(a, 1.0)).unwrap();
            clock.tick();
        }
        let snap = h.snapshot();
        let steps: Vec<u64> = (0..2)
            .map(|i| snap["expert_steps"][i].as_u64().unwrap())
            .collect();
        assert_eq!(steps[0] + steps[1], 50);
        // with a constant reward of 1 each expert's aspiration only depends on
        // how often that expert itself was chosen
        for (i, n) in steps.iter().enumerate() {
            let expected = 1.0 + 11.0 * 0.99f64.powi(*n as i32);
            let got = snap["experts"][i]["aspiration"].as_f64().unwrap();
            assert!(
                (got - expected).abs() < 1e-9,
                "expert {i}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn base_spec_helper_matches_parser() {
        assert_eq!(spec("S"), PlayerSpec::Base(BaseSpec::plain(Algorithm::S)));
    }
}
