use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::checkpoint::{Checkpoint, RngState};
use super::config::Environment;
use super::stats::paired_ttest;
use crate::agents::{Agent, AgentKind, AgentSpec, HeadKind, Multitask};
use crate::error::Result;
use crate::nn::{finite_difference, max_relative_error, Matrix};
use crate::quiz::{self, Population, PopulationPreset, QuizAction, QuizConfig};
use crate::rl::{td_gradients, Supervision, Transition};
use crate::soccer::{self, rule_agent_act, Action, Mode, Player, SoccerConfig};
use crate::ParamSet;

/// Relative-error tolerance of the gradient check.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Gradients below this magnitude are compared absolutely.
pub const GRADCHECK_FLOOR: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
// Pre-activations closer to a ReLU kink than this make a draw unusable.
const KINK_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A small network of the given kind for gradient checks.
pub fn miniature_spec(kind: AgentKind, supervision: Option<HeadKind>) -> AgentSpec {
    let multitask = match supervision {
        None => Multitask::None,
        Some(HeadKind::Scalar) => Multitask::Action,
        Some(HeadKind::Classes(_)) => Multitask::Type,
    };
    AgentSpec {
        kind,
        state_dim: 6,
        opponent_dim: 4,
        actions: 3,
        state_hidden: vec![8, 8],
        opponent_hidden: 8,
        head_hidden: 8,
        experts: 3,
        multitask,
        supervision,
        lambda: 0.7,
    }
}

/// Every agent kind and head combination the gradient check covers.
pub fn miniature_specs() -> Vec<AgentSpec> {
    vec![
        miniature_spec(AgentKind::Dqn, None),
        miniature_spec(AgentKind::DronConcat, None),
        miniature_spec(AgentKind::DronMoe, None),
        miniature_spec(AgentKind::DronConcat, Some(HeadKind::Classes(3))),
        miniature_spec(AgentKind::DronMoe, Some(HeadKind::Classes(3))),
        miniature_spec(AgentKind::DronMoe, Some(HeadKind::Scalar)),
    ]
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random transitions fitting `spec`.
pub fn random_batch(spec: &AgentSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<Transition<f64>> {
    (0..n)
        .map(|_| Transition {
            state_features: normal_vec(rng, spec.state_dim),
            opponent_features: normal_vec(rng, spec.opponent_dim),
            action: rng.random_range(0..spec.actions),
            reward: rng.random_range(-1.0..1.0),
            next_state_features: normal_vec(rng, spec.state_dim),
            next_opponent_features: normal_vec(rng, spec.opponent_dim),
            terminal: rng.random_bool(0.3),
            supervision: match spec.supervision {
                None => None,
                Some(HeadKind::Classes(k)) => Some(Supervision::Class(rng.random_range(0..k))),
                Some(HeadKind::Scalar) => Some(Supervision::Value(rng.random())),
            },
        })
        .collect()
}

/// Randomly initialized parameters with non-zero biases.
fn random_params(agent: &Agent, rng: &mut ChaCha8Rng) -> Result<ParamSet> {
    let mut params = agent.init_params::<f64>(rng.random())?;
    for (_, layer) in params.iter_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.2..0.2);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub spec: AgentSpec,
    pub networks: usize,
    pub max_relative_error: f64,
    /// Networks whose worst coordinate exceeded the tolerance.
    pub failures: usize,
}

/// Compares backprop against central differences of the full update loss
/// on `networks` random networks of one spec.
pub fn gradcheck_spec(spec: &AgentSpec, networks: usize, seed: u64) -> Result<GradCheckReport> {
    let agent = Agent::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut checked = 0;
    while checked < networks {
        let params = random_params(&agent, &mut rng)?;
        let target = random_params(&agent, &mut rng)?;
        let batch = random_batch(spec, 4, &mut rng);
        let refs: Vec<&Transition<f64>> = batch.iter().collect();
        let states = Matrix::from_rows(
            &refs
                .iter()
                .map(|t| t.state_features.as_slice())
                .collect::<Vec<_>>(),
        )?;
        let opps = Matrix::from_rows(
            &refs
                .iter()
                .map(|t| t.opponent_features.as_slice())
                .collect::<Vec<_>>(),
        )?;
        let fwd = agent.forward(&params, &states, spec.kind.uses_opponent().then_some(&opps))?;
        if fwd.relu_margin() < KINK_MARGIN {
            continue;
        }
        checked += 1;
        let gamma = 0.9;
        let (_, analytic) = td_gradients(&agent, &params, &target, &refs, gamma)?;
        let numeric = finite_difference(&params, FD_STEP, |p| {
            td_gradients(&agent, p, &target, &refs, gamma)
                .map(|(loss, _)| loss.total)
                .unwrap_or(f64::NAN)
        });
        let err = max_relative_error(&analytic, &numeric, GRADCHECK_FLOOR);
        if err.is_nan() || err > GRADCHECK_TOLERANCE {
            failures += 1;
        }
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(GradCheckReport {
        spec: spec.clone(),
        networks,
        max_relative_error: worst,
        failures,
    })
}

pub fn gradcheck(networks: usize, seed: u64) -> Result<Vec<GradCheckReport>> {
    miniature_specs()
        .iter()
        .enumerate()
        .map(|(i, spec)| gradcheck_spec(spec, networks, seed.wrapping_add(i as u64)))
        .collect()
}

fn describe(spec: &AgentSpec) -> String {
    match spec.supervision {
        None => spec.kind.to_string(),
        Some(h) => format!("{}+{h}", spec.kind),
    }
}

fn check_gradients(out: &mut Vec<CheckOutcome>) -> Result<()> {
    for r in gradcheck(20, 1)? {
        out.push(CheckOutcome::new(
            format!("gradient {}", describe(&r.spec)),
            r.failures == 0,
            format!(
                "{} networks, max relative error {:.2e}",
                r.networks, r.max_relative_error
            ),
        ));
    }
    Ok(())
}

fn check_moe(out: &mut Vec<CheckOutcome>, trials: usize) -> Result<()> {
    let spec = miniature_spec(AgentKind::DronMoe, None);
    let agent = Agent::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut simplex, mut bounds, mut separation) = (0, 0, 0);
    for _ in 0..trials {
        let params = random_params(&agent, &mut rng)?;
        let s = normal_vec(&mut rng, spec.state_dim);
        let o = normal_vec(&mut rng, spec.opponent_dim);
        let fwd = agent.forward(
            &params,
            &Matrix::row_vector(&s),
            Some(&Matrix::row_vector(&o)),
        )?;
        let w = fwd.gate_weights().expect("gate").as_slice();
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-6 || w.iter().any(|&x| x < 0.0) {
            simplex += 1;
        }
        for a in 0..spec.actions {
            let qs: Vec<f64> = (0..spec.experts)
                .map(|i| fwd.expert_q(i).expect("expert").get(0, a))
                .collect();
            let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let q = fwd.q().get(0, a);
            if q < lo - 1e-9 || q > hi + 1e-9 {
                bounds += 1;
            }
        }
        let o2 = normal_vec(&mut rng, spec.opponent_dim);
        let s2 = normal_vec(&mut rng, spec.state_dim);
        let other_o = agent.forward(
            &params,
            &Matrix::row_vector(&s),
            Some(&Matrix::row_vector(&o2)),
        )?;
        let other_s = agent.forward(
            &params,
            &Matrix::row_vector(&s2),
            Some(&Matrix::row_vector(&o)),
        )?;
        let experts_fixed = (0..spec.experts).all(|i| other_o.expert_q(i) == fwd.expert_q(i));
        if !experts_fixed || other_s.gate_weights() != fwd.gate_weights() {
            separation += 1;
        }
    }
    out.push(CheckOutcome::new(
        "gate simplex",
        simplex == 0,
        format!("{simplex} violations in {trials}"),
    ));
    out.push(CheckOutcome::new(
        "convex bounds",
        bounds == 0,
        format!("{bounds} violations in {trials}"),
    ));
    out.push(CheckOutcome::new(
        "input separation",
        separation == 0,
        format!("{separation} violations in {trials}"),
    ));

    let single = Agent::new(spec.clone().with_experts(1))?;
    let dqn = Agent::new(AgentSpec {
        kind: AgentKind::Dqn,
        ..spec.clone()
    })?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let params = random_params(&single, &mut rng)?;
        let mut dqn_params = ParamSet::new();
        for (name, layer) in params.iter() {
            if name.starts_with("state_tower") {
                dqn_params.insert(name, layer.clone())?;
            }
        }
        dqn_params.insert("q_head", params.get("expert.0")?.clone())?;
        let s = normal_vec(&mut rng, spec.state_dim);
        let o = normal_vec(&mut rng, spec.opponent_dim);
        let q = single.q_values(&params, &s, &o)?;
        let reference = dqn.q_values(&dqn_params, &s, &o)?;
        for (a, b) in q.iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(CheckOutcome::new(
        "single expert reduces to DQN",
        worst <= 1e-12,
        format!("max difference {worst:.1e}"),
    ));
    Ok(())
}

fn check_soccer(out: &mut Vec<CheckOutcome>, rollouts: usize) -> Result<()> {
    let cfg = SoccerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for _ in 0..rollouts {
        let mut state = soccer::reset(&cfg, &mut rng);
        while !state.done {
            let a = Action::from_index(rng.random_range(0..5))?;
            let b = Action::from_index(rng.random_range(0..5))?;
            let o = soccer::step(&cfg, &state, a, b)?;
            let holder_scored = match o.events.goal_by {
                Some(p) => {
                    p == o.state.ball && o.reward_a == if p == Player::A { 1.0 } else { -1.0 }
                }
                None => o.reward_a == 0.0,
            };
            if !holder_scored
                || o.state.a == o.state.b
                || !cfg.is_playable(o.state.a)
                || !cfg.is_playable(o.state.b)
            {
                violations += 1;
            }
            state = o.state;
        }
    }
    out.push(CheckOutcome::new(
        "soccer zero-sum and possession",
        violations == 0,
        format!("{violations} violations in {rollouts} rollouts"),
    ));

    for (mode, name) in [
        (Mode::Offensive, "offensive"),
        (Mode::Defensive, "defensive"),
    ] {
        let games = 1000;
        let (mut wins, mut ties, mut length) = (0, 0, 0u64);
        for _ in 0..games {
            let mut state = soccer::reset(&cfg, &mut rng);
            let mut payoff = 0.0;
            while !state.done {
                let a = Action::from_index(rng.random_range(0..5))?;
                let b = rule_agent_act(&state, Player::B, mode, &mut rng, &cfg);
                let o = soccer::step(&cfg, &state, a, b)?;
                payoff -= o.reward_a;
                state = o.state;
            }
            length += u64::from(state.steps);
            if payoff > 0.0 {
                wins += 1;
            } else if payoff == 0.0 {
                ties += 1;
            }
        }
        let mean_len = length as f64 / games as f64;
        let (win, tie) = (wins as f64 / games as f64, ties as f64 / games as f64);
        let passed = match mode {
            Mode::Offensive => win >= 0.95 && mean_len <= 25.0,
            Mode::Defensive => tie >= 0.4 && mean_len >= 60.0,
        };
        out.push(CheckOutcome::new(
            format!("{name} rule agent vs random"),
            passed,
            format!("win {win:.3} tie {tie:.3} length {mean_len:.1}"),
        ));
    }
    Ok(())
}

fn check_quiz(out: &mut Vec<CheckOutcome>, episodes: usize) -> Result<()> {
    let cfg = QuizConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let population = Population::preset(PopulationPreset::Mixed, &mut rng)?;
    let allowed = [
        0.0,
        cfg.correct_reward,
        cfg.wrong_reward,
        cfg.opponent_correct_reward,
        cfg.wrong_reward + cfg.opponent_correct_reward,
    ];
    let mut violations = 0;
    for _ in 0..episodes {
        let (mut state, _) = quiz::sample_episode(&cfg, &population, &mut rng)?;
        let mut steps = 0;
        while !state.done {
            if quiz::featurize(&state).len() != cfg.state_features() {
                violations += 1;
            }
            let action = if rng.random_bool(0.05) {
                QuizAction::Buzz
            } else {
                QuizAction::Wait
            };
            let r = quiz::step(&mut state, action, &cfg, &mut rng)?;
            if !allowed.contains(&r.reward) {
                violations += 1;
            }
            steps += 1;
        }
        if steps > state.length + 1 {
            violations += 1;
        }
    }
    out.push(CheckOutcome::new(
        "quiz episode invariants",
        violations == 0,
        format!("{violations} violations in {episodes} questions"),
    ));
    Ok(())
}

fn check_checkpoint(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let spec = AgentSpec::soccer(AgentKind::DronMoe);
    let agent = Agent::new(spec.clone())?;
    let params = agent.init_params::<f64>(5)?;
    let ckpt = Checkpoint {
        env: Environment::Soccer(SoccerConfig::default()),
        spec,
        params,
        steps: 42,
        rng: RngState::capture(&ChaCha8Rng::seed_from_u64(5)),
    };
    let back = Checkpoint::from_text(&ckpt.to_text())?;
    out.push(CheckOutcome::new(
        "checkpoint round trip",
        back == ckpt,
        "parameters compared bit for bit",
    ));
    Ok(())
}

fn check_ttest(out: &mut Vec<CheckOutcome>) -> Result<()> {
    let t = paired_ttest(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0])?;
    out.push(CheckOutcome::new(
        "paired t-test",
        (t.t - 3.4641).abs() < 1e-4 && (t.p - 0.0742).abs() < 1e-3,
        format!("t {:.4} p {:.4}", t.t, t.p),
    ));
    Ok(())
}

/// Runs the invariant suite: gradients, mixture algebra, environment rules,
/// checkpoint round trip and the t-test.
pub fn selfcheck() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    check_gradients(&mut out)?;
    check_moe(&mut out, 1000)?;
    check_soccer(&mut out, 2000)?;
    check_quiz(&mut out, 500)?;
    check_checkpoint(&mut out)?;
    check_ttest(&mut out)?;
    Ok(out)
}
