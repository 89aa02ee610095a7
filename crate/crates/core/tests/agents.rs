use dron::agents::{
    combined_loss, Agent, AgentKind, AgentSpec, HeadKind, Multitask, OpponentPrediction,
};
use dron::harness::{miniature_spec, random_batch};
use dron::nn::Matrix;
use dron::rl::{td_gradients, td_update, QLearningConfig, Transition};
use dron::{AdaGradState, ParamSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zeroed(agent: &Agent) -> ParamSet {
    agent.init_params::<f64>(0).unwrap().zeros_like()
}

fn features(n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| ((i as f64 + 1.0) * 0.37 + seed as f64).sin())
        .collect()
}

#[test]
fn zero_parameters_give_zero_embeddings_and_q() {
    for kind in [AgentKind::Dqn, AgentKind::DronConcat, AgentKind::DronMoe] {
        let agent = Agent::new(AgentSpec::soccer(kind)).unwrap();
        let p = zeroed(&agent);
        let h = agent
            .encode(&p, &features(15, 1), &features(16, 2))
            .unwrap();
        assert!(h.state.iter().chain(&h.opponent).all(|&x| x == 0.0));
        let q = agent
            .q_values(&p, &features(15, 1), &features(16, 2))
            .unwrap();
        assert_eq!(q, vec![0.0; 5]);
    }
}

#[test]
fn embedding_sizes_follow_the_presets() {
    let soccer = Agent::new(AgentSpec::soccer(AgentKind::DronConcat)).unwrap();
    let p = soccer.init_params::<f64>(1).unwrap();
    let h = soccer
        .encode(&p, &features(15, 1), &features(16, 1))
        .unwrap();
    assert_eq!((h.state.len(), h.opponent.len()), (50, 50));
    assert_eq!(p.get("q_head.0").unwrap().fan_in(), 100);

    let quiz = Agent::new(AgentSpec::quiz(AgentKind::DronMoe, 50)).unwrap();
    let p = quiz.init_params::<f64>(1).unwrap();
    let h = quiz.encode(&p, &features(102, 1), &features(3, 1)).unwrap();
    assert_eq!((h.state.len(), h.opponent.len()), (128, 10));
}

#[test]
fn dqn_output_counts_and_ignored_opponent() {
    let soccer = Agent::new(AgentSpec::soccer(AgentKind::Dqn)).unwrap();
    let p = soccer.init_params::<f64>(3).unwrap();
    let q = soccer.q_dqn(&p, &features(15, 0)).unwrap();
    assert_eq!(q.len(), 5);
    assert_eq!(
        q,
        soccer
            .q_values(&p, &features(15, 0), &features(16, 9))
            .unwrap()
    );

    let quiz = Agent::new(AgentSpec::quiz(AgentKind::Dqn, 50)).unwrap();
    let p = quiz.init_params::<f64>(3).unwrap();
    assert_eq!(quiz.q_dqn(&p, &features(102, 0)).unwrap().len(), 2);
}

#[test]
fn wrong_feature_length_is_a_config_error() {
    let agent = Agent::new(AgentSpec::soccer(AgentKind::DronMoe)).unwrap();
    let p = agent.init_params::<f64>(3).unwrap();
    let r = agent.encode(&p, &features(14, 0), &features(16, 0));
    assert!(matches!(r, Err(dron::Error::Config(_))));
}

#[test]
fn concat_depends_on_the_opponent() {
    let agent = Agent::new(AgentSpec::soccer(AgentKind::DronConcat)).unwrap();
    let p = agent.init_params::<f64>(4).unwrap();
    let s = features(15, 0);
    let a = agent.q_dron_concat(&p, &s, &features(16, 1)).unwrap();
    let b = agent.q_dron_concat(&p, &s, &features(16, 2)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn concat_sees_opponent_only_through_its_slice() {
    // Zeroing the opponent tower leaves Q equal to a head whose hᵒ columns
    // are removed.
    let agent = Agent::new(AgentSpec::soccer(AgentKind::DronConcat)).unwrap();
    let mut p = agent.init_params::<f64>(5).unwrap();
    let tower = p.get_mut("opponent_tower").unwrap();
    tower.weight.fill(0.0);
    tower.bias.fill(0.0);
    let s = features(15, 3);
    let q = agent.q_dron_concat(&p, &s, &features(16, 4)).unwrap();

    let h = agent.encode(&p, &s, &features(16, 4)).unwrap().state;
    let l0 = p.get("q_head.0").unwrap();
    let l1 = p.get("q_head.1").unwrap();
    let hidden: Vec<f64> = (0..l0.fan_out())
        .map(|j| (0..50).map(|i| l0.weight.get(j, i) * h[i]).sum::<f64>() + l0.bias[j])
        .map(|z| z.max(0.0))
        .collect();
    for (a, &qa) in q.iter().enumerate() {
        let want: f64 = hidden
            .iter()
            .enumerate()
            .map(|(j, x)| l1.weight.get(a, j) * x)
            .sum::<f64>()
            + l1.bias[a];
        assert!((qa - want).abs() < 1e-12);
    }
}

fn moe_spec(k: usize) -> AgentSpec {
    AgentSpec::soccer(AgentKind::DronMoe).with_experts(k)
}

#[test]
fn single_expert_mixture_is_that_expert() {
    let agent = Agent::new(moe_spec(1)).unwrap();
    let p = agent.init_params::<f64>(6).unwrap();
    let (s, o) = (features(15, 1), features(16, 1));
    let (q, gate) = agent.q_dron_moe(&p, &s, &o).unwrap();
    assert_eq!(gate.weights, vec![1.0]);
    let fwd = agent
        .forward(&p, &Matrix::row_vector(&s), Some(&Matrix::row_vector(&o)))
        .unwrap();
    assert_eq!(q, fwd.expert_q(0).unwrap().as_slice());
}

#[test]
fn zero_gate_is_uniform() {
    let agent = Agent::new(moe_spec(4)).unwrap();
    let mut p = agent.init_params::<f64>(7).unwrap();
    let gate = p.get_mut("gate").unwrap();
    gate.weight.fill(0.0);
    gate.bias.fill(0.0);
    let (_, g) = agent
        .q_dron_moe(&p, &features(15, 0), &features(16, 0))
        .unwrap();
    assert!(g.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
}

#[test]
fn two_expert_hand_mixture() {
    let spec = AgentSpec {
        actions: 2,
        ..moe_spec(2)
    };
    let agent = Agent::new(spec).unwrap();
    let mut p = agent.init_params::<f64>(8).unwrap();
    for (name, bias) in [
        ("expert.0", [1.0, 0.0]),
        ("expert.1", [0.0, 1.0]),
        ("gate", [0.0, 3f64.ln()]),
    ] {
        let d = p.get_mut(name).unwrap();
        d.weight.fill(0.0);
        d.bias = bias.to_vec();
    }
    let (q, g) = agent
        .q_dron_moe(&p, &features(15, 0), &features(16, 0))
        .unwrap();
    assert!((g.weights[0] - 0.25).abs() < 1e-12 && (g.weights[1] - 0.75).abs() < 1e-12);
    assert!((q[0] - 0.25).abs() < 1e-12 && (q[1] - 0.75).abs() < 1e-12);
}

#[test]
fn kind_specific_entry_points_check_the_kind() {
    let agent = Agent::new(AgentSpec::soccer(AgentKind::Dqn)).unwrap();
    let p = agent.init_params::<f64>(1).unwrap();
    assert!(agent
        .q_dron_moe(&p, &features(15, 0), &features(16, 0))
        .is_err());
}

#[test]
fn opponent_heads_have_the_right_shape() {
    let soccer_type = AgentSpec::soccer(AgentKind::DronMoe)
        .with_multitask(Multitask::Type, Some(HeadKind::Classes(2)));
    let agent = Agent::new(soccer_type).unwrap();
    let p = agent.init_params::<f64>(2).unwrap();
    let h = agent
        .encode(&p, &features(15, 0), &features(16, 0))
        .unwrap();
    match agent.predict_opponent(&p, &h.opponent).unwrap() {
        OpponentPrediction::Distribution(d) => {
            assert_eq!(d.len(), 2);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        other => panic!("expected a distribution, got {other:?}"),
    }

    let quiz_type = AgentSpec::quiz(AgentKind::DronConcat, 50)
        .with_multitask(Multitask::Type, Some(HeadKind::Classes(4)));
    let agent = Agent::new(quiz_type).unwrap();
    let p = agent.init_params::<f64>(2).unwrap();
    let h = agent
        .encode(&p, &features(102, 0), &features(3, 0))
        .unwrap();
    assert!(
        matches!(agent.predict_opponent(&p, &h.opponent).unwrap(), OpponentPrediction::Distribution(d) if d.len() == 4)
    );

    let quiz_action = AgentSpec::quiz(AgentKind::DronMoe, 50)
        .with_multitask(Multitask::Action, Some(HeadKind::Scalar));
    let agent = Agent::new(quiz_action).unwrap();
    let mut p = agent.init_params::<f64>(2).unwrap();
    p.get_mut("opponent_head").unwrap().bias = vec![50.0];
    let h = agent
        .encode(&p, &features(102, 0), &features(3, 0))
        .unwrap();
    match agent.predict_opponent(&p, &h.opponent).unwrap() {
        OpponentPrediction::Scalar(v) => assert!((0.0..=1.0).contains(&v)),
        other => panic!("expected a scalar, got {other:?}"),
    }
}

#[test]
fn predicting_without_a_head_is_a_usage_error() {
    let agent = Agent::new(AgentSpec::soccer(AgentKind::DronMoe)).unwrap();
    let p = agent.init_params::<f64>(2).unwrap();
    assert!(matches!(
        agent.predict_opponent(&p, &[0.0; 50]),
        Err(dron::Error::Usage(_))
    ));
}

#[test]
fn combined_loss_values() {
    assert_eq!(combined_loss(0.5, 0.25, 0.0).unwrap(), 0.5);
    assert_eq!(combined_loss(0.5, 0.25, 1.0).unwrap(), 0.75);
    assert!(combined_loss(0.5, 0.25, -1.0).is_err());
}

#[test]
fn supervision_head_does_not_change_q() {
    let spec = AgentSpec::soccer(AgentKind::DronMoe)
        .with_multitask(Multitask::Action, Some(HeadKind::Classes(5)));
    let agent = Agent::new(spec).unwrap();
    let mut p = agent.init_params::<f64>(9).unwrap();
    let (s, o) = (features(15, 2), features(16, 5));
    let before = agent.q_values(&p, &s, &o).unwrap();
    p.get_mut("opponent_head").unwrap().weight.fill(3.0);
    assert_eq!(before, agent.q_values(&p, &s, &o).unwrap());
}

fn batch_for(spec: &AgentSpec, seed: u64) -> Vec<Transition<f64>> {
    random_batch(spec, 8, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn q_side_gradients_ignore_the_supervision_loss() {
    // Expert and state-tower gradients sit upstream of Q only; the opponent
    // head only touches hᵒ, so those gradients match the λ = 0 ones exactly.
    let with = AgentSpec {
        lambda: 2.0,
        ..miniature_spec(AgentKind::DronMoe, Some(HeadKind::Classes(3)))
    };
    let without = AgentSpec {
        lambda: 0.0,
        ..with.clone()
    };
    let agent_with = Agent::new(with.clone()).unwrap();
    let agent_without = Agent::new(without).unwrap();
    let p = agent_with.init_params::<f64>(1).unwrap();
    let batch = batch_for(&with, 2);
    let refs: Vec<&Transition<f64>> = batch.iter().collect();
    let (_, g1) = td_gradients(&agent_with, &p, &p, &refs, 0.9).unwrap();
    let (_, g0) = td_gradients(&agent_without, &p, &p, &refs, 0.9).unwrap();
    for name in [
        "expert.0",
        "expert.1",
        "expert.2",
        "state_tower.0",
        "state_tower.1",
    ] {
        assert_eq!(g1.get(name).unwrap(), g0.get(name).unwrap(), "{name}");
    }
    assert_ne!(
        g1.get("opponent_tower").unwrap(),
        g0.get("opponent_tower").unwrap()
    );
}

#[test]
fn zero_lambda_matches_the_plain_agent_update() {
    let plain = miniature_spec(AgentKind::DronConcat, None);
    let multi = AgentSpec {
        lambda: 0.0,
        ..miniature_spec(AgentKind::DronConcat, Some(HeadKind::Classes(3)))
    };
    let (a_plain, a_multi) = (
        Agent::new(plain.clone()).unwrap(),
        Agent::new(multi.clone()).unwrap(),
    );
    let mut p_plain = a_plain.init_params::<f64>(11).unwrap();
    let mut p_multi = a_multi.init_params::<f64>(11).unwrap();
    for (name, d) in p_plain.iter() {
        assert_eq!(
            d,
            p_multi.get(name).unwrap(),
            "shared init differs at {name}"
        );
    }
    let batch = batch_for(&multi, 3);
    let refs: Vec<&Transition<f64>> = batch.iter().collect();
    let target_plain = p_plain.clone();
    let target_multi = p_multi.clone();
    let cfg = QLearningConfig::default();
    let mut opt_plain = AdaGradState::new(&p_plain, cfg.learning_rate);
    let mut opt_multi = AdaGradState::new(&p_multi, cfg.learning_rate);
    td_update(
        &a_plain,
        &mut p_plain,
        &target_plain,
        &refs,
        &cfg,
        &mut opt_plain,
    )
    .unwrap();
    td_update(
        &a_multi,
        &mut p_multi,
        &target_multi,
        &refs,
        &cfg,
        &mut opt_multi,
    )
    .unwrap();
    for (name, d) in p_plain.iter() {
        assert_eq!(d, p_multi.get(name).unwrap(), "{name}");
    }
}

fn moe_agent(k: usize) -> (Agent, AgentSpec) {
    let spec = AgentSpec {
        experts: k,
        ..miniature_spec(AgentKind::DronMoe, None)
    };
    (Agent::new(spec.clone()).unwrap(), spec)
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, n)
}

proptest! {
    #[test]
    fn gate_is_a_distribution_and_q_is_convex(k in 1usize..6, seed in any::<u64>(), s in vec_strategy(6), o in vec_strategy(4)) {
        let (agent, spec) = moe_agent(k);
        let p = agent.init_params::<f64>(seed).unwrap();
        let fwd = agent.forward(&p, &Matrix::row_vector(&s), Some(&Matrix::row_vector(&o))).unwrap();
        let w = fwd.gate_weights().unwrap().as_slice();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        for a in 0..spec.actions {
            let qs: Vec<f64> = (0..k).map(|i| fwd.expert_q(i).unwrap().get(0, a)).collect();
            let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let q = fwd.q().get(0, a);
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            prop_assert!(q >= lo - slack && q <= hi + slack);
        }
    }

    #[test]
    fn experts_see_only_state_and_gate_only_opponent(seed in any::<u64>(), s in vec_strategy(6), s2 in vec_strategy(6), o in vec_strategy(4), o2 in vec_strategy(4)) {
        let (agent, _) = moe_agent(3);
        let p = agent.init_params::<f64>(seed).unwrap();
        let run = |s: &[f64], o: &[f64]| agent.forward(&p, &Matrix::row_vector(s), Some(&Matrix::row_vector(o))).unwrap();
        let base = run(&s, &o);
        let new_opp = run(&s, &o2);
        let new_state = run(&s2, &o);
        for i in 0..3 {
            prop_assert_eq!(base.expert_q(i), new_opp.expert_q(i));
        }
        prop_assert_eq!(base.gate_weights(), new_state.gate_weights());
    }

    #[test]
    fn forward_is_pure(seed in any::<u64>(), s in vec_strategy(6), o in vec_strategy(4)) {
        let (agent, _) = moe_agent(3);
        let p = agent.init_params::<f64>(seed).unwrap();
        prop_assert_eq!(agent.q_values(&p, &s, &o).unwrap(), agent.q_values(&p, &s, &o).unwrap());
    }
}

/// Central differences of the full training loss, written out here so the
/// check does not lean on the library's own finite-difference helper.
fn numeric_gradient(
    agent: &Agent,
    params: &ParamSet,
    target: &ParamSet,
    batch: &[&Transition<f64>],
) -> Vec<f64> {
    let h = 1e-5;
    let loss = |p: &ParamSet| td_gradients(agent, p, target, batch, 0.9).unwrap().0.total;
    let mut probe = params.clone();
    (0..params.num_coords())
        .map(|i| {
            let x = params.coord(i);
            probe.set_coord(i, x + h);
            let up = loss(&probe);
            probe.set_coord(i, x - h);
            let down = loss(&probe);
            probe.set_coord(i, x);
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[test]
fn backprop_matches_central_differences_for_every_variant() {
    let kinds = [AgentKind::Dqn, AgentKind::DronConcat, AgentKind::DronMoe];
    let heads = [None, Some(HeadKind::Classes(3)), Some(HeadKind::Scalar)];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for kind in kinds {
        for head in heads {
            if kind == AgentKind::Dqn && head.is_some() {
                continue;
            }
            let spec = miniature_spec(kind, head);
            let agent = Agent::new(spec.clone()).unwrap();
            let mut checked = 0;
            for seed in 0..40u64 {
                if checked == 3 {
                    break;
                }
                let mut params = agent.init_params::<f64>(seed).unwrap();
                for (_, d) in params.iter_mut() {
                    for b in d.bias.iter_mut() {
                        *b = rand::Rng::random_range(&mut rng, -0.2..0.2);
                    }
                }
                let target = agent.init_params::<f64>(seed + 1000).unwrap();
                let batch = random_batch(&spec, 6, &mut rng);
                let refs: Vec<&Transition<f64>> = batch.iter().collect();
                let s = Matrix::from_rows(
                    &batch
                        .iter()
                        .map(|t| t.state_features.clone())
                        .collect::<Vec<_>>(),
                )
                .unwrap();
                let o = Matrix::from_rows(
                    &batch
                        .iter()
                        .map(|t| t.opponent_features.clone())
                        .collect::<Vec<_>>(),
                )
                .unwrap();
                let fwd = agent
                    .forward(&params, &s, kind.uses_opponent().then_some(&o))
                    .unwrap();
                // Skip draws with a pre-activation close enough to a ReLU kink
                // for the finite-difference step to cross it.
                if fwd.relu_margin() < 1e-3 {
                    continue;
                }
                let (_, analytic) = td_gradients(&agent, &params, &target, &refs, 0.9).unwrap();
                let numeric = numeric_gradient(&agent, &params, &target, &refs);
                for (i, n) in numeric.iter().enumerate() {
                    let a = analytic.coord(i);
                    let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                    assert!(rel < 1e-4, "{kind:?} {head:?} coord {i}: {a} vs {n}");
                }
                checked += 1;
            }
            assert_eq!(checked, 3, "{kind:?} {head:?}: too many kink redraws");
        }
    }
}
