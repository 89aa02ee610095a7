use dron::soccer::{
    classify_move, featurize_state, reset, rule_agent_act, sample_mode, step, Action, Cell, Mode,
    ModePolicy, MoveCategory, OpponentStats, Player, SoccerConfig, SoccerState, OPPONENT_FEATURES,
    STATE_FEATURES,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

fn cfg() -> SoccerConfig {
    SoccerConfig::default()
}

#[test]
fn step_matches_the_reference_rules() {
    assert_eq!(common::oracle_mismatches(1000, 2024), Vec::<String>::new());
}

#[test]
fn random_rollouts_keep_the_invariants() {
    let config = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let mut s = reset(&config, &mut rng);
        let mut total = 0.0;
        let mut len = 0;
        while !s.done {
            let a = Action::ALL[rng.random_range(0..5)];
            let b = Action::ALL[rng.random_range(0..5)];
            let out = step(&config, &s, a, b).unwrap();
            assert!(config.is_playable(out.state.a) && config.is_playable(out.state.b));
            assert_ne!(out.state.a, out.state.b);
            if !out.done {
                assert_eq!(out.reward_a, 0.0);
            }
            assert!([-1.0, 0.0, 1.0].contains(&out.reward_a));
            // Both sides see the same outcome with opposite signs.
            let reward_b = -out.reward_a;
            assert_eq!(out.reward_a + reward_b, 0.0);
            total += out.reward_a;
            len += 1;
            s = out.state;
        }
        assert!(len <= 100);
        assert!([-1.0, 0.0, 1.0].contains(&total));
    }
}

#[test]
fn resets_are_legal_and_balanced() {
    let config = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000;
    let mut a_ball = 0;
    for _ in 0..n {
        let s = reset(&config, &mut rng);
        for (c, max_x) in [(s.a, 3), (s.b, 8)] {
            assert!(config.is_playable(c) && !config.is_goal(c));
            if max_x == 3 {
                assert!(c.x <= 3);
            } else {
                assert!(c.x >= 5);
            }
        }
        a_ball += (s.ball == Player::A) as usize;
    }
    let sigma = (n as f64 * 0.25).sqrt();
    assert!(
        (a_ball as f64 - n as f64 / 2.0).abs() <= 3.0 * sigma,
        "{a_ball}"
    );
}

#[test]
fn resets_are_reproducible() {
    let config = cfg();
    let a = reset(&config, &mut ChaCha8Rng::seed_from_u64(5));
    let b = reset(&config, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(a, b);
}

fn state(a: (i32, i32), b: (i32, i32), ball: Player) -> SoccerState {
    SoccerState {
        a: Cell::new(a.0, a.1),
        b: Cell::new(b.0, b.1),
        ball,
        steps: 0,
        done: false,
    }
}

#[test]
fn standing_still_only_advances_the_clock() {
    let s = state((2, 3), (6, 1), Player::A);
    let out = step(&cfg(), &s, Action::Stand, Action::Stand).unwrap();
    assert_eq!((out.state.a, out.state.b, out.state.steps), (s.a, s.b, 1));
}

#[test]
fn meeting_on_a_cell_passes_the_ball() {
    let s = state((3, 2), (5, 2), Player::A);
    let out = step(&cfg(), &s, Action::East, Action::West).unwrap();
    assert_eq!((out.state.a, out.state.b), (s.a, s.b));
    assert_eq!(out.state.ball, Player::B);
    assert!(out.events.collision);
    assert_eq!(out.events.ball_lost_by, Some(Player::A));
}

#[test]
fn swapping_cells_passes_the_ball() {
    let s = state((4, 2), (5, 2), Player::B);
    let out = step(&cfg(), &s, Action::East, Action::West).unwrap();
    assert_eq!(
        (out.state.a, out.state.b, out.state.ball),
        (s.a, s.b, Player::A)
    );
}

#[test]
fn moving_onto_a_standing_player_passes_the_ball() {
    let s = state((4, 2), (5, 2), Player::A);
    let out = step(&cfg(), &s, Action::East, Action::Stand).unwrap();
    assert_eq!((out.state.a, out.state.ball), (s.a, Player::B));
}

#[test]
fn carrying_the_ball_into_the_goal_scores() {
    let s = state((7, 2), (4, 4), Player::A);
    let out = step(&cfg(), &s, Action::East, Action::Stand).unwrap();
    assert_eq!(out.state.a, Cell::new(8, 2));
    assert_eq!((out.reward_a, out.done), (1.0, true));
    assert_eq!(out.events.goal_by, Some(Player::A));

    let s = state((4, 4), (1, 3), Player::B);
    let out = step(&cfg(), &s, Action::Stand, Action::West).unwrap();
    assert_eq!((out.reward_a, out.done), (-1.0, true));
}

#[test]
fn shaded_cells_block_movement() {
    let s = state((1, 0), (6, 5), Player::A);
    let out = step(&cfg(), &s, Action::West, Action::North).unwrap();
    assert_eq!(out.state.a, Cell::new(1, 0));
    assert_eq!(out.state.b, Cell::new(6, 4));
}

#[test]
fn horizon_ends_in_a_tie() {
    let mut s = state((2, 3), (6, 1), Player::A);
    s.steps = 99;
    let out = step(&cfg(), &s, Action::Stand, Action::Stand).unwrap();
    assert_eq!(
        (out.reward_a, out.done, out.events.goal_by),
        (0.0, true, None)
    );
}

#[test]
fn finished_episodes_refuse_steps() {
    let mut s = state((2, 3), (6, 1), Player::A);
    s.done = true;
    assert!(matches!(
        step(&cfg(), &s, Action::Stand, Action::Stand),
        Err(dron::Error::Usage(_))
    ));
}

#[test]
fn golden_state_features() {
    let s = state((2, 3), (6, 1), Player::A);
    let f = featurize_state(&s, &cfg(), Player::A);
    assert_eq!(f.len(), STATE_FEATURES);
    let want = [
        0.25, 0.6, 0.75, 0.2, 0.0, 1.0, 0.0, 1.0, 0.0, 0.4, 0.6, 1.0, 0.4, 0.6, 1.0,
    ];
    for (a, b) in f.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{f:?}");
    }
    let g = featurize_state(&s, &cfg(), Player::B);
    assert_eq!(g[14], 0.0);
    assert_eq!((g[8], g[11]), (1.0, 0.0));
}

#[test]
fn move_categories() {
    let config = cfg();
    // B is the mover, A the agent.
    let s = state((2, 2), (5, 2), Player::A);
    assert_eq!(
        classify_move(&s, Player::B, Action::Stand, &config),
        MoveCategory::Stand
    );
    assert_eq!(
        classify_move(&s, Player::B, Action::West, &config),
        MoveCategory::ApproachAgent
    );
    assert_eq!(
        classify_move(&s, Player::B, Action::East, &config),
        MoveCategory::AvoidAgent
    );

    // Moving away from A while closing in on A's goal still counts as avoiding.
    let s = state((4, 0), (2, 1), Player::A);
    let before = s.b.manhattan(s.a);
    let to = config.target(s.b, Action::South);
    assert!(to.manhattan(s.a) > before);
    assert_eq!(
        classify_move(&s, Player::B, Action::South, &config),
        MoveCategory::AvoidAgent
    );

    // A blocked move is a stand.
    let s = state((4, 4), (7, 0), Player::A);
    assert_eq!(
        classify_move(&s, Player::B, Action::North, &config),
        MoveCategory::Stand
    );
}

#[test]
fn opponent_stats_features() {
    let stats = OpponentStats::new();
    assert_eq!(stats.features(), [0.0; OPPONENT_FEATURES]);

    let mut stats = OpponentStats::new();
    stats.observe(MoveCategory::ApproachAgent, Action::East, false);
    let f = stats.features();
    let mut want = [0.0; OPPONENT_FEATURES];
    want[0] = 1.0;
    want[5] = 1.0;
    want[10 + Action::East.index()] = 1.0;
    assert_eq!(f, want);

    stats.observe(MoveCategory::Stand, Action::North, true);
    let f = stats.features();
    assert_eq!(&f[..5], &[0.5, 0.0, 0.0, 0.0, 0.5]);
    assert_eq!(f[15], 0.5);
}

#[test]
fn offensive_holder_heads_for_goal() {
    let s = state((4, 4), (6, 2), Player::B);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        // B at (6,2) scores on the left goal, so west is the unique best move.
        assert_eq!(
            rule_agent_act(&s, Player::B, Mode::Offensive, &mut rng, &cfg()),
            Action::West
        );
    }
    let s = state((6, 2), (3, 4), Player::A);
    assert_eq!(
        rule_agent_act(&s, Player::A, Mode::Offensive, &mut rng, &cfg()),
        Action::East
    );
}

#[test]
fn defender_stands_on_its_guard_cell() {
    // A holds the ball in the upper half; B guards (7,2).
    let s = state((3, 1), (7, 2), Player::A);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        rule_agent_act(&s, Player::B, Mode::Defensive, &mut rng, &cfg()),
        Action::Stand
    );
}

#[test]
fn mode_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let offensive = (0..n)
        .filter(|_| sample_mode(ModePolicy::Mixed, &mut rng) == Mode::Offensive)
        .count();
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((offensive as f64 - n as f64 / 2.0).abs() <= 3.0 * sigma);
    for _ in 0..100 {
        assert_eq!(
            sample_mode(ModePolicy::Fixed(Mode::Defensive), &mut rng),
            Mode::Defensive
        );
    }
    let seq = |seed| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..50)
            .map(|_| sample_mode(ModePolicy::Mixed, &mut r))
            .collect::<Vec<_>>()
    };
    assert_eq!(seq(9), seq(9));
}

proptest! {
    #[test]
    fn rule_agents_pick_legal_moves(seed in any::<u64>(), offensive in any::<bool>(), who_a in any::<bool>()) {
        let config = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_legal_state(&mut rng);
        let who = if who_a { Player::A } else { Player::B };
        let mode = if offensive { Mode::Offensive } else { Mode::Defensive };
        let a = rule_agent_act(&s, who, mode, &mut rng, &config);
        let from = s.position(who);
        prop_assert!(a == Action::Stand || config.target(from, a) != from);
    }

    #[test]
    fn frequencies_sum_to_one_over_rollouts(seed in any::<u64>()) {
        let config = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = reset(&config, &mut rng);
        let mut stats = OpponentStats::new();
        while !s.done {
            let a = Action::ALL[rng.random_range(0..5)];
            let b = rule_agent_act(&s, Player::B, Mode::Offensive, &mut rng, &config);
            let cat = classify_move(&s, Player::B, b, &config);
            let out = step(&config, &s, a, b).unwrap();
            stats.observe(cat, b, out.events.ball_lost_by == Some(Player::A));
            let f = stats.features();
            prop_assert!((f[..5].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f[15]));
            prop_assert_eq!(stats.counts.iter().sum::<u32>(), stats.steps);
            s = out.state;
        }
    }
}
