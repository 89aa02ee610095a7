//! Helpers shared by the integration tests.
#![allow(dead_code)]

use dron::soccer::{step, Action, Cell, Player, SoccerConfig, SoccerState};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hand-written copy of the field and movement rules for the default 9×6
/// field, kept apart from the library code it checks.
pub mod oracle {
    pub const W: i32 = 9;
    pub const H: i32 = 6;

    pub fn goal(x: i32, y: i32) -> bool {
        (x == 0 || x == W - 1) && (y == 2 || y == 3)
    }

    pub fn playable(x: i32, y: i32) -> bool {
        if !(0..W).contains(&x) || !(0..H).contains(&y) {
            return false;
        }
        if x == 0 || x == W - 1 {
            return goal(x, y);
        }
        true
    }

    /// Action order: N, S, W, E, stand.
    pub fn moved(p: (i32, i32), a: usize) -> (i32, i32) {
        let q = match a {
            0 => (p.0, p.1 - 1),
            1 => (p.0, p.1 + 1),
            2 => (p.0 - 1, p.1),
            3 => (p.0 + 1, p.1),
            _ => p,
        };
        if playable(q.0, q.1) {
            q
        } else {
            p
        }
    }

    pub struct Next {
        pub a: (i32, i32),
        pub b: (i32, i32),
        pub a_has_ball: bool,
        pub reward_a: f64,
        pub done: bool,
    }

    pub fn step(
        a: (i32, i32),
        b: (i32, i32),
        a_has_ball: bool,
        steps: u32,
        act_a: usize,
        act_b: usize,
    ) -> Next {
        let na = moved(a, act_a);
        let nb = moved(b, act_b);
        let blocked = na == nb || (na == b && nb == a);
        let (a2, b2, ball) = if blocked {
            (a, b, !a_has_ball)
        } else {
            (na, nb, a_has_ball)
        };
        let mut reward_a = 0.0;
        let mut done = steps + 1 >= 100;
        if ball && a2.0 == W - 1 && goal(a2.0, a2.1) {
            reward_a = 1.0;
            done = true;
        }
        if !ball && b2.0 == 0 && goal(b2.0, b2.1) {
            reward_a = -1.0;
            done = true;
        }
        Next {
            a: a2,
            b: b2,
            a_has_ball: ball,
            reward_a,
            done,
        }
    }
}

/// Uniform state with distinct players on playable cells, the holder not
/// already on the goal it scores on.
pub fn random_legal_state(rng: &mut ChaCha8Rng) -> SoccerState {
    let config = SoccerConfig::default();
    let cells: Vec<Cell> = (0..oracle::W)
        .flat_map(|x| (0..oracle::H).map(move |y| Cell::new(x, y)))
        .filter(|c| oracle::playable(c.x, c.y))
        .collect();
    let ball = if rng.random_bool(0.5) {
        Player::A
    } else {
        Player::B
    };
    loop {
        let a = cells[rng.random_range(0..cells.len())];
        let b = cells[rng.random_range(0..cells.len())];
        let holder_pos = if ball == Player::A { a } else { b };
        if a != b && !config.target_goal(ball).contains(&holder_pos) {
            return SoccerState {
                a,
                b,
                ball,
                steps: rng.random_range(0..100),
                done: false,
            };
        }
    }
}

/// Every disagreement between `step` and the oracle over `states` random
/// states and all 25 joint actions.
pub fn oracle_mismatches(states: usize, seed: u64) -> Vec<String> {
    let config = SoccerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for _ in 0..states {
        let s = random_legal_state(&mut rng);
        for (ia, &act_a) in Action::ALL.iter().enumerate() {
            for (ib, &act_b) in Action::ALL.iter().enumerate() {
                let got = step(&config, &s, act_a, act_b).unwrap();
                let want = oracle::step(
                    (s.a.x, s.a.y),
                    (s.b.x, s.b.y),
                    s.ball == Player::A,
                    s.steps,
                    ia,
                    ib,
                );
                let same = (got.state.a.x, got.state.a.y) == want.a
                    && (got.state.b.x, got.state.b.y) == want.b
                    && (got.state.ball == Player::A) == want.a_has_ball
                    && got.reward_a == want.reward_a
                    && got.done == want.done
                    && got.state.steps == s.steps + 1;
                if !same {
                    bad.push(format!("{s:?} {act_a:?} {act_b:?}"));
                }
            }
        }
    }
    bad
}

/// Two-tailed p of Student's t by Simpson integration of the density, with
/// Γ evaluated exactly at integer and half-integer points.
pub fn t_oracle(t: f64, df: u32) -> f64 {
    fn gamma_half(n2: u32) -> f64 {
        // Γ(n2 / 2)
        let (mut g, mut x) = if n2.is_multiple_of(2) {
            (1.0, 1.0)
        } else {
            (std::f64::consts::PI.sqrt(), 0.5)
        };
        while x < n2 as f64 / 2.0 - 1e-9 {
            g *= x;
            x += 1.0;
        }
        g
    }
    let v = df as f64;
    let c = gamma_half(df + 1) / ((v * std::f64::consts::PI).sqrt() * gamma_half(df));
    let density = |x: f64| c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
    let n = 200_000;
    let h = t.abs() / n as f64;
    let mut sum = density(0.0) + density(t.abs());
    for i in 1..n {
        sum += density(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * sum * h / 3.0
}

/// Paired samples for checking the t-test against [`t_oracle`].
pub const TTEST_CASES: [(&[f64], &[f64]); 5] = [
    (&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]),
    (&[0.61, 0.64, 0.58, 0.66], &[0.60, 0.62, 0.59, 0.61]),
    (&[5.0, 3.0, 4.0, 6.0, 2.0], &[4.0, 3.5, 2.0, 5.0, 2.5]),
    (&[-1.0, 0.5, 0.2, -0.3, 0.9, 1.4, -0.2], &[0.0; 7]),
    (
        &[10.0, 12.0, 9.0, 11.0, 13.0, 10.5, 12.5, 9.5, 11.5, 14.0],
        &[9.0, 9.5, 9.2, 9.9, 11.0, 9.1, 10.0, 9.8, 10.2, 11.9],
    ),
];
