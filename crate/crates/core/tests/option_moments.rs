mod common;

use avgrl::mdp::builtin;
use avgrl::options::{execute_option, option_moments, OptionSpec};
use avgrl::sampling::run_rng;

#[test]
fn one_step_options_reproduce_the_model() {
    let m = builtin("WeaklyComm3").unwrap();
    for a in 0..m.n_actions() {
        let o = OptionSpec::one_step(a, m.n_states(), m.n_actions());
        let mo = option_moments(&m, &o).unwrap();
        for s in 0..m.n_states() {
            assert!((mo.exp_reward[s] - m.expected_reward(s, a)).abs() < 1e-12);
            assert!((mo.exp_length[s] - 1.0).abs() < 1e-12);
            let p = m.next_state_probs(s, a);
            for t in 0..m.n_states() {
                assert!((mo.landing[s][t] - p[t]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn moments_match_sampled_executions() {
    let mut rng = run_rng(41, 0);
    let m = builtin("Triangle").unwrap();
    for k in 0..3 {
        let o = common::random_proper_option(&mut rng, &m, &format!("o{k}"));
        let mo = option_moments(&m, &o).unwrap();
        for s in 0..m.n_states() {
            let n = 20_000;
            let (mut sr, mut sr2, mut sl, mut sl2) = (0.0, 0.0, 0.0, 0.0);
            let mut land = vec![0.0; m.n_states()];
            for _ in 0..n {
                let out = execute_option(&m, &o, s, &mut rng, 1_000_000).unwrap();
                sr += out.reward;
                sr2 += out.reward * out.reward;
                sl += out.length as f64;
                sl2 += (out.length * out.length) as f64;
                land[out.terminal] += 1.0;
            }
            let nf = n as f64;
            let check = |sum: f64, sum2: f64, exact: f64| {
                let mean = sum / nf;
                let se = ((sum2 / nf - mean * mean).max(0.0) / nf).sqrt();
                assert!((mean - exact).abs() <= (4.0 * se).max(1e-9), "{mean} vs {exact} (se {se})");
            };
            check(sr, sr2, mo.exp_reward[s]);
            check(sl, sl2, mo.exp_length[s]);
            for t in 0..m.n_states() {
                check(land[t], land[t], mo.landing[s][t]);
            }
        }
    }
}
