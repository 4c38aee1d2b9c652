use subgoal_attention::env::{expected_return, EnvConfig, EnvMode};
use subgoal_attention::oracle::GatingMode;
use subgoal_attention::reinforce::{rollout_episode, ScriptedDecider, UniformDecider};
use subgoal_attention::rng::split;

fn fixed() -> EnvConfig {
    EnvConfig::new(EnvMode::Fixed)
}

#[test]
fn scripted_constrained_controller_is_optimal() {
    let mut rng = split(1, 0);
    let ep =
        rollout_episode(&mut ScriptedDecider { attention: true }, &fixed(), GatingMode::Constrained, &mut rng).unwrap();
    assert!(ep.stats.success);
    assert_eq!(ep.stats.length, 8);
    assert_eq!(ep.stats.optimal_length, 8);
    assert!((ep.stats.total_return - 0.93).abs() < 1e-12);
}

#[test]
fn scripted_partial_controller_is_optimal() {
    let mut rng = split(2, 0);
    let ep =
        rollout_episode(&mut ScriptedDecider { attention: true }, &fixed(), GatingMode::PartialDecomposition, &mut rng)
            .unwrap();
    assert!(ep.stats.success);
    assert_eq!(ep.stats.length, 8);
}

#[test]
fn scripted_no_attention_controller_is_optimal() {
    let mut rng = split(3, 0);
    let ep = rollout_episode(&mut ScriptedDecider { attention: false }, &fixed(), GatingMode::Unconstrained, &mut rng)
        .unwrap();
    assert!(ep.stats.success);
    assert_eq!(ep.stats.length, 8);
}

#[test]
fn scripted_controllers_are_optimal_on_random_layouts() {
    let env = EnvConfig::new(EnvMode::Dynamic);
    for seed in 0..200 {
        let mut rng = split(seed, 7);
        let ep = rollout_episode(&mut ScriptedDecider { attention: false }, &env, GatingMode::Unconstrained, &mut rng)
            .unwrap();
        assert!(ep.stats.success);
        assert_eq!(ep.stats.length, ep.stats.optimal_length, "seed {seed}");
    }
}

#[test]
fn uniform_random_controller_is_slower_than_optimal() {
    let n = 1000;
    for (gating, attention) in [(GatingMode::Unconstrained, false), (GatingMode::Constrained, true)] {
        let mut total = 0usize;
        for i in 0..n {
            let mut rng = split(11, i);
            let ep = rollout_episode(&mut UniformDecider { attention }, &fixed(), gating, &mut rng).unwrap();
            assert!(ep.stats.length >= 8);
            assert!((ep.stats.total_return - expected_return(ep.stats.length, ep.stats.success)).abs() < 1e-9);
            total += ep.stats.length;
        }
        assert!(total as f64 / n as f64 > 8.0, "{gating:?}");
    }
}

#[test]
fn timeouts_end_episodes() {
    let env = EnvConfig { mode: EnvMode::Fixed, timeout: 3, target_room: 3 };
    let mut rng = split(0, 0);
    let ep = rollout_episode(&mut UniformDecider { attention: true }, &env, GatingMode::Constrained, &mut rng).unwrap();
    assert_eq!(ep.stats.length, 3);
    assert!(!ep.stats.success);
    assert!((ep.stats.total_return + 0.03).abs() < 1e-12);
    assert_eq!(ep.trajectory.rewards.len(), ep.actions.len());
}
