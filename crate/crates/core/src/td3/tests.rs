use super::*;
use crate::rng::SplitMix64;

fn sizes(input: usize, hidden: &[usize], out: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(out);
    s
}

fn random_vec(rng: &mut SplitMix64, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Central differences of `f` around `params`.
fn finite_difference(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-300)
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let mut rng = SplitMix64::new(100);
    for trial in 0..10 {
        let (od, ad, batch) = (3 + trial % 3, 1 + trial % 2, 5);
        let shape = sizes(od + ad, &[7, 5], 1);
        let critic = Mlp::new(&shape, OutputActivation::Linear, &mut rng).unwrap();
        let input = random_vec(&mut rng, batch * (od + ad), 1.5);
        let targets = random_vec(&mut rng, batch, 2.0);
        let mut ws = Workspace::default();
        let mut g = vec![0.0; critic.params().len()];
        critic_loss_grad(&critic, &input, &targets, &mut ws, &mut g).unwrap();
        let fd = finite_difference(critic.params(), 1e-6, |p| {
            let net = Mlp::from_params(&shape, OutputActivation::Linear, p.to_vec()).unwrap();
            let mut ws = Workspace::default();
            let mut scratch = vec![0.0; p.len()];
            critic_loss_grad(&net, &input, &targets, &mut ws, &mut scratch).unwrap()
        });
        let err = relative_error(&g, &fd);
        assert!(err < 1e-6, "trial {trial}: relative error {err}");
    }
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let mut rng = SplitMix64::new(200);
    for trial in 0..10 {
        let (od, ad, batch) = (2 + trial % 4, 1 + trial % 2, 6);
        let bound = 0.5 + trial as f64 * 0.25;
        let a_shape = sizes(od, &[6, 4], ad);
        let actor = Mlp::new(&a_shape, OutputActivation::TanhScaled(bound), &mut rng).unwrap();
        let critic = Mlp::new(&sizes(od + ad, &[5, 6], 1), OutputActivation::Linear, &mut rng).unwrap();
        let obs = random_vec(&mut rng, batch * od, 2.0);
        let (mut wa, mut wc) = (Workspace::default(), Workspace::default());
        let mut g = vec![0.0; actor.params().len()];
        actor_loss_grad(&actor, &critic, &obs, &mut wa, &mut wc, &mut g).unwrap();
        let fd = finite_difference(actor.params(), 1e-6, |p| {
            let net = Mlp::from_params(&a_shape, OutputActivation::TanhScaled(bound), p.to_vec()).unwrap();
            let (mut wa, mut wc) = (Workspace::default(), Workspace::default());
            let mut scratch = vec![0.0; p.len()];
            actor_loss_grad(&net, &critic, &obs, &mut wa, &mut wc, &mut scratch).unwrap()
        });
        let err = relative_error(&g, &fd);
        assert!(err < 1e-6, "trial {trial}: relative error {err}");
    }
}

#[test]
fn zero_residual_gives_zero_gradient() {
    let mut rng = SplitMix64::new(5);
    let critic = Mlp::new(&[4, 6, 1], OutputActivation::Linear, &mut rng).unwrap();
    let input = random_vec(&mut rng, 12, 1.0);
    let targets = {
        let mut ws = Workspace::default();
        critic.forward_batch(&input, &mut ws).unwrap().to_vec()
    };
    let mut ws = Workspace::default();
    let mut g = vec![1.0; critic.params().len()];
    let loss = critic_loss_grad(&critic, &input, &targets, &mut ws, &mut g).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.iter().all(|&x| x == 0.0));
}

fn tiny_nets(rng: &mut SplitMix64) -> (Mlp, [Mlp; 2]) {
    let actor = Mlp::new(&[2, 3, 1], OutputActivation::TanhScaled(2.0), rng).unwrap();
    let c1 = Mlp::new(&[3, 3, 1], OutputActivation::Linear, rng).unwrap();
    let c2 = Mlp::new(&[3, 3, 1], OutputActivation::Linear, rng).unwrap();
    (actor, [c1, c2])
}

fn tiny_batch(dones: Vec<bool>) -> Batch {
    let n = dones.len();
    Batch {
        size: n,
        obs: vec![0.0; 2 * n],
        actions: vec![0.0; n],
        rewards: (0..n).map(|i| 0.5 - i as f64).collect(),
        next_obs: (0..2 * n).map(|i| (i as f64 * 0.37).sin()).collect(),
        dones,
    }
}

#[test]
fn target_with_zero_gamma_or_done_is_reward() {
    let mut rng = SplitMix64::new(9);
    let (actor, critics) = tiny_nets(&mut rng);
    let batch = tiny_batch(vec![false, true, false]);
    let eps = [0.3, -1.0, 2.5];
    let cfg = Td3Config {
        gamma: 0.0,
        ..Td3Config::default()
    };
    let y = td3_targets(&actor, [&critics[0], &critics[1]], &batch, &eps, &cfg, 2.0).unwrap();
    assert_eq!(y, batch.rewards);
    let cfg = Td3Config::default();
    let y = td3_targets(&actor, [&critics[0], &critics[1]], &batch, &eps, &cfg, 2.0).unwrap();
    assert_eq!(y[1], batch.rewards[1]);
    assert_ne!(y[0], batch.rewards[0]);
}

#[test]
fn target_matches_scalar_recomputation() {
    let mut rng = SplitMix64::new(31);
    let (actor, critics) = tiny_nets(&mut rng);
    let batch = tiny_batch(vec![false, false]);
    let eps = [0.4, -7.0];
    let cfg = Td3Config::default();
    let y = td3_targets(&actor, [&critics[0], &critics[1]], &batch, &eps, &cfg, 2.0).unwrap();
    for i in 0..2 {
        let s = &batch.next_obs[2 * i..2 * i + 2];
        let pi = actor.forward(s).unwrap()[0];
        let noise = (eps[i] * 0.2f64).clamp(-0.5, 0.5) * 2.0;
        let a = (pi + noise).clamp(-2.0, 2.0);
        let q1 = critics[0].forward(&[s[0], s[1], a]).unwrap()[0];
        let q2 = critics[1].forward(&[s[0], s[1], a]).unwrap()[0];
        let expect = batch.rewards[i] + 0.99 * q1.min(q2);
        assert!((y[i] - expect).abs() < 1e-14);
    }
}

#[test]
fn target_is_affine_in_gamma() {
    let mut rng = SplitMix64::new(77);
    let (actor, critics) = tiny_nets(&mut rng);
    let batch = tiny_batch(vec![false, true, false, false]);
    let eps = [0.1, 0.2, -0.3, 0.0];
    let at = |g: f64| {
        let cfg = Td3Config {
            gamma: g,
            ..Td3Config::default()
        };
        td3_targets(&actor, [&critics[0], &critics[1]], &batch, &eps, &cfg, 2.0).unwrap()
    };
    let (y0, y5, y9) = (at(0.0), at(0.5), at(0.9));
    for i in 0..4 {
        let slope = (y9[i] - y0[i]) / 0.9;
        assert!((y0[i] + 0.5 * slope - y5[i]).abs() < 1e-12);
        if batch.dones[i] {
            assert_eq!(slope, 0.0);
        }
    }
}

#[test]
fn select_action_noise_and_clamping() {
    let mut rng = SplitMix64::new(4);
    let mut actor = Mlp::zeros(&[3, 4, 2], OutputActivation::TanhScaled(1.0)).unwrap();
    let obs = [0.2, -0.1, 0.9];
    let out = actor.forward(&obs).unwrap();
    let before = rng;
    assert_eq!(select_action(&actor, &obs, 0.0, 1.0, &mut rng).unwrap(), out);
    assert_eq!(rng, before, "deterministic policy consumes no randomness");

    // saturate output at +bound
    let (_, b) = actor.layer_offsets(1);
    actor.params_mut()[b] = 1e3;
    actor.params_mut()[b + 1] = 1e3;
    for _ in 0..200 {
        let a = select_action(&actor, &obs, 0.1, 1.0, &mut rng).unwrap();
        assert!(a.iter().all(|&v| v <= 1.0 && v > 0.5));
    }
}

#[test]
fn select_action_seeded_sequence_is_reproducible() {
    let mut init = SplitMix64::new(8);
    let actor = Mlp::new(&[2, 8, 1], OutputActivation::TanhScaled(2.0), &mut init).unwrap();
    let draw = || {
        let mut rng = SplitMix64::new(2024);
        (0..5)
            .map(|i| select_action(&actor, &[i as f64 * 0.1, 1.0], 0.1, 2.0, &mut rng).unwrap()[0])
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(), draw());
}

fn filled_buffer(n: usize, rng: &mut SplitMix64) -> ReplayBuffer {
    let mut buf = ReplayBuffer::new(n, 3, 1);
    for _ in 0..n {
        let obs = random_vec(rng, 3, 1.0);
        let action = random_vec(rng, 1, 1.0);
        buf.push(&Transition {
            reward: 2.0 * obs[0] - action[0],
            obs,
            action,
            next_obs: random_vec(rng, 3, 1.0),
            done_for_bootstrap: rng.random_bool(0.1),
        });
    }
    buf
}

fn small_cfg() -> Td3Config {
    Td3Config {
        batch_size: 16,
        learning_starts: 10,
        hidden_sizes: vec![8, 8],
        ..Td3Config::default()
    }
}

#[test]
fn train_step_skips_before_learning_starts() {
    let mut rng = SplitMix64::new(1);
    let buf = filled_buffer(64, &mut rng);
    let cfg = small_cfg();
    let mut agent = Td3Agent::new(3, 1, 1.0, &cfg.hidden_sizes, &mut rng);
    let snapshot = agent.actor.clone();
    let m = agent.train_step(&buf, cfg.learning_starts, &cfg, &mut rng);
    assert!(m.skipped);
    assert_eq!(agent.critic_updates(), 0);
    assert_eq!(agent.actor, snapshot);
}

#[test]
fn delayed_actor_updates_counted() {
    let mut rng = SplitMix64::new(2);
    let buf = filled_buffer(64, &mut rng);
    let cfg = small_cfg();
    let mut agent = Td3Agent::new(3, 1, 1.0, &cfg.hidden_sizes, &mut rng);
    for step in cfg.learning_starts + 1..=cfg.learning_starts + 25 {
        let m = agent.train_step(&buf, step, &cfg, &mut rng);
        assert!(!m.skipped);
        assert_eq!(m.actor_loss.is_some(), step % 2 == 0);
    }
    assert_eq!(agent.critic_updates(), 25);
    assert_eq!(agent.actor_updates(), 25 / 2);
}

#[test]
fn tau_one_copies_online_networks() {
    let mut rng = SplitMix64::new(3);
    let buf = filled_buffer(64, &mut rng);
    let cfg = Td3Config {
        tau: 1.0,
        ..small_cfg()
    };
    let mut agent = Td3Agent::new(3, 1, 1.0, &cfg.hidden_sizes, &mut rng);
    agent.train_step(&buf, 11, &cfg, &mut rng);
    agent.train_step(&buf, 12, &cfg, &mut rng);
    assert_eq!(agent.actor_target, agent.actor);
    assert_eq!(agent.critic_targets, agent.critics);
}

#[test]
fn polyak_contracts_toward_online() {
    let mut rng = SplitMix64::new(6);
    let mut agent = Td3Agent::new(3, 1, 1.0, &[4], &mut rng);
    for p in agent.actor_target.params_mut() {
        *p += rng.random_range(-1.0..1.0);
    }
    let before: Vec<f64> = agent.actor_target.params().to_vec();
    agent.update_targets(0.005);
    for ((&t_new, &t_old), &src) in agent.actor_target.params().iter().zip(&before).zip(agent.actor.params()) {
        assert!((t_new - src).abs() <= (1.0 - 0.005) * (t_old - src).abs() + 1e-15);
    }
}

#[test]
fn training_reduces_critic_loss_on_fixed_data() {
    let mut rng = SplitMix64::new(12);
    let buf = filled_buffer(256, &mut rng);
    let cfg = Td3Config {
        gamma: 0.0,
        learning_rate: 1e-2,
        ..small_cfg()
    };
    let mut agent = Td3Agent::new(3, 1, 1.0, &cfg.hidden_sizes, &mut rng);
    let losses: Vec<f64> = (11..600)
        .map(|step| agent.train_step(&buf, step, &cfg, &mut rng).critic_losses[0])
        .collect();
    let head = losses[..10].iter().sum::<f64>() / 10.0;
    let tail = losses[losses.len() - 50..].iter().sum::<f64>() / 50.0;
    assert!(tail < 0.2 * head, "{tail} !< 0.2 * {head}");
}

#[test]
fn model_round_trip_and_errors() {
    let mut rng = SplitMix64::new(13);
    let agent = Td3Agent::new(6, 2, 1.0, &[5, 4], &mut rng);
    let model = agent.to_model("point-mass-sparse");
    let bytes = model.encode();
    assert_eq!(&bytes[..4], b"TD3M");
    let back = Td3Model::decode(&bytes).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.encode(), bytes);
    assert!(back.check_env("point-mass-sparse", 6, 2).is_ok());
    assert!(matches!(back.check_env("pendulum-swingup", 6, 2), Err(ModelError::EnvMismatch { .. })));
    assert!(matches!(back.check_env("point-mass-sparse", 3, 1), Err(ModelError::Dimensions { .. })));
    assert_eq!(Td3Model::decode(b"NOPE"), Err(ModelError::BadMagic));
    assert!(matches!(Td3Model::decode(&bytes[..bytes.len() - 3]), Err(ModelError::Corrupted(_))));
    let mut v = bytes.clone();
    v[4] = 9;
    assert_eq!(Td3Model::decode(&v), Err(ModelError::UnsupportedVersion(9)));
}

#[test]
fn config_validation() {
    assert!(Td3Config::default().validate().is_ok());
    let bad = |f: fn(&mut Td3Config)| {
        let mut c = Td3Config::default();
        f(&mut c);
        c.validate().is_err()
    };
    assert!(bad(|c| c.gamma = 1.0));
    assert!(bad(|c| c.tau = 0.0));
    assert!(bad(|c| c.noise_clip = -0.1));
    assert!(bad(|c| c.policy_frequency = 0));
    assert!(bad(|c| c.batch_size = 0));
}
