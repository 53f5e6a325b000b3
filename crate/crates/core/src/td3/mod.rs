//! Twin delayed deterministic policy gradient learner.
//!
//! Actor `[obs, h.., act]` with `a_max * tanh` output, two critics
//! `[obs + act, h.., 1]` with linear output, target copies of all three, and
//! one Adam state per network. Updates follow the single-file reference
//! layout: critics every call, actor and Polyak target averaging every
//! `policy_frequency` steps.

mod model;
mod replay;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use model::{ModelError, Td3Model, MODEL_FORMAT_VERSION};
pub use replay::{Batch, ReplayBuffer, Transition};

use crate::nn::{polyak_update, Adam, Mlp, NnError, OutputActivation, Workspace};

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Config {
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub policy_noise: f64,
    pub exploration_noise: f64,
    pub learning_starts: u64,
    pub policy_frequency: u64,
    pub noise_clip: f64,
    pub total_timesteps: u64,
    pub hidden_sizes: Vec<usize>,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            buffer_capacity: 1_000_000,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 256,
            policy_noise: 0.2,
            exploration_noise: 0.1,
            learning_starts: 25_000,
            policy_frequency: 2,
            noise_clip: 0.5,
            total_timesteps: 1_000_000,
            hidden_sizes: vec![256, 256],
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("gamma must lie in [0, 1), got {0}")]
    Gamma(f64),
    #[error("tau must lie in (0, 1], got {0}")]
    Tau(f64),
    #[error("noise scales and clip must be nonnegative")]
    Noise,
    #[error("policy_frequency must be at least 1")]
    PolicyFrequency,
    #[error("batch size, buffer capacity and learning rate must be positive")]
    Sizes,
}

impl Td3Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(ConfigError::Tau(self.tau));
        }
        if self.policy_noise < 0.0 || self.exploration_noise < 0.0 || self.noise_clip < 0.0 {
            return Err(ConfigError::Noise);
        }
        if self.policy_frequency == 0 {
            return Err(ConfigError::PolicyFrequency);
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || !(self.learning_rate > 0.0) {
            return Err(ConfigError::Sizes);
        }
        Ok(())
    }
}

/// Concatenate per-sample observation and action rows into critic input.
pub fn critic_input(obs: &[f64], actions: &[f64], obs_dim: usize, act_dim: usize, out: &mut Vec<f64>) {
    out.clear();
    for (o, a) in obs.chunks_exact(obs_dim).zip(actions.chunks_exact(act_dim)) {
        out.extend_from_slice(o);
        out.extend_from_slice(a);
    }
}

/// `clamp(pi(obs) + N(0, (noise * bound)^2), -bound, bound)`. With zero noise
/// no random draw is consumed and the result is the deterministic policy.
pub fn select_action<R: Rng + ?Sized>(
    actor: &Mlp,
    obs: &[f64],
    exploration_noise: f64,
    bound: f64,
    rng: &mut R,
) -> Result<Vec<f64>, NnError> {
    let mut a = actor.forward(obs)?;
    if exploration_noise > 0.0 {
        for v in &mut a {
            let eps: f64 = StandardNormal.sample(rng);
            *v += eps * exploration_noise * bound;
        }
    }
    for v in &mut a {
        *v = v.clamp(-bound, bound);
    }
    Ok(a)
}

/// Smoothed target actions for standard-normal draws `eps`:
/// `clamp(pi_t(s') + clamp(eps * policy_noise, +-noise_clip) * bound, +-bound)`.
pub fn smoothed_target_actions(
    target_actor: &Mlp,
    next_obs: &[f64],
    eps: &[f64],
    cfg: &Td3Config,
    bound: f64,
    ws: &mut Workspace,
) -> Result<Vec<f64>, NnError> {
    let mut a = target_actor.forward_batch(next_obs, ws)?.to_vec();
    for (v, &e) in a.iter_mut().zip(eps) {
        let noise = (e * cfg.policy_noise).clamp(-cfg.noise_clip, cfg.noise_clip) * bound;
        *v = (*v + noise).clamp(-bound, bound);
    }
    Ok(a)
}

/// Bootstrapped critic targets
/// `y = r + gamma * (1 - done) * min(Q1_t, Q2_t)(s', a~)`.
pub fn td3_targets(
    target_actor: &Mlp,
    target_critics: [&Mlp; 2],
    batch: &Batch,
    eps: &[f64],
    cfg: &Td3Config,
    bound: f64,
) -> Result<Vec<f64>, NnError> {
    let mut ws = Workspace::default();
    let obs_dim = target_actor.input_dim();
    let act_dim = target_actor.output_dim();
    let next_actions = smoothed_target_actions(target_actor, &batch.next_obs, eps, cfg, bound, &mut ws)?;
    let mut input = Vec::new();
    critic_input(&batch.next_obs, &next_actions, obs_dim, act_dim, &mut input);
    let q1 = target_critics[0].forward_batch(&input, &mut ws)?.to_vec();
    let q2 = target_critics[1].forward_batch(&input, &mut ws)?;
    Ok(bootstrap(&batch.rewards, &batch.dones, &q1, q2, cfg.gamma))
}

fn bootstrap(rewards: &[f64], dones: &[bool], q1: &[f64], q2: &[f64], gamma: f64) -> Vec<f64> {
    rewards
        .iter()
        .zip(dones)
        .zip(q1.iter().zip(q2))
        .map(|((&r, &d), (&a, &b))| {
            let not_done = if d { 0.0 } else { 1.0 };
            r + gamma * not_done * a.min(b)
        })
        .collect()
}

/// Mean squared error of `critic(input)` against `targets`, and its parameter
/// gradient.
pub fn critic_loss_grad(
    critic: &Mlp,
    input: &[f64],
    targets: &[f64],
    ws: &mut Workspace,
    grads: &mut [f64],
) -> Result<f64, NnError> {
    let q = critic.forward_batch(input, ws)?;
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad_out = Vec::with_capacity(targets.len());
    for (&qv, &y) in q.iter().zip(targets) {
        let r = qv - y;
        loss += r * r;
        grad_out.push(2.0 * r / n);
    }
    critic.backward(ws, &grad_out, Some(grads), None);
    Ok(loss / n)
}

/// `-mean Q1(s, pi(s))` and its gradient with respect to the actor parameters.
pub fn actor_loss_grad(
    actor: &Mlp,
    critic: &Mlp,
    obs: &[f64],
    ws_actor: &mut Workspace,
    ws_critic: &mut Workspace,
    grads: &mut [f64],
) -> Result<f64, NnError> {
    let obs_dim = actor.input_dim();
    let act_dim = actor.output_dim();
    let actions = actor.forward_batch(obs, ws_actor)?.to_vec();
    let batch = actions.len() / act_dim;
    let mut input = Vec::new();
    critic_input(obs, &actions, obs_dim, act_dim, &mut input);
    let q = critic.forward_batch(&input, ws_critic)?;
    let loss = -q.iter().sum::<f64>() / batch as f64;
    let grad_q = vec![-1.0 / batch as f64; batch];
    let mut grad_in = Vec::new();
    critic.backward(ws_critic, &grad_q, None, Some(&mut grad_in));
    let width = obs_dim + act_dim;
    let grad_a: Vec<f64> = grad_in
        .chunks_exact(width)
        .flat_map(|row| row[obs_dim..].iter().copied())
        .collect();
    actor.backward(ws_actor, &grad_a, Some(grads), None);
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainMetrics {
    /// True when the call did nothing (before `learning_starts`, or too few
    /// transitions for a batch).
    pub skipped: bool,
    pub critic_losses: [f64; 2],
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    batch: Batch,
    eps: Vec<f64>,
    input: Vec<f64>,
    grads: Vec<f64>,
    ws_a: Workspace,
    ws_c: Workspace,
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critics: [Mlp; 2],
    pub critic_targets: [Mlp; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    bound: f64,
    critic_updates: u64,
    actor_updates: u64,
    scratch: Scratch,
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        bound: f64,
        hidden: &[usize],
        rng: &mut R,
    ) -> Self {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, OutputActivation::TanhScaled(bound), rng)
            .expect("valid actor shape");
        let c1 = Mlp::new(&critic_sizes, OutputActivation::Linear, rng).expect("valid critic shape");
        let c2 = Mlp::new(&critic_sizes, OutputActivation::Linear, rng).expect("valid critic shape");
        Self::from_networks(actor, [c1, c2])
    }

    /// Fresh optimizers and targets copied from the given networks.
    pub fn from_networks(actor: Mlp, critics: [Mlp; 2]) -> Self {
        let bound = match actor.output_activation() {
            OutputActivation::TanhScaled(b) => b,
            OutputActivation::Linear => f64::INFINITY,
        };
        Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor_opt: Adam::new(actor.params().len()),
            critic_opts: [Adam::new(critics[0].params().len()), Adam::new(critics[1].params().len())],
            actor,
            critics,
            bound,
            critic_updates: 0,
            actor_updates: 0,
            scratch: Scratch::default(),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn action_bound(&self) -> f64 {
        self.bound
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], noise: f64, rng: &mut R) -> Vec<f64> {
        select_action(&self.actor, obs, noise, self.bound, rng).expect("observation matches actor input")
    }

    pub fn to_model(&self, env_id: &str) -> Td3Model {
        Td3Model {
            env_id: env_id.into(),
            actor: self.actor.clone(),
            critics: self.critics.clone(),
        }
    }

    /// One TD3 update on a fresh minibatch. `global_step` counts completed
    /// environment steps; nothing happens until it exceeds `learning_starts`.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        global_step: u64,
        cfg: &Td3Config,
        rng: &mut R,
    ) -> TrainMetrics {
        if global_step <= cfg.learning_starts || buffer.len() < cfg.batch_size {
            return TrainMetrics {
                skipped: true,
                ..TrainMetrics::default()
            };
        }
        let (obs_dim, act_dim) = (self.obs_dim(), self.act_dim());
        let s = &mut self.scratch;
        buffer.sample_into(rng, cfg.batch_size, &mut s.batch);
        s.eps.clear();
        for _ in 0..cfg.batch_size * act_dim {
            s.eps.push(StandardNormal.sample(rng));
        }

        let next_actions =
            smoothed_target_actions(&self.actor_target, &s.batch.next_obs, &s.eps, cfg, self.bound, &mut s.ws_a)
                .expect("batch shape");
        critic_input(&s.batch.next_obs, &next_actions, obs_dim, act_dim, &mut s.input);
        let q1 = self.critic_targets[0].forward_batch(&s.input, &mut s.ws_c).expect("batch shape").to_vec();
        let q2 = self.critic_targets[1].forward_batch(&s.input, &mut s.ws_c).expect("batch shape");
        let targets = bootstrap(&s.batch.rewards, &s.batch.dones, &q1, q2, cfg.gamma);

        critic_input(&s.batch.obs, &s.batch.actions, obs_dim, act_dim, &mut s.input);
        let mut critic_losses = [0.0; 2];
        for (k, loss) in critic_losses.iter_mut().enumerate() {
            s.grads.resize(self.critics[k].params().len(), 0.0);
            *loss = critic_loss_grad(&self.critics[k], &s.input, &targets, &mut s.ws_c, &mut s.grads)
                .expect("batch shape");
            self.critic_opts[k].step(self.critics[k].params_mut(), &s.grads, cfg.learning_rate);
        }
        self.critic_updates += 1;

        let mut actor_loss = None;
        if global_step % cfg.policy_frequency == 0 {
            s.grads.resize(self.actor.params().len(), 0.0);
            let loss = actor_loss_grad(
                &self.actor,
                &self.critics[0],
                &s.batch.obs,
                &mut s.ws_a,
                &mut s.ws_c,
                &mut s.grads,
            )
            .expect("batch shape");
            self.actor_opt.step(self.actor.params_mut(), &s.grads, cfg.learning_rate);
            self.actor_updates += 1;
            actor_loss = Some(loss);
            self.update_targets(cfg.tau);
        }
        TrainMetrics {
            skipped: false,
            critic_losses,
            actor_loss,
        }
    }

    /// Polyak-average all three target networks toward the online ones.
    pub fn update_targets(&mut self, tau: f64) {
        polyak_update(self.actor_target.params_mut(), self.actor.params(), tau);
        for k in 0..2 {
            polyak_update(self.critic_targets[k].params_mut(), self.critics[k].params(), tau);
        }
    }
}

#[cfg(test)]
mod tests;
