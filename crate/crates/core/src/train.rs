//! TD3 training loop over a wrapped environment, plus the evaluation protocol.

use alloc::vec::Vec;

use rand::Rng;

use crate::env::{EnvKind, Environment};
use crate::nn::Mlp;
use crate::rng::{mix_seed, SplitMix64};
use crate::td3::{select_action, ConfigError, ReplayBuffer, Td3Agent, Td3Config, Td3Model, Transition};
use crate::wrapper::{S3rlConfig, S3rlWrapper, SnapshotSource, WrapperError};

const INIT_STREAM: u64 = 1;
const ACT_STREAM: u64 = 2;
const UPDATE_STREAM: u64 = 3;
const RESET_STREAM: u64 = 4;
const SNAPSHOT_STREAM: u64 = 5;
const EVAL_STREAM: u64 = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Td3(#[from] ConfigError),
    #[error(transparent)]
    Wrapper(#[from] WrapperError),
    #[error("eval_interval and eval_episodes must both be at least 1")]
    BadEvalSpec,
}

/// Outcome of one evaluation: per-episode returns of the deterministic
/// policy on a fresh bare environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub global_step: u64,
    pub returns: Vec<f64>,
    /// Episodes that ended by termination rather than the time limit. On
    /// point-mass this is reaching the goal.
    pub successes: u32,
}

impl EvalRecord {
    pub fn mean_return(&self) -> f64 {
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.returns.len() as f64
    }
}

/// Run `episodes` deterministic episodes, each capped at the env's default
/// time limit. Episode `i` resets with `mix_seed(seed, i)`.
pub fn evaluate(actor: &Mlp, bound: f64, env: &mut dyn Environment, episodes: u32, seed: u64) -> EvalRecord {
    let limit = env.default_time_limit();
    let mut returns = Vec::with_capacity(episodes as usize);
    let mut successes = 0;
    // never drawn from: zero noise
    let mut no_rng = SplitMix64::new(0);
    for ep in 0..episodes {
        let mut obs = env.reset(mix_seed(seed, ep as u64));
        let mut total = 0.0;
        for _ in 0..limit {
            let a = select_action(actor, obs.as_slice(), 0.0, bound, &mut no_rng).expect("actor matches env");
            let out = env.step(&a).expect("policy actions are valid");
            total += out.reward;
            obs = out.observation;
            if out.terminated {
                successes += 1;
                break;
            }
        }
        returns.push(total);
    }
    EvalRecord {
        global_step: 0,
        returns,
        successes,
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub env: EnvKind,
    pub td3: Td3Config,
    pub wrapper: S3rlConfig,
    pub source: Option<SnapshotSource>,
    pub seed: u64,
    pub eval_interval: u64,
    pub eval_episodes: u32,
    /// Global steps at which a copy of the model is kept.
    pub checkpoints: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub agent: Td3Agent,
    pub evals: Vec<EvalRecord>,
    pub checkpoints: Vec<(u64, Td3Model)>,
    pub train_episodes: u64,
    pub snapshot_resets: u64,
    pub env_steps: u64,
    /// Every transition the run stored, for inspection.
    pub buffer: ReplayBuffer,
}

/// Train a fresh TD3 student for exactly `td3.total_timesteps` wrapped
/// environment steps. The first `learning_starts` actions are uniform in the
/// action box; afterwards the actor with Gaussian exploration noise acts.
/// Evaluations (not counted against the budget) run on a separate bare env
/// every `eval_interval` steps; `on_eval` sees each record as it is made.
pub fn run_training(spec: &RunSpec, mut on_eval: impl FnMut(&EvalRecord)) -> Result<RunOutcome, TrainError> {
    let cfg = &spec.td3;
    cfg.validate()?;
    spec.wrapper.validate(cfg.total_timesteps)?;
    if spec.eval_interval == 0 || spec.eval_episodes == 0 {
        return Err(TrainError::BadEvalSpec);
    }
    let env = spec.env.build();
    let (obs_dim, act_dim, bound) = (env.obs_dim(), env.action_dim(), env.action_bound());
    let env_id = env.id();
    let mut wrapper = S3rlWrapper::new(env, spec.wrapper, spec.source.clone())?;
    let mut eval_env = spec.env.build();

    let mut init_rng = SplitMix64::new(mix_seed(spec.seed, INIT_STREAM));
    let mut act_rng = SplitMix64::new(mix_seed(spec.seed, ACT_STREAM));
    let mut update_rng = SplitMix64::new(mix_seed(spec.seed, UPDATE_STREAM));
    let mut reset_rng = SplitMix64::new(mix_seed(spec.seed, RESET_STREAM));
    let mut snapshot_rng = SplitMix64::new(mix_seed(spec.seed, SNAPSHOT_STREAM));
    let eval_seed = mix_seed(spec.seed, EVAL_STREAM);

    let mut agent = Td3Agent::new(obs_dim, act_dim, bound, &cfg.hidden_sizes, &mut init_rng);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity.min(cfg.total_timesteps as usize).max(1), obs_dim, act_dim);
    let mut evals = Vec::new();
    let mut checkpoints = Vec::new();
    let mut train_episodes = 1;
    let mut snapshot_resets = 0;

    let mut obs = wrapper.reset(reset_rng.random(), &mut snapshot_rng)?;
    snapshot_resets += wrapper.last_snapshot().is_some() as u64;
    for step in 0..cfg.total_timesteps {
        let action: Vec<f64> = if step < cfg.learning_starts {
            (0..act_dim).map(|_| act_rng.random_range(-bound..=bound)).collect()
        } else {
            agent.act(obs.as_slice(), cfg.exploration_noise, &mut act_rng)
        };
        let out = wrapper.step(&action)?;
        buffer.push(&Transition {
            obs: obs.0,
            action,
            reward: out.reward,
            next_obs: out.observation.0.clone(),
            done_for_bootstrap: out.terminated,
        });
        obs = out.observation;
        if out.terminated || out.truncated {
            obs = wrapper.reset(reset_rng.random(), &mut snapshot_rng)?;
            snapshot_resets += wrapper.last_snapshot().is_some() as u64;
            train_episodes += 1;
        }
        let global_step = step + 1;
        agent.train_step(&buffer, global_step, cfg, &mut update_rng);
        if global_step % spec.eval_interval == 0 {
            let mut rec = evaluate(
                &agent.actor,
                bound,
                eval_env.as_mut(),
                spec.eval_episodes,
                mix_seed(eval_seed, global_step),
            );
            rec.global_step = global_step;
            on_eval(&rec);
            evals.push(rec);
        }
        if spec.checkpoints.contains(&global_step) {
            checkpoints.push((global_step, agent.to_model(env_id)));
        }
    }
    Ok(RunOutcome {
        agent,
        evals,
        checkpoints,
        train_episodes,
        snapshot_resets,
        env_steps: wrapper.global_step(),
        buffer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Pendulum;
    use alloc::vec;

    fn tiny(total: u64) -> Td3Config {
        Td3Config {
            buffer_capacity: 10_000,
            batch_size: 16,
            learning_starts: 50,
            total_timesteps: total,
            hidden_sizes: vec![8, 8],
            ..Td3Config::default()
        }
    }

    fn spec(env: EnvKind, total: u64) -> RunSpec {
        RunSpec {
            env,
            td3: tiny(total),
            wrapper: S3rlConfig::disabled(env.build().default_time_limit()),
            source: None,
            seed: 9,
            eval_interval: 100,
            eval_episodes: 2,
            checkpoints: vec![100],
        }
    }

    #[test]
    fn evaluate_single_episode_and_repeatability() {
        let mut rng = SplitMix64::new(1);
        let agent = Td3Agent::new(3, 1, 2.0, &[8], &mut rng);
        let mut env = Pendulum::new();
        let one = evaluate(&agent.actor, 2.0, &mut env, 1, 5);
        assert_eq!(one.mean_return(), one.returns[0]);
        let a = evaluate(&agent.actor, 2.0, &mut env, 3, 5);
        let b = evaluate(&agent.actor, 2.0, &mut env, 3, 5);
        assert_eq!(a, b);
        assert!(a.mean_return() <= 0.0 && a.mean_return() >= -2000.0);
    }

    #[test]
    fn eval_schedule_budget_and_checkpoints() {
        let s = spec(EnvKind::Pendulum, 450);
        let out = run_training(&s, |_| {}).unwrap();
        let steps: Vec<u64> = out.evals.iter().map(|e| e.global_step).collect();
        assert_eq!(steps, vec![100, 200, 300, 400]);
        assert_eq!(out.env_steps, 450);
        assert_eq!(out.checkpoints.len(), 1);
        assert_eq!(out.agent.critic_updates(), 400);
        assert_eq!(out.agent.actor_updates(), 200);
        assert_eq!(out.train_episodes, 3);
    }

    #[test]
    fn runs_are_reproducible() {
        let s = spec(EnvKind::PointMass, 300);
        let a = run_training(&s, |_| {}).unwrap();
        let b = run_training(&s, |_| {}).unwrap();
        assert_eq!(a.evals, b.evals);
        assert_eq!(a.agent.actor.params(), b.agent.actor.params());
        let c = run_training(&RunSpec { seed: 10, ..s }, |_| {}).unwrap();
        assert_ne!(a.agent.actor.params(), c.agent.actor.params());
    }

    #[test]
    fn bad_eval_spec() {
        let s = RunSpec {
            eval_episodes: 0,
            ..spec(EnvKind::PointMass, 10)
        };
        assert_eq!(run_training(&s, |_| {}).unwrap_err(), TrainError::BadEvalSpec);
    }
}
