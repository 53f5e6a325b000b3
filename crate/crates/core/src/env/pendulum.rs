use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::{check_action, EnvError, EnvState, Environment, Observation, SnapshotError, StepOutcome};
use crate::rng::SplitMix64;

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = theta - two_pi * libm::floor((theta + PI) / two_pi);
    if w <= -PI {
        w + two_pi
    } else if w > PI {
        w - two_pi
    } else {
        w
    }
}

/// One semi-implicit Euler step. `theta` is measured from upright and the
/// returned angle is wrapped; `torque` must already be clamped.
pub fn pendulum_dynamics(theta: f64, theta_dot: f64, torque: f64) -> (f64, f64) {
    let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * libm::sin(theta)
        + 3.0 / (MASS * LENGTH * LENGTH) * torque;
    let theta_dot = (theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
    let theta = wrap_angle(theta + theta_dot * DT);
    (theta, theta_dot)
}

/// Swing-up cost on the pre-step state, negated.
pub fn pendulum_reward(theta: f64, theta_dot: f64, torque: f64) -> f64 {
    let th = wrap_angle(theta);
    -(th * th + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque)
}

/// Torque-limited pendulum swing-up. Observation is `(cos θ, sin θ, θ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pendulum {
    theta: f64,
    theta_dot: f64,
    rng: SplitMix64,
    step_count: u64,
}

impl Pendulum {
    pub const ID: &'static str = "pendulum-swingup";
    pub const TIME_LIMIT: usize = 200;

    pub fn new() -> Self {
        let mut env = Self {
            theta: PI,
            theta_dot: 0.0,
            rng: SplitMix64::new(0),
            step_count: 0,
        };
        env.reset(0);
        env
    }

    pub fn angle(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    /// Place the pendulum at an explicit state (step counter reset).
    pub fn set_angle(&mut self, theta: f64, theta_dot: f64) {
        self.theta = wrap_angle(theta);
        self.theta_dot = theta_dot;
        self.step_count = 0;
    }
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for Pendulum {
    fn id(&self) -> &'static str {
        Self::ID
    }

    fn obs_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_bound(&self) -> f64 {
        MAX_TORQUE
    }

    fn default_time_limit(&self) -> usize {
        Self::TIME_LIMIT
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = SplitMix64::new(seed);
        self.theta = self.rng.random_range(-PI..=PI);
        self.theta_dot = self.rng.random_range(-1.0..=1.0);
        self.step_count = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        check_action(action, 1)?;
        let u = action[0].clamp(-MAX_TORQUE, MAX_TORQUE);
        let reward = pendulum_reward(self.theta, self.theta_dot, u);
        let (theta, theta_dot) = pendulum_dynamics(self.theta, self.theta_dot, u);
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.step_count += 1;
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            terminated: false,
        })
    }

    fn observation(&self) -> Observation {
        Observation(vec![libm::cos(self.theta), libm::sin(self.theta), self.theta_dot])
    }

    fn state(&self) -> EnvState {
        EnvState {
            physics: Vec::from([self.theta, self.theta_dot]),
            rng: self.rng,
            step_count: self.step_count,
            terminated: false,
        }
    }

    fn set_state(&mut self, state: &EnvState) -> Result<(), SnapshotError> {
        if state.physics.len() != 2 || state.terminated {
            return Err(SnapshotError::Corrupted("not a pendulum state"));
        }
        self.theta = state.physics[0];
        self.theta_dot = state.physics[1];
        self.rng = state.rng;
        self.step_count = state.step_count;
        Ok(())
    }
}
