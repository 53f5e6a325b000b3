use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{check_action, EnvError, EnvState, Environment, Observation, SnapshotError, StepOutcome};
use crate::rng::SplitMix64;

pub const DT: f64 = 0.1;
pub const MAX_ACCEL: f64 = 1.0;
pub const MAX_SPEED: f64 = 1.0;
pub const ARENA: f64 = 5.0;
pub const START_BOX: f64 = 0.1;
pub const GOAL: [f64; 2] = [4.0, 4.0];
pub const GOAL_RADIUS: f64 = 0.3;
pub const STEP_PENALTY: f64 = -0.01;
pub const SUCCESS_BONUS: f64 = 10.0;

/// One Euler step of a 2-D point mass in a walled arena. Hitting a wall zeroes
/// the velocity component normal to it. `accel` must already be clamped.
pub fn point_mass_dynamics(pos: [f64; 2], vel: [f64; 2], accel: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let mut p = [0.0; 2];
    let mut v = [0.0; 2];
    for i in 0..2 {
        v[i] = (vel[i] + accel[i] * DT).clamp(-MAX_SPEED, MAX_SPEED);
        let raw = pos[i] + v[i] * DT;
        p[i] = raw.clamp(-ARENA, ARENA);
        if p[i] != raw {
            v[i] = 0.0;
        }
    }
    (p, v)
}

pub fn in_goal(pos: [f64; 2]) -> bool {
    let dx = pos[0] - GOAL[0];
    let dy = pos[1] - GOAL[1];
    dx * dx + dy * dy <= GOAL_RADIUS * GOAL_RADIUS
}

/// Sparse-reward navigation from a small start box to a fixed goal disc.
///
/// Observation: position (2), velocity (2), goal minus position (2).
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pos: [f64; 2],
    vel: [f64; 2],
    rng: SplitMix64,
    step_count: u64,
    terminated: bool,
}

impl PointMass {
    pub const ID: &'static str = "point-mass-sparse";
    pub const TIME_LIMIT: usize = 200;

    pub fn new() -> Self {
        let mut env = Self {
            pos: [0.0; 2],
            vel: [0.0; 2],
            rng: SplitMix64::new(0),
            step_count: 0,
            terminated: false,
        };
        env.reset(0);
        env
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }

    pub fn velocity(&self) -> [f64; 2] {
        self.vel
    }

    /// Place the mass at an explicit state (step counter and flag reset).
    pub fn place(&mut self, pos: [f64; 2], vel: [f64; 2]) {
        self.pos = pos;
        self.vel = vel;
        self.step_count = 0;
        self.terminated = false;
    }
}

impl Default for PointMass {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PointMass {
    fn id(&self) -> &'static str {
        Self::ID
    }

    fn obs_dim(&self) -> usize {
        6
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn action_bound(&self) -> f64 {
        MAX_ACCEL
    }

    fn default_time_limit(&self) -> usize {
        Self::TIME_LIMIT
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = SplitMix64::new(seed);
        for p in &mut self.pos {
            *p = self.rng.random_range(-START_BOX..=START_BOX);
        }
        self.vel = [0.0; 2];
        self.step_count = 0;
        self.terminated = false;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError> {
        if self.terminated {
            return Err(EnvError::SteppedTerminated);
        }
        check_action(action, 2)?;
        let accel = [
            action[0].clamp(-MAX_ACCEL, MAX_ACCEL),
            action[1].clamp(-MAX_ACCEL, MAX_ACCEL),
        ];
        let (pos, vel) = point_mass_dynamics(self.pos, self.vel, accel);
        self.pos = pos;
        self.vel = vel;
        self.step_count += 1;
        self.terminated = in_goal(pos);
        let reward = if self.terminated {
            SUCCESS_BONUS
        } else {
            STEP_PENALTY
        };
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            terminated: self.terminated,
        })
    }

    fn observation(&self) -> Observation {
        Observation(vec![
            self.pos[0],
            self.pos[1],
            self.vel[0],
            self.vel[1],
            GOAL[0] - self.pos[0],
            GOAL[1] - self.pos[1],
        ])
    }

    fn state(&self) -> EnvState {
        EnvState {
            physics: Vec::from([self.pos[0], self.pos[1], self.vel[0], self.vel[1]]),
            rng: self.rng,
            step_count: self.step_count,
            terminated: self.terminated,
        }
    }

    fn set_state(&mut self, state: &EnvState) -> Result<(), SnapshotError> {
        let [px, py, vx, vy] = state.physics[..] else {
            return Err(SnapshotError::Corrupted("not a point-mass state"));
        };
        self.pos = [px, py];
        self.vel = [vx, vy];
        self.rng = state.rng;
        self.step_count = state.step_count;
        self.terminated = state.terminated;
        Ok(())
    }
}
