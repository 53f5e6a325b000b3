//! Environment contract with exact save/restore, and the two built-in tasks.
//!
//! Environments never truncate on their own: time limits belong to the
//! wrapper layer. `terminated` marks only absorbing success/failure.

mod pendulum;
mod point_mass;
mod snapshot;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use pendulum::{pendulum_dynamics, Pendulum};
pub use point_mass::{point_mass_dynamics, PointMass};
pub use snapshot::{SnapshotBlob, SnapshotError, SNAPSHOT_FORMAT_VERSION};

use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    /// Absorbing end of the episode. Time limits never set this.
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("step called on a terminated state; reset or restore first")]
    SteppedTerminated,
    #[error("action has {got} components, environment expects {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("action contains a non-finite component")]
    NonFiniteAction,
}

/// Full restorable state of an environment instance.
///
/// `physics` holds the environment-specific real state; together with the
/// generator state and the step counter it determines every future
/// observation under a given action sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub physics: Vec<f64>,
    pub rng: SplitMix64,
    pub step_count: u64,
    pub terminated: bool,
}

impl EnvState {
    /// Little-endian payload: physics length (u32), physics values (f64),
    /// generator state (u64), step counter (u64), terminated flag (u8).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.physics.len() + 17);
        out.extend_from_slice(&(self.physics.len() as u32).to_le_bytes());
        for v in &self.physics {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.rng.state().to_le_bytes());
        out.extend_from_slice(&self.step_count.to_le_bytes());
        out.push(self.terminated as u8);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = crate::codec::Reader::new(bytes);
        let corrupt = |_| SnapshotError::Corrupted("truncated state payload");
        let n = r.u32().map_err(corrupt)? as usize;
        if n > 1024 {
            return Err(SnapshotError::Corrupted("implausible physics length"));
        }
        let mut physics = Vec::with_capacity(n);
        for _ in 0..n {
            physics.push(r.f64().map_err(corrupt)?);
        }
        let rng = SplitMix64::from_state(r.u64().map_err(corrupt)?);
        let step_count = r.u64().map_err(corrupt)?;
        let terminated = match r.u8().map_err(corrupt)? {
            0 => false,
            1 => true,
            _ => return Err(SnapshotError::Corrupted("bad terminated flag")),
        };
        if !r.is_empty() {
            return Err(SnapshotError::Corrupted("trailing bytes in state payload"));
        }
        Ok(Self {
            physics,
            rng,
            step_count,
            terminated,
        })
    }
}

pub trait Environment: Send {
    fn id(&self) -> &'static str;
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Symmetric per-component action bound `a_max`.
    fn action_bound(&self) -> f64;
    /// Episode length used when no truncation override is active.
    fn default_time_limit(&self) -> usize;

    /// Reseed the internal generator and draw a fresh initial state.
    fn reset(&mut self, seed: u64) -> Observation;
    /// Clamp the action to bounds and advance one step.
    fn step(&mut self, action: &[f64]) -> Result<StepOutcome, EnvError>;
    fn observation(&self) -> Observation;
    fn state(&self) -> EnvState;
    fn set_state(&mut self, state: &EnvState) -> Result<(), SnapshotError>;

    fn is_terminated(&self) -> bool {
        self.state().terminated
    }

    fn save_snapshot(&self) -> SnapshotBlob {
        SnapshotBlob::new(self.id(), self.state().to_bytes())
    }

    fn load_snapshot(&mut self, blob: &SnapshotBlob) -> Result<Observation, SnapshotError> {
        if blob.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(SnapshotError::UnsupportedVersion(blob.format_version));
        }
        if blob.env_id != self.id() {
            return Err(SnapshotError::EnvMismatch {
                expected: self.id().into(),
                found: blob.env_id.clone(),
            });
        }
        let state = EnvState::from_bytes(&blob.payload)?;
        self.set_state(&state)?;
        Ok(self.observation())
    }
}

pub(crate) fn check_action(action: &[f64], dim: usize) -> Result<(), EnvError> {
    if action.len() != dim {
        return Err(EnvError::ActionDim {
            expected: dim,
            got: action.len(),
        });
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(EnvError::NonFiniteAction);
    }
    Ok(())
}

pub fn clamp_action(action: &[f64], bound: f64) -> Vec<f64> {
    action.iter().map(|a| a.clamp(-bound, bound)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    PointMass,
    Pendulum,
}

impl EnvKind {
    pub const ALL: [EnvKind; 2] = [EnvKind::PointMass, EnvKind::Pendulum];

    pub fn id(self) -> &'static str {
        match self {
            EnvKind::PointMass => PointMass::ID,
            EnvKind::Pendulum => Pendulum::ID,
        }
    }

    pub fn build(self) -> Box<dyn Environment> {
        match self {
            EnvKind::PointMass => Box::new(PointMass::new()),
            EnvKind::Pendulum => Box::new(Pendulum::new()),
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown environment id `{0}`")]
pub struct UnknownEnv(pub String);

impl FromStr for EnvKind {
    type Err = UnknownEnv;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| UnknownEnv(s.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_kind_parses_its_own_id() {
        for k in EnvKind::ALL {
            assert_eq!(k.id().parse::<EnvKind>().unwrap(), k);
            assert_eq!(k.build().id(), k.id());
        }
        assert!("cartpole".parse::<EnvKind>().is_err());
    }

    #[test]
    fn state_bytes_reject_garbage() {
        let s = EnvState {
            physics: alloc::vec![1.0, -2.0],
            rng: SplitMix64::new(3),
            step_count: 9,
            terminated: true,
        };
        let bytes = s.to_bytes();
        assert_eq!(EnvState::from_bytes(&bytes).unwrap(), s);
        assert!(EnvState::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(EnvState::from_bytes(&extra).is_err());
        let mut flag = bytes;
        *flag.last_mut().unwrap() = 2;
        assert!(EnvState::from_bytes(&flag).is_err());
    }
}
