use alloc::string::String;
use alloc::vec::Vec;

use crate::codec::{Reader, WriteLe};
use crate::nn::{Mlp, OutputActivation};

pub const MODEL_MAGIC: &[u8; 4] = b"TD3M";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("not a TD3 model file: bad magic")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupted model file: {0}")]
    Corrupted(&'static str),
    #[error("model is for `{found}`, expected `{expected}`")]
    EnvMismatch { expected: String, found: String },
    #[error("model dimensions ({obs} obs, {act} act) do not match the environment")]
    Dimensions { obs: usize, act: usize },
}

/// Persistent part of an agent: actor and both critics.
///
/// Layout (little-endian): `TD3M`, version u32, env id (u32 length + UTF-8),
/// action bound f64, then for actor, critic 1, critic 2 in order the layer
/// count u32 and layer sizes u32 each, then the three flat parameter vectors
/// as f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Td3Model {
    pub env_id: String,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
}

impl Td3Model {
    pub fn action_bound(&self) -> f64 {
        match self.actor.output_activation() {
            OutputActivation::TanhScaled(b) => b,
            OutputActivation::Linear => f64::INFINITY,
        }
    }

    pub fn check_env(&self, env_id: &str, obs_dim: usize, act_dim: usize) -> Result<(), ModelError> {
        if self.env_id != env_id {
            return Err(ModelError::EnvMismatch {
                expected: env_id.into(),
                found: self.env_id.clone(),
            });
        }
        let critic_in = self.critics[0].input_dim();
        if self.actor.input_dim() != obs_dim
            || self.actor.output_dim() != act_dim
            || critic_in != obs_dim + act_dim
        {
            return Err(ModelError::Dimensions {
                obs: self.actor.input_dim(),
                act: self.actor.output_dim(),
            });
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.put_u32(MODEL_FORMAT_VERSION);
        out.put_str(&self.env_id);
        out.put_f64(self.action_bound());
        let nets = [&self.actor, &self.critics[0], &self.critics[1]];
        for net in nets {
            out.put_u32(net.sizes().len() as u32);
            for &s in net.sizes() {
                out.put_u32(s as u32);
            }
        }
        for net in nets {
            for &p in net.params() {
                out.put_f64(p);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader::new(bytes);
        let trunc = |_| ModelError::Corrupted("truncated model file");
        if r.take(4).map_err(|_| ModelError::BadMagic)? != MODEL_MAGIC {
            return Err(ModelError::BadMagic);
        }
        let version = r.u32().map_err(trunc)?;
        if version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(version));
        }
        let env_id = r
            .string()
            .map_err(trunc)?
            .ok_or(ModelError::Corrupted("env id is not UTF-8"))?;
        let bound = r.f64().map_err(trunc)?;
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(ModelError::Corrupted("bad action bound"));
        }
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(3);
        for _ in 0..3 {
            let n = r.u32().map_err(trunc)? as usize;
            if !(2..=64).contains(&n) {
                return Err(ModelError::Corrupted("implausible layer count"));
            }
            let mut sizes = Vec::with_capacity(n);
            for _ in 0..n {
                let s = r.u32().map_err(trunc)? as usize;
                if s == 0 || s > 1 << 16 {
                    return Err(ModelError::Corrupted("implausible layer size"));
                }
                sizes.push(s);
            }
            shapes.push(sizes);
        }
        let mut nets = Vec::with_capacity(3);
        for (k, sizes) in shapes.iter().enumerate() {
            let count: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
            if r.remaining() < count * 8 {
                return Err(ModelError::Corrupted("truncated parameter payload"));
            }
            let mut params = Vec::with_capacity(count);
            for _ in 0..count {
                params.push(r.f64().map_err(trunc)?);
            }
            let act = if k == 0 {
                OutputActivation::TanhScaled(bound)
            } else {
                OutputActivation::Linear
            };
            nets.push(
                Mlp::from_params(sizes, act, params)
                    .map_err(|_| ModelError::Corrupted("inconsistent layer shapes"))?,
            );
        }
        if !r.is_empty() {
            return Err(ModelError::Corrupted("trailing bytes after parameters"));
        }
        let c2 = nets.pop().unwrap();
        let c1 = nets.pop().unwrap();
        let actor = nets.pop().unwrap();
        if c1.input_dim() != actor.input_dim() + actor.output_dim()
            || c2.sizes() != c1.sizes()
            || c1.output_dim() != 1
        {
            return Err(ModelError::Corrupted("critic shapes do not match actor"));
        }
        Ok(Self {
            env_id,
            actor,
            critics: [c1, c2],
        })
    }
}
