use std::path::Path;

use serde::{Deserialize, Serialize};

use super::agent::{AgentPair, AgentSettings};
use super::train::DeepMethod;
use crate::env::ProblemInstance;
use crate::error::{Error, Result};
use crate::harness::instance_digest;
use crate::nn::Mlp;
use crate::schedule::{BetaSchedule, ExplorationSchedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentManifest {
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    pub beta: BetaSchedule,
    pub exploration: ExplorationSchedule,
    pub seed: u64,
    pub instance_sha256: String,
}

/// Learned and target networks plus the run manifest, as one JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub manifest: AgentManifest,
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
}

impl AgentCheckpoint {
    pub fn new(
        agent: &AgentPair,
        instance: &ProblemInstance,
        method: &DeepMethod,
        exploration: ExplorationSchedule,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            manifest: AgentManifest {
                method: method.label().into(),
                m: agent.m(),
                n: agent.n(),
                tau: agent.tau,
                beta: method.beta_schedule(),
                exploration,
                seed,
                instance_sha256: instance_digest(instance)?,
            },
            actor: agent.actor.clone(),
            critic: agent.critic.clone(),
            target_actor: agent.target_actor.clone(),
            target_critic: agent.target_critic.clone(),
        })
    }

    /// Rebuilds the agent with fresh optimizer state.
    pub fn restore(&self, settings: &AgentSettings) -> Result<AgentPair> {
        let mut agent = AgentPair::from_networks(self.actor.clone(), self.critic.clone(), settings, self.manifest.m, self.manifest.n)?;
        agent.target_actor = self.target_actor.clone();
        agent.target_critic = self.target_critic.clone();
        agent.tau = self.manifest.tau;
        Ok(agent)
    }

    /// Errors unless the checkpoint was trained on this exact instance.
    pub fn check_instance(&self, instance: &ProblemInstance) -> Result<()> {
        if instance_digest(instance)? != self.manifest.instance_sha256 {
            return Err(Error::Shape("checkpoint was trained on a different instance".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let raw: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        for net in [&raw.actor, &raw.critic, &raw.target_actor, &raw.target_critic] {
            Mlp::from_layers(net.layers().to_vec())?;
        }
        Ok(raw)
    }
}
