use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::instance_digest;
use crate::env::ProblemInstance;
use crate::error::{Error, Result};
use crate::tabular::{QTable, QTableDump, TabularMethod, TabularModel};

/// Saved Q-table with the method, seed and instance digest it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularCheckpoint {
    pub method: TabularMethod,
    pub seed: u64,
    pub instance_sha256: String,
    pub table: QTableDump,
}

impl TabularCheckpoint {
    pub fn new(table: &QTable, model: &TabularModel, method: &TabularMethod, seed: u64) -> Result<Self> {
        Ok(Self { method: *method, seed, instance_sha256: instance_digest(model.instance())?, table: table.dump(model) })
    }

    pub fn restore(&self, model: &TabularModel) -> Result<QTable> {
        self.check_instance(model.instance())?;
        QTable::from_dump(model, &self.table)
    }

    pub fn check_instance(&self, instance: &ProblemInstance) -> Result<()> {
        if instance_digest(instance)? != self.instance_sha256 {
            return Err(Error::Shape("checkpoint was trained on a different instance".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DEFAULT_ACTION_CAP, DEFAULT_STATE_CAP};
    use crate::harness::verification_instance;
    use crate::schedule::ExplorationSchedule;
    use crate::tabular::{train_tabular, LearningConfig};

    #[test]
    fn round_trip() {
        let inst = verification_instance();
        let model = TabularModel::new(&inst, DEFAULT_STATE_CAP, DEFAULT_ACTION_CAP).unwrap();
        let cfg = LearningConfig {
            episodes: 5,
            steps_per_episode: 10,
            exploration: ExplorationSchedule::constant(1.0),
            convergence_threshold: None,
            ..LearningConfig::default()
        };
        let (q, _) = train_tabular(&model, &cfg, &TabularMethod::QLearning, None, 0, |_, _| {}).unwrap();
        let ck = TabularCheckpoint::new(&q, &model, &TabularMethod::QLearning, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ck.save(dir.path().join("q.json")).unwrap();
        let back = TabularCheckpoint::load(dir.path().join("q.json")).unwrap();
        assert_eq!(back.restore(&model).unwrap(), q);
        assert!(back.check_instance(&inst.with_gamma(0.5).unwrap()).is_err());
    }
}
