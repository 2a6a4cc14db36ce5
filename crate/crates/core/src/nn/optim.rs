use serde::{Deserialize, Serialize};

use super::mlp::{GradRecord, Mlp};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64, net: &Mlp) -> Self {
        let n = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam => net.parameter_count(),
        };
        Self { kind, learning_rate, step: 0, first_moment: vec![0.0; n], second_moment: vec![0.0; n] }
    }

    pub fn adam(learning_rate: f64, net: &Mlp) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate, net)
    }

    pub fn sgd(learning_rate: f64, net: &Mlp) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, net)
    }

    /// One descent step θ ← θ - update(g).
    pub fn apply(&mut self, net: &mut Mlp, grads: &GradRecord) {
        self.step += 1;
        let flat = grads.weights.iter().zip(&grads.biases).flat_map(|(w, b)| w.iter().chain(b));
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in net.parameters_mut().zip(flat) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                let moments = self.first_moment.iter_mut().zip(self.second_moment.iter_mut());
                for ((p, g), (m, v)) in net.parameters_mut().zip(flat).zip(moments) {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPSILON);
                }
            }
        }
    }
}
