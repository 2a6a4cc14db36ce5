use serde::{Deserialize, Serialize};

use super::dp::ValueTable;

/// Serializable finite-horizon solution. `values[t]` and `actions[t]` are
/// period t + 1 and align with `states`; the terminal period is included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDump {
    pub states: Vec<Vec<u32>>,
    pub values: Vec<Vec<f64>>,
    pub actions: Vec<Vec<Vec<Vec<u32>>>>,
}

impl OracleDump {
    pub fn from_table(table: &ValueTable) -> Self {
        let states = table.space().states().map(|s| s.as_slice().to_vec()).collect();
        let values = table.periods().iter().map(|p| p.values.clone()).collect();
        let actions = table
            .periods()
            .iter()
            .map(|p| {
                p.actions
                    .iter()
                    .map(|q| q.as_slice().chunks(q.cols().max(1)).map(<[u32]>::to_vec).collect())
                    .collect()
            })
            .collect();
        Self { states, values, actions }
    }
}
