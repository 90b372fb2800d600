use serde::{Deserialize, Serialize};

use crate::spectral::{GridSpec, WaveState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    Complete,
    /// Integration stopped early at `detected_time`; `last_time` is the last trustworthy sample.
    BlowupSuspected {
        last_time: f64,
        detected_time: f64,
        reason: String,
    },
}

/// Time-ordered solution samples.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<WaveState>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn complete(states: Vec<WaveState>) -> Self {
        Self {
            states,
            status: TrajectoryStatus::Complete,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.states[0].grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &WaveState {
        self.states.last().expect("trajectory has samples")
    }

    pub fn blowup_suspected(&self) -> bool {
        matches!(self.status, TrajectoryStatus::BlowupSuspected { .. })
    }

    /// Sample closest to `t`.
    pub fn nearest(&self, t: f64) -> &WaveState {
        self.states
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("trajectory has samples")
    }
}
