//! Per-step and per-episode metric rows and their CSV form.

use std::collections::VecDeque;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use aerostar_core::{StepInfo, StepOutcome};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Marks an episode aggregate row in the `step` column.
pub const AGGREGATE_STEP: i64 = -1;
pub const MA_WINDOW: usize = 50;

pub const HEADER: [&str; 14] = [
    "episode",
    "step",
    "reward",
    "reward_ma50",
    "sum_rate_bps",
    "power_w",
    "efficiency_bpj",
    "hfi",
    "jfi",
    "qos_violation_rate",
    "uav_x",
    "uav_y",
    "uav_z",
    "wall_ms",
];

/// One CSV line. Aggregate rows carry the episode return in `reward`,
/// slot means in the rate/power/fairness columns, and the final pose.
/// `reward_ma50` trails over the last 50 rows of the same kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    pub step: i64,
    pub reward: f64,
    pub reward_ma50: f64,
    pub sum_rate_bps: f64,
    pub power_w: f64,
    pub efficiency_bpj: f64,
    pub hfi: f64,
    pub jfi: f64,
    pub qos_violation_rate: f64,
    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_z: f64,
    pub wall_ms: f64,
}

impl MetricsRow {
    pub fn is_aggregate(&self) -> bool {
        self.step == AGGREGATE_STEP
    }
}

#[derive(Debug, Clone, Default)]
struct MovingAverage {
    window: VecDeque<f64>,
}

impl MovingAverage {
    fn push(&mut self, x: f64) -> f64 {
        self.window.push_back(x);
        if self.window.len() > MA_WINDOW {
            self.window.pop_front();
        }
        self.window.iter().sum::<f64>() / self.window.len() as f64
    }
}

/// Builds rows for one seed's run.
#[derive(Debug, Clone, Default)]
pub struct RowBuilder {
    step_ma: MovingAverage,
    episode_ma: MovingAverage,
    acc: EpisodeAccumulator,
}

#[derive(Debug, Clone, Default)]
struct EpisodeAccumulator {
    steps: usize,
    reward: f64,
    sum_rate: f64,
    power: f64,
    efficiency: f64,
    hfi: f64,
    jfi: f64,
    violations: usize,
    user_slots: usize,
    pose: [f64; 3],
}

impl RowBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&mut self, episode: usize, step: usize, out: &StepOutcome, wall_ms: f64) -> MetricsRow {
        let info: &StepInfo = &out.info;
        let a = &mut self.acc;
        a.steps += 1;
        a.reward += out.reward;
        a.sum_rate += info.sum_rate;
        a.power += info.power.total;
        a.efficiency += info.efficiency;
        a.hfi += info.fairness.hfi;
        a.jfi += info.fairness.jfi;
        a.violations += info.qos_violations;
        a.user_slots += info.rates.len();
        a.pose = info.uav_pose;
        MetricsRow {
            episode,
            step: step as i64,
            reward: out.reward,
            reward_ma50: self.step_ma.push(out.reward),
            sum_rate_bps: info.sum_rate,
            power_w: info.power.total,
            efficiency_bpj: info.efficiency,
            hfi: info.fairness.hfi,
            jfi: info.fairness.jfi,
            qos_violation_rate: info.qos_violations as f64 / info.rates.len().max(1) as f64,
            uav_x: info.uav_pose[0],
            uav_y: info.uav_pose[1],
            uav_z: info.uav_pose[2],
            wall_ms,
        }
    }

    /// Close the episode and reset the accumulator.
    pub fn finish_episode(&mut self, episode: usize, wall_ms: f64) -> MetricsRow {
        let a = std::mem::take(&mut self.acc);
        let n = a.steps.max(1) as f64;
        MetricsRow {
            episode,
            step: AGGREGATE_STEP,
            reward: a.reward,
            reward_ma50: self.episode_ma.push(a.reward),
            sum_rate_bps: a.sum_rate / n,
            power_w: a.power / n,
            efficiency_bpj: a.efficiency / n,
            hfi: a.hfi / n,
            jfi: a.jfi / n,
            qos_violation_rate: a.violations as f64 / a.user_slots.max(1) as f64,
            uav_x: a.pose[0],
            uav_y: a.pose[1],
            uav_z: a.pose[2],
            wall_ms,
        }
    }
}

/// Streams rows to a CSV file with a single header line.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl MetricsWriter<File> {
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self::new(File::create(path)?))
    }
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(w),
        }
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<(), HarnessError> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), HarnessError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(HarnessError::Schema(format!("{}: unexpected header {header:?}", path.display())));
    }
    rdr.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

/// Write any serializable rows as a CSV file.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: i64) -> MetricsRow {
        MetricsRow {
            episode: 0,
            step,
            reward: -1.5,
            reward_ma50: -1.5,
            sum_rate_bps: 0.0,
            power_w: 100.0,
            efficiency_bpj: 0.0,
            hfi: 0.0,
            jfi: 0.0,
            qos_violation_rate: 1.0,
            uav_x: 1.0,
            uav_y: 2.0,
            uav_z: 3.0,
            wall_ms: 0.25,
        }
    }

    #[test]
    fn header_matches_fields() {
        let mut w = MetricsWriter::new(Vec::new());
        w.write(&row(0)).unwrap();
        w.flush().unwrap();
        let text = String::from_utf8(w.inner.into_inner().unwrap()).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, HEADER.join(","));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn moving_average_window() {
        let mut ma = MovingAverage::default();
        for i in 0..49 {
            ma.push(i as f64);
        }
        assert_eq!(ma.push(49.0), 24.5);
        assert_eq!(ma.push(50.0), 25.5);
        assert_eq!(ma.window.len(), MA_WINDOW);
    }
}
