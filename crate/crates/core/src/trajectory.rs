//! Path-discretized trajectory: waypoints, per-segment durations and
//! per-segment time allocations to each ground node.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Segment `m` runs from `waypoints[m]` to `waypoints[m + 1]` in
/// `durations[m]` seconds, spending `alloc[m][k]` seconds serving node `k`
/// from position `waypoints[m]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscretizedTrajectory {
    pub waypoints: Vec<Point2>,
    pub durations: Vec<f64>,
    pub alloc: Vec<Vec<f64>>,
}

impl DiscretizedTrajectory {
    /// Checks shapes only; physical constraints are the evaluator's job.
    pub fn new(waypoints: Vec<Point2>, durations: Vec<f64>, alloc: Vec<Vec<f64>>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::Dimension("a trajectory needs at least two waypoints".into()));
        }
        if durations.len() + 1 != waypoints.len() {
            return Err(Error::Dimension(format!(
                "{} waypoints need {} durations, got {}",
                waypoints.len(),
                waypoints.len() - 1,
                durations.len()
            )));
        }
        if alloc.len() != durations.len() {
            return Err(Error::Dimension(format!(
                "{} segments need {} allocation rows, got {}",
                durations.len(),
                durations.len(),
                alloc.len()
            )));
        }
        let k = alloc[0].len();
        if alloc.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension("allocation rows differ in length".into()));
        }
        Ok(DiscretizedTrajectory {
            waypoints,
            durations,
            alloc,
        })
    }

    pub fn num_segments(&self) -> usize {
        self.durations.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.alloc.first().map_or(0, Vec::len)
    }

    pub fn segment_length(&self, m: usize) -> f64 {
        self.waypoints[m].distance(self.waypoints[m + 1])
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.num_segments()).map(|m| self.segment_length(m)).collect()
    }

    pub fn speed(&self, m: usize) -> f64 {
        self.segment_length(m) / self.durations[m]
    }

    pub fn path_length(&self) -> f64 {
        (0..self.num_segments()).map(|m| self.segment_length(m)).sum()
    }

    pub fn mission_time(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// Start time of each segment.
    pub fn start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.durations
            .iter()
            .map(|d| {
                let s = t;
                t += d;
                s
            })
            .collect()
    }

    /// Total time allocated to each node.
    pub fn node_times(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.num_nodes()];
        for row in &self.alloc {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn shapes_are_checked() {
        let w = vec![Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)];
        assert!(DiscretizedTrajectory::new(w.clone(), vec![1.0, 2.0], vec![vec![0.0]]).is_err());
        assert!(DiscretizedTrajectory::new(w.clone(), vec![1.0], vec![]).is_err());
        let t = DiscretizedTrajectory::new(w, vec![2.0], vec![vec![0.5, 1.0]]).unwrap();
        assert_eq!(t.segment_length(0), 5.0);
        assert_eq!(t.speed(0), 2.5);
        assert_eq!(t.mission_time(), 2.0);
        assert_eq!(t.node_times(), vec![0.5, 1.0]);
    }
}
