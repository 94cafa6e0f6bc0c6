//! Line-of-sight air-to-ground channel and throughput accounting.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Free-space line-of-sight channel seen from a UAV at fixed altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    /// Received SNR at the 1 m reference distance (linear).
    pub gamma0: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// UAV altitude (m).
    pub altitude: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            gamma0: 1e6,
            bandwidth: 1e6,
            altitude: 100.0,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// A ground node with its horizontal position and data demand.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundNode {
    pub position: Point2,
    /// Bits to exchange with the UAV.
    pub demand_bits: f64,
}

impl GroundNode {
    pub fn new(position: Point2, demand_bits: f64) -> Self {
        GroundNode { position, demand_bits }
    }

    /// Demand normalized by the bandwidth (bits/Hz).
    pub fn normalized_demand(&self, chan: &ChannelParams) -> f64 {
        self.demand_bits / chan.bandwidth
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma0", self.gamma0), ("bandwidth", self.bandwidth), ("altitude", self.altitude)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "positive and finite"));
            }
        }
        Ok(())
    }

    /// Rate as a function of the squared horizontal distance (bits/s/Hz).
    pub fn rate_at_squared_distance(&self, d2: f64) -> f64 {
        let h2 = self.altitude * self.altitude;
        (self.gamma0 / (h2 + d2)).ln_1p() / core::f64::consts::LN_2
    }

    /// Largest achievable spectral efficiency, attained directly overhead.
    pub fn peak_rate(&self) -> f64 {
        self.rate_at_squared_distance(0.0)
    }

    /// Instantaneous spectral efficiency between the UAV and a node (bits/s/Hz).
    pub fn spectral_rate(&self, uav: Point2, node: &GroundNode) -> f64 {
        self.rate_at_squared_distance((uav - node.position).norm_squared())
    }

    /// Time needed to deliver the node's demand while hovering at `hover` (s).
    pub fn hover_time(&self, hover: Point2, node: &GroundNode) -> f64 {
        node.normalized_demand(self) / self.spectral_rate(hover, node)
    }

    /// Bits delivered to `node` when the UAV dwells `alloc[m]` seconds with
    /// the node while located at `positions[m]`.
    pub fn throughput(&self, positions: &[Point2], alloc: &[f64], node: &GroundNode) -> Result<f64> {
        if positions.len() != alloc.len() {
            return Err(Error::Dimension(format!(
                "{} positions but {} allocations",
                positions.len(),
                alloc.len()
            )));
        }
        let mut sum = 0.0;
        for (m, (&q, &tau)) in positions.iter().zip(alloc).enumerate() {
            if !(tau >= 0.0) {
                return Err(Error::invalid(format!("allocation at segment {m}"), "nonnegative"));
            }
            sum += tau * self.spectral_rate(q, node);
        }
        Ok(self.bandwidth * sum)
    }

    /// Throughput of every node from a per-segment allocation matrix
    /// (`alloc[m][k]` seconds for node `k` on segment `m`).
    pub fn throughput_per_node(&self, positions: &[Point2], alloc: &[Vec<f64>], nodes: &[GroundNode]) -> Result<Vec<f64>> {
        nodes
            .iter()
            .enumerate()
            .map(|(k, node)| {
                let column: Vec<f64> = alloc
                    .iter()
                    .map(|row| {
                        row.get(k)
                            .copied()
                            .ok_or_else(|| Error::Dimension(format!("allocation row lacks node {k}")))
                    })
                    .collect::<Result<_>>()?;
                self.throughput(positions, &column, node)
            })
            .collect()
    }
}
