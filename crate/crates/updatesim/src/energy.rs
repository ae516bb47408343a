//! Per-node phase-time accounting and the total-energy equation.
//!
//! A node is in exactly one phase at a time: idle, transmitting, or
//! receiving. A [`PowerProfile`] gives the draw rate (watts) in each phase
//! and an [`ActivityLedger`] accumulates the time spent in the active
//! phases. Total energy for a node over a window of `t_total` seconds is
//!
//! ```text
//! E = P_idle * (t_total - t_tx - t_rx) + P_tx * t_tx + P_rx * t_rx
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("phase duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("invalid power profile: {0}")]
    InvalidPowerProfile(String),
    #[error("invalid ledger: active time {active}s exceeds total time {total}s")]
    InvalidLedger { active: f64, total: f64 },
    #[error("ledger and power maps have different node sets")]
    KeyMismatch,
}

/// Draw rates in watts for the three phases.
///
/// Active rates must be at least the idle rate: transmitting or receiving
/// never draws less than sitting idle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub idle_w: f64,
    pub tx_w: f64,
    pub rx_w: f64,
}

impl PowerProfile {
    pub fn new(idle_w: f64, tx_w: f64, rx_w: f64) -> Result<Self, EnergyError> {
        let profile = PowerProfile { idle_w, tx_w, rx_w };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.idle_w >= 0.0 && self.tx_w >= 0.0 && self.rx_w >= 0.0) {
            return Err(EnergyError::InvalidPowerProfile(format!(
                "rates must be non-negative: idle={} tx={} rx={}",
                self.idle_w, self.tx_w, self.rx_w
            )));
        }
        if self.tx_w < self.idle_w || self.rx_w < self.idle_w {
            return Err(EnergyError::InvalidPowerProfile(format!(
                "active rates must be at least idle: idle={} tx={} rx={}",
                self.idle_w, self.tx_w, self.rx_w
            )));
        }
        Ok(())
    }

    /// Default draw for the origin and update servers (10/15/12 W).
    pub fn server_default() -> Self {
        PowerProfile {
            idle_w: 10.0,
            tx_w: 15.0,
            rx_w: 12.0,
        }
    }

    /// Default draw for clients (2/3/2.5 W).
    pub fn client_default() -> Self {
        PowerProfile {
            idle_w: 2.0,
            tx_w: 3.0,
            rx_w: 2.5,
        }
    }
}

/// Active phase of a transfer, from the point of view of one endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Tx,
    Rx,
}

/// Accumulated phase times for one node over a run.
///
/// `t_total` is the whole run window; whatever is not transmit or receive
/// time is idle time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActivityLedger {
    pub t_total: f64,
    pub t_tx: f64,
    pub t_rx: f64,
}

impl ActivityLedger {
    pub fn new() -> Self {
        ActivityLedger::default()
    }

    /// Adds `duration` seconds to the given active phase.
    pub fn accrue(&mut self, phase: Phase, duration: f64) -> Result<(), EnergyError> {
        if !(duration >= 0.0) {
            return Err(EnergyError::NegativeDuration(duration));
        }
        match phase {
            Phase::Tx => self.t_tx += duration,
            Phase::Rx => self.t_rx += duration,
        }
        Ok(())
    }

    /// Fixes the run window and checks the active time fits inside it.
    pub fn finalize(&mut self, t_total: f64) -> Result<(), EnergyError> {
        self.t_total = t_total;
        self.check()
    }

    pub fn check(&self) -> Result<(), EnergyError> {
        let active = self.t_tx + self.t_rx;
        if active > self.t_total {
            return Err(EnergyError::InvalidLedger {
                active,
                total: self.t_total,
            });
        }
        Ok(())
    }
}

/// Energy in joules consumed by one node:
/// `P_idle * (t_total - t_tx - t_rx) + P_tx * t_tx + P_rx * t_rx`.
pub fn node_energy(ledger: &ActivityLedger, power: &PowerProfile) -> Result<f64, EnergyError> {
    ledger.check()?;
    let idle = ledger.t_total - ledger.t_tx - ledger.t_rx;
    Ok(power.idle_w * idle + power.tx_w * ledger.t_tx + power.rx_w * ledger.t_rx)
}

/// Sum of [`node_energy`] over all nodes. Ledgers and powers must be keyed
/// by the same node set.
pub fn total_energy(
    ledgers: &BTreeMap<NodeId, ActivityLedger>,
    powers: &BTreeMap<NodeId, PowerProfile>,
) -> Result<f64, EnergyError> {
    if ledgers.len() != powers.len() || !ledgers.keys().eq(powers.keys()) {
        return Err(EnergyError::KeyMismatch);
    }
    let mut total = 0.0;
    for (id, ledger) in ledgers {
        total += node_energy(ledger, &powers[id])?;
    }
    Ok(total)
}
