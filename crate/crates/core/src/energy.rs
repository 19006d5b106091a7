//! Per-node battery charged by transmit and receive airtime.

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub initial_j: f64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    /// Charge receivers for decoded unicast frames addressed elsewhere.
    pub charge_overheard: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { initial_j: 100.0, tx_power_w: 0.660, rx_power_w: 0.395, charge_overheard: true }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.initial_j) && self.initial_j > 0.0 && ok(self.tx_power_w) && ok(self.rx_power_w)) {
            return Err(SimError::Config("energy values must be finite, powers non-negative, initial energy positive".into()));
        }
        Ok(())
    }
}

/// Energy for `bits` of airtime at `power_w` over a `link_rate` b/s channel.
pub fn airtime_charge(power_w: f64, bits: u64, link_rate: f64) -> f64 {
    power_w * (bits as f64 / link_rate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub initial_j: f64,
    pub remaining_j: f64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    /// Sum of every charge applied, in the order applied.
    pub debited_j: f64,
    /// A charge exceeded the remaining energy and was cut at zero.
    pub truncated: bool,
    /// Charges attempted after death.
    pub rejected: u64,
}

impl Battery {
    pub fn new(cfg: &EnergyConfig) -> Self {
        Battery {
            initial_j: cfg.initial_j,
            remaining_j: cfg.initial_j,
            tx_power_w: cfg.tx_power_w,
            rx_power_w: cfg.rx_power_w,
            debited_j: 0.0,
            truncated: false,
            rejected: 0,
        }
    }

    pub fn is_dead(&self) -> bool {
        self.remaining_j <= 0.0
    }

    fn debit(&mut self, charge: f64) -> Option<f64> {
        if self.is_dead() {
            self.rejected += 1;
            return None;
        }
        if charge >= self.remaining_j {
            self.truncated |= charge > self.remaining_j;
            let applied = self.remaining_j;
            self.remaining_j = 0.0;
            self.debited_j += applied;
            Some(applied)
        } else {
            self.remaining_j -= charge;
            self.debited_j += charge;
            Some(charge)
        }
    }

    /// Charges a transmission. `None` if the node was already dead.
    pub fn debit_tx(&mut self, bits: u64, link_rate: f64) -> Option<f64> {
        self.debit(airtime_charge(self.tx_power_w, bits, link_rate))
    }

    pub fn debit_rx(&mut self, bits: u64, link_rate: f64) -> Option<f64> {
        self.debit(airtime_charge(self.rx_power_w, bits, link_rate))
    }

    pub fn total_consumed(&self) -> f64 {
        self.initial_j - self.remaining_j
    }

    pub fn residual_fraction(&self) -> f64 {
        self.remaining_j / self.initial_j
    }
}
