//! First-order radio energy model.
//!
//! Transmission cost has an electronics part proportional to the packet
//! length and an amplifier part that grows with d² below the crossover
//! distance and with d⁴ above it. Reception only pays the electronics part.
//! All values are joules; bit counts are `f64` so fractional aggregated
//! payloads (μ·l·k) can be expressed directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("radio parameter {name} must be strictly positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
}

/// Radio constants in SI units (J/bit, J/bit/m², J/bit/m⁴).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    e_el: f64,
    eps_fs: f64,
    eps_mp: f64,
    e_da: f64,
}

impl RadioParams {
    pub fn new(e_el: f64, eps_fs: f64, eps_mp: f64, e_da: f64) -> Result<Self, EnergyError> {
        for (name, value) in [
            ("e_el", e_el),
            ("eps_fs", eps_fs),
            ("eps_mp", eps_mp),
            ("e_da", e_da),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(EnergyError::NonPositiveParam { name, value });
            }
        }
        Ok(Self {
            e_el,
            eps_fs,
            eps_mp,
            e_da,
        })
    }

    /// Table values: 50 nJ/bit, 10 pJ/bit/m², 0.0013 pJ/bit/m⁴, 5 nJ/bit/signal.
    pub fn table_defaults() -> Self {
        Self {
            e_el: 50e-9,
            eps_fs: 10e-12,
            eps_mp: 0.0013e-12,
            e_da: 5e-9,
        }
    }

    pub fn e_el(&self) -> f64 {
        self.e_el
    }

    pub fn eps_fs(&self) -> f64 {
        self.eps_fs
    }

    pub fn eps_mp(&self) -> f64 {
        self.eps_mp
    }

    pub fn e_da(&self) -> f64 {
        self.e_da
    }

    /// Crossover distance d_0 = sqrt(eps_fs / eps_mp), always recomputed.
    pub fn d0(&self) -> f64 {
        (self.eps_fs / self.eps_mp).sqrt()
    }

    /// Amplifier energy per bit at distance `d` using the branch rule
    /// (free space for d ≤ d_0, multi-path otherwise).
    pub fn amplifier(&self, d: f64) -> f64 {
        let d2 = d * d;
        // d ≤ d_0  <=>  d² ≤ eps_fs/eps_mp, which avoids the sqrt round-off at the boundary
        if d2 * self.eps_mp <= self.eps_fs {
            self.eps_fs * d2
        } else {
            self.eps_mp * d2 * d2
        }
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, EnergyError> {
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(EnergyError::Negative { name, value })
    }
}

/// Energy to transmit `bits` over `distance` meters.
pub fn tx_energy(params: &RadioParams, bits: f64, distance: f64) -> Result<f64, EnergyError> {
    let bits = non_negative("bit count", bits)?;
    let distance = non_negative("distance", distance)?;
    Ok(bits * (params.e_el + params.amplifier(distance)))
}

/// Energy to receive `bits`.
pub fn rx_energy(params: &RadioParams, bits: f64) -> Result<f64, EnergyError> {
    Ok(non_negative("bit count", bits)? * params.e_el)
}

/// Energy to fuse `signals` incoming signals of `bits` each.
pub fn aggregation_energy(
    params: &RadioParams,
    bits: f64,
    signals: f64,
) -> Result<f64, EnergyError> {
    let bits = non_negative("bit count", bits)?;
    let signals = non_negative("signal count", signals)?;
    Ok(bits * signals * params.e_da)
}

pub fn crossover_distance(params: &RadioParams) -> Result<f64, EnergyError> {
    for (name, value) in [("eps_fs", params.eps_fs), ("eps_mp", params.eps_mp)] {
        if value.is_nan() || value <= 0.0 {
            return Err(EnergyError::NonPositiveParam { name, value });
        }
    }
    Ok(params.d0())
}
