//! Coalitional cost games and exact Shapley cost sharing.
//!
//! A game is a small ordered player set plus a cost evaluator. The solver
//! tabulates the cost of every subset once (indexed by bitmask over player
//! positions) and then applies the factorial-weighted marginal-contribution
//! sum. The far- and vicinity-coalition cost functions used by the
//! clustering protocols live here as well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::RadioParams;

/// Exact enumeration bound.
pub const MAX_PLAYERS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game has {0} players; exact Shapley supports at most {MAX_PLAYERS}")]
    TooManyPlayers(usize),
    #[error("player {0} is not part of the allocation")]
    MissingPlayer(String),
    #[error("cost evaluation failed: {0}")]
    Evaluation(String),
    #[error("invalid coalition: {0}")]
    InvalidCoalition(String),
}

pub struct CostGame<P, F> {
    players: Vec<P>,
    cost: F,
}

impl<P, F> CostGame<P, F>
where
    P: Copy + PartialEq,
    F: Fn(&[P]) -> Result<f64, GameError>,
{
    pub fn new(players: Vec<P>, cost: F) -> Self {
        Self { players, cost }
    }

    pub fn players(&self) -> &[P] {
        &self.players
    }

    /// Evaluates every subset. The empty coalition is fixed at zero and the
    /// evaluator is never called for it.
    pub fn tabulate(&self) -> Result<CostTable, GameError> {
        let n = self.players.len();
        if n > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(n));
        }
        let mut costs = vec![0.0; 1 << n];
        let mut subset = Vec::with_capacity(n);
        for (mask, slot) in costs.iter_mut().enumerate().skip(1) {
            subset.clear();
            subset.extend(
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| self.players[i]),
            );
            let c = (self.cost)(&subset)?;
            if !c.is_finite() {
                return Err(GameError::Evaluation(format!(
                    "non-finite cost {c} for subset mask {mask:#b}"
                )));
            }
            *slot = c;
        }
        Ok(CostTable { players: n, costs })
    }
}

/// Subset costs indexed by bitmask over player positions; `costs[0]` is c(∅) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub players: usize,
    pub costs: Vec<f64>,
}

impl CostTable {
    pub fn from_costs(costs: Vec<f64>) -> Result<Self, GameError> {
        let players = costs.len().trailing_zeros() as usize;
        if costs.len() != 1 << players {
            return Err(GameError::InvalidCoalition(format!(
                "table length {} is not a power of two",
                costs.len()
            )));
        }
        if players > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(players));
        }
        if costs[0] != 0.0 {
            return Err(GameError::InvalidCoalition(
                "cost of the empty coalition must be 0".into(),
            ));
        }
        Ok(Self { players, costs })
    }

    pub fn grand(&self) -> f64 {
        self.costs[self.costs.len() - 1]
    }

    /// Cost of the single-player coalition at position `i`.
    pub fn singleton(&self, i: usize) -> f64 {
        self.costs[1 << i]
    }

    /// Shapley payoffs by the subset-weighted formula.
    pub fn shapley(&self) -> Vec<f64> {
        let n = self.players;
        let mut fact = [1.0f64; MAX_PLAYERS + 1];
        for i in 1..=MAX_PLAYERS {
            fact[i] = fact[i - 1] * i as f64;
        }
        let weight: Vec<f64> = (0..n)
            .map(|s| fact[s] * fact[n - s - 1] / fact[n])
            .collect();
        (0..n)
            .map(|i| {
                let bit = 1usize << i;
                (0..1usize << n)
                    .filter(|mask| mask & bit == 0)
                    .map(|mask| {
                        weight[mask.count_ones() as usize]
                            * (self.costs[mask | bit] - self.costs[mask])
                    })
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyAllocation<P> {
    pub players: Vec<P>,
    pub payoffs: Vec<f64>,
}

impl<P: Copy + PartialEq + std::fmt::Debug> ShapleyAllocation<P> {
    pub fn payoff(&self, player: P) -> Result<f64, GameError> {
        self.players
            .iter()
            .position(|p| *p == player)
            .map(|i| self.payoffs[i])
            .ok_or_else(|| GameError::MissingPlayer(format!("{player:?}")))
    }

    pub fn total(&self) -> f64 {
        self.payoffs.iter().sum()
    }
}

pub fn shapley_value<P, F>(game: &CostGame<P, F>) -> Result<ShapleyAllocation<P>, GameError>
where
    P: Copy + PartialEq,
    F: Fn(&[P]) -> Result<f64, GameError>,
{
    let table = game.tabulate()?;
    Ok(ShapleyAllocation {
        players: game.players.clone(),
        payoffs: table.shapley(),
    })
}

/// φ_initiator + φ_candidate < base_cost, strictly.
pub fn cooperation_improves<P: Copy + PartialEq + std::fmt::Debug>(
    base_cost: f64,
    allocation: &ShapleyAllocation<P>,
    initiator: P,
    candidate: P,
) -> Result<bool, GameError> {
    Ok(allocation.payoff(initiator)? + allocation.payoff(candidate)? < base_cost)
}

/// One head of a far-region coalition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarHead {
    /// Distance to this head's next hop (next head in the chain, or the
    /// next coalition / relay for the gateway).
    pub next_hop_m: f64,
    /// One entry per member assigned to this head; its length is k.
    pub member_distances_m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarCoalitionSpec {
    pub heads: Vec<FarHead>,
    pub packet_bits: f64,
    pub mu: f64,
}

/// Relay of a vicinity coalition: carries `inbound` far-coalition packets
/// to the base station at `next_hop_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VicinityRelay {
    pub inbound: u32,
    pub next_hop_m: f64,
    pub credit_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VicinityCoalitionSpec {
    pub relays: Vec<VicinityRelay>,
    pub packet_bits: f64,
}

/// Energy a far coalition spends per data epoch: every head receives,
/// fuses and forwards μ·l·k bits; every member sends one packet over the
/// free-space channel to its head.
pub fn far_coalition_cost(spec: &FarCoalitionSpec, params: &RadioParams) -> Result<f64, GameError> {
    if spec.heads.is_empty() || spec.heads.len() > 3 {
        return Err(GameError::InvalidCoalition(format!(
            "far coalition needs 1-3 heads, got {}",
            spec.heads.len()
        )));
    }
    if !(spec.mu > 0.0 && spec.mu <= 1.0) {
        return Err(GameError::InvalidCoalition(format!(
            "aggregation coefficient must be in (0, 1], got {}",
            spec.mu
        )));
    }
    if spec.packet_bits.is_nan() || spec.packet_bits < 0.0 {
        return Err(GameError::InvalidCoalition(format!(
            "packet bits must be non-negative, got {}",
            spec.packet_bits
        )));
    }
    let l = spec.packet_bits;
    let d0 = params.d0();
    let mut total = 0.0;
    for head in &spec.heads {
        if head.next_hop_m.is_nan() || head.next_hop_m < 0.0 {
            return Err(GameError::InvalidCoalition(format!(
                "negative next-hop distance {}",
                head.next_hop_m
            )));
        }
        let k = head.member_distances_m.len() as f64;
        total += l
            * k
            * (params.e_el()
                + params.e_da()
                + spec.mu * (params.e_el() + params.amplifier(head.next_hop_m)));
        for &d in &head.member_distances_m {
            if !(d >= 0.0 && d <= d0) {
                return Err(GameError::InvalidCoalition(format!(
                    "member distance {d} m outside the free-space range [0, {d0}]"
                )));
            }
            total += l * (params.e_el() + params.eps_fs() * d * d);
        }
    }
    Ok(total)
}

/// Relaying cost of a vicinity coalition, less the energy credit of its
/// energy-rich joiners, floored at zero.
pub fn vicinity_coalition_cost(
    spec: &VicinityCoalitionSpec,
    params: &RadioParams,
) -> Result<f64, GameError> {
    if spec.relays.is_empty() || spec.relays.len() > 4 {
        return Err(GameError::InvalidCoalition(format!(
            "vicinity coalition needs 1-4 relays, got {}",
            spec.relays.len()
        )));
    }
    let l = spec.packet_bits;
    let mut relaying = 0.0;
    let mut credit = 0.0;
    for r in &spec.relays {
        if !(r.next_hop_m >= 0.0 && r.credit_j >= 0.0) {
            return Err(GameError::InvalidCoalition(format!("invalid relay {r:?}")));
        }
        relaying += l
            * r.inbound as f64
            * (2.0 * params.e_el() + params.eps_fs() * r.next_hop_m * r.next_hop_m);
        credit += r.credit_j;
    }
    Ok((relaying - credit).max(0.0))
}
