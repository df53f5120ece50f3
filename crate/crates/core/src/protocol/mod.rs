//! Clustering protocols and the shared data plane.
//!
//! Every protocol turns a round's formation phase into a [`RoundPlan`]:
//! heads in forwarding order with their members and next hop, plus nodes
//! that report straight to the base station. [`run_data_epoch`] then
//! charges one data-gathering epoch over that plan, identically for all
//! algorithms.

pub mod baselines;
pub mod cgtc;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::energy::{aggregation_energy, rx_energy, tx_energy, RadioParams};
use crate::game::{far_coalition_cost, FarCoalitionSpec, FarHead, GameError};
use crate::network::{NodeId, Region, Topology};

/// Constants the protocols need from the experiment config.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub radio: RadioParams,
    pub r_c: f64,
    pub mu: f64,
    pub data_bits: f64,
    pub control_bits: f64,
    pub schedule_bits: f64,
    pub gamma: f64,
    pub cohead_weight_degree: f64,
    pub cohead_weight_distance: f64,
    pub provisional_member_distance: f64,
    pub provisional_hop_max: f64,
}

impl ProtocolParams {
    pub fn from_config(config: &SimConfig) -> Self {
        Self {
            radio: config.radio,
            r_c: config.r_c,
            mu: config.mu,
            data_bits: config.data_bits(),
            control_bits: config.control_bits(),
            schedule_bits: config.schedule_bits(),
            gamma: config.gamma,
            cohead_weight_degree: config.cohead_weight_degree,
            cohead_weight_distance: config.cohead_weight_distance,
            provisional_member_distance: config.provisional_member_fraction * config.r_c,
            provisional_hop_max: config.provisional_hop_factor * config.r_c,
        }
    }

    // Inputs are validated upstream, so the energy functions cannot fail here.
    pub(crate) fn tx(&self, bits: f64, d: f64) -> f64 {
        tx_energy(&self.radio, bits, d).expect("validated tx inputs")
    }

    pub(crate) fn rx(&self, bits: f64) -> f64 {
        rx_energy(&self.radio, bits).expect("validated rx inputs")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoalitionKind {
    Far,
    Vicinity,
    /// Baseline cluster (LEACH or CGC); heads report to the base station.
    Cluster,
}

/// Where a coalition's gateway sends its traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Coalition { id: usize, entry: NodeId },
    Relay(NodeId),
    Bs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coalition {
    pub id: usize,
    pub kind: CoalitionKind,
    /// Far: CHN first, then admitted co-heads. Vicinity: initiator first.
    pub heads: Vec<NodeId>,
    pub members: BTreeMap<NodeId, Vec<NodeId>>,
    /// Head with the smallest distance to the base station.
    pub gateway: NodeId,
    pub route: Route,
    /// Vicinity only: the far gateways each relay carries.
    pub relayed: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Coalition {
    pub(crate) fn new(id: usize, kind: CoalitionKind, heads: Vec<NodeId>) -> Self {
        let members = heads.iter().map(|&h| (h, Vec::new())).collect();
        Self {
            id,
            kind,
            gateway: heads[0],
            heads,
            members,
            route: Route::Bs,
            relayed: BTreeMap::new(),
        }
    }

    pub fn member_count(&self) -> usize {
        self.members.values().map(Vec::len).sum()
    }

    /// Heads ordered by descending distance to the base station (ties by id).
    pub fn chain(&self, topo: &Topology) -> Vec<NodeId> {
        let mut chain = self.heads.clone();
        chain.sort_by(|a, b| {
            topo.node(*b)
                .d_bs
                .total_cmp(&topo.node(*a).d_bs)
                .then(a.cmp(b))
        });
        chain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NextHop {
    Head(NodeId),
    /// Vicinity relay that forwards straight to the base station.
    Relay(NodeId),
    Bs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadPlan {
    pub id: NodeId,
    pub members: Vec<NodeId>,
    pub next: NextHop,
}

/// Heads are listed so that every head precedes the heads it forwards to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub heads: Vec<HeadPlan>,
    pub direct: Vec<NodeId>,
}

/// Result of one formation phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Formation {
    pub coalitions: Vec<Coalition>,
    pub vicinity: Vec<Coalition>,
    pub plan: RoundPlan,
    pub nominees: Vec<NodeId>,
    pub orphans: Vec<NodeId>,
    /// Gateways with no forwarding option that fell back to the base station.
    pub unreachable: usize,
}

/// Charges one data-gathering epoch and returns the energy it consumed.
///
/// Members send one packet to their head; heads fuse their members' packets,
/// forward μ·l·k bits plus any transit traffic to their next hop without
/// fusing it again. Relays receive and forward to the base station. A
/// sender whose destination is dead reports to the base station instead.
pub fn run_data_epoch(topo: &mut Topology, plan: &RoundPlan, params: &ProtocolParams) -> f64 {
    let before = topo.total_spent();
    let l = params.data_bits;
    let mut transit = vec![0.0f64; topo.len()];
    for head in &plan.heads {
        let head_alive = topo.is_alive(head.id);
        let mut k = 0usize;
        for &m in &head.members {
            if !topo.is_alive(m) {
                continue;
            }
            if head_alive {
                topo.debit(m, params.tx(l, topo.distance(m, head.id)));
                topo.debit(head.id, params.rx(l));
                k += 1;
            } else {
                topo.debit(m, params.tx(l, topo.node(m).d_bs));
            }
        }
        if !head_alive {
            continue;
        }
        topo.debit(
            head.id,
            aggregation_energy(&params.radio, l, k as f64).expect("validated aggregation"),
        );
        let out = params.mu * l * k as f64 + transit[head.id.0];
        if out <= 0.0 {
            continue;
        }
        match head.next {
            NextHop::Head(t) if topo.is_alive(t) => {
                topo.debit(head.id, params.tx(out, topo.distance(head.id, t)));
                topo.debit(t, params.rx(out));
                transit[t.0] += out;
            }
            NextHop::Relay(r) if topo.is_alive(r) => {
                topo.debit(head.id, params.tx(out, topo.distance(head.id, r)));
                topo.debit(r, params.rx(out));
                topo.debit(r, params.tx(out, topo.node(r).d_bs));
            }
            _ => topo.debit(head.id, params.tx(out, topo.node(head.id).d_bs)),
        }
    }
    for &d in &plan.direct {
        if topo.is_alive(d) {
            topo.debit(d, params.tx(l, topo.node(d).d_bs));
        }
    }
    topo.total_spent() - before
}

/// Nearest head to `node` (ties to the lower id), optionally within `range`.
pub(crate) fn nearest_head(
    topo: &Topology,
    node: NodeId,
    heads: &[NodeId],
    range: Option<f64>,
) -> Option<NodeId> {
    heads
        .iter()
        .map(|&h| (topo.distance(node, h), h))
        .filter(|(d, _)| range.is_none_or(|r| *d <= r))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, h)| h)
}

/// Who hears a head's advertisement.
#[derive(Clone, Copy)]
pub(crate) enum AdvScope {
    /// Alive nodes of one region within R_c.
    Range(Region),
    /// Every alive node; the advertisement is sent at the range of the farthest member.
    Everyone,
}

/// Charges advertisement, join requests and TDMA schedules for a
/// completed member assignment.
pub(crate) fn charge_membership(
    topo: &mut Topology,
    params: &ProtocolParams,
    members: &BTreeMap<NodeId, Vec<NodeId>>,
    scope: AdvScope,
) {
    let heads: Vec<NodeId> = members.keys().copied().collect();
    for (&head, mine) in members {
        let reach = mine
            .iter()
            .map(|&m| topo.distance(head, m))
            .fold(params.r_c, f64::max);
        let (adv_range, hearers) = match scope {
            AdvScope::Range(region) => (params.r_c, topo.rc_neighbors(head, Some(region))),
            AdvScope::Everyone => (reach, topo.alive_ids().filter(|&n| n != head).collect()),
        };
        topo.debit(head, params.tx(params.control_bits, adv_range));
        for n in hearers {
            if !heads.contains(&n) {
                topo.debit(n, params.rx(params.control_bits));
            }
        }
        for &m in mine {
            topo.debit(m, params.tx(params.control_bits, topo.distance(m, head)));
            topo.debit(head, params.rx(params.control_bits));
        }
        if !mine.is_empty() {
            topo.debit(head, params.tx(params.schedule_bits, reach));
            for &m in mine {
                topo.debit(m, params.rx(params.schedule_bits));
            }
        }
    }
}

/// How the recruitment game estimates each head's next hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum HopModel {
    /// Chain toward the base station: the distance-to-BS decrement to the
    /// next closer head in the set, clamped to [1, provisional_hop_max];
    /// the closest head uses the upper clamp.
    Chain,
    /// Every head reports to the base station.
    Direct,
}

/// Far-coalition cost of a head set before membership exists: each head
/// gets ⌈(neighbours − heads)/heads⌉ members at the provisional distance.
pub(crate) fn provisional_far_cost(
    topo: &Topology,
    params: &ProtocolParams,
    heads: &[NodeId],
    neighbor_count: usize,
    hops: HopModel,
) -> Result<f64, GameError> {
    let h = heads.len() as i64;
    let k = ((neighbor_count as i64 - h) as f64 / h as f64)
        .ceil()
        .max(0.0) as usize;
    let far_heads = heads
        .iter()
        .map(|&id| {
            let d_bs = topo.node(id).d_bs;
            let next_hop_m = match hops {
                HopModel::Direct => d_bs,
                HopModel::Chain => heads
                    .iter()
                    .map(|&o| topo.node(o).d_bs)
                    .filter(|&o| o < d_bs)
                    .max_by(f64::total_cmp)
                    .map_or(params.provisional_hop_max, |closer| d_bs - closer)
                    .clamp(1.0, params.provisional_hop_max),
            };
            FarHead {
                next_hop_m,
                member_distances_m: vec![params.provisional_member_distance; k],
            }
        })
        .collect();
    far_coalition_cost(
        &FarCoalitionSpec {
            heads: far_heads,
            packet_bits: params.data_bits,
            mu: params.mu,
        },
        &params.radio,
    )
}
