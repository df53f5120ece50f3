//! Baseline clustering protocols.
//!
//! LEACH: rotating-threshold random head election, members join the
//! nearest head, heads fuse and transmit straight to the base station.
//!
//! CGC (simplified): candidates self-select at random with probability p,
//! each recruits up to two energy-rich neighbours through the same Shapley
//! cooperation test used by CGTC, and every head reports directly to the
//! base station. Only those structural properties are modelled.

use std::collections::BTreeMap;

use rand::Rng;

use super::cgtc::play_admission;
use super::{
    charge_membership, nearest_head, provisional_far_cost, AdvScope, Coalition, CoalitionKind,
    Formation, HeadPlan, HopModel, NextHop, ProtocolParams, RoundPlan,
};
use crate::config::BaselineConfig;
use crate::events::{Event, EventLog, GameKind};
use crate::game::GameError;
use crate::network::{NodeId, Role, Topology};

/// Assigns every alive non-head to its nearest head, charges the
/// membership exchange and builds the direct-to-BS plan. Without heads
/// every alive node reports directly.
fn cluster_round(
    topo: &mut Topology,
    params: &ProtocolParams,
    groups: Vec<Vec<NodeId>>,
) -> Formation {
    let heads: Vec<NodeId> = {
        let mut h: Vec<NodeId> = groups.iter().flatten().copied().collect();
        h.sort();
        h
    };
    if heads.is_empty() {
        return Formation {
            plan: RoundPlan {
                heads: vec![],
                direct: topo.alive_ids().collect(),
            },
            ..Formation::default()
        };
    }
    for &h in &heads {
        topo.node_mut(h).role = Role::CoalitionHead;
    }
    let mut members: BTreeMap<NodeId, Vec<NodeId>> =
        heads.iter().map(|&h| (h, Vec::new())).collect();
    let joiners: Vec<NodeId> = topo
        .alive_ids()
        .filter(|i| !members.contains_key(i))
        .collect();
    for node in joiners {
        let h = nearest_head(topo, node, &heads, None).expect("non-empty head set");
        members.get_mut(&h).expect("known head").push(node);
        topo.node_mut(node).role = Role::Member;
    }
    charge_membership(topo, params, &members, AdvScope::Everyone);

    let mut coalitions = Vec::with_capacity(groups.len());
    let mut plan = RoundPlan::default();
    for (id, group) in groups.into_iter().enumerate() {
        let mut c = Coalition::new(id, CoalitionKind::Cluster, group);
        for &h in &c.heads {
            let mine = members[&h].clone();
            plan.heads.push(HeadPlan {
                id: h,
                members: mine.clone(),
                next: NextHop::Bs,
            });
            c.members.insert(h, mine);
        }
        c.gateway = *c
            .heads
            .iter()
            .min_by(|a, b| topo.node(**a).d_bs.total_cmp(&topo.node(**b).d_bs))
            .expect("head");
        coalitions.push(c);
    }
    Formation {
        coalitions,
        plan,
        ..Formation::default()
    }
}

pub struct Leach {
    config: BaselineConfig,
    last_head_round: Vec<Option<u32>>,
}

impl Leach {
    pub fn new(config: BaselineConfig, nodes: usize) -> Self {
        Self {
            config,
            last_head_round: vec![None; nodes],
        }
    }

    /// Election threshold for `round` (1-based) among eligible nodes.
    pub fn threshold(&self, round: u32) -> f64 {
        let p = self.config.ch_probability;
        let phase = ((round.max(1) - 1) % self.config.rotation_rounds()) as f64;
        (p / (1.0 - p * phase)).min(1.0)
    }

    /// A node that headed a cluster within the last ⌈1/p⌉ rounds sits out.
    pub fn eligible(&self, node: NodeId, round: u32) -> bool {
        self.last_head_round[node.0].is_none_or(|r| round - r >= self.config.rotation_rounds())
    }

    /// Self-election only; no energy is charged.
    pub fn elect<R: Rng + ?Sized>(
        &mut self,
        topo: &Topology,
        round: u32,
        rng: &mut R,
    ) -> Vec<NodeId> {
        let t = self.threshold(round);
        let mut heads = Vec::new();
        for id in topo.alive_ids() {
            let draw: f64 = rng.gen();
            if self.eligible(id, round) && draw < t {
                heads.push(id);
                self.last_head_round[id.0] = Some(round);
            }
        }
        heads
    }

    pub fn leach_round<R: Rng + ?Sized>(
        &mut self,
        topo: &mut Topology,
        params: &ProtocolParams,
        round: u32,
        rng: &mut R,
        events: &mut EventLog,
    ) -> Formation {
        topo.reset_roles();
        let heads = self.elect(topo, round, rng);
        events.push(|| Event::Election {
            round,
            nominees: heads.clone(),
        });
        let mut f = cluster_round(topo, params, heads.iter().map(|&h| vec![h]).collect());
        f.nominees = heads;
        f
    }
}

pub struct Cgc {
    config: BaselineConfig,
}

impl Cgc {
    pub fn new(config: BaselineConfig) -> Self {
        Self { config }
    }

    pub fn cgc_round<R: Rng + ?Sized>(
        &self,
        topo: &mut Topology,
        params: &ProtocolParams,
        round: u32,
        rng: &mut R,
        events: &mut EventLog,
    ) -> Result<Formation, GameError> {
        topo.reset_roles();
        let p = self.config.ch_probability;
        let candidates: Vec<NodeId> = topo.alive_ids().filter(|_| rng.gen::<f64>() < p).collect();
        events.push(|| Event::Election {
            round,
            nominees: candidates.clone(),
        });
        let mut taken: Vec<bool> = vec![false; topo.len()];
        for &c in &candidates {
            taken[c.0] = true;
        }
        let mut groups = Vec::with_capacity(candidates.len());
        for &cand in &candidates {
            let neighbors = topo.rc_neighbors(cand, None);
            let neighbor_count = neighbors.len();
            let mut pool: Vec<NodeId> = neighbors.into_iter().filter(|n| !taken[n.0]).collect();
            pool.sort_by(|a, b| {
                topo.node(*b)
                    .e_res
                    .total_cmp(&topo.node(*a).e_res)
                    .then(a.cmp(b))
            });
            let mut heads = vec![cand];
            for other in pool {
                if heads.len() == 3 {
                    break;
                }
                topo.debit(
                    cand,
                    params.tx(params.control_bits, topo.distance(cand, other)),
                );
                topo.debit(other, params.rx(params.control_bits));
                let mut players = heads.clone();
                players.push(other);
                let view: &Topology = topo;
                let admitted = play_admission(
                    round,
                    GameKind::CgcCohead,
                    players,
                    |s| provisional_far_cost(view, params, s, neighbor_count, HopModel::Direct),
                    events,
                )?;
                if admitted {
                    heads.push(other);
                    taken[other.0] = true;
                }
            }
            groups.push(heads);
        }
        let mut f = cluster_round(topo, params, groups);
        f.nominees = candidates;
        Ok(f)
    }
}
