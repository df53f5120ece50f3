//! Coalitional game-theoretic clustering.
//!
//! Each round:
//! 1. far nodes exchange CHN-INF and the local energy maxima become
//!    coalition head nominees (CHNs);
//! 2. every CHN tries to recruit up to two co-heads, admitting a candidate
//!    only when the Shapley shares of the CHN and the candidate undercut
//!    the CHN's standalone cost;
//! 3. remaining far nodes join the nearest head;
//! 4. heads chain toward the base station inside a coalition, gateways
//!    forward to the nearest head of a closer coalition or to the vicinity;
//! 5. vicinity nodes targeted by gateways start relay games and split the
//!    inbound load with the relays they admit.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    charge_membership, nearest_head, provisional_far_cost, AdvScope, Coalition, CoalitionKind,
    Formation, HeadPlan, HopModel, NextHop, ProtocolParams, RoundPlan, Route,
};
use crate::events::{Event, EventLog, GameKind};
use crate::game::{
    cooperation_improves, vicinity_coalition_cost, CostGame, GameError, ShapleyAllocation,
    VicinityCoalitionSpec, VicinityRelay,
};
use crate::network::{NodeId, Region, Role, Topology};

/// Tabulates a game, solves it, and logs the decision.
pub(crate) fn play_admission<F>(
    round: u32,
    kind: GameKind,
    players: Vec<NodeId>,
    cost: F,
    events: &mut EventLog,
) -> Result<bool, GameError>
where
    F: Fn(&[NodeId]) -> Result<f64, GameError>,
{
    let initiator = players[0];
    let candidate = *players.last().expect("non-empty game");
    let game = CostGame::new(players, cost);
    let table = game.tabulate()?;
    let base_cost = table.singleton(0);
    let allocation = ShapleyAllocation {
        players: game.players().to_vec(),
        payoffs: table.shapley(),
    };
    let admitted = cooperation_improves(base_cost, &allocation, initiator, candidate)?;
    events.push(|| Event::Admission {
        round,
        game: kind,
        initiator,
        candidate,
        players: allocation.players.clone(),
        costs: table.costs.clone(),
        allocation: allocation.payoffs.clone(),
        base_cost,
        admitted,
    });
    Ok(admitted)
}

pub struct Cgtc {
    params: ProtocolParams,
    /// First-round tie-break ranks (lower wins), drawn once from the seeded rng.
    first_round_rank: Vec<usize>,
    vicinity_radius: f64,
}

impl Cgtc {
    pub fn new<R: Rng + ?Sized>(
        params: ProtocolParams,
        topo: &Topology,
        vicinity_radius: f64,
        rng: &mut R,
    ) -> Self {
        let mut rank: Vec<usize> = (0..topo.len()).collect();
        rank.shuffle(rng);
        Self {
            params,
            first_round_rank: rank,
            vicinity_radius,
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Region division broadcast by the base station: labels regions and
    /// charges one control-packet reception per node.
    pub fn deploy(&self, topo: &mut Topology) {
        crate::network::partition_regions(topo, self.vicinity_radius);
        let rx = self.params.rx(self.params.control_bits);
        for id in topo.alive_ids().collect::<Vec<_>>() {
            topo.debit(id, rx);
        }
    }

    pub fn form_round(
        &self,
        topo: &mut Topology,
        round: u32,
        events: &mut EventLog,
    ) -> Result<Formation, GameError> {
        topo.reset_roles();
        let tie_rank: Vec<usize> = if round <= 1 {
            self.first_round_rank.clone()
        } else {
            (0..topo.len()).collect()
        };
        let nominees = elect_chns(topo, &self.params, &tie_rank);
        events.push(|| Event::Election {
            round,
            nominees: nominees.clone(),
        });

        let mut order = nominees.clone();
        order.sort_by(|a, b| {
            topo.node(*b)
                .e_res
                .total_cmp(&topo.node(*a).e_res)
                .then(a.cmp(b))
        });
        let mut taken: BTreeSet<NodeId> = nominees.iter().copied().collect();
        let mut coalitions = Vec::with_capacity(order.len());
        for chn in order {
            let id = coalitions.len();
            coalitions.push(recruit_coheads(
                topo,
                &self.params,
                chn,
                id,
                &mut taken,
                round,
                events,
            )?);
        }
        let orphans = form_membership(topo, &self.params, &mut coalitions);
        let routes = build_routes(topo, &mut coalitions);
        let vicinity = form_vicinity_coalitions(
            topo,
            &self.params,
            &routes.inbound,
            coalitions.len(),
            round,
            events,
        )?;
        for v in &vicinity {
            for (&relay, gateways) in &v.relayed {
                for g in gateways {
                    if let Some(c) = coalitions.iter_mut().find(|c| c.gateway == *g) {
                        c.route = Route::Relay(relay);
                    }
                }
            }
        }
        let plan = build_plan(topo, &coalitions);
        Ok(Formation {
            coalitions,
            vicinity,
            plan,
            nominees,
            orphans,
            unreachable: routes.unreachable,
        })
    }
}

/// CHN-INF exchange and nomination. A far node is nominated when it beats
/// every alive far neighbour on residual energy; equal energies go to the
/// lower `tie_rank`. Refreshes node degrees and charges the broadcast.
pub fn elect_chns(topo: &mut Topology, params: &ProtocolParams, tie_rank: &[usize]) -> Vec<NodeId> {
    let far: Vec<NodeId> = topo
        .alive_ids()
        .filter(|&i| topo.node(i).region == Region::Far)
        .collect();
    let neighborhoods: Vec<Vec<NodeId>> = far
        .iter()
        .map(|&i| topo.rc_neighbors(i, Some(Region::Far)))
        .collect();
    let beats = |a: NodeId, b: NodeId| {
        let (ea, eb) = (topo.node(a).e_res, topo.node(b).e_res);
        ea > eb || (ea == eb && tie_rank[a.0] < tie_rank[b.0])
    };
    let nominees: Vec<NodeId> = far
        .iter()
        .zip(&neighborhoods)
        .filter(|(&i, nb)| nb.iter().all(|&j| beats(i, j)))
        .map(|(&i, _)| i)
        .collect();
    let tx = params.tx(params.control_bits, params.r_c);
    let rx = params.rx(params.control_bits);
    for (&i, nb) in far.iter().zip(&neighborhoods) {
        let node = topo.node_mut(i);
        node.degree = nb.len();
        topo.debit(i, tx + rx * nb.len() as f64);
    }
    for &i in &nominees {
        topo.node_mut(i).role = Role::Chn;
    }
    nominees
}

/// Co-head ranking: weighted normalised degree plus normalised closeness
/// to the base station over the candidate set.
fn rank_candidates(
    topo: &Topology,
    params: &ProtocolParams,
    mut candidates: Vec<NodeId>,
) -> Vec<NodeId> {
    let max_deg = candidates
        .iter()
        .map(|&c| topo.node(c).degree)
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let max_dbs = candidates
        .iter()
        .map(|&c| topo.node(c).d_bs)
        .fold(0.0, f64::max);
    let score = |c: NodeId| {
        let n = topo.node(c);
        let closeness = if max_dbs > 0.0 {
            1.0 - n.d_bs / max_dbs
        } else {
            0.0
        };
        params.cohead_weight_degree * n.degree as f64 / max_deg
            + params.cohead_weight_distance * closeness
    };
    candidates.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    candidates
}

/// Sends CH-REC to ranked candidates until two are admitted or none remain.
/// Admitted heads are added to `taken`.
pub fn recruit_coheads(
    topo: &mut Topology,
    params: &ProtocolParams,
    chn: NodeId,
    coalition_id: usize,
    taken: &mut BTreeSet<NodeId>,
    round: u32,
    events: &mut EventLog,
) -> Result<Coalition, GameError> {
    let neighbors = topo.rc_neighbors(chn, Some(Region::Far));
    let neighbor_count = neighbors.len();
    let candidates = rank_candidates(
        topo,
        params,
        neighbors
            .into_iter()
            .filter(|c| !taken.contains(c))
            .collect(),
    );
    let mut heads = vec![chn];
    for cand in candidates {
        if heads.len() == 3 {
            break;
        }
        topo.debit(
            chn,
            params.tx(params.control_bits, topo.distance(chn, cand)),
        );
        topo.debit(cand, params.rx(params.control_bits));
        let mut players = heads.clone();
        players.push(cand);
        let view: &Topology = topo;
        let admitted = play_admission(
            round,
            GameKind::FarCohead,
            players,
            |s| provisional_far_cost(view, params, s, neighbor_count, HopModel::Chain),
            events,
        )?;
        if admitted {
            heads.push(cand);
            taken.insert(cand);
            topo.node_mut(cand).role = Role::CoalitionHead;
        }
    }
    Ok(Coalition::new(coalition_id, CoalitionKind::Far, heads))
}

/// CH-ADV / JOIN-REQ / schedule exchange. Every alive far non-head joins
/// the nearest head within R_c, or the nearest head anywhere when none is
/// in range; the latter are returned as orphans.
pub fn form_membership(
    topo: &mut Topology,
    params: &ProtocolParams,
    coalitions: &mut [Coalition],
) -> Vec<NodeId> {
    let heads: Vec<NodeId> = {
        let mut h: Vec<NodeId> = coalitions
            .iter()
            .flat_map(|c| c.heads.iter().copied())
            .collect();
        h.sort();
        h
    };
    let owner: BTreeMap<NodeId, usize> = coalitions
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.heads.iter().map(move |&h| (h, i)))
        .collect();
    let mut members: BTreeMap<NodeId, Vec<NodeId>> =
        heads.iter().map(|&h| (h, Vec::new())).collect();
    let mut orphans = Vec::new();
    if heads.is_empty() {
        return orphans;
    }
    let joiners: Vec<NodeId> = topo
        .alive_ids()
        .filter(|&i| topo.node(i).region == Region::Far && !owner.contains_key(&i))
        .collect();
    for node in joiners {
        let head = match nearest_head(topo, node, &heads, Some(params.r_c)) {
            Some(h) => h,
            None => {
                orphans.push(node);
                nearest_head(topo, node, &heads, None).expect("at least one head")
            }
        };
        members.get_mut(&head).expect("known head").push(node);
        topo.node_mut(node).role = Role::Member;
    }
    charge_membership(topo, params, &members, AdvScope::Range(Region::Far));
    for (head, mine) in members {
        coalitions[owner[&head]].members.insert(head, mine);
    }
    orphans
}

/// Gateways that target each vicinity node, and fallbacks to the base station.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteTable {
    pub inbound: BTreeMap<NodeId, Vec<NodeId>>,
    pub unreachable: usize,
}

/// Sets each coalition's gateway and route. A gateway forwards to the
/// nearest head of any coalition whose gateway is strictly closer to the
/// base station; failing that, to the nearest alive vicinity node; failing
/// that, straight to the base station.
pub fn build_routes(topo: &Topology, coalitions: &mut [Coalition]) -> RouteTable {
    for c in coalitions.iter_mut() {
        c.gateway = *c.chain(topo).last().expect("coalition has heads");
    }
    let vicinity: Vec<NodeId> = topo
        .alive_ids()
        .filter(|&i| topo.node(i).region == Region::Vicinity)
        .collect();
    let gateways: Vec<(NodeId, f64)> = coalitions
        .iter()
        .map(|c| (c.gateway, topo.node(c.gateway).d_bs))
        .collect();
    let mut table = RouteTable::default();
    for (ci, &(gw, gw_dbs)) in gateways.iter().enumerate() {
        let nearest = |options: Vec<(NodeId, Route)>| {
            options
                .into_iter()
                .map(|(n, r)| (topo.distance(gw, n), n, r))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        };
        let closer: Vec<(NodeId, Route)> = gateways
            .iter()
            .enumerate()
            .filter(|(_, &(_, other_dbs))| other_dbs < gw_dbs)
            .flat_map(|(other, _)| {
                let c = &coalitions[other];
                c.heads
                    .iter()
                    .map(move |&h| (h, Route::Coalition { id: c.id, entry: h }))
            })
            .collect();
        let best = nearest(closer)
            .or_else(|| nearest(vicinity.iter().map(|&v| (v, Route::Relay(v))).collect()));
        let route = match best {
            Some((_, _, route)) => route,
            None => {
                table.unreachable += 1;
                Route::Bs
            }
        };
        if let Route::Relay(v) = route {
            table.inbound.entry(v).or_default().push(gw);
        }
        coalitions[ci].route = route;
    }
    table
}

/// Splits `count` inbound packets over relays ordered by descending
/// residual energy; the first `count % len` relays take one extra.
fn split_load(topo: &Topology, relays: &[NodeId], count: usize) -> Vec<(NodeId, usize)> {
    let mut order = relays.to_vec();
    order.sort_by(|a, b| {
        topo.node(*b)
            .e_res
            .total_cmp(&topo.node(*a).e_res)
            .then(a.cmp(b))
    });
    let (base, extra) = (count / order.len(), count % order.len());
    order
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, base + usize::from(i < extra)))
        .collect()
}

/// Relay-game cost of a vicinity subset with `eta` inbound packets.
fn vicinity_cost(
    topo: &Topology,
    params: &ProtocolParams,
    initiator: NodeId,
    subset: &[NodeId],
    eta: usize,
) -> Result<f64, GameError> {
    let e_init = topo.node(initiator).e_res;
    let relays = split_load(topo, subset, eta)
        .into_iter()
        .map(|(r, share)| {
            let credit = if r == initiator {
                0.0
            } else {
                params.gamma * (topo.node(r).e_res - e_init).max(0.0)
            };
            VicinityRelay {
                inbound: share as u32,
                next_hop_m: topo.node(r).d_bs,
                credit_j: credit,
            }
        })
        .collect();
    vicinity_coalition_cost(
        &VicinityCoalitionSpec {
            relays,
            packet_bits: params.data_bits,
        },
        &params.radio,
    )
}

/// Boundary nodes (vicinity nodes targeted by at least one gateway) try up
/// to three energy-richest free vicinity neighbours and split the inbound
/// gateways across the relays they admit.
pub fn form_vicinity_coalitions(
    topo: &mut Topology,
    params: &ProtocolParams,
    inbound: &BTreeMap<NodeId, Vec<NodeId>>,
    first_id: usize,
    round: u32,
    events: &mut EventLog,
) -> Result<Vec<Coalition>, GameError> {
    let mut boundary: Vec<(NodeId, &Vec<NodeId>)> = inbound
        .iter()
        .filter(|(_, g)| !g.is_empty())
        .map(|(&b, g)| (b, g))
        .collect();
    boundary.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));
    let mut used: BTreeSet<NodeId> = boundary.iter().map(|(b, _)| *b).collect();
    let mut out = Vec::with_capacity(boundary.len());
    for (initiator, gateways) in boundary {
        let eta = gateways.len();
        topo.node_mut(initiator).role = Role::BoundaryRelay;
        let mut candidates: Vec<NodeId> = topo
            .rc_neighbors(initiator, Some(Region::Vicinity))
            .into_iter()
            .filter(|c| !used.contains(c))
            .collect();
        candidates.sort_by(|a, b| {
            topo.node(*b)
                .e_res
                .total_cmp(&topo.node(*a).e_res)
                .then(a.cmp(b))
        });
        candidates.truncate(3);
        let mut relays = vec![initiator];
        for cand in candidates {
            topo.debit(
                initiator,
                params.tx(params.control_bits, topo.distance(initiator, cand)),
            );
            topo.debit(cand, params.rx(params.control_bits));
            let mut players = relays.clone();
            players.push(cand);
            let view: &Topology = topo;
            let admitted = play_admission(
                round,
                GameKind::VicinityRelay,
                players,
                |s| vicinity_cost(view, params, initiator, s, eta),
                events,
            )?;
            if admitted {
                relays.push(cand);
                used.insert(cand);
                topo.node_mut(cand).role = Role::VicinityRelay;
            }
        }
        let mut coalition = Coalition::new(
            first_id + out.len(),
            CoalitionKind::Vicinity,
            relays.clone(),
        );
        let mut queue: Vec<NodeId> = gateways.clone();
        queue.sort();
        let mut queue = queue.into_iter();
        for (relay, share) in split_load(topo, &relays, eta) {
            coalition
                .relayed
                .insert(relay, queue.by_ref().take(share).collect());
        }
        coalition.gateway = *relays
            .iter()
            .min_by(|a, b| topo.node(**a).d_bs.total_cmp(&topo.node(**b).d_bs))
            .expect("relay");
        out.push(coalition);
    }
    Ok(out)
}

/// Orders heads for the data plane: coalitions by descending gateway
/// distance to the base station, each chain from its farthest head.
/// Vicinity nodes report their own readings directly.
pub fn build_plan(topo: &Topology, coalitions: &[Coalition]) -> RoundPlan {
    let mut order: Vec<&Coalition> = coalitions.iter().collect();
    order.sort_by(|a, b| {
        topo.node(b.gateway)
            .d_bs
            .total_cmp(&topo.node(a.gateway).d_bs)
            .then(a.gateway.cmp(&b.gateway))
    });
    let mut plan = RoundPlan::default();
    for c in order {
        let chain = c.chain(topo);
        for (i, &h) in chain.iter().enumerate() {
            let next = match chain.get(i + 1) {
                Some(&n) => NextHop::Head(n),
                None => match c.route {
                    Route::Coalition { entry, .. } => NextHop::Head(entry),
                    Route::Relay(r) => NextHop::Relay(r),
                    Route::Bs => NextHop::Bs,
                },
            };
            plan.heads.push(HeadPlan {
                id: h,
                members: c.members.get(&h).cloned().unwrap_or_default(),
                next,
            });
        }
    }
    plan.direct = topo
        .alive_ids()
        .filter(|&i| topo.node(i).region == Region::Vicinity)
        .collect();
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::game::{far_coalition_cost, shapley_value, FarCoalitionSpec, FarHead};
    use crate::network::{partition_regions, Point};

    fn setup(points: &[(f64, f64)]) -> (Topology, ProtocolParams) {
        let cfg = SimConfig::scenario1();
        let mut topo = Topology::from_positions(
            &cfg,
            points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
        );
        partition_regions(&mut topo, cfg.radio.d0());
        (topo, ProtocolParams::from_config(&cfg))
    }

    #[test]
    fn richest_neighbor_is_nominated() {
        let (mut topo, p) = setup(&[(10.0, 50.0), (20.0, 50.0), (10.0, 90.0)]);
        topo.nodes[0].e_res = 0.9;
        topo.nodes[1].e_res = 0.8;
        let ids: Vec<usize> = (0..3).collect();
        let chns = elect_chns(&mut topo, &p, &ids);
        // node 2 is isolated and elects itself
        assert_eq!(chns, vec![NodeId(0), NodeId(2)]);
        assert_eq!(topo.nodes[0].degree, 1);
        assert_eq!(topo.nodes[2].degree, 0);
    }

    #[test]
    fn ties_follow_rank() {
        let (mut a, p) = setup(&[(10.0, 50.0), (20.0, 50.0)]);
        let mut b = a.clone();
        assert_eq!(elect_chns(&mut a, &p, &[1, 0]), vec![NodeId(1)]);
        assert_eq!(elect_chns(&mut b, &p, &[0, 1]), vec![NodeId(0)]);
    }

    #[test]
    fn first_round_ties_are_seeded() {
        use rand::SeedableRng;
        let cfg = SimConfig::scenario1();
        let topo =
            crate::network::generate_topology(&cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5))
                .unwrap();
        let pick = |seed| {
            let mut t = topo.clone();
            let c = Cgtc::new(
                ProtocolParams::from_config(&cfg),
                &t,
                cfg.radio.d0(),
                &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed),
            );
            c.deploy(&mut t);
            c.form_round(&mut t, 1, &mut EventLog::new(false))
                .unwrap()
                .nominees
        };
        assert_eq!(pick(11), pick(11));
        assert_ne!(pick(11), pick(12));
    }

    #[test]
    fn lone_chn_stays_singleton() {
        let (mut topo, p) = setup(&[(10.0, 50.0)]);
        let mut taken = BTreeSet::from([NodeId(0)]);
        let c = recruit_coheads(
            &mut topo,
            &p,
            NodeId(0),
            0,
            &mut taken,
            1,
            &mut EventLog::new(false),
        )
        .unwrap();
        assert_eq!(c.heads, vec![NodeId(0)]);
    }

    #[test]
    fn admission_matches_game_oracle() {
        // CHN with three neighbours; the provisional game for {CHN, A}
        // assigns ⌈(3-2)/2⌉ = 1 member to each head.
        let (mut topo, p) = setup(&[(10.0, 50.0), (18.0, 50.0), (10.0, 60.0), (2.0, 50.0)]);
        let mut taken = BTreeSet::from([NodeId(0)]);
        topo.nodes[0].degree = 3;
        for i in 1..4 {
            topo.nodes[i].degree = topo.rc_neighbors(NodeId(i), Some(Region::Far)).len();
        }
        let mut log = EventLog::new(true);
        let c = recruit_coheads(&mut topo, &p, NodeId(0), 0, &mut taken, 1, &mut log).unwrap();
        let events = log.take();
        let Event::Admission {
            players, admitted, ..
        } = &events[0]
        else {
            panic!("expected admission")
        };
        assert_eq!(
            players[1],
            NodeId(1),
            "closest-to-BS, highest-degree candidate first"
        );

        // independent reconstruction of the first game
        let d_chn = topo.nodes[0].d_bs;
        let d_a = topo.nodes[1].d_bs;
        let spec = |heads: Vec<FarHead>| FarCoalitionSpec {
            heads,
            packet_bits: 824.0,
            mu: 0.5,
        };
        let alone = far_coalition_cost(
            &spec(vec![FarHead {
                next_hop_m: 40.0,
                member_distances_m: vec![10.0; 2],
            }]),
            &p.radio,
        )
        .unwrap();
        let a_alone = alone;
        let both = far_coalition_cost(
            &spec(vec![
                FarHead {
                    next_hop_m: (d_chn - d_a).clamp(1.0, 40.0),
                    member_distances_m: vec![10.0],
                },
                FarHead {
                    next_hop_m: 40.0,
                    member_distances_m: vec![10.0],
                },
            ]),
            &p.radio,
        )
        .unwrap();
        let table = [0.0, alone, a_alone, both];
        let alloc = shapley_value(&CostGame::new(vec![0usize, 1], |s: &[usize]| {
            Ok(table[s.iter().fold(0, |m, &i| m | (1 << i))])
        }))
        .unwrap();
        let expected = cooperation_improves(alone, &alloc, 0, 1).unwrap();
        assert_eq!(*admitted, expected);
        assert!(expected);
        assert!(c.heads.contains(&NodeId(1)));
        assert!(c.heads.len() <= 3);
    }

    #[test]
    fn costlier_candidate_is_rejected() {
        // One neighbour: the CHN alone serves nobody, so no partner can lower its cost.
        let (mut topo, p) = setup(&[(10.0, 50.0), (18.0, 50.0)]);
        let mut taken = BTreeSet::from([NodeId(0)]);
        let mut log = EventLog::new(true);
        let c = recruit_coheads(&mut topo, &p, NodeId(0), 0, &mut taken, 1, &mut log).unwrap();
        assert_eq!(c.heads, vec![NodeId(0)]);
        let events = log.take();
        assert!(
            matches!(events[0], Event::Admission { admitted: false, base_cost, .. } if base_cost == 0.0)
        );
    }

    #[test]
    fn membership_ties_and_orphans() {
        // heads at x=10 and x=30, node 2 equidistant, node 3 out of range of both
        let (mut topo, p) = setup(&[(10.0, 50.0), (30.0, 50.0), (20.0, 50.0), (20.0, 90.0)]);
        let mut cs = vec![
            Coalition::new(0, CoalitionKind::Far, vec![NodeId(0)]),
            Coalition::new(1, CoalitionKind::Far, vec![NodeId(1)]),
        ];
        let orphans = form_membership(&mut topo, &p, &mut cs);
        assert_eq!(cs[0].members[&NodeId(0)], vec![NodeId(2), NodeId(3)]);
        assert_eq!(orphans, vec![NodeId(3)]);
    }

    #[test]
    fn chain_and_inter_coalition_routes() {
        // BS at (150, 50). Coalition A: heads with d_bs 120, 100, 90 (x=30, 50, 60).
        let (mut topo, _) = setup(&[(30.0, 50.0), (50.0, 50.0), (60.0, 50.0)]);
        let mut cs = vec![Coalition::new(
            0,
            CoalitionKind::Far,
            vec![NodeId(1), NodeId(0), NodeId(2)],
        )];
        topo.nodes.iter_mut().for_each(|n| n.region = Region::Far);
        let table = build_routes(&topo, &mut cs);
        assert_eq!(cs[0].chain(&topo), vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(cs[0].gateway, NodeId(2));
        assert_eq!(cs[0].route, Route::Bs);
        assert_eq!(table.unreachable, 1);
    }

    #[test]
    fn gateway_forwards_to_nearest_closer_head() {
        // gateway d_bs 120 (x=30); second coalition gateway d_bs 80 (x=70) with a
        // second head at x=45,y=60; vicinity node at x=100.
        let (mut topo, _) = setup(&[(30.0, 50.0), (70.0, 50.0), (45.0, 60.0), (100.0, 50.0)]);
        for i in 0..3 {
            topo.nodes[i].region = Region::Far;
        }
        assert_eq!(topo.nodes[3].region, Region::Vicinity);
        let mut cs = vec![
            Coalition::new(0, CoalitionKind::Far, vec![NodeId(0)]),
            Coalition::new(1, CoalitionKind::Far, vec![NodeId(1), NodeId(2)]),
        ];
        let table = build_routes(&topo, &mut cs);
        // brute force: nearest eligible target from the first gateway
        let mut best = (f64::INFINITY, NodeId(99));
        for t in [NodeId(1), NodeId(2), NodeId(3)] {
            let d = topo.distance(NodeId(0), t);
            if d < best.0 {
                best = (d, t);
            }
        }
        assert_eq!(best.1, NodeId(2));
        assert_eq!(
            cs[0].route,
            Route::Coalition {
                id: 1,
                entry: NodeId(2)
            }
        );
        // closest gateway goes straight into the vicinity
        assert_eq!(cs[1].gateway, NodeId(1));
        assert_eq!(cs[1].route, Route::Relay(NodeId(3)));
        assert_eq!(table.inbound[&NodeId(3)], vec![NodeId(1)]);
        assert_eq!(table.unreachable, 0);
    }

    #[test]
    fn closer_coalition_beats_nearer_vicinity_node() {
        // gateway at x=80,y=95 (d_bs ~83, labelled far); the other
        // coalition's gateway is at x=70,y=50 (d_bs 80), 46 m away, while a
        // vicinity node sits only 5 m away
        let (mut topo, _) = setup(&[(80.0, 95.0), (70.0, 50.0), (84.0, 98.0)]);
        topo.nodes[0].region = Region::Far;
        topo.nodes[1].region = Region::Far;
        topo.nodes[2].region = Region::Vicinity;
        let mut cs = vec![
            Coalition::new(0, CoalitionKind::Far, vec![NodeId(0)]),
            Coalition::new(1, CoalitionKind::Far, vec![NodeId(1)]),
        ];
        build_routes(&topo, &mut cs);
        assert!(topo.distance(NodeId(0), NodeId(2)) < topo.distance(NodeId(0), NodeId(1)));
        assert_eq!(
            cs[0].route,
            Route::Coalition {
                id: 1,
                entry: NodeId(1)
            }
        );
        assert_eq!(cs[1].route, Route::Relay(NodeId(2)));
    }

    #[test]
    fn relay_load_split() {
        let (mut topo, p) = setup(&[
            (100.0, 50.0),
            (105.0, 50.0),
            (20.0, 50.0),
            (20.0, 60.0),
            (20.0, 70.0),
        ]);
        topo.nodes[1].e_res = 1.5;
        let inbound = BTreeMap::from([(NodeId(0), vec![NodeId(2), NodeId(3), NodeId(4)])]);
        let mut log = EventLog::new(true);
        let vs = form_vicinity_coalitions(&mut topo, &p, &inbound, 7, 1, &mut log).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].id, 7);
        assert_eq!(vs[0].heads, vec![NodeId(0), NodeId(1)]);
        // the richer joiner carries the extra packet
        assert_eq!(vs[0].relayed[&NodeId(1)].len(), 2);
        assert_eq!(vs[0].relayed[&NodeId(0)].len(), 1);
        let events = log.take();
        let Event::Admission {
            admitted, costs, ..
        } = &events[0]
        else {
            panic!()
        };
        assert!(*admitted);
        // c({initiator}) carries all three packets over 50 m
        let alone = 824.0 * 3.0 * (100e-9 + 10e-12 * 2500.0);
        assert!((costs[1] - alone).abs() < 1e-15);
    }

    #[test]
    fn richer_recruit_admitted_through_credit() {
        // eta = 1: without a credit the joiner could only shift the packet.
        let (mut topo, p) = setup(&[(100.0, 50.0), (100.0, 60.0), (20.0, 50.0)]);
        topo.nodes[0].e_res = 0.5;
        topo.nodes[1].e_res = 0.9;
        let inbound = BTreeMap::from([(NodeId(0), vec![NodeId(2)])]);
        let mut log = EventLog::new(true);
        let vs = form_vicinity_coalitions(&mut topo, &p, &inbound, 0, 1, &mut log).unwrap();
        let credit = 1e-3 * 0.4;
        let d1 = topo.nodes[1].d_bs;
        let with = (824.0 * (100e-9 + 10e-12 * d1 * d1) - credit).max(0.0);
        let alone = 824.0 * (100e-9 + 10e-12 * 2500.0);
        assert!(with < alone);
        assert_eq!(vs[0].heads, vec![NodeId(0), NodeId(1)]);
        assert_eq!(vs[0].relayed[&NodeId(1)], vec![NodeId(2)]);
    }

    #[test]
    fn zero_inbound_starts_no_game() {
        let (mut topo, p) = setup(&[(100.0, 50.0)]);
        let inbound = BTreeMap::from([(NodeId(0), vec![])]);
        let vs = form_vicinity_coalitions(&mut topo, &p, &inbound, 0, 1, &mut EventLog::new(false))
            .unwrap();
        assert!(vs.is_empty());
    }
}
