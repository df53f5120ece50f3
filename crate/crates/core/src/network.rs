//! Node placement, the far/vicinity split, geometric queries and the
//! per-node energy ledger.

use std::fmt::{self, Write as _};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("lambda * m^2 = {0} is not a positive integer node count")]
    NodeCount(f64),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("topology line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node {id} at ({x}, {y}) lies outside the {m} m field")]
    OutOfField { id: usize, x: f64, y: f64, m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Far,
    Vicinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Ordinary,
    Chn,
    CoalitionHead,
    Member,
    BoundaryRelay,
    VicinityRelay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub position: Point,
    pub e_res: f64,
    pub region: Region,
    pub role: Role,
    pub alive: bool,
    /// Distance to the base station.
    pub d_bs: f64,
    /// Alive same-region neighbours within R_c, refreshed each round.
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<NodeState>,
    pub bs: Point,
    pub field_side: f64,
    pub density: f64,
    pub coalition_range: f64,
    initial_energy: f64,
    spent: Vec<f64>,
    /// Static R_c adjacency (ascending ids); liveness is filtered at query time.
    adjacency: Vec<Vec<NodeId>>,
}

/// Uniform i.i.d. placement of λ·m² nodes over the field.
pub fn generate_topology<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<Topology, NetworkError> {
    let count = config.lambda * config.m * config.m;
    let n = count.round();
    if !(n >= 1.0 && (count - n).abs() <= 1e-6 * n) {
        return Err(NetworkError::NodeCount(count));
    }
    let positions: Vec<Point> = (0..n as usize)
        .map(|_| Point::new(rng.gen_range(0.0..=config.m), rng.gen_range(0.0..=config.m)))
        .collect();
    Ok(Topology::from_positions(config, positions))
}

impl Topology {
    pub fn from_positions(config: &SimConfig, positions: Vec<Point>) -> Self {
        let bs = Point::new(config.bs.0, config.bs.1);
        let nodes = positions
            .into_iter()
            .enumerate()
            .map(|(i, position)| NodeState {
                id: NodeId(i),
                position,
                e_res: config.initial_energy,
                region: Region::Far,
                role: Role::Ordinary,
                alive: true,
                d_bs: position.distance(&bs),
                degree: 0,
            })
            .collect::<Vec<_>>();
        let n = nodes.len();
        let adjacency = nodes
            .iter()
            .map(|a| {
                nodes
                    .iter()
                    .filter(|b| b.id != a.id && a.position.distance(&b.position) <= config.r_c)
                    .map(|b| b.id)
                    .collect()
            })
            .collect();
        Self {
            nodes,
            bs,
            field_side: config.m,
            density: n as f64 / (config.m * config.m),
            coalition_range: config.r_c,
            initial_energy: config.initial_energy,
            spent: vec![0.0; n],
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id.0]
    }

    pub fn get(&self, id: NodeId) -> Result<&NodeState, NetworkError> {
        self.nodes.get(id.0).ok_or(NetworkError::UnknownNode(id.0))
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.nodes[a.0].position.distance(&self.nodes[b.0].position)
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes[id.0].alive
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.alive).map(|n| n.id)
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    /// Alive nodes within `radius` of `id` (inclusive), ascending id, excluding `id`.
    pub fn neighbors_within(&self, id: NodeId, radius: f64) -> Result<Vec<NodeId>, NetworkError> {
        let origin = self.get(id)?.position;
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.alive && n.id != id && n.position.distance(&origin) <= radius)
            .map(|n| n.id)
            .collect())
    }

    /// Alive neighbours within the coalition range, optionally restricted to one region.
    pub fn rc_neighbors(&self, id: NodeId, region: Option<Region>) -> Vec<NodeId> {
        self.adjacency[id.0]
            .iter()
            .copied()
            .filter(|n| {
                let node = &self.nodes[n.0];
                node.alive && region.is_none_or(|r| node.region == r)
            })
            .collect()
    }

    pub fn reset_roles(&mut self) {
        for n in &mut self.nodes {
            n.role = Role::Ordinary;
        }
    }

    /// Removes `joules` from a node's battery. The draw is capped at the
    /// remaining charge, so a node may finish its last epoch on an empty
    /// battery; death is applied later by [`Topology::settle_deaths`].
    pub fn debit(&mut self, id: NodeId, joules: f64) {
        debug_assert!(joules >= 0.0 && joules.is_finite(), "bad debit {joules}");
        let node = &mut self.nodes[id.0];
        let drawn = joules.min(node.e_res.max(0.0));
        node.e_res -= drawn;
        self.spent[id.0] += drawn;
    }

    /// Marks every node with an empty battery dead; returns the newly dead.
    pub fn settle_deaths(&mut self) -> Vec<NodeId> {
        let mut dead = Vec::new();
        for n in &mut self.nodes {
            if n.alive && n.e_res <= 0.0 {
                n.alive = false;
                n.e_res = 0.0;
                dead.push(n.id);
            }
        }
        dead
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn total_residual(&self) -> f64 {
        self.nodes.iter().map(|n| n.e_res).sum()
    }

    pub fn total_spent(&self) -> f64 {
        self.spent.iter().sum()
    }

    pub fn spent(&self, id: NodeId) -> f64 {
        self.spent[id.0]
    }

    /// One node per line: `id x y`, with shortest round-trip float formatting.
    pub fn dump(&self) -> String {
        let mut out = String::from("# id x y\n");
        for n in &self.nodes {
            let _ = writeln!(out, "{} {} {}", n.id.0, n.position.x, n.position.y);
        }
        out
    }

    pub fn load(text: &str, config: &SimConfig) -> Result<Self, NetworkError> {
        let mut positions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let parse_err = |message: String| NetworkError::Parse { line, message };
            if fields.len() != 3 {
                return Err(parse_err(format!("expected `id x y`, got `{content}`")));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad id `{}`", fields[0])))?;
            if id != positions.len() {
                return Err(parse_err(format!(
                    "expected id {}, got {id}",
                    positions.len()
                )));
            }
            let x: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad x `{}`", fields[1])))?;
            let y: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad y `{}`", fields[2])))?;
            if !(0.0..=config.m).contains(&x) || !(0.0..=config.m).contains(&y) {
                return Err(NetworkError::OutOfField {
                    id,
                    x,
                    y,
                    m: config.m,
                });
            }
            positions.push(Point::new(x, y));
        }
        Ok(Self::from_positions(config, positions))
    }
}

/// Labels each node Vicinity when it lies within `radius` of the base
/// station (boundary inclusive) and Far otherwise. Called once per run.
pub fn partition_regions(topology: &mut Topology, radius: f64) {
    for n in &mut topology.nodes {
        n.region = if n.d_bs <= radius {
            Region::Vicinity
        } else {
            Region::Far
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config() -> SimConfig {
        SimConfig::scenario1()
    }

    #[test]
    fn generates_lambda_m_squared_nodes() {
        let cfg = config();
        let topo = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(topo.len(), 100);
        assert!((topo.density - 0.01).abs() < 1e-15);
        assert_eq!(topo.bs, Point::new(150.0, 50.0));
        for n in &topo.nodes {
            assert!((0.0..=100.0).contains(&n.position.x) && (0.0..=100.0).contains(&n.position.y));
            assert!(n.alive && n.role == Role::Ordinary && n.e_res == 1.0);
        }
        let s2 =
            generate_topology(&SimConfig::scenario2(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(s2.len(), 200);
    }

    #[test]
    fn same_seed_same_topology() {
        let cfg = config();
        let a = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.dump(), b.dump());
        let c = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert_ne!(a.dump(), c.dump());
    }

    #[test]
    fn non_integer_node_count_rejected() {
        let mut cfg = config();
        cfg.lambda = 0.01055;
        assert!(matches!(
            generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(1)),
            Err(NetworkError::NodeCount(_))
        ));
    }

    #[test]
    fn region_labels() {
        let cfg = config();
        let mut topo =
            Topology::from_positions(&cfg, vec![Point::new(100.0, 50.0), Point::new(0.0, 50.0)]);
        partition_regions(&mut topo, cfg.radio.d0());
        assert_eq!(topo.nodes[0].d_bs, 50.0);
        assert_eq!(topo.nodes[0].region, Region::Vicinity);
        assert_eq!(topo.nodes[1].d_bs, 150.0);
        assert_eq!(topo.nodes[1].region, Region::Far);

        let mut at_origin = config();
        at_origin.bs = (0.0, 0.0);
        let d0 = cfg.radio.d0();
        let mut edge = Topology::from_positions(&at_origin, vec![Point::new(d0, 0.0)]);
        partition_regions(&mut edge, d0);
        assert_eq!(edge.nodes[0].region, Region::Vicinity);
    }

    #[test]
    fn neighbor_queries() {
        let cfg = config();
        let mut topo = Topology::from_positions(
            &cfg,
            vec![
                Point::new(0.0, 0.0),
                Point::new(20.0, 0.0),
                Point::new(90.0, 90.0),
                Point::new(10.0, 0.0),
            ],
        );
        assert_eq!(topo.neighbors_within(NodeId(2), 20.0).unwrap(), vec![]);
        assert_eq!(
            topo.neighbors_within(NodeId(0), 20.0).unwrap(),
            vec![NodeId(1), NodeId(3)]
        );
        assert_eq!(
            topo.neighbors_within(NodeId(1), 20.0).unwrap(),
            vec![NodeId(0), NodeId(3)]
        );
        topo.debit(NodeId(3), 5.0);
        assert_eq!(topo.settle_deaths(), vec![NodeId(3)]);
        assert_eq!(
            topo.neighbors_within(NodeId(0), 20.0).unwrap(),
            vec![NodeId(1)]
        );
        assert!(topo.neighbors_within(NodeId(7), 20.0).is_err());
    }

    #[test]
    fn debits_are_conserved() {
        let cfg = config();
        let mut topo =
            Topology::from_positions(&cfg, vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)]);
        topo.debit(NodeId(0), 0.25);
        topo.debit(NodeId(1), 3.0);
        assert_eq!(topo.nodes[1].e_res, 0.0);
        assert!((topo.total_residual() + topo.total_spent() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dump_load_round_trip() {
        let cfg = config();
        let topo = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let loaded = Topology::load(&topo.dump(), &cfg).unwrap();
        assert_eq!(loaded, topo);
        assert!(Topology::load("0 1 2\n2 3 4\n", &cfg).is_err());
        assert!(matches!(
            Topology::load("0 101 2\n", &cfg),
            Err(NetworkError::OutOfField { .. })
        ));
    }

    proptest! {
        #[test]
        fn neighborhood_is_symmetric(seed in 0u64..500, radius in 1.0f64..40.0) {
            let cfg = config();
            let topo = generate_topology(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for i in 0..topo.len() {
                for j in topo.neighbors_within(NodeId(i), radius).unwrap() {
                    prop_assert!(topo.neighbors_within(j, radius).unwrap().contains(&NodeId(i)));
                }
            }
        }
    }
}
