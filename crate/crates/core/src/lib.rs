//! Round-based simulator for energy-constrained wireless sensor networks.
//!
//! The crate implements coalitional game-theoretic clustering (far-region
//! coalitions with up to three heads, vicinity relay coalitions, Shapley
//! cost sharing) alongside LEACH and a simplified CGC baseline, all on the
//! same first-order radio energy model and metrics pipeline.

pub mod config;
pub mod energy;
pub mod engine;
pub mod events;
pub mod game;
pub mod network;
pub mod output;
pub mod protocol;

pub use config::{Algorithm, BaselineConfig, ConfigError, SimConfig};
pub use energy::{
    aggregation_energy, crossover_distance, rx_energy, tx_energy, EnergyError, RadioParams,
};
pub use engine::{
    aggregate_runs, run_ensemble, run_simulation, series_label, Landmark, RoundOutcome, RunMetrics,
    RunOutput, SimError, Simulation, Summary,
};
pub use events::{Event, GameKind};
pub use game::{
    cooperation_improves, far_coalition_cost, shapley_value, vicinity_coalition_cost, CostGame,
    CostTable, FarCoalitionSpec, FarHead, GameError, ShapleyAllocation, VicinityCoalitionSpec,
    VicinityRelay,
};
pub use network::{
    generate_topology, partition_regions, NodeId, NodeState, Point, Region, Role, Topology,
};
pub use protocol::{
    Coalition, CoalitionKind, Formation, NextHop, ProtocolParams, RoundPlan, Route,
};
