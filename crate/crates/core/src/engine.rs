//! Round loop, per-run metrics, and multi-run aggregation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::config::{Algorithm, BaselineConfig, ConfigError, SimConfig};
use crate::events::{Event, EventLog};
use crate::game::GameError;
use crate::network::{generate_topology, partition_regions, NetworkError, NodeId, Topology};
use crate::protocol::baselines::{Cgc, Leach};
use crate::protocol::cgtc::Cgtc;
use crate::protocol::{run_data_epoch, Formation, ProtocolParams};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("cannot aggregate runs: {0}")]
    Aggregate(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

enum Engine {
    Cgtc(Cgtc),
    Leach(Leach),
    Cgc(Cgc),
}

/// What one round did to the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u32,
    pub formation: Formation,
    pub deaths: Vec<NodeId>,
    pub alive: usize,
    pub residual: f64,
    pub spent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub algorithm: Algorithm,
    pub p: Option<f64>,
    pub seed: u64,
    pub nodes: usize,
    pub max_rounds: u32,
    /// Alive count after each round; index 0 is round 1.
    pub alive_per_round: Vec<u32>,
    pub energy_per_round: Vec<f64>,
    pub first_death: Option<u32>,
    pub half_death: Option<u32>,
    pub last_death: Option<u32>,
    pub orphans: u64,
    pub unreachable: u64,
    /// Head count → number of coalitions formed with that many heads.
    pub coalition_sizes: BTreeMap<usize, u64>,
    pub rounds_executed: u32,
}

impl RunMetrics {
    fn new(algorithm: Algorithm, p: Option<f64>, seed: u64, nodes: usize, max_rounds: u32) -> Self {
        Self {
            algorithm,
            p,
            seed,
            nodes,
            max_rounds,
            alive_per_round: Vec::with_capacity(max_rounds as usize),
            energy_per_round: Vec::with_capacity(max_rounds as usize),
            first_death: None,
            half_death: None,
            last_death: None,
            orphans: 0,
            unreachable: 0,
            coalition_sizes: BTreeMap::new(),
            rounds_executed: 0,
        }
    }

    pub fn label(&self) -> String {
        series_label(self.algorithm, self.p)
    }

    /// Alive count after `round` (1-based); 0 past the horizon of a dead network.
    pub fn alive_at(&self, round: u32) -> u32 {
        self.alive_per_round
            .get(round as usize - 1)
            .copied()
            .unwrap_or(0)
    }

    fn record(&mut self, outcome: &RoundOutcome) {
        let round = outcome.round;
        let alive = outcome.alive as u32;
        self.alive_per_round.push(alive);
        self.energy_per_round.push(outcome.residual);
        self.rounds_executed = round;
        self.orphans += outcome.formation.orphans.len() as u64;
        self.unreachable += outcome.formation.unreachable as u64;
        for c in &outcome.formation.coalitions {
            *self.coalition_sizes.entry(c.heads.len()).or_default() += 1;
        }
        let dead = self.nodes as u32 - alive;
        if dead > 0 && self.first_death.is_none() {
            self.first_death = Some(round);
        }
        if 2 * dead >= self.nodes as u32 && self.half_death.is_none() {
            self.half_death = Some(round);
        }
        if alive == 0 && self.last_death.is_none() {
            self.last_death = Some(round);
        }
    }

    fn pad(&mut self) {
        let len = self.max_rounds as usize;
        self.alive_per_round.resize(len, 0);
        self.energy_per_round.resize(len, 0.0);
    }
}

pub fn series_label(algorithm: Algorithm, p: Option<f64>) -> String {
    match p {
        Some(p) if algorithm.uses_probability() => format!("{algorithm}(p={p})"),
        _ => algorithm.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub events: Vec<Event>,
}

pub struct Simulation {
    config: SimConfig,
    params: ProtocolParams,
    topo: Topology,
    rng: ChaCha8Rng,
    engine: Engine,
    round: u32,
    events: EventLog,
    metrics: RunMetrics,
}

impl Simulation {
    /// Builds the run for `seed`: the topology depends only on the seed, so
    /// every algorithm sees the same placement.
    pub fn new(
        config: &SimConfig,
        algorithm: Algorithm,
        p: Option<f64>,
        seed: u64,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let topo = generate_topology(config, &mut ChaCha8Rng::seed_from_u64(seed))?;
        Self::with_topology(config, algorithm, p, seed, topo)
    }

    pub fn with_topology(
        config: &SimConfig,
        algorithm: Algorithm,
        p: Option<f64>,
        seed: u64,
        mut topo: Topology,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let params = ProtocolParams::from_config(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + algorithm as u64);
        partition_regions(&mut topo, config.vicinity_radius());
        let baseline = |alg| -> Result<BaselineConfig, SimError> {
            let p = p
                .or_else(|| config.p.first().copied())
                .ok_or_else(|| ConfigError::Field {
                    field: "p",
                    expected: "a head election probability".into(),
                    got: "none".into(),
                })?;
            Ok(BaselineConfig::new(alg, p)?)
        };
        let (engine, p) = match algorithm {
            Algorithm::Cgtc => {
                let cgtc = Cgtc::new(params.clone(), &topo, config.vicinity_radius(), &mut rng);
                cgtc.deploy(&mut topo);
                (Engine::Cgtc(cgtc), None)
            }
            Algorithm::Leach => {
                let b = baseline(algorithm)?;
                (
                    Engine::Leach(Leach::new(b, topo.len())),
                    Some(b.ch_probability),
                )
            }
            Algorithm::Cgc => {
                let b = baseline(algorithm)?;
                (Engine::Cgc(Cgc::new(b)), Some(b.ch_probability))
            }
        };
        let metrics = RunMetrics::new(algorithm, p, seed, topo.len(), config.max_rounds);
        Ok(Self {
            config: config.clone(),
            params,
            topo,
            rng,
            engine,
            round: 0,
            events: EventLog::new(config.log_events),
            metrics,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        self.events.take()
    }

    pub fn finished(&self) -> bool {
        self.round >= self.config.max_rounds || self.topo.alive_count() == 0
    }

    /// One formation phase followed by the configured number of data epochs.
    pub fn step(&mut self) -> Result<RoundOutcome, SimError> {
        self.round += 1;
        let round = self.round;
        let before = self.topo.total_spent();
        let formation = match &mut self.engine {
            Engine::Cgtc(c) => c.form_round(&mut self.topo, round, &mut self.events)?,
            Engine::Leach(l) => l.leach_round(
                &mut self.topo,
                &self.params,
                round,
                &mut self.rng,
                &mut self.events,
            ),
            Engine::Cgc(c) => c.cgc_round(
                &mut self.topo,
                &self.params,
                round,
                &mut self.rng,
                &mut self.events,
            )?,
        };
        let mut deaths = self.topo.settle_deaths();
        for _ in 0..self.config.epochs_per_round {
            run_data_epoch(&mut self.topo, &formation.plan, &self.params);
            deaths.extend(self.topo.settle_deaths());
        }
        for &node in &deaths {
            self.events.push(|| Event::Death { round, node });
        }
        let outcome = RoundOutcome {
            round,
            formation,
            deaths,
            alive: self.topo.alive_count(),
            residual: self.topo.total_residual(),
            spent: self.topo.total_spent() - before,
        };
        self.metrics.record(&outcome);
        Ok(outcome)
    }

    /// Runs to the horizon or until every node is dead; the alive series
    /// is zero-padded to `max_rounds`.
    pub fn run(mut self) -> Result<RunOutput, SimError> {
        while !self.finished() {
            self.step()?;
        }
        self.metrics.pad();
        Ok(RunOutput {
            metrics: self.metrics,
            events: self.events.take(),
        })
    }
}

pub fn run_simulation(
    config: &SimConfig,
    algorithm: Algorithm,
    p: Option<f64>,
    seed: u64,
) -> Result<RunOutput, SimError> {
    Simulation::new(config, algorithm, p, seed)?.run()
}

/// Runs seeds `config.seed .. config.seed + config.runs` in parallel,
/// returning outputs in seed order. `threads` caps the pool size.
pub fn run_ensemble(
    config: &SimConfig,
    algorithm: Algorithm,
    p: Option<f64>,
    threads: Option<usize>,
) -> Result<Vec<RunOutput>, SimError> {
    let seeds: Vec<u64> = (0..config.runs as u64).map(|i| config.seed + i).collect();
    let work = || {
        seeds
            .par_iter()
            .map(|&s| run_simulation(config, algorithm, p, s))
            .collect()
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Two-sided 95% Student-t multiplier for `df` degrees of freedom.
pub fn t_multiplier(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df > 0")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub mean: f64,
    pub ci_half: f64,
    /// Runs where the event never happened; they count as `max_rounds`.
    pub censored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub algorithm: Algorithm,
    pub p: Option<f64>,
    pub runs: usize,
    pub nodes: usize,
    pub max_rounds: u32,
    pub mean_alive: Vec<f64>,
    pub ci_half: Vec<f64>,
    pub fnd: Landmark,
    pub hnd: Landmark,
    pub lnd: Landmark,
}

impl Summary {
    pub fn alive_fraction_at(&self, round: u32) -> f64 {
        self.mean_alive
            .get(round as usize - 1)
            .copied()
            .unwrap_or(0.0)
            / self.nodes as f64
    }
}

fn mean_ci(values: &[f64], t: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, t * (var / n).sqrt())
}

/// Per-round mean alive counts with 95% Student-t half-widths, plus
/// landmark means. Runs must share algorithm, p, node count and horizon.
pub fn aggregate_runs(runs: &[RunMetrics]) -> Result<Summary, SimError> {
    let first = runs
        .first()
        .ok_or_else(|| SimError::Aggregate("no runs".into()))?;
    if runs.len() < 2 {
        return Err(SimError::Aggregate("need at least 2 runs".into()));
    }
    for r in runs {
        if (r.algorithm, r.p, r.nodes, r.max_rounds)
            != (first.algorithm, first.p, first.nodes, first.max_rounds)
            || r.alive_per_round.len() != first.alive_per_round.len()
        {
            return Err(SimError::Aggregate(format!(
                "run {} ({}) does not match {} ",
                r.seed,
                r.label(),
                first.label()
            )));
        }
    }
    let t = t_multiplier(runs.len() - 1);
    let rounds = first.alive_per_round.len();
    let mut mean_alive = Vec::with_capacity(rounds);
    let mut ci_half = Vec::with_capacity(rounds);
    let mut column = vec![0.0; runs.len()];
    for i in 0..rounds {
        for (slot, r) in column.iter_mut().zip(runs) {
            *slot = r.alive_per_round[i] as f64;
        }
        let (m, h) = mean_ci(&column, t);
        mean_alive.push(m);
        ci_half.push(h);
    }
    let landmark = |get: fn(&RunMetrics) -> Option<u32>| {
        let values: Vec<f64> = runs
            .iter()
            .map(|r| get(r).unwrap_or(r.max_rounds) as f64)
            .collect();
        let (mean, ci_half) = mean_ci(&values, t);
        Landmark {
            mean,
            ci_half,
            censored: runs.iter().filter(|r| get(r).is_none()).count(),
        }
    };
    Ok(Summary {
        label: first.label(),
        algorithm: first.algorithm,
        p: first.p,
        runs: runs.len(),
        nodes: first.nodes,
        max_rounds: first.max_rounds,
        mean_alive,
        ci_half,
        fnd: landmark(|r| r.first_death),
        hnd: landmark(|r| r.half_death),
        lnd: landmark(|r| r.last_death),
    })
}
