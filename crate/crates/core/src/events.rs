//! Line-delimited JSON event log for replaying formation decisions.

use serde::{Deserialize, Serialize};

use crate::network::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    FarCohead,
    VicinityRelay,
    CgcCohead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Election {
        round: u32,
        nominees: Vec<NodeId>,
    },
    /// One cooperation check. `costs` is indexed by bitmask over `players`.
    Admission {
        round: u32,
        game: GameKind,
        initiator: NodeId,
        candidate: NodeId,
        players: Vec<NodeId>,
        costs: Vec<f64>,
        allocation: Vec<f64>,
        base_cost: f64,
        admitted: bool,
    },
    Death {
        round: u32,
        node: NodeId,
    },
}

impl Event {
    pub fn round(&self) -> u32 {
        match self {
            Event::Election { round, .. }
            | Event::Admission { round, .. }
            | Event::Death { round, .. } => *round,
        }
    }
}

pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<Event>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Optional event collection; disabled sinks drop everything.
#[derive(Debug, Default)]
pub struct EventLog {
    events: Option<Vec<Event>>,
}

impl EventLog {
    pub fn new(enabled: bool) -> Self {
        Self {
            events: enabled.then(Vec::new),
        }
    }

    pub fn enabled(&self) -> bool {
        self.events.is_some()
    }

    pub fn push(&mut self, event: impl FnOnce() -> Event) {
        if let Some(events) = &mut self.events {
            events.push(event());
        }
    }

    pub fn take(&mut self) -> Vec<Event> {
        self.events.as_mut().map(std::mem::take).unwrap_or_default()
    }
}
