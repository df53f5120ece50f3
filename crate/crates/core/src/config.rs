//! Experiment configuration and its flat `key = value` text format.
//!
//! Keys follow the simulation parameter table (`n`, `m`, `lambda`, `bs`,
//! `eps_fs`, `eps_mp`, `e_el`, `e_da`, `r_c`, `mu`, `initial_energy`,
//! `data_payload`, `header`, `trailer`) plus protocol tunables. Energy
//! values may carry units (`50 nJ/bit`, `0.0013 pJ/bit/m^4`, `1 J`) and are
//! converted to joules on load; sizes accept `Byte`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::RadioParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("field `{field}`: expected {expected}, got {got}")]
    Field {
        field: &'static str,
        expected: String,
        got: String,
    },
    #[error("node density violated: n = {n} but lambda * m^2 = {lambda} * {m}^2 = {product}")]
    Density {
        n: usize,
        lambda: f64,
        m: f64,
        product: f64,
    },
    #[error("unknown scenario `{0}` (expected 1 or 2)")]
    UnknownScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cgtc,
    Leach,
    Cgc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Cgtc, Algorithm::Leach, Algorithm::Cgc];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cgtc => "cgtc",
            Algorithm::Leach => "leach",
            Algorithm::Cgc => "cgc",
        }
    }

    /// Baselines are parameterised by the head election probability.
    pub fn uses_probability(self) -> bool {
        !matches!(self, Algorithm::Cgtc)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cgtc" => Ok(Algorithm::Cgtc),
            "leach" => Ok(Algorithm::Leach),
            "cgc" => Ok(Algorithm::Cgc),
            other => Err(format!(
                "unknown algorithm `{other}` (expected cgtc, leach or cgc)"
            )),
        }
    }
}

/// Head election probability plus the baseline it drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub ch_probability: f64,
    pub algorithm: Algorithm,
}

impl BaselineConfig {
    pub fn new(algorithm: Algorithm, ch_probability: f64) -> Result<Self, ConfigError> {
        if !(ch_probability > 0.0 && ch_probability < 1.0) {
            return Err(ConfigError::Field {
                field: "p",
                expected: "a probability in (0, 1)".into(),
                got: ch_probability.to_string(),
            });
        }
        Ok(Self {
            ch_probability,
            algorithm,
        })
    }

    /// Rotation epoch length ⌈1/p⌉.
    pub fn rotation_rounds(&self) -> u32 {
        // guard against 1/p landing a hair above an integer
        (1.0 / self.ch_probability - 1e-9).ceil() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub m: f64,
    pub lambda: f64,
    pub bs: (f64, f64),
    pub radio: RadioParams,
    pub r_c: f64,
    pub mu: f64,
    pub initial_energy: f64,
    pub data_payload_bytes: u32,
    pub header_bytes: u32,
    pub trailer_bytes: u32,
    pub control_packet_bytes: u32,
    pub schedule_packet_bytes: u32,
    pub epochs_per_round: u32,
    pub max_rounds: u32,
    pub runs: u32,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Baseline head election probabilities; each value is a separate series.
    pub p: Vec<f64>,
    /// Scale of the vicinity energy credit.
    pub gamma: f64,
    pub cohead_weight_degree: f64,
    pub cohead_weight_distance: f64,
    /// Vicinity boundary; `None` means the crossover distance d_0.
    pub vicinity_radius_m: Option<f64>,
    /// Provisional member distance in the recruitment game, as a fraction of R_c.
    pub provisional_member_fraction: f64,
    /// Upper clamp of the provisional next-hop distance, as a multiple of R_c.
    pub provisional_hop_factor: f64,
    pub log_events: bool,
}

impl SimConfig {
    /// Scenario 1: 100 nodes on a 100 m square, BS at (150, 50).
    pub fn scenario1() -> Self {
        Self {
            n: 100,
            m: 100.0,
            lambda: 0.01,
            bs: (150.0, 50.0),
            radio: RadioParams::table_defaults(),
            r_c: 20.0,
            mu: 0.5,
            initial_energy: 1.0,
            data_payload_bytes: 100,
            header_bytes: 2,
            trailer_bytes: 1,
            control_packet_bytes: 10,
            schedule_packet_bytes: 25,
            epochs_per_round: 5,
            max_rounds: 6000,
            runs: 20,
            seed: 1,
            algorithms: Algorithm::ALL.to_vec(),
            p: vec![0.05, 0.075, 0.1],
            gamma: 1e-3,
            cohead_weight_degree: 0.5,
            cohead_weight_distance: 0.5,
            vicinity_radius_m: None,
            provisional_member_fraction: 0.5,
            provisional_hop_factor: 2.0,
            log_events: false,
        }
    }

    /// Scenario 2: 200 nodes on a 200 m square, BS at (250, 100).
    pub fn scenario2() -> Self {
        Self {
            n: 200,
            m: 200.0,
            lambda: 0.005,
            bs: (250.0, 100.0),
            ..Self::scenario1()
        }
    }

    pub fn scenario(name: &str) -> Result<Self, ConfigError> {
        match name.trim() {
            "1" | "scenario1" => Ok(Self::scenario1()),
            "2" | "scenario2" => Ok(Self::scenario2()),
            other => Err(ConfigError::UnknownScenario(other.to_string())),
        }
    }

    pub fn data_bits(&self) -> f64 {
        8.0 * (self.data_payload_bytes + self.header_bytes + self.trailer_bytes) as f64
    }

    pub fn control_bits(&self) -> f64 {
        8.0 * self.control_packet_bytes as f64
    }

    pub fn schedule_bits(&self) -> f64 {
        8.0 * self.schedule_packet_bytes as f64
    }

    pub fn vicinity_radius(&self) -> f64 {
        self.vicinity_radius_m.unwrap_or_else(|| self.radio.d0())
    }

    pub fn baselines(&self, algorithm: Algorithm) -> Result<Vec<BaselineConfig>, ConfigError> {
        self.p
            .iter()
            .map(|&p| BaselineConfig::new(algorithm, p))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Field {
                    field,
                    expected: "a finite value > 0".into(),
                    got: v.to_string(),
                })
            }
        }
        positive("m", self.m)?;
        positive("lambda", self.lambda)?;
        positive("r_c", self.r_c)?;
        positive("initial_energy", self.initial_energy)?;
        positive("e_el", self.radio.e_el())?;
        positive("eps_fs", self.radio.eps_fs())?;
        positive("eps_mp", self.radio.eps_mp())?;
        positive("e_da", self.radio.e_da())?;
        if self.n == 0 {
            return Err(ConfigError::Field {
                field: "n",
                expected: "a positive node count".into(),
                got: "0".into(),
            });
        }
        let product = self.lambda * self.m * self.m;
        if (product - self.n as f64).abs() > 1e-6 * (self.n as f64) {
            return Err(ConfigError::Density {
                n: self.n,
                lambda: self.lambda,
                m: self.m,
                product,
            });
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(ConfigError::Field {
                field: "mu",
                expected: "a value in (0, 1]".into(),
                got: self.mu.to_string(),
            });
        }
        if self.r_c > self.radio.d0() {
            return Err(ConfigError::Field {
                field: "r_c",
                expected: format!("at most the crossover distance {:.3} m", self.radio.d0()),
                got: self.r_c.to_string(),
            });
        }
        for (field, v) in [
            ("data_payload", self.data_payload_bytes),
            ("control_packet", self.control_packet_bytes),
            ("schedule_packet", self.schedule_packet_bytes),
            ("epochs_per_round", self.epochs_per_round),
            ("max_rounds", self.max_rounds),
            ("runs", self.runs),
        ] {
            if v == 0 {
                return Err(ConfigError::Field {
                    field,
                    expected: "a positive integer".into(),
                    got: "0".into(),
                });
            }
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::Field {
                field: "algorithms",
                expected: "at least one of cgtc, leach, cgc".into(),
                got: "none".into(),
            });
        }
        if self.algorithms.iter().any(|a| a.uses_probability()) && self.p.is_empty() {
            return Err(ConfigError::Field {
                field: "p",
                expected: "at least one probability".into(),
                got: "none".into(),
            });
        }
        for &p in &self.p {
            BaselineConfig::new(Algorithm::Leach, p)?;
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(ConfigError::Field {
                field: "gamma",
                expected: "a value >= 0".into(),
                got: self.gamma.to_string(),
            });
        }
        if !(self.cohead_weight_degree >= 0.0 && self.cohead_weight_distance >= 0.0) {
            return Err(ConfigError::Field {
                field: "cohead_weight_degree",
                expected: "non-negative weights".into(),
                got: format!(
                    "{}, {}",
                    self.cohead_weight_degree, self.cohead_weight_distance
                ),
            });
        }
        if let Some(r) = self.vicinity_radius_m {
            positive("vicinity_radius_m", r)?;
        }
        positive(
            "provisional_member_fraction",
            self.provisional_member_fraction,
        )?;
        if self.provisional_hop_factor < 1.0 / self.r_c {
            return Err(ConfigError::Field {
                field: "provisional_hop_factor",
                expected: "a clamp of at least 1 m".into(),
                got: self.provisional_hop_factor.to_string(),
            });
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::scenario1();
        let mut saw_lambda = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let syntax = |message: String| ConfigError::Syntax { line, message };
            match key {
                "n" => cfg.n = parse_int(value).map_err(syntax)?,
                "m" => cfg.m = quantity(value, Unit::Length).map_err(syntax)?,
                "lambda" => {
                    cfg.lambda = quantity(value, Unit::Plain).map_err(syntax)?;
                    saw_lambda = true;
                }
                "bs" => {
                    let (x, y) = value
                        .trim_matches(|c| c == '(' || c == ')')
                        .split_once(',')
                        .ok_or_else(|| syntax(format!("expected `x, y`, got `{value}`")))?;
                    cfg.bs = (
                        quantity(x, Unit::Length).map_err(syntax)?,
                        quantity(y, Unit::Length).map_err(syntax)?,
                    );
                }
                "e_el" | "eps_fs" | "eps_mp" | "e_da" => {
                    let v = quantity(value, Unit::Energy).map_err(syntax)?;
                    let r = cfg.radio;
                    let (mut a, mut b, mut c, mut d) = (r.e_el(), r.eps_fs(), r.eps_mp(), r.e_da());
                    match key {
                        "e_el" => a = v,
                        "eps_fs" => b = v,
                        "eps_mp" => c = v,
                        _ => d = v,
                    }
                    cfg.radio = RadioParams::new(a, b, c, d).map_err(|e| syntax(e.to_string()))?;
                }
                "r_c" => cfg.r_c = quantity(value, Unit::Length).map_err(syntax)?,
                "mu" => cfg.mu = quantity(value, Unit::Plain).map_err(syntax)?,
                "initial_energy" => {
                    cfg.initial_energy = quantity(value, Unit::Energy).map_err(syntax)?
                }
                "data_payload" => cfg.data_payload_bytes = bytes(value).map_err(syntax)?,
                "header" => cfg.header_bytes = bytes(value).map_err(syntax)?,
                "trailer" => cfg.trailer_bytes = bytes(value).map_err(syntax)?,
                "control_packet" => cfg.control_packet_bytes = bytes(value).map_err(syntax)?,
                "schedule_packet" => cfg.schedule_packet_bytes = bytes(value).map_err(syntax)?,
                "epochs_per_round" => cfg.epochs_per_round = parse_int(value).map_err(syntax)?,
                "max_rounds" => cfg.max_rounds = parse_int(value).map_err(syntax)?,
                "runs" => cfg.runs = parse_int(value).map_err(syntax)?,
                "seed" => cfg.seed = parse_int(value).map_err(syntax)?,
                "algorithms" => {
                    cfg.algorithms = value
                        .split(',')
                        .map(|s| s.parse::<Algorithm>())
                        .collect::<Result<_, _>>()
                        .map_err(syntax)?;
                }
                "p" => {
                    cfg.p = value
                        .split(',')
                        .map(|s| quantity(s, Unit::Plain))
                        .collect::<Result<_, _>>()
                        .map_err(syntax)?;
                }
                "gamma" => cfg.gamma = quantity(value, Unit::Plain).map_err(syntax)?,
                "cohead_weight_degree" => {
                    cfg.cohead_weight_degree = quantity(value, Unit::Plain).map_err(syntax)?
                }
                "cohead_weight_distance" => {
                    cfg.cohead_weight_distance = quantity(value, Unit::Plain).map_err(syntax)?
                }
                "vicinity_radius_m" => {
                    cfg.vicinity_radius_m = match value {
                        "d0" | "auto" => None,
                        v => Some(quantity(v, Unit::Length).map_err(syntax)?),
                    }
                }
                "provisional_member_fraction" => {
                    cfg.provisional_member_fraction =
                        quantity(value, Unit::Plain).map_err(syntax)?
                }
                "provisional_hop_factor" => {
                    cfg.provisional_hop_factor = quantity(value, Unit::Plain).map_err(syntax)?
                }
                "log_events" => {
                    cfg.log_events = value
                        .parse()
                        .map_err(|_| syntax(format!("expected true/false, got `{value}`")))?
                }
                other => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: other.to_string(),
                    })
                }
            }
        }
        if !saw_lambda {
            cfg.lambda = cfg.n as f64 / (cfg.m * cfg.m);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let r = &self.radio;
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "bs = {}, {}", self.bs.0, self.bs.1);
        let _ = writeln!(s, "eps_fs = {} J/bit/m^2", r.eps_fs());
        let _ = writeln!(s, "eps_mp = {} J/bit/m^4", r.eps_mp());
        let _ = writeln!(s, "e_el = {} J/bit", r.e_el());
        let _ = writeln!(s, "e_da = {} J/bit/signal", r.e_da());
        let _ = writeln!(s, "r_c = {}", self.r_c);
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "initial_energy = {} J", self.initial_energy);
        let _ = writeln!(s, "data_payload = {} Byte", self.data_payload_bytes);
        let _ = writeln!(s, "header = {} Byte", self.header_bytes);
        let _ = writeln!(s, "trailer = {} Byte", self.trailer_bytes);
        let _ = writeln!(s, "control_packet = {} Byte", self.control_packet_bytes);
        let _ = writeln!(s, "schedule_packet = {} Byte", self.schedule_packet_bytes);
        let _ = writeln!(s, "epochs_per_round = {}", self.epochs_per_round);
        let _ = writeln!(s, "max_rounds = {}", self.max_rounds);
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "seed = {}", self.seed);
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let _ = writeln!(s, "algorithms = {}", algs.join(", "));
        let ps: Vec<String> = self.p.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "p = {}", ps.join(", "));
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "cohead_weight_degree = {}", self.cohead_weight_degree);
        let _ = writeln!(
            s,
            "cohead_weight_distance = {}",
            self.cohead_weight_distance
        );
        match self.vicinity_radius_m {
            Some(v) => writeln!(s, "vicinity_radius_m = {v}"),
            None => writeln!(s, "vicinity_radius_m = d0"),
        }
        .ok();
        let _ = writeln!(
            s,
            "provisional_member_fraction = {}",
            self.provisional_member_fraction
        );
        let _ = writeln!(
            s,
            "provisional_hop_factor = {}",
            self.provisional_hop_factor
        );
        let _ = writeln!(s, "log_events = {}", self.log_events);
        s
    }
}

#[derive(Clone, Copy)]
enum Unit {
    Plain,
    Length,
    Energy,
}

fn parse_int<T: FromStr>(value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("expected an integer, got `{value}`"))
}

fn bytes(value: &str) -> Result<u32, String> {
    let mut parts = value.split_whitespace();
    let number = parts.next().ok_or("missing value")?;
    match parts.next() {
        None | Some("B" | "Byte" | "Bytes" | "byte" | "bytes") => parse_int(number),
        Some(unit) => Err(format!("unsupported size unit `{unit}`")),
    }
}

fn quantity(value: &str, unit: Unit) -> Result<f64, String> {
    let mut parts = value.split_whitespace();
    let number: f64 = parts
        .next()
        .ok_or("missing value")?
        .parse()
        .map_err(|_| format!("expected a number, got `{value}`"))?;
    let suffix = parts.next();
    if parts.next().is_some() {
        return Err(format!("unexpected trailing text in `{value}`"));
    }
    let scale = match (unit, suffix) {
        (_, None) => 1.0,
        (Unit::Length, Some("m")) => 1.0,
        (Unit::Energy, Some(u)) => {
            let head = u.split('/').next().unwrap_or(u);
            match head {
                "J" => 1.0,
                "mJ" => 1e-3,
                "uJ" | "µJ" => 1e-6,
                "nJ" => 1e-9,
                "pJ" => 1e-12,
                _ => return Err(format!("unsupported energy unit `{u}`")),
            }
        }
        (_, Some(u)) => return Err(format!("unexpected unit `{u}`")),
    };
    Ok(number * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "
        # scenario 1
        n = 100
        m = 100
        lambda = 0.01
        bs = (150, 50)
        eps_fs = 10 pJ/bit/m^2
        eps_mp = 0.0013 pJ/bit/m^4
        e_el = 50 nJ/bit
        e_da = 5 nJ/bit/signal
        r_c = 20 m
        mu = 0.5
        initial_energy = 1 J
        data_payload = 100 Byte
        header = 2 Byte
        trailer = 1 Byte
    ";

    #[test]
    fn parses_table_units() {
        let cfg = SimConfig::parse(TABLE).unwrap();
        assert_eq!(cfg.n, 100);
        assert_eq!(cfg.bs, (150.0, 50.0));
        assert!((cfg.radio.eps_fs() - 10e-12).abs() < 1e-24);
        assert!((cfg.radio.eps_mp() - 0.0013e-12).abs() < 1e-28);
        assert!((cfg.radio.e_el() - 50e-9).abs() < 1e-21);
        assert_eq!(cfg.data_bits(), 824.0);
        assert_eq!(cfg.control_bits(), 80.0);
        assert_eq!(cfg.epochs_per_round, 5);
    }

    #[test]
    fn presets_match_table() {
        let s1 = SimConfig::scenario1();
        assert_eq!(
            (s1.n, s1.m, s1.lambda, s1.bs),
            (100, 100.0, 0.01, (150.0, 50.0))
        );
        assert_eq!((s1.r_c, s1.mu, s1.initial_energy), (20.0, 0.5, 1.0));
        let s2 = SimConfig::scenario2();
        assert_eq!(
            (s2.n, s2.m, s2.lambda, s2.bs),
            (200, 200.0, 0.005, (250.0, 100.0))
        );
        s1.validate().unwrap();
        s2.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SimConfig::scenario2();
        cfg.vicinity_radius_m = Some(60.0);
        cfg.p = vec![0.05];
        assert_eq!(SimConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn density_violation_is_named() {
        let err = SimConfig::parse("n = 120\nm = 100\nlambda = 0.01").unwrap_err();
        assert!(matches!(err, ConfigError::Density { n: 120, .. }));
        assert!(err.to_string().contains("lambda * m^2"));
    }

    #[test]
    fn field_errors_name_the_field() {
        let err = SimConfig::parse("mu = 1.5").unwrap_err();
        assert!(err.to_string().contains("`mu`"), "{err}");
        let err = SimConfig::parse("p = 0.05, 1.2").unwrap_err();
        assert!(err.to_string().contains("`p`"), "{err}");
        assert!(matches!(
            SimConfig::parse("bogus = 1"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            SimConfig::parse("e_el = 5 furlongs"),
            Err(ConfigError::Syntax { .. })
        ));
    }

    #[test]
    fn rotation_length() {
        assert_eq!(
            BaselineConfig::new(Algorithm::Leach, 0.05)
                .unwrap()
                .rotation_rounds(),
            20
        );
        assert_eq!(
            BaselineConfig::new(Algorithm::Leach, 0.075)
                .unwrap()
                .rotation_rounds(),
            14
        );
        assert!(BaselineConfig::new(Algorithm::Cgc, 0.0).is_err());
    }
}
