//! Plain-text run configuration: `key = value` lines with `#` comments.
//!
//! One format drives all four commands. Topologies come either inline
//! (`gamma_i`/`main_i` per client, 1-based indices) or from the seeded
//! generator (`nu` = per-client data block count). Defaults: q = 2^31 - 1
//! (2^61 - 1 for training, which needs summation headroom), seed = 0.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::field::{is_prime, MERSENNE31, MERSENNE61};
use crate::topology::{PrivacyParams, Topology, TopologyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    MalformedLine { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for '{key}': {message}")]
    BadValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("missing required key '{key}'")]
    MissingKey { key: &'static str },
    #[error("line {line}: q = {q} is not prime")]
    NonPrimeModulus { line: usize, q: u64 },
    #[error("q = {q} must exceed n_bs = {n_bs}")]
    FieldTooSmall { q: u64, n_bs: usize },
    #[error("give either an inline topology (gamma_i/main_i) or 'nu', not both")]
    AmbiguousTopology,
    #[error("client {client} is missing '{key}'")]
    IncompleteInlineTopology { client: usize, key: &'static str },
    #[error("train needs either data_i lines or 'synthetic_samples'")]
    MissingTrainData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Sweep,
    Audit,
    Train,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::Audit => "audit",
            CommandKind::Train => "train",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Uniform,
    PointMass,
    Equal,
}

/// Fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub q: u64,
    pub d: usize,
    pub seed: u64,
    pub out: Option<String>,
    pub n_clients: usize,
    pub n_bs: usize,
    pub z_bs: usize,
    pub z_ue: usize,
    /// Data block count per client; a proper range only for sweeps.
    pub nu: Option<(usize, usize)>,
    /// 0-based inline topology, when given.
    pub inline_topology: Option<(Vec<Vec<usize>>, Vec<usize>)>,
    pub budget: u64,
    pub prior: PriorKind,
    pub compare: bool,
    pub iters: usize,
    pub eta: f64,
    pub scale: u64,
    pub clip: f64,
    pub w0: Option<Vec<f64>>,
    pub datasets: Option<Vec<(Vec<Vec<f64>>, Vec<f64>)>>,
    pub synthetic_samples: Option<usize>,
}

impl RunConfig {
    /// Builds the topology this run operates on. Generated topologies take
    /// their connectivity degree from `nu` and randomness from `seed`.
    pub fn build_topology(&self) -> Result<Topology, TopologyError> {
        let privacy = PrivacyParams {
            z_ue: self.z_ue,
            z_bs: self.z_bs,
        };
        match &self.inline_topology {
            Some((gamma, main)) => {
                Topology::new(self.n_clients, self.n_bs, gamma.clone(), main.clone(), privacy)
            }
            None => {
                let degree = self.nu.expect("validated: nu present without inline topology").0;
                Ok(
                    Topology::random(self.n_clients, self.n_bs, self.z_bs, degree, self.seed)?
                        .with_z_ue(self.z_ue),
                )
            }
        }
    }
}

struct RawEntry {
    line: usize,
    value: String,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::MalformedLine { line });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::MalformedLine { line });
        }
        if !is_known_key(&key) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if entries.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.insert(key, RawEntry { line, value });
    }

    let bad = |entry: &RawEntry, key: &str, message: String| ConfigError::BadValue {
        line: entry.line,
        key: key.to_string(),
        message,
    };
    let parse_u64 = |entries: &BTreeMap<String, RawEntry>, key: &str| -> Result<Option<(u64, usize)>, ConfigError> {
        match entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<u64>()
                .map(|v| Some((v, e.line)))
                .map_err(|err| bad(e, key, err.to_string())),
        }
    };
    let parse_usize = |entries: &BTreeMap<String, RawEntry>, key: &str| -> Result<Option<usize>, ConfigError> {
        Ok(parse_u64(entries, key)?.map(|(v, _)| v as usize))
    };
    let parse_f64 = |entries: &BTreeMap<String, RawEntry>, key: &str| -> Result<Option<f64>, ConfigError> {
        match entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|err| bad(e, key, err.to_string())),
        }
    };

    let command = match entries.get("command") {
        None => return Err(ConfigError::MissingKey { key: "command" }),
        Some(e) => match e.value.as_str() {
            "simulate" => CommandKind::Simulate,
            "sweep" => CommandKind::Sweep,
            "audit" => CommandKind::Audit,
            "train" => CommandKind::Train,
            other => {
                return Err(bad(
                    e,
                    "command",
                    format!("expected simulate|sweep|audit|train, got '{other}'"),
                ))
            }
        },
    };

    let n_clients = parse_usize(&entries, "n_clients")?
        .ok_or(ConfigError::MissingKey { key: "n_clients" })?;
    let n_bs =
        parse_usize(&entries, "n_bs")?.ok_or(ConfigError::MissingKey { key: "n_bs" })?;
    let z_bs =
        parse_usize(&entries, "z_bs")?.ok_or(ConfigError::MissingKey { key: "z_bs" })?;
    let z_ue = parse_usize(&entries, "z_ue")?.unwrap_or(0);
    let d = parse_usize(&entries, "d")?.ok_or(ConfigError::MissingKey { key: "d" })?;
    let seed = parse_u64(&entries, "seed")?.map_or(0, |(v, _)| v);
    let budget = parse_u64(&entries, "budget")?.map_or(crate::privacy::DEFAULT_STATE_BUDGET, |(v, _)| v);
    let out = entries.get("out").map(|e| e.value.clone());

    let default_q = match command {
        CommandKind::Train => MERSENNE61,
        _ => MERSENNE31,
    };
    let (q, q_line) = parse_u64(&entries, "q")?.unwrap_or((default_q, 0));
    if !is_prime(q) {
        return Err(ConfigError::NonPrimeModulus { line: q_line, q });
    }

    let nu = match entries.get("nu") {
        None => None,
        Some(e) => {
            let parse_end = |s: &str| -> Result<usize, ConfigError> {
                s.trim()
                    .parse::<usize>()
                    .map_err(|err| bad(e, "nu", err.to_string()))
            };
            let range = match e.value.split_once("..") {
                Some((lo, hi)) => (parse_end(lo)?, parse_end(hi)?),
                None => {
                    let v = parse_end(&e.value)?;
                    (v, v)
                }
            };
            if range.0 == 0 || range.0 > range.1 {
                return Err(bad(e, "nu", format!("empty range {}..{}", range.0, range.1)));
            }
            if command != CommandKind::Sweep && range.0 != range.1 {
                return Err(bad(e, "nu", "a range is only meaningful for sweeps".to_string()));
            }
            Some(range)
        }
    };

    let prior = match entries.get("prior") {
        None => PriorKind::Uniform,
        Some(e) => match e.value.as_str() {
            "uniform" => PriorKind::Uniform,
            "point_mass" => PriorKind::PointMass,
            "equal" => PriorKind::Equal,
            other => {
                return Err(bad(
                    e,
                    "prior",
                    format!("expected uniform|point_mass|equal, got '{other}'"),
                ))
            }
        },
    };

    let compare = match entries.get("compare") {
        None => false,
        Some(e) => match e.value.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(bad(e, "compare", format!("expected true|false, got '{other}'"))),
        },
    };

    // inline topology: gamma_i and main_i for every client, all 1-based
    let has_inline = entries.keys().any(|k| k.starts_with("gamma_"));
    let inline_topology = if has_inline {
        if nu.is_some() {
            return Err(ConfigError::AmbiguousTopology);
        }
        let mut gamma = Vec::with_capacity(n_clients);
        let mut main = Vec::with_capacity(n_clients);
        for client in 1..=n_clients {
            let gkey = format!("gamma_{client}");
            let entry = entries.get(&gkey).ok_or(ConfigError::IncompleteInlineTopology {
                client,
                key: "gamma_<client>",
            })?;
            let mut stations = Vec::new();
            for part in entry.value.split(',') {
                let station: usize = part
                    .trim()
                    .parse()
                    .map_err(|err: std::num::ParseIntError| bad(entry, &gkey, err.to_string()))?;
                if station == 0 {
                    return Err(bad(entry, &gkey, "station indices are 1-based".to_string()));
                }
                stations.push(station - 1);
            }
            gamma.push(stations);

            let mkey = format!("main_{client}");
            let entry = entries.get(&mkey).ok_or(ConfigError::IncompleteInlineTopology {
                client,
                key: "main_<client>",
            })?;
            let station: usize = entry
                .value
                .parse()
                .map_err(|err: std::num::ParseIntError| bad(entry, &mkey, err.to_string()))?;
            if station == 0 {
                return Err(bad(entry, &mkey, "station indices are 1-based".to_string()));
            }
            main.push(station - 1);
        }
        // reject gamma_/main_ keys outside 1..=n_clients
        for key in entries.keys() {
            if let Some(rest) = key.strip_prefix("gamma_").or_else(|| key.strip_prefix("main_")) {
                let idx: usize = rest.parse().map_err(|_| ConfigError::UnknownKey {
                    line: entries[key].line,
                    key: key.clone(),
                })?;
                if idx == 0 || idx > n_clients {
                    return Err(ConfigError::BadValue {
                        line: entries[key].line,
                        key: key.clone(),
                        message: format!("client index out of range 1..={n_clients}"),
                    });
                }
            }
        }
        Some((gamma, main))
    } else {
        if entries.keys().any(|k| k.starts_with("main_")) {
            return Err(ConfigError::IncompleteInlineTopology {
                client: 1,
                key: "gamma_<client>",
            });
        }
        None
    };

    if inline_topology.is_none() && nu.is_none() {
        return Err(ConfigError::MissingKey { key: "nu" });
    }
    if command != CommandKind::Sweep && q <= n_bs as u64 {
        return Err(ConfigError::FieldTooSmall { q, n_bs });
    }

    // training inputs
    let iters = parse_usize(&entries, "iters")?;
    let eta = parse_f64(&entries, "eta")?;
    let scale = parse_u64(&entries, "scale")?.map_or(1 << 16, |(v, _)| v);
    let clip = parse_f64(&entries, "clip")?.unwrap_or((1 << 20) as f64);
    let w0 = match entries.get("w0") {
        None => None,
        Some(e) => {
            let mut w = Vec::new();
            for part in e.value.split(',') {
                w.push(
                    part.trim()
                        .parse::<f64>()
                        .map_err(|err| bad(e, "w0", err.to_string()))?,
                );
            }
            if w.len() != d {
                return Err(bad(e, "w0", format!("expected {d} entries, got {}", w.len())));
            }
            Some(w)
        }
    };
    let synthetic_samples = parse_usize(&entries, "synthetic_samples")?;
    let has_data = entries.keys().any(|k| k.starts_with("data_"));
    let datasets = if has_data {
        let mut all = Vec::with_capacity(n_clients);
        for client in 1..=n_clients {
            let key = format!("data_{client}");
            let entry = entries.get(&key).ok_or(ConfigError::IncompleteInlineTopology {
                client,
                key: "data_<client>",
            })?;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for sample in entry.value.split(';') {
                let Some((features, label)) = sample.split_once(':') else {
                    return Err(bad(entry, &key, "expected 'x1,..,xd : y'".to_string()));
                };
                let mut row = Vec::new();
                for part in features.trim().split(',') {
                    row.push(
                        part.trim()
                            .parse::<f64>()
                            .map_err(|err| bad(entry, &key, err.to_string()))?,
                    );
                }
                if row.len() != d {
                    return Err(bad(
                        entry,
                        &key,
                        format!("sample has {} features, expected {d}", row.len()),
                    ));
                }
                xs.push(row);
                ys.push(
                    label
                        .trim()
                        .parse::<f64>()
                        .map_err(|err| bad(entry, &key, err.to_string()))?,
                );
            }
            all.push((xs, ys));
        }
        Some(all)
    } else {
        None
    };

    if command == CommandKind::Train {
        if iters.is_none() {
            return Err(ConfigError::MissingKey { key: "iters" });
        }
        if eta.is_none() {
            return Err(ConfigError::MissingKey { key: "eta" });
        }
        if datasets.is_none() && synthetic_samples.is_none() {
            return Err(ConfigError::MissingTrainData);
        }
    }
    if command == CommandKind::Sweep && nu.is_none() {
        return Err(ConfigError::MissingKey { key: "nu" });
    }

    Ok(RunConfig {
        command,
        q,
        d,
        seed,
        out,
        n_clients,
        n_bs,
        z_bs,
        z_ue,
        nu,
        inline_topology,
        budget,
        prior,
        compare,
        iters: iters.unwrap_or(0),
        eta: eta.unwrap_or(0.0),
        scale,
        clip,
        w0,
        datasets,
        synthetic_samples,
    })
}

fn is_known_key(key: &str) -> bool {
    const FIXED: &[&str] = &[
        "command",
        "q",
        "d",
        "seed",
        "out",
        "n_clients",
        "n_bs",
        "z_bs",
        "z_ue",
        "nu",
        "budget",
        "prior",
        "compare",
        "iters",
        "eta",
        "scale",
        "clip",
        "w0",
        "synthetic_samples",
    ];
    if FIXED.contains(&key) {
        return true;
    }
    for prefix in ["gamma_", "main_", "data_"] {
        if let Some(rest) = key.strip_prefix(prefix) {
            return !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit());
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_simulate_config_gets_defaults() {
        let cfg = parse_config(
            "command = simulate\nn_clients = 2\nn_bs = 2\nz_bs = 1\nd = 4\nnu = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.command, CommandKind::Simulate);
        assert_eq!(cfg.q, MERSENNE31);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.z_ue, 0);
        assert_eq!(cfg.nu, Some((1, 1)));
        assert_eq!(cfg.prior, PriorKind::Uniform);
        let t = cfg.build_topology().unwrap();
        assert_eq!(t.n_clients(), 2);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse_config(
            "# a run\ncommand = simulate  # trailing\n\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\nnu = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.n_clients, 1);
    }

    #[test]
    fn non_prime_modulus_is_rejected_with_line() {
        let err = parse_config(
            "command = simulate\nq = 4\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\nnu = 1\n",
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::NonPrimeModulus { line: 2, q: 4 });
    }

    #[test]
    fn unknown_duplicate_and_malformed_keys() {
        assert_eq!(
            parse_config("command = simulate\nbogus = 1\n").unwrap_err(),
            ConfigError::UnknownKey { line: 2, key: "bogus".to_string() }
        );
        assert_eq!(
            parse_config("command = simulate\ncommand = sweep\n").unwrap_err(),
            ConfigError::DuplicateKey { line: 2, key: "command".to_string() }
        );
        assert_eq!(
            parse_config("command simulate\n").unwrap_err(),
            ConfigError::MalformedLine { line: 1 }
        );
        assert!(matches!(
            parse_config("command = simulate\nn_clients = few\n").unwrap_err(),
            ConfigError::BadValue { line: 2, .. }
        ));
    }

    #[test]
    fn missing_required_keys_are_named() {
        assert_eq!(
            parse_config("command = simulate\n").unwrap_err(),
            ConfigError::MissingKey { key: "n_clients" }
        );
        assert_eq!(
            parse_config("command = train\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\nnu = 1\niters = 1\n")
                .unwrap_err(),
            ConfigError::MissingKey { key: "eta" }
        );
    }

    #[test]
    fn sweep_config_mirroring_the_reference_figure() {
        let cfg = parse_config(
            "command = sweep\nn_clients = 10000\nn_bs = 100\nz_bs = 3\nd = 1000000\nnu = 1..25\n",
        )
        .unwrap();
        assert_eq!(cfg.command, CommandKind::Sweep);
        assert_eq!(cfg.nu, Some((1, 25)));
        assert_eq!(cfg.d, 1_000_000);
    }

    #[test]
    fn inline_topology_round_trips() {
        let cfg = parse_config(
            "command = simulate\nn_clients = 3\nn_bs = 3\nz_bs = 1\nz_ue = 1\nd = 2\nq = 13\n\
             gamma_1 = 1,2\nmain_1 = 1\ngamma_2 = 1,2\nmain_2 = 2\ngamma_3 = 2,3\nmain_3 = 3\n",
        )
        .unwrap();
        let t = cfg.build_topology().unwrap();
        assert_eq!(t.gamma(0), &[0, 1]);
        assert_eq!(t.gamma(2), &[1, 2]);
        assert_eq!(t.main_station(2), 2);
        assert_eq!(t.patterns().len(), 2);
    }

    #[test]
    fn inline_topology_validation() {
        let err = parse_config(
            "command = simulate\nn_clients = 2\nn_bs = 2\nz_bs = 1\nd = 1\n\
             gamma_1 = 1,2\nmain_1 = 1\n",
        )
        .unwrap_err();
        assert_eq!(
            err,
            ConfigError::IncompleteInlineTopology { client: 2, key: "gamma_<client>" }
        );

        let err = parse_config(
            "command = simulate\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\nnu = 1\n\
             gamma_1 = 1,2\nmain_1 = 1\n",
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::AmbiguousTopology);

        let err = parse_config(
            "command = simulate\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\n\
             gamma_1 = 1,2\nmain_1 = 1\ngamma_2 = 1\nmain_2 = 1\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { .. }));
    }

    #[test]
    fn field_must_cover_the_stations() {
        let err = parse_config(
            "command = simulate\nq = 2\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\nnu = 1\n",
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::FieldTooSmall { q: 2, n_bs: 2 });
    }

    #[test]
    fn train_config_with_inline_data() {
        let cfg = parse_config(
            "command = train\nn_clients = 2\nn_bs = 2\nz_bs = 1\nd = 2\nnu = 1\n\
             iters = 5\neta = 0.1\nw0 = 0,0\ndata_1 = 1,0 : 1 ; 0,1 : 2\ndata_2 = 1,1 : 3\n",
        )
        .unwrap();
        assert_eq!(cfg.q, MERSENNE61);
        assert_eq!(cfg.scale, 65536);
        let datasets = cfg.datasets.unwrap();
        assert_eq!(datasets[0].0, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(datasets[0].1, vec![1.0, 2.0]);
        assert_eq!(datasets[1].0, vec![vec![1.0, 1.0]]);

        assert_eq!(
            parse_config("command = train\nn_clients = 1\nn_bs = 2\nz_bs = 1\nd = 1\nnu = 1\niters = 1\neta = 0.1\n")
                .unwrap_err(),
            ConfigError::MissingTrainData
        );
    }

    #[test]
    fn nu_range_rules() {
        assert!(matches!(
            parse_config("command = simulate\nn_clients = 1\nn_bs = 3\nz_bs = 1\nd = 1\nnu = 1..2\n")
                .unwrap_err(),
            ConfigError::BadValue { .. }
        ));
        assert!(matches!(
            parse_config("command = sweep\nn_clients = 1\nn_bs = 3\nz_bs = 1\nd = 1\nnu = 5..2\n")
                .unwrap_err(),
            ConfigError::BadValue { .. }
        ));
    }
}
