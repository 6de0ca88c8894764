//! One aggregation round of the two-phase scheme, executed as a
//! deterministic message-passing schedule with every transmitted symbol
//! recorded.
//!
//! Phase a: each client pads its gradient with a fresh one-time key, packs
//! the sum into a share polynomial, and sends one evaluation to every
//! connected base station. Stations sum the shares of clients with
//! identical connectivity sets and forward one aggregate per pattern to the
//! federator.
//!
//! Phase b: each client sends its key to its main station; stations chain
//! their cluster key sums through station index order, and the last station
//! hands the total key sum to the federator.
//!
//! The federator interpolates each pattern's summed polynomial, concatenates
//! the data blocks, adds the patterns up, and subtracts the key sum, leaving
//! exactly the sum of all gradients.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::field::{FieldConfig, FieldError, FieldVector};
use crate::sharing::{
    make_shares_with_masks, reconstruct_padded, EvaluationPointMap, SharingError, SharingParams,
};
use crate::topology::{ConnectivityPattern, Topology};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("field modulus {q} must exceed the station count {n_bs}")]
    FieldTooSmall { q: u64, n_bs: usize },
    #[error("gradient dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} gradient vectors, got {got}")]
    GradientCount { expected: usize, got: usize },
    #[error("client {client} gradient has length {got}, expected {expected}")]
    GradientLength {
        client: usize,
        expected: usize,
        got: usize,
    },
    #[error("log is missing {0}")]
    IncompleteLog(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorId {
    Client(usize),
    BaseStation(usize),
    Federator,
}

impl ActorId {
    fn render(&self) -> String {
        match self {
            ActorId::Client(i) => format!("ue{}", i + 1),
            ActorId::BaseStation(k) => format!("bs{}", k + 1),
            ActorId::Federator => "fed".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Share,
    KeyVector,
    PatternAggregate,
    KeyChainPartial,
    KeyAggregate,
}

impl MessageKind {
    fn render(&self) -> &'static str {
        match self {
            MessageKind::Share => "share",
            MessageKind::KeyVector => "key_vector",
            MessageKind::PatternAggregate => "pattern_aggregate",
            MessageKind::KeyChainPartial => "key_chain_partial",
            MessageKind::KeyAggregate => "key_aggregate",
        }
    }
}

/// Which of the three costed link classes a message travels on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    UeToBs,
    BsToBs,
    BsToFederator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub src: ActorId,
    pub dst: ActorId,
    pub kind: MessageKind,
    pub payload: FieldVector,
    /// Station set of the pattern an aggregate belongs to. Routing metadata,
    /// excluded from symbol counts.
    pub pattern_tag: Option<Vec<usize>>,
}

impl Message {
    pub fn link_class(&self) -> LinkClass {
        match (self.src, self.dst) {
            (ActorId::Client(_), ActorId::BaseStation(_)) => LinkClass::UeToBs,
            (ActorId::BaseStation(_), ActorId::BaseStation(_)) => LinkClass::BsToBs,
            (ActorId::BaseStation(_), ActorId::Federator) => LinkClass::BsToFederator,
            _ => unreachable!("no such link in this architecture"),
        }
    }
}

/// Symbol counts per link class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkTallies {
    pub ue_to_bs: u64,
    pub bs_to_bs: u64,
    pub bs_to_federator: u64,
}

impl LinkTallies {
    pub fn total(&self) -> u64 {
        self.ue_to_bs + self.bs_to_bs + self.bs_to_federator
    }
}

/// Ordered transcript of one round plus running per-link symbol tallies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MessageLog {
    messages: Vec<Message>,
    tallies: LinkTallies,
}

impl MessageLog {
    fn push(&mut self, msg: Message) {
        let len = msg.payload.len() as u64;
        match msg.link_class() {
            LinkClass::UeToBs => self.tallies.ue_to_bs += len,
            LinkClass::BsToBs => self.tallies.bs_to_bs += len,
            LinkClass::BsToFederator => self.tallies.bs_to_federator += len,
        }
        self.messages.push(msg);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn tallies(&self) -> LinkTallies {
        self.tallies
    }

    /// Re-derives the tallies from the raw messages.
    pub fn recompute_tallies(&self) -> LinkTallies {
        let mut t = LinkTallies::default();
        for msg in &self.messages {
            let len = msg.payload.len() as u64;
            match msg.link_class() {
                LinkClass::UeToBs => t.ue_to_bs += len,
                LinkClass::BsToBs => t.bs_to_bs += len,
                LinkClass::BsToFederator => t.bs_to_federator += len,
            }
        }
        t
    }

    /// Line-oriented export: `src dst kind length pattern_tag`, one message
    /// per line, `-` when there is no tag. Stations and clients are 1-based.
    pub fn write_records<W: Write>(&self, mut w: W) -> io::Result<()> {
        for msg in &self.messages {
            let tag = match &msg.pattern_tag {
                Some(stations) => {
                    let parts: Vec<String> =
                        stations.iter().map(|k| (k + 1).to_string()).collect();
                    format!("{{{}}}", parts.join(","))
                }
                None => "-".to_string(),
            };
            writeln!(
                w,
                "{} {} {} {} {}",
                msg.src.render(),
                msg.dst.render(),
                msg.kind.render(),
                msg.payload.len(),
                tag
            )?;
        }
        Ok(())
    }
}

/// Per-client randomness for one round: the one-time key and the z_bs mask
/// blocks of the share polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientDraws {
    pub key: FieldVector,
    pub masks: Vec<FieldVector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundDraws {
    pub clients: Vec<ClientDraws>,
}

/// Outcome of one round, as decoded by the federator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult {
    /// Sum of all gradients, length d.
    pub aggregate: FieldVector,
    /// Per pattern (station set, interpolated padded sum of g_i + r_i).
    pub padded_sums: Vec<(Vec<usize>, FieldVector)>,
    /// Sum of all one-time keys, length d.
    pub key_sum: FieldVector,
    pub log: MessageLog,
}

/// Precomputed schedule for repeatedly executing rounds on one topology.
#[derive(Debug, Clone)]
pub struct RoundPlan {
    topology: Topology,
    cfg: FieldConfig,
    d: usize,
    patterns: Vec<ConnectivityPattern>,
    client_params: Vec<SharingParams>,
    client_points: Vec<EvaluationPointMap>,
    pattern_params: Vec<SharingParams>,
}

impl RoundPlan {
    pub fn new(topology: &Topology, cfg: FieldConfig, d: usize) -> Result<Self, ProtocolError> {
        if d == 0 {
            return Err(ProtocolError::ZeroDimension);
        }
        if cfg.modulus() <= topology.n_stations() as u64 {
            return Err(ProtocolError::FieldTooSmall {
                q: cfg.modulus(),
                n_bs: topology.n_stations(),
            });
        }
        let z = topology.privacy().z_bs;
        let mut client_params = Vec::with_capacity(topology.n_clients());
        let mut client_points = Vec::with_capacity(topology.n_clients());
        for i in 0..topology.n_clients() {
            client_params.push(SharingParams::new(z, topology.nu(i), d)?);
            let points = topology
                .gamma(i)
                .iter()
                .map(|&k| (k, topology.points().alpha(k).expect("station has a point")));
            client_points.push(EvaluationPointMap::new(points)?);
        }
        let patterns = topology.patterns();
        let pattern_params = patterns
            .iter()
            .map(|p| SharingParams::new(z, p.pattern.len() - z, d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            topology: topology.clone(),
            cfg,
            d,
            patterns,
            client_params,
            client_points,
            pattern_params,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn config(&self) -> FieldConfig {
        self.cfg
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn patterns(&self) -> &[ConnectivityPattern] {
        &self.patterns
    }

    pub fn client_params(&self, client: usize) -> &SharingParams {
        &self.client_params[client]
    }

    /// Samples keys and masks for every client from one seed. Draw order is
    /// fixed (clients in index order, key before masks), so a seed pins the
    /// entire round.
    pub fn sample_draws(&self, seed: u64) -> RoundDraws {
        self.sample_draws_inner(seed, true)
    }

    /// Negative-control draws: uniform keys, all-zero masks.
    pub fn sample_draws_unmasked(&self, seed: u64) -> RoundDraws {
        self.sample_draws_inner(seed, false)
    }

    fn sample_draws_inner(&self, seed: u64, masked: bool) -> RoundDraws {
        let q = self.cfg.modulus();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let clients = (0..self.topology.n_clients())
            .map(|i| {
                let key = self.cfg.vector((0..self.d).map(|_| rng.gen_range(0..q)));
                let share_len = self.client_params[i].share_len();
                let masks = (0..self.client_params[i].z_bs)
                    .map(|_| {
                        let draws: Vec<u64> =
                            (0..share_len).map(|_| rng.gen_range(0..q)).collect();
                        if masked {
                            self.cfg.vector(draws)
                        } else {
                            self.cfg.zeros(share_len)
                        }
                    })
                    .collect();
                ClientDraws { key, masks }
            })
            .collect();
        RoundDraws { clients }
    }

    /// Runs the full two-phase schedule and decodes the federator's view.
    pub fn execute(
        &self,
        gradients: &[FieldVector],
        draws: &RoundDraws,
    ) -> Result<RoundResult, ProtocolError> {
        let n = self.topology.n_clients();
        let n_bs = self.topology.n_stations();
        if gradients.len() != n {
            return Err(ProtocolError::GradientCount {
                expected: n,
                got: gradients.len(),
            });
        }
        for (client, g) in gradients.iter().enumerate() {
            if g.len() != self.d {
                return Err(ProtocolError::GradientLength {
                    client,
                    expected: self.d,
                    got: g.len(),
                });
            }
            if g.modulus() != self.cfg.modulus() {
                return Err(FieldError::ModulusMismatch(self.cfg.modulus(), g.modulus()).into());
            }
        }

        let mut log = MessageLog::default();

        // phase a: clients share their padded gradients
        let mut bundles = Vec::with_capacity(n);
        for i in 0..n {
            let bundle = make_shares_with_masks(
                &gradients[i],
                &draws.clients[i].key,
                &self.client_params[i],
                &self.client_points[i],
                &draws.clients[i].masks,
            )?;
            for (station, share) in bundle.iter() {
                log.push(Message {
                    src: ActorId::Client(i),
                    dst: ActorId::BaseStation(station),
                    kind: MessageKind::Share,
                    payload: share.clone(),
                    pattern_tag: None,
                });
            }
            bundles.push(bundle);
        }

        // stations aggregate within each identical-pattern group and forward
        for station in 0..n_bs {
            for (pi, pattern) in self.patterns.iter().enumerate() {
                if !pattern.pattern.contains(&station) {
                    continue;
                }
                let mut sum = self.cfg.zeros(self.pattern_params[pi].share_len());
                for &member in &pattern.members {
                    sum.add_assign_checked(bundles[member].get(station).expect("member share"))?;
                }
                log.push(Message {
                    src: ActorId::BaseStation(station),
                    dst: ActorId::Federator,
                    kind: MessageKind::PatternAggregate,
                    payload: sum,
                    pattern_tag: Some(pattern.pattern.clone()),
                });
            }
        }

        // phase b: keys to main stations
        for i in 0..n {
            log.push(Message {
                src: ActorId::Client(i),
                dst: ActorId::BaseStation(self.topology.main_station(i)),
                kind: MessageKind::KeyVector,
                payload: draws.clients[i].key.clone(),
                pattern_tag: None,
            });
        }

        // key-aggregation chain in station index order; stations with empty
        // clusters contribute zero and still forward
        let mut running = self.cfg.zeros(self.d);
        for station in 0..n_bs {
            for &member in &self.topology.cluster(station) {
                running.add_assign_checked(&draws.clients[member].key)?;
            }
            if station + 1 < n_bs {
                log.push(Message {
                    src: ActorId::BaseStation(station),
                    dst: ActorId::BaseStation(station + 1),
                    kind: MessageKind::KeyChainPartial,
                    payload: running.clone(),
                    pattern_tag: None,
                });
            } else {
                log.push(Message {
                    src: ActorId::BaseStation(station),
                    dst: ActorId::Federator,
                    kind: MessageKind::KeyAggregate,
                    payload: running.clone(),
                    pattern_tag: None,
                });
            }
        }

        let (aggregate, padded_sums, key_sum) = self.decode(&log)?;
        Ok(RoundResult {
            aggregate,
            padded_sums,
            key_sum,
            log,
        })
    }

    /// Federator-side decoding: consumes only messages addressed to the
    /// federator.
    fn decode(
        &self,
        log: &MessageLog,
    ) -> Result<(FieldVector, Vec<(Vec<usize>, FieldVector)>, FieldVector), ProtocolError> {
        let mut by_pattern: BTreeMap<&[usize], Vec<(usize, &FieldVector)>> = BTreeMap::new();
        let mut key_sum: Option<&FieldVector> = None;
        for msg in log.messages() {
            if msg.dst != ActorId::Federator {
                continue;
            }
            match msg.kind {
                MessageKind::PatternAggregate => {
                    let tag = msg
                        .pattern_tag
                        .as_deref()
                        .ok_or(ProtocolError::IncompleteLog("pattern tag"))?;
                    let ActorId::BaseStation(station) = msg.src else {
                        return Err(ProtocolError::IncompleteLog("station source"));
                    };
                    by_pattern.entry(tag).or_default().push((station, &msg.payload));
                }
                MessageKind::KeyAggregate => key_sum = Some(&msg.payload),
                _ => {}
            }
        }
        let key_sum = key_sum
            .cloned()
            .ok_or(ProtocolError::IncompleteLog("key aggregate"))?;

        let mut aggregate = self.cfg.zeros(self.d);
        let mut padded_sums = Vec::with_capacity(self.patterns.len());
        for (pi, pattern) in self.patterns.iter().enumerate() {
            let evals = by_pattern
                .get(pattern.pattern.as_slice())
                .ok_or(ProtocolError::IncompleteLog("pattern aggregate"))?;
            let points: Vec<_> = evals
                .iter()
                .map(|&(station, payload)| {
                    let alpha = self.topology.points().alpha(station).expect("known station");
                    (self.cfg.element(alpha), payload.clone())
                })
                .collect();
            // reconstruct the full padded vector, then truncate a copy for
            // the cross-pattern sum
            let padded_params = SharingParams::new(
                self.pattern_params[pi].z_bs,
                self.pattern_params[pi].nu,
                self.pattern_params[pi].padded_len(),
            )?;
            let padded = reconstruct_padded(&points, &padded_params)?;
            let mut truncated = padded.clone();
            truncated.truncate(self.d);
            aggregate.add_assign_checked(&truncated)?;
            padded_sums.push((pattern.pattern.clone(), padded));
        }
        let aggregate = aggregate.checked_sub(&key_sum)?;
        Ok((aggregate, padded_sums, key_sum))
    }

    /// Re-runs the federator decoding on a recorded log. The result must
    /// match the original round exactly.
    pub fn replay(&self, log: &MessageLog) -> Result<RoundResult, ProtocolError> {
        let (aggregate, padded_sums, key_sum) = self.decode(log)?;
        Ok(RoundResult {
            aggregate,
            padded_sums,
            key_sum,
            log: log.clone(),
        })
    }
}

/// One honest round: sample draws from `seed`, run both phases, decode.
pub fn run_round(
    topology: &Topology,
    gradients: &[FieldVector],
    cfg: FieldConfig,
    seed: u64,
) -> Result<RoundResult, ProtocolError> {
    let plan = RoundPlan::new(topology, cfg, gradient_dim(gradients)?)?;
    let draws = plan.sample_draws(seed);
    plan.execute(gradients, &draws)
}

/// Negative control for the privacy auditor: identical schedule, but the
/// share polynomials carry no masks. Aggregation still works; privacy does
/// not.
pub fn run_round_broken_no_masks(
    topology: &Topology,
    gradients: &[FieldVector],
    cfg: FieldConfig,
    seed: u64,
) -> Result<RoundResult, ProtocolError> {
    let plan = RoundPlan::new(topology, cfg, gradient_dim(gradients)?)?;
    let draws = plan.sample_draws_unmasked(seed);
    plan.execute(gradients, &draws)
}

fn gradient_dim(gradients: &[FieldVector]) -> Result<usize, ProtocolError> {
    gradients
        .first()
        .map(|g| g.len())
        .filter(|&d| d > 0)
        .ok_or(ProtocolError::ZeroDimension)
}
