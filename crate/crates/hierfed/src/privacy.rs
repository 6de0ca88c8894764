//! Exact verification of the information-theoretic privacy guarantees on
//! tiny instances.
//!
//! The auditor enumerates every gradient assignment admitted by the prior
//! and every random draw of the protocol, runs the full round for each,
//! and extracts the adversary's observations from the message log. The
//! joint distribution of (view, honest gradients) is therefore exact, and
//! the conditional mutual information is an exact rational expression whose
//! zero test is symbolic; logarithms enter only when a nonzero value is
//! reported.
//!
//! An adversary's view is fixed as: every message incident to a colluding
//! party, plus the colluders' own inputs and randomness. The federator's
//! incident messages are the pattern aggregates and the key aggregate;
//! a base station additionally handles individual shares, cluster keys,
//! and the chain partials passing through it.

use std::collections::HashMap;
use std::io::{self, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::field::{FieldConfig, FieldVector};
use crate::protocol::{ActorId, MessageLog, ProtocolError, RoundDraws, RoundPlan};
use crate::topology::Topology;

/// A reported mutual information at or below this many bits counts as zero.
pub const MI_TOLERANCE_BITS: f64 = 1e-9;

/// Default cap on enumerated states.
pub const DEFAULT_STATE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("enumeration needs {needed} states, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("instance too large: {0}")]
    InstanceTooLarge(&'static str),
    #[error("adversary references client {0} outside the topology")]
    BadClient(usize),
    #[error("adversary references station {0} outside the topology")]
    BadStation(usize),
    #[error("{got} colluding clients exceed z_ue = {z_ue}")]
    TooManyClients { got: usize, z_ue: usize },
    #[error("{got} colluding stations exceed z_bs = {z_bs}")]
    TooManyStations { got: usize, z_bs: usize },
    #[error("point-mass prior needs {expected} gradient vectors of length {d}")]
    PriorShape { expected: usize, d: usize },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Who pools their observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryMode {
    /// Up to z_bs base stations (case i). Station indices are 0-based.
    BaseStations(Vec<usize>),
    /// The federator (case ii); never combined with base stations.
    Federator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversarySpec {
    /// 0-based indices of colluding clients, at most z_ue of them.
    pub colluding_clients: Vec<usize>,
    pub mode: AdversaryMode,
}

impl AdversarySpec {
    fn validated(&self, t: &Topology) -> Result<Self, AuditError> {
        let privacy = t.privacy();
        let mut clients = self.colluding_clients.clone();
        clients.sort_unstable();
        clients.dedup();
        for &c in &clients {
            if c >= t.n_clients() {
                return Err(AuditError::BadClient(c));
            }
        }
        if clients.len() > privacy.z_ue {
            return Err(AuditError::TooManyClients {
                got: clients.len(),
                z_ue: privacy.z_ue,
            });
        }
        let mode = match &self.mode {
            AdversaryMode::Federator => AdversaryMode::Federator,
            AdversaryMode::BaseStations(stations) => {
                let mut stations = stations.clone();
                stations.sort_unstable();
                stations.dedup();
                for &s in &stations {
                    if s >= t.n_stations() {
                        return Err(AuditError::BadStation(s));
                    }
                }
                if stations.len() > privacy.z_bs {
                    return Err(AuditError::TooManyStations {
                        got: stations.len(),
                        z_bs: privacy.z_bs,
                    });
                }
                AdversaryMode::BaseStations(stations)
            }
        };
        Ok(Self {
            colluding_clients: clients,
            mode,
        })
    }

    /// Which privacy equation applies: "i" for station collusion, "ii" for
    /// federator collusion.
    pub fn case_label(&self) -> &'static str {
        match self.mode {
            AdversaryMode::BaseStations(_) => "i",
            AdversaryMode::Federator => "ii",
        }
    }

    pub fn conditioning(&self) -> Conditioning {
        match self.mode {
            AdversaryMode::BaseStations(_) => Conditioning::Colluders,
            AdversaryMode::Federator => Conditioning::ColludersAndAggregate,
        }
    }

    fn render_set(items: &[usize]) -> String {
        let parts: Vec<String> = items.iter().map(|i| (i + 1).to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn client_label(&self) -> String {
        Self::render_set(&self.colluding_clients)
    }

    pub fn mode_label(&self) -> String {
        match &self.mode {
            AdversaryMode::BaseStations(s) => Self::render_set(s),
            AdversaryMode::Federator => "F".to_string(),
        }
    }
}

/// Distribution of the honest clients' gradients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GradientPrior {
    /// Independent uniform over F_q^d per client.
    Uniform,
    /// Every client's gradient fixed to the given value.
    PointMass(Vec<FieldVector>),
    /// Fully correlated: one uniform vector shared by all clients.
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeVariant {
    Honest,
    /// Negative control: share polynomials without mask blocks.
    NoMasks,
}

/// Extra conditioning applied on top of the colluders' own gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Condition on g^C only (case i).
    Colluders,
    /// Condition on g^C and the honest aggregate (case ii).
    ColludersAndAggregate,
}

/// Joint key of one enumerated outcome, all sections packed base-2^bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
struct JointKey {
    view: [u64; 2],
    secret: u64,
    colluders: u64,
    aggregate: u64,
}

#[derive(Clone, Copy)]
struct SymbolPacker {
    bits: u32,
    per_word: u32,
}

impl SymbolPacker {
    fn new(q: u64) -> Self {
        let bits = 64 - (q - 1).leading_zeros();
        Self {
            bits,
            per_word: 64 / bits,
        }
    }

    fn pack1(&self, syms: &[u64]) -> Result<u64, AuditError> {
        if syms.len() > self.per_word as usize {
            return Err(AuditError::InstanceTooLarge("packed section overflows"));
        }
        let mut word = 0u64;
        for &s in syms.iter().rev() {
            word = (word << self.bits) | s;
        }
        Ok(word)
    }

    fn pack2(&self, syms: &[u64]) -> Result<[u64; 2], AuditError> {
        let cap = self.per_word as usize;
        if syms.len() > 2 * cap {
            return Err(AuditError::InstanceTooLarge("adversary view too wide to pack"));
        }
        let split = syms.len().min(cap);
        Ok([self.pack1(&syms[..split])?, self.pack1(&syms[split..])?])
    }
}

/// Exact joint distribution of (adversary view, honest gradients,
/// colluder gradients, honest aggregate), as integer weights over a
/// common denominator.
#[derive(Debug, Clone)]
pub struct ViewDistribution {
    entries: HashMap<JointKey, u64>,
    total: u64,
}

impl ViewDistribution {
    /// Number of distinct (view, secrets) outcomes.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    /// Sum of all probabilities; exactly 1 for a well-formed table.
    pub fn probability_sum(&self) -> BigRational {
        let sum: u64 = self.entries.values().sum();
        BigRational::new(BigInt::from(sum), BigInt::from(self.total))
    }

    /// True when every view value is equally likely.
    pub fn view_marginal_is_uniform(&self) -> bool {
        let mut marginal: HashMap<[u64; 2], u64> = HashMap::new();
        for (k, c) in &self.entries {
            *marginal.entry(k.view).or_default() += c;
        }
        let mut counts = marginal.values();
        match counts.next() {
            None => true,
            Some(first) => counts.all(|c| c == first),
        }
    }

    /// Exact conditional mutual information I(view; honest gradients | Z)
    /// in bits, where Z is the colluders' gradients and optionally the
    /// honest aggregate.
    ///
    /// Independence is first checked symbolically on the rational joint
    /// table; only a genuinely nonzero value ever reaches floating point.
    pub fn mutual_information_bits(&self, conditioning: Conditioning) -> f64 {
        let zkey = |k: &JointKey| match conditioning {
            Conditioning::Colluders => (k.colluders, 0),
            Conditioning::ColludersAndAggregate => (k.colluders, k.aggregate),
        };

        let mut vsz: HashMap<([u64; 2], u64, (u64, u64)), u64> = HashMap::new();
        let mut vz: HashMap<([u64; 2], (u64, u64)), u64> = HashMap::new();
        let mut sz: HashMap<(u64, (u64, u64)), u64> = HashMap::new();
        let mut z: HashMap<(u64, u64), u64> = HashMap::new();
        for (k, c) in &self.entries {
            let zk = zkey(k);
            *vsz.entry((k.view, k.secret, zk)).or_default() += c;
            *vz.entry((k.view, zk)).or_default() += c;
            *sz.entry((k.secret, zk)).or_default() += c;
            *z.entry(zk).or_default() += c;
        }

        let independent = vsz.iter().all(|(&(v, s, zk), &c)| {
            c as u128 * z[&zk] as u128 == vz[&(v, zk)] as u128 * sz[&(s, zk)] as u128
        });
        if independent {
            return 0.0;
        }

        let total = self.total as f64;
        let mut bits = 0.0;
        for (&(v, s, zk), &c) in &vsz {
            let ratio = (c as f64 * z[&zk] as f64) / (vz[&(v, zk)] as f64 * sz[&(s, zk)] as f64);
            bits += c as f64 / total * ratio.log2();
        }
        bits.max(0.0)
    }
}

/// Which log messages and which clients' local state a view comprises.
#[derive(Debug, Clone)]
pub(crate) struct ViewSelector {
    pub(crate) message_indices: Vec<usize>,
    pub(crate) colluding_clients: Vec<usize>,
}

impl ViewSelector {
    fn for_adversary(log: &MessageLog, spec: &AdversarySpec) -> Self {
        let incident = |actor: &ActorId| -> bool {
            match (actor, &spec.mode) {
                (ActorId::Client(c), _) => spec.colluding_clients.contains(c),
                (ActorId::BaseStation(b), AdversaryMode::BaseStations(set)) => set.contains(b),
                (ActorId::BaseStation(_), AdversaryMode::Federator) => false,
                (ActorId::Federator, AdversaryMode::Federator) => true,
                (ActorId::Federator, AdversaryMode::BaseStations(_)) => false,
            }
        };
        let message_indices = log
            .messages()
            .iter()
            .enumerate()
            .filter(|(_, m)| incident(&m.src) || incident(&m.dst))
            .map(|(i, _)| i)
            .collect();
        Self {
            message_indices,
            colluding_clients: spec.colluding_clients.clone(),
        }
    }
}

struct Enumerator {
    plan: RoundPlan,
    prior: GradientPrior,
    scheme: SchemeVariant,
    /// dimension counts: gradient section, then per-client key and mask dims
    g_dims: usize,
    rand_dims: usize,
}

impl Enumerator {
    fn new(
        t: &Topology,
        cfg: FieldConfig,
        d: usize,
        prior: GradientPrior,
        scheme: SchemeVariant,
        budget: u64,
    ) -> Result<Self, AuditError> {
        let plan = RoundPlan::new(t, cfg, d)?;
        if let GradientPrior::PointMass(values) = &prior {
            let ok = values.len() == t.n_clients()
                && values
                    .iter()
                    .all(|v| v.len() == d && v.modulus() == cfg.modulus());
            if !ok {
                return Err(AuditError::PriorShape {
                    expected: t.n_clients(),
                    d,
                });
            }
        }
        let g_dims = match &prior {
            GradientPrior::Uniform => t.n_clients() * d,
            GradientPrior::PointMass(_) => 0,
            GradientPrior::Equal => d,
        };
        let mut rand_dims = t.n_clients() * d; // keys
        if matches!(scheme, SchemeVariant::Honest) {
            for i in 0..t.n_clients() {
                let params = plan.client_params(i);
                rand_dims += params.z_bs * params.share_len();
            }
        }

        let q = cfg.modulus() as u128;
        let mut states: u128 = 1;
        for _ in 0..(g_dims + rand_dims) {
            states = states.saturating_mul(q);
            if states > budget as u128 {
                return Err(AuditError::BudgetExceeded {
                    needed: states,
                    budget,
                });
            }
        }
        Ok(Self {
            plan,
            prior,
            scheme,
            g_dims,
            rand_dims,
        })
    }

    /// Runs the full enumeration once, building one joint table per
    /// selector from the same protocol transcripts.
    fn run(&self, selectors: &[ViewSelector]) -> Result<Vec<ViewDistribution>, AuditError> {
        let t = self.plan.topology();
        let cfg = self.plan.config();
        let q = cfg.modulus();
        let d = self.plan.dimension();
        let n = t.n_clients();
        let packer = SymbolPacker::new(q);

        let mut gradients: Vec<FieldVector> = match &self.prior {
            GradientPrior::PointMass(values) => values.clone(),
            _ => (0..n).map(|_| cfg.zeros(d)).collect(),
        };
        let mut draws = RoundDraws {
            clients: (0..n)
                .map(|i| {
                    let params = self.plan.client_params(i);
                    crate::protocol::ClientDraws {
                        key: cfg.zeros(d),
                        masks: (0..params.z_bs).map(|_| cfg.zeros(params.share_len())).collect(),
                    }
                })
                .collect(),
        };

        let mut tables: Vec<HashMap<JointKey, u64>> =
            vec![HashMap::new(); selectors.len()];
        let mut total = 0u64;

        let n_dims = self.g_dims + self.rand_dims;
        let mut dims = vec![0u64; n_dims];
        let mut view_buf: Vec<u64> = Vec::new();
        let mut secret_buf: Vec<u64> = Vec::new();
        let mut colluder_buf: Vec<u64> = Vec::new();
        let mut aggregate_buf: Vec<u64> = Vec::new();

        loop {
            // materialize this assignment
            match &self.prior {
                GradientPrior::Uniform => {
                    for (i, g) in gradients.iter_mut().enumerate() {
                        g.values_mut().copy_from_slice(&dims[i * d..(i + 1) * d]);
                    }
                }
                GradientPrior::Equal => {
                    for g in gradients.iter_mut() {
                        g.values_mut().copy_from_slice(&dims[..d]);
                    }
                }
                GradientPrior::PointMass(_) => {}
            }
            let mut offset = self.g_dims;
            for client in draws.clients.iter_mut() {
                client.key.values_mut().copy_from_slice(&dims[offset..offset + d]);
                offset += d;
                if matches!(self.scheme, SchemeVariant::Honest) {
                    for mask in client.masks.iter_mut() {
                        let len = mask.len();
                        mask.values_mut().copy_from_slice(&dims[offset..offset + len]);
                        offset += len;
                    }
                }
            }

            let result = self.plan.execute(&gradients, &draws)?;

            for (selector, table) in selectors.iter().zip(tables.iter_mut()) {
                view_buf.clear();
                for &mi in &selector.message_indices {
                    view_buf.extend_from_slice(result.log.messages()[mi].payload.values());
                }
                for &c in &selector.colluding_clients {
                    view_buf.extend_from_slice(draws.clients[c].key.values());
                    for mask in &draws.clients[c].masks {
                        view_buf.extend_from_slice(mask.values());
                    }
                }

                secret_buf.clear();
                colluder_buf.clear();
                aggregate_buf.clear();
                aggregate_buf.resize(d, 0);
                for (i, g) in gradients.iter().enumerate() {
                    if selector.colluding_clients.contains(&i) {
                        colluder_buf.extend_from_slice(g.values());
                    } else {
                        secret_buf.extend_from_slice(g.values());
                        for (acc, &v) in aggregate_buf.iter_mut().zip(g.values()) {
                            *acc = crate::field::add_mod(*acc, v, q);
                        }
                    }
                }

                let key = JointKey {
                    view: packer.pack2(&view_buf)?,
                    secret: packer.pack1(&secret_buf)?,
                    colluders: packer.pack1(&colluder_buf)?,
                    aggregate: packer.pack1(&aggregate_buf)?,
                };
                *table.entry(key).or_default() += 1;
            }
            total += 1;

            // odometer
            let mut i = 0;
            loop {
                if i == n_dims {
                    return Ok(tables
                        .into_iter()
                        .map(|entries| ViewDistribution { entries, total })
                        .collect());
                }
                dims[i] += 1;
                if dims[i] < q {
                    break;
                }
                dims[i] = 0;
                i += 1;
            }
        }
    }

    fn probe_log(&self) -> Result<MessageLog, AuditError> {
        let t = self.plan.topology();
        let cfg = self.plan.config();
        let d = self.plan.dimension();
        let gradients: Vec<FieldVector> = match &self.prior {
            GradientPrior::PointMass(values) => values.clone(),
            _ => (0..t.n_clients()).map(|_| cfg.zeros(d)).collect(),
        };
        let draws = RoundDraws {
            clients: (0..t.n_clients())
                .map(|i| {
                    let params = self.plan.client_params(i);
                    crate::protocol::ClientDraws {
                        key: cfg.zeros(d),
                        masks: (0..params.z_bs).map(|_| cfg.zeros(params.share_len())).collect(),
                    }
                })
                .collect(),
        };
        Ok(self.plan.execute(&gradients, &draws)?.log)
    }
}

/// Exhaustively tabulates the joint distribution of one adversary's view
/// against the honest clients' gradients.
pub fn enumerate_views(
    t: &Topology,
    cfg: FieldConfig,
    d: usize,
    adversary: &AdversarySpec,
    prior: &GradientPrior,
    scheme: SchemeVariant,
    budget: u64,
) -> Result<ViewDistribution, AuditError> {
    let spec = adversary.validated(t)?;
    let enumerator = Enumerator::new(t, cfg, d, prior.clone(), scheme, budget)?;
    let selector = ViewSelector::for_adversary(&enumerator.probe_log()?, &spec);
    let mut dists = enumerator.run(std::slice::from_ref(&selector))?;
    Ok(dists.pop().expect("one selector in, one distribution out"))
}

/// Test hook: tabulate distributions for explicit message-index views from
/// one shared enumeration pass.
#[cfg(test)]
pub(crate) fn enumerate_custom_views(
    t: &Topology,
    cfg: FieldConfig,
    d: usize,
    selectors: &[ViewSelector],
    prior: &GradientPrior,
    scheme: SchemeVariant,
    budget: u64,
) -> Result<Vec<ViewDistribution>, AuditError> {
    Enumerator::new(t, cfg, d, prior.clone(), scheme, budget)?.run(selectors)
}

/// One audited adversary with its measured leakage.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub case_label: &'static str,
    pub clients: String,
    pub observer: String,
    pub mi_bits: f64,
}

impl AuditRow {
    pub fn leaks(&self) -> bool {
        self.mi_bits > MI_TOLERANCE_BITS
    }
}

/// Result of auditing every admissible adversary on one instance.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub max_mi_bits: f64,
    pub worst: Option<usize>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.max_mi_bits <= MI_TOLERANCE_BITS
    }

    /// One line per adversary: `case, C, B_or_F, MI_bits, verdict`,
    /// then a PASS/FAIL summary naming the worst adversary.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for row in &self.rows {
            writeln!(
                w,
                "{}, {}, {}, {}, {}",
                row.case_label,
                row.clients,
                row.observer,
                row.mi_bits,
                if row.leaks() { "LEAK" } else { "OK" }
            )?;
        }
        match (self.pass(), self.worst) {
            (true, _) => writeln!(w, "PASS max_mi_bits={}", self.max_mi_bits),
            (false, Some(i)) => {
                let row = &self.rows[i];
                writeln!(
                    w,
                    "FAIL worst: case {}, C={}, observer={}, {} bits",
                    row.case_label, row.clients, row.observer, row.mi_bits
                )
            }
            (false, None) => writeln!(w, "FAIL"),
        }
    }
}

fn subsets_up_to(n: usize, max_size: usize) -> Result<Vec<Vec<usize>>, AuditError> {
    if n > 20 {
        return Err(AuditError::InstanceTooLarge("too many actors to enumerate subsets"));
    }
    let mut subsets = Vec::new();
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() as usize) <= max_size {
            subsets.push((0..n).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    Ok(subsets)
}

/// Audits every adversary within the cardinality bounds: all client subsets
/// up to z_ue crossed with all station subsets up to z_bs (case i) and with
/// the federator (case ii). Case-i adversaries are held to the
/// collusion-conditioned equation, case-ii adversaries to the
/// aggregate-conditioned one.
pub fn audit_matrix(
    t: &Topology,
    cfg: FieldConfig,
    d: usize,
    prior: &GradientPrior,
    scheme: SchemeVariant,
    budget: u64,
) -> Result<AuditReport, AuditError> {
    let client_subsets = subsets_up_to(t.n_clients(), t.privacy().z_ue)?;
    let station_subsets = subsets_up_to(t.n_stations(), t.privacy().z_bs)?;

    let mut specs = Vec::new();
    for clients in &client_subsets {
        for stations in &station_subsets {
            specs.push(AdversarySpec {
                colluding_clients: clients.clone(),
                mode: AdversaryMode::BaseStations(stations.clone()),
            });
        }
        specs.push(AdversarySpec {
            colluding_clients: clients.clone(),
            mode: AdversaryMode::Federator,
        });
    }

    let enumerator = Enumerator::new(t, cfg, d, prior.clone(), scheme, budget)?;
    let probe = enumerator.probe_log()?;
    let selectors: Vec<ViewSelector> = specs
        .iter()
        .map(|s| ViewSelector::for_adversary(&probe, s))
        .collect();
    let distributions = enumerator.run(&selectors)?;

    let mut rows = Vec::with_capacity(specs.len());
    let mut max_mi_bits = 0.0f64;
    let mut worst = None;
    for (spec, dist) in specs.iter().zip(&distributions) {
        let mi_bits = dist.mutual_information_bits(spec.conditioning());
        if mi_bits > max_mi_bits {
            max_mi_bits = mi_bits;
            worst = Some(rows.len());
        }
        rows.push(AuditRow {
            case_label: spec.case_label(),
            clients: spec.client_label(),
            observer: spec.mode_label(),
            mi_bits,
        });
    }
    Ok(AuditReport {
        rows,
        max_mi_bits,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::PrivacyParams;

    const LOG2_3: f64 = 1.584962500721156;

    fn cfg(q: u64) -> FieldConfig {
        FieldConfig::new(q).unwrap()
    }

    fn single_client_topology() -> Topology {
        Topology::new(
            1,
            2,
            vec![vec![0, 1]],
            vec![0],
            PrivacyParams { z_ue: 1, z_bs: 1 },
        )
        .unwrap()
    }

    fn two_client_topology() -> Topology {
        Topology::new(
            2,
            2,
            vec![vec![0, 1], vec![0, 1]],
            vec![0, 1],
            PrivacyParams { z_ue: 1, z_bs: 1 },
        )
        .unwrap()
    }

    #[test]
    fn station_view_is_uniform_and_independent() {
        let t = single_client_topology();
        let spec = AdversarySpec {
            colluding_clients: vec![],
            mode: AdversaryMode::BaseStations(vec![0]),
        };
        let dist = enumerate_views(
            &t,
            cfg(3),
            1,
            &spec,
            &GradientPrior::Uniform,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert_eq!(dist.probability_sum(), BigRational::from_integer(1.into()));
        assert!(dist.view_marginal_is_uniform());
        assert_eq!(dist.mutual_information_bits(Conditioning::Colluders), 0.0);
    }

    #[test]
    fn federator_learns_the_sum_and_nothing_more() {
        let t = two_client_topology();
        let spec = AdversarySpec {
            colluding_clients: vec![],
            mode: AdversaryMode::Federator,
        };
        let dist = enumerate_views(
            &t,
            cfg(3),
            1,
            &spec,
            &GradientPrior::Uniform,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        // unconditioned, the view carries exactly the aggregate: log2(3) bits
        let unconditioned = dist.mutual_information_bits(Conditioning::Colluders);
        assert!((unconditioned - LOG2_3).abs() < 1e-9);
        // conditioned on the aggregate, nothing remains
        assert_eq!(
            dist.mutual_information_bits(Conditioning::ColludersAndAggregate),
            0.0
        );
    }

    #[test]
    fn broken_scheme_leaks_to_the_main_station() {
        let t = single_client_topology();
        let spec = AdversarySpec {
            colluding_clients: vec![],
            mode: AdversaryMode::BaseStations(vec![0]),
        };
        let dist = enumerate_views(
            &t,
            cfg(3),
            1,
            &spec,
            &GradientPrior::Uniform,
            SchemeVariant::NoMasks,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        // the station sees r (key vector) and g + r (unmasked share)
        let mi = dist.mutual_information_bits(Conditioning::Colluders);
        assert!((mi - LOG2_3).abs() < 1e-9, "mi = {mi}");
    }

    #[test]
    fn honest_audit_passes_and_broken_audit_names_the_leak() {
        let t = two_client_topology();
        let report = audit_matrix(
            &t,
            cfg(3),
            1,
            &GradientPrior::Uniform,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert!(report.pass());
        // 3 client subsets x (3 station subsets + federator)
        assert_eq!(report.rows.len(), 12);
        assert!(report.rows.iter().all(|r| !r.leaks()));

        let broken = audit_matrix(
            &t,
            cfg(3),
            1,
            &GradientPrior::Uniform,
            SchemeVariant::NoMasks,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert!(!broken.pass());
        assert!(broken.max_mi_bits >= 1.0);
        let worst = &broken.rows[broken.worst.unwrap()];
        assert_eq!(worst.case_label, "i");
        assert!(worst.leaks());

        let mut text = Vec::new();
        broken.write_text(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.contains("LEAK"));
        assert!(text.lines().last().unwrap().starts_with("FAIL worst"));
    }

    #[test]
    fn point_mass_and_equal_priors() {
        let t = two_client_topology();
        let c = cfg(3);
        let point = GradientPrior::PointMass(vec![c.vector([2]), c.vector([1])]);
        let report =
            audit_matrix(&t, c, 1, &point, SchemeVariant::Honest, DEFAULT_STATE_BUDGET).unwrap();
        assert!(report.pass());

        let report = audit_matrix(
            &t,
            c,
            1,
            &GradientPrior::Equal,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert!(report.pass());

        // under the correlated prior a colluding client knows every honest
        // gradient, so conditioning on g^C must absorb it all
        let spec = AdversarySpec {
            colluding_clients: vec![0],
            mode: AdversaryMode::BaseStations(vec![1]),
        };
        let dist = enumerate_views(
            &t,
            c,
            1,
            &spec,
            &GradientPrior::Equal,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert_eq!(dist.mutual_information_bits(Conditioning::Colluders), 0.0);
    }

    #[test]
    fn all_clients_colluding_still_passes() {
        let t = two_client_topology().with_z_ue(2);
        let report = audit_matrix(
            &t,
            cfg(3),
            1,
            &GradientPrior::Uniform,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert!(report.pass());
        // the full-collusion specs are present
        assert!(report.rows.iter().any(|r| r.clients == "{1,2}"));
    }

    #[test]
    fn budget_guard() {
        let t = two_client_topology();
        let err = audit_matrix(
            &t,
            cfg(3),
            1,
            &GradientPrior::Uniform,
            SchemeVariant::Honest,
            10,
        )
        .unwrap_err();
        assert!(matches!(err, AuditError::BudgetExceeded { .. }));
    }

    #[test]
    fn adversary_validation() {
        let t = two_client_topology();
        let too_many = AdversarySpec {
            colluding_clients: vec![0, 1],
            mode: AdversaryMode::Federator,
        };
        assert_eq!(
            enumerate_views(
                &t,
                cfg(3),
                1,
                &too_many,
                &GradientPrior::Uniform,
                SchemeVariant::Honest,
                DEFAULT_STATE_BUDGET
            )
            .unwrap_err(),
            AuditError::TooManyClients { got: 2, z_ue: 1 }
        );
        let bad_station = AdversarySpec {
            colluding_clients: vec![],
            mode: AdversaryMode::BaseStations(vec![7]),
        };
        assert_eq!(
            enumerate_views(
                &t,
                cfg(3),
                1,
                &bad_station,
                &GradientPrior::Uniform,
                SchemeVariant::Honest,
                DEFAULT_STATE_BUDGET
            )
            .unwrap_err(),
            AuditError::BadStation(7)
        );
    }

    #[test]
    fn observing_more_never_decreases_mi() {
        // nested views over the broken scheme: each selector adds one more
        // observed message
        let t = single_client_topology();
        let c = cfg(3);
        let enumerator = Enumerator::new(
            &t,
            c,
            1,
            GradientPrior::Uniform,
            SchemeVariant::NoMasks,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        let n_messages = enumerator.probe_log().unwrap().messages().len();
        let selectors: Vec<ViewSelector> = (0..=n_messages)
            .map(|k| ViewSelector {
                message_indices: (0..k).collect(),
                colluding_clients: vec![],
            })
            .collect();
        let dists =
            enumerate_custom_views(&t, c, 1, &selectors, &GradientPrior::Uniform, SchemeVariant::NoMasks, DEFAULT_STATE_BUDGET)
                .unwrap();
        let mut previous = 0.0;
        for dist in &dists {
            let mi = dist.mutual_information_bits(Conditioning::Colluders);
            assert!(mi + 1e-12 >= previous, "mi dropped from {previous} to {mi}");
            previous = mi;
        }
        // the full view pins g exactly
        assert!((previous - LOG2_3).abs() < 1e-9);
    }

    #[test]
    fn honest_matrix_over_padded_blocks() {
        // nu = 2 with d = 1 pads the data blocks; privacy must be unaffected
        let t = Topology::new(
            2,
            3,
            vec![vec![0, 1, 2], vec![0, 1, 2]],
            vec![0, 2],
            PrivacyParams { z_ue: 1, z_bs: 1 },
        )
        .unwrap();
        let report = audit_matrix(
            &t,
            cfg(5),
            1,
            &GradientPrior::Uniform,
            SchemeVariant::Honest,
            DEFAULT_STATE_BUDGET,
        )
        .unwrap();
        assert!(report.pass());
    }
}
