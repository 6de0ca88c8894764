//! The wireless architecture: clients, base stations, connectivity sets,
//! and main-base-station clusters.
//!
//! Station indices are 0-based internally; the default evaluation point for
//! station k is k+1, so points are distinct and nonzero whenever q exceeds
//! the station count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::sharing::EvaluationPointMap;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("topology needs at least one client")]
    NoClients,
    #[error("topology needs at least one base station")]
    NoBaseStations,
    #[error("expected {expected} connectivity sets, got {got}")]
    WrongGammaCount { expected: usize, got: usize },
    #[error("expected {expected} main-station assignments, got {got}")]
    WrongMainCount { expected: usize, got: usize },
    #[error("client {client} references station {station}, but only {n_bs} exist")]
    StationOutOfRange {
        client: usize,
        station: usize,
        n_bs: usize,
    },
    #[error("client {client} reaches {connected} stations; privacy against {z_bs} colluding stations needs at least {}", z_bs + 1)]
    UnderConnected {
        client: usize,
        connected: usize,
        z_bs: usize,
    },
    #[error("client {client} has main station {station} outside its connectivity set")]
    MainNotInGamma { client: usize, station: usize },
    #[error("collusion threshold z_bs={z_bs} must be smaller than the station count {n_bs}")]
    TooManyColludingStations { z_bs: usize, n_bs: usize },
    #[error("cannot pick {degree} stations out of {n_bs}")]
    InfeasibleConnectivity { degree: usize, n_bs: usize },
}

/// Collusion thresholds: at most `z_ue` clients and `z_bs` base stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrivacyParams {
    pub z_ue: usize,
    pub z_bs: usize,
}

/// A maximal set of clients sharing one exact connectivity set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityPattern {
    /// Sorted station indices of the shared connectivity set.
    pub pattern: Vec<usize>,
    /// Sorted indices of the clients whose set equals `pattern`.
    pub members: Vec<usize>,
}

/// Validated, immutable network shape for one aggregation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n_clients: usize,
    n_bs: usize,
    gamma: Vec<Vec<usize>>,
    main_bs: Vec<usize>,
    points: EvaluationPointMap,
    privacy: PrivacyParams,
}

impl Topology {
    pub fn new(
        n_clients: usize,
        n_bs: usize,
        gamma: Vec<Vec<usize>>,
        main_bs: Vec<usize>,
        privacy: PrivacyParams,
    ) -> Result<Self, TopologyError> {
        if n_clients == 0 {
            return Err(TopologyError::NoClients);
        }
        if n_bs == 0 {
            return Err(TopologyError::NoBaseStations);
        }
        if privacy.z_bs >= n_bs {
            return Err(TopologyError::TooManyColludingStations {
                z_bs: privacy.z_bs,
                n_bs,
            });
        }
        if gamma.len() != n_clients {
            return Err(TopologyError::WrongGammaCount {
                expected: n_clients,
                got: gamma.len(),
            });
        }
        if main_bs.len() != n_clients {
            return Err(TopologyError::WrongMainCount {
                expected: n_clients,
                got: main_bs.len(),
            });
        }
        let mut gamma_sorted = Vec::with_capacity(n_clients);
        for (client, set) in gamma.into_iter().enumerate() {
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            for &station in &set {
                if station >= n_bs {
                    return Err(TopologyError::StationOutOfRange {
                        client,
                        station,
                        n_bs,
                    });
                }
            }
            if set.len() <= privacy.z_bs {
                return Err(TopologyError::UnderConnected {
                    client,
                    connected: set.len(),
                    z_bs: privacy.z_bs,
                });
            }
            gamma_sorted.push(set);
        }
        for (client, (&main, set)) in main_bs.iter().zip(&gamma_sorted).enumerate() {
            if !set.contains(&main) {
                return Err(TopologyError::MainNotInGamma {
                    client,
                    station: main,
                });
            }
        }
        Ok(Self {
            n_clients,
            n_bs,
            gamma: gamma_sorted,
            main_bs,
            points: EvaluationPointMap::sequential(0..n_bs),
            privacy,
        })
    }

    /// Test-fixture generator: every client gets a uniform random
    /// (z_bs + degree)-subset of stations and a uniform main station within
    /// it. Deterministic per seed. The generated topology has z_ue = 0;
    /// adjust with [`Topology::with_z_ue`].
    pub fn random(
        n_clients: usize,
        n_bs: usize,
        z_bs: usize,
        degree: usize,
        seed: u64,
    ) -> Result<Self, TopologyError> {
        let connect = z_bs + degree;
        if degree == 0 || connect > n_bs {
            return Err(TopologyError::InfeasibleConnectivity {
                degree: connect,
                n_bs,
            });
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut gamma = Vec::with_capacity(n_clients);
        let mut main_bs = Vec::with_capacity(n_clients);
        for _ in 0..n_clients {
            let mut set = rand::seq::index::sample(&mut rng, n_bs, connect).into_vec();
            set.sort_unstable();
            main_bs.push(set[rng.gen_range(0..set.len())]);
            gamma.push(set);
        }
        Self::new(n_clients, n_bs, gamma, main_bs, PrivacyParams { z_ue: 0, z_bs })
    }

    pub fn with_z_ue(mut self, z_ue: usize) -> Self {
        self.privacy.z_ue = z_ue;
        self
    }

    pub fn n_clients(&self) -> usize {
        self.n_clients
    }

    pub fn n_stations(&self) -> usize {
        self.n_bs
    }

    pub fn gamma(&self, client: usize) -> &[usize] {
        &self.gamma[client]
    }

    pub fn main_station(&self, client: usize) -> usize {
        self.main_bs[client]
    }

    pub fn points(&self) -> &EvaluationPointMap {
        &self.points
    }

    pub fn privacy(&self) -> PrivacyParams {
        self.privacy
    }

    /// Data block count for a client: nu_i = |gamma_i| - z_bs.
    pub fn nu(&self, client: usize) -> usize {
        self.gamma[client].len() - self.privacy.z_bs
    }

    /// Clients grouped by exact equality of their connectivity sets, in
    /// lexicographic pattern order.
    pub fn patterns(&self) -> Vec<ConnectivityPattern> {
        let mut groups: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
        for (client, set) in self.gamma.iter().enumerate() {
            groups.entry(set).or_default().push(client);
        }
        groups
            .into_iter()
            .map(|(pattern, members)| ConnectivityPattern {
                pattern: pattern.to_vec(),
                members,
            })
            .collect()
    }

    /// The cluster U_m: clients whose main station is `station`.
    pub fn cluster(&self, station: usize) -> Vec<usize> {
        (0..self.n_clients)
            .filter(|&i| self.main_bs[i] == station)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(z_ue: usize, z_bs: usize) -> PrivacyParams {
        PrivacyParams { z_ue, z_bs }
    }

    #[test]
    fn minimal_valid_instance() {
        let t = Topology::new(
            2,
            2,
            vec![vec![0, 1], vec![0, 1]],
            vec![0, 1],
            pp(1, 1),
        )
        .unwrap();
        let patterns = t.patterns();
        assert_eq!(patterns.len(), 1);
        assert_eq!(patterns[0].pattern, vec![0, 1]);
        assert_eq!(patterns[0].members, vec![0, 1]);
        assert_eq!(t.nu(0), 1);
    }

    #[test]
    fn under_connected_client_is_rejected() {
        let err = Topology::new(1, 2, vec![vec![0]], vec![0], pp(1, 1)).unwrap_err();
        assert_eq!(
            err,
            TopologyError::UnderConnected {
                client: 0,
                connected: 1,
                z_bs: 1
            }
        );
    }

    #[test]
    fn construction_error_paths() {
        assert_eq!(
            Topology::new(0, 2, vec![], vec![], pp(0, 1)).unwrap_err(),
            TopologyError::NoClients
        );
        assert_eq!(
            Topology::new(1, 2, vec![vec![0, 1]], vec![], pp(0, 1)).unwrap_err(),
            TopologyError::WrongMainCount { expected: 1, got: 0 }
        );
        assert_eq!(
            Topology::new(1, 2, vec![vec![0, 2]], vec![0], pp(0, 1)).unwrap_err(),
            TopologyError::StationOutOfRange {
                client: 0,
                station: 2,
                n_bs: 2
            }
        );
        assert_eq!(
            Topology::new(1, 2, vec![vec![0, 1]], vec![1], pp(0, 2)).unwrap_err(),
            TopologyError::TooManyColludingStations { z_bs: 2, n_bs: 2 }
        );
        assert_eq!(
            Topology::new(2, 3, vec![vec![0, 1], vec![1, 2]], vec![0, 0], pp(0, 1)).unwrap_err(),
            TopologyError::MainNotInGamma { client: 1, station: 0 }
        );
    }

    #[test]
    fn grouping_by_exact_set_equality() {
        let t = Topology::new(
            3,
            3,
            vec![vec![0, 1], vec![0, 1], vec![1, 2]],
            vec![0, 1, 2],
            pp(1, 1),
        )
        .unwrap();
        let patterns = t.patterns();
        assert_eq!(patterns.len(), 2);
        assert_eq!(patterns[0].pattern, vec![0, 1]);
        assert_eq!(patterns[0].members, vec![0, 1]);
        assert_eq!(patterns[1].pattern, vec![1, 2]);
        assert_eq!(patterns[1].members, vec![2]);
    }

    #[test]
    fn patterns_partition_all_clients() {
        for seed in 0..20 {
            let t = Topology::random(6, 4, 1, 2, seed).unwrap();
            let mut seen = vec![false; 6];
            for p in t.patterns() {
                for &m in &p.members {
                    assert!(!seen[m], "client {m} appears twice");
                    seen[m] = true;
                    assert_eq!(t.gamma(m), &p.pattern[..]);
                }
            }
            assert!(seen.iter().all(|&s| s));

            let cluster_total: usize = (0..t.n_stations()).map(|m| t.cluster(m).len()).sum();
            assert_eq!(cluster_total, t.n_clients());
        }
    }

    #[test]
    fn degenerate_pattern_counts() {
        // all clients share one full pattern
        let t = Topology::new(
            3,
            2,
            vec![vec![0, 1]; 3],
            vec![0, 0, 1],
            pp(0, 1),
        )
        .unwrap();
        assert_eq!(t.patterns().len(), 1);

        // pairwise distinct patterns
        let t = Topology::new(
            3,
            3,
            vec![vec![0, 1], vec![1, 2], vec![0, 2]],
            vec![0, 1, 2],
            pp(0, 1),
        )
        .unwrap();
        assert_eq!(t.patterns().len(), 3);
    }

    #[test]
    fn random_topology_is_seed_deterministic() {
        let a = Topology::random(5, 4, 1, 2, 123).unwrap();
        let b = Topology::random(5, 4, 1, 2, 123).unwrap();
        assert_eq!(a, b);
        let c = Topology::random(5, 4, 1, 2, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_degree_forces_complete_connectivity() {
        let t = Topology::random(4, 3, 1, 2, 7).unwrap();
        for i in 0..4 {
            assert_eq!(t.gamma(i), &[0, 1, 2]);
        }
        assert_eq!(t.patterns().len(), 1);
    }

    #[test]
    fn random_topology_golden_fixture() {
        // frozen from one generator run: N=4, B=3, z=1, degree=1, seed=0
        let t = Topology::random(4, 3, 1, 1, 0).unwrap();
        let gammas: Vec<Vec<usize>> = (0..4).map(|i| t.gamma(i).to_vec()).collect();
        let mains: Vec<usize> = (0..4).map(|i| t.main_station(i)).collect();
        assert_eq!(gammas, vec![vec![0, 1], vec![0, 2], vec![0, 2], vec![0, 1]]);
        assert_eq!(mains, vec![0, 0, 0, 1]);
        assert_eq!(t.patterns().len(), 2);
    }

    #[test]
    fn infeasible_generator_parameters() {
        assert_eq!(
            Topology::random(2, 2, 1, 2, 0).unwrap_err(),
            TopologyError::InfeasibleConnectivity { degree: 3, n_bs: 2 }
        );
    }
}
