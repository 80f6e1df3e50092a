//! System configuration: node dimensions, powers, channel parameters and the
//! experiment sweep. Loaded from JSON with defaults applied for every field
//! that is left out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmarks::SchemeTag;
use crate::channel::{ClusterChannelParams, SiChannelParams};
use crate::error::{Error, Result};
use crate::optimizer::SolverOptions;

pub const DEFAULT_K: usize = 2;
pub const DEFAULT_ANTENNAS: usize = 100;
pub const DEFAULT_RF_CHAINS: usize = 32;

/// Node indexing for a K-pair network. Nodes `0..K` form the left set,
/// `K..2K` the right set, and node `i` is paired with node `i + K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Network {
    pub k: usize,
}

impl Network {
    pub fn num_nodes(&self) -> usize {
        2 * self.k
    }

    pub fn is_left(&self, node: usize) -> bool {
        node < self.k
    }

    /// The node this node transmits to (and receives from).
    pub fn partner(&self, node: usize) -> usize {
        (node + self.k) % (2 * self.k)
    }

    /// Nodes on the same side as `node`, including itself.
    pub fn same_side(&self, node: usize) -> std::ops::Range<usize> {
        if self.is_left(node) {
            0..self.k
        } else {
            self.k..2 * self.k
        }
    }

    pub fn opposite_side(&self, node: usize) -> std::ops::Range<usize> {
        self.same_side(self.partner(node))
    }

    /// `1l, 2l, ..., 1r, 2r, ...`
    pub fn label(&self, node: usize) -> String {
        if self.is_left(node) {
            format!("{}l", node + 1)
        } else {
            format!("{}r", node - self.k + 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub m_tx: usize,
    pub m_rx: usize,
    /// Streams this node transmits to its partner.
    pub streams: usize,
    /// Weight of the rate this node receives.
    pub weight: f64,
    pub power: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub nodes: Vec<NodeConfig>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub cluster: ClusterChannelParams,
    pub si: SiChannelParams,
    pub schemes: Vec<SchemeTag>,
    pub solver: SolverOptions,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDocument {
    n_tx: Option<usize>,
    n_rx: Option<usize>,
    m_tx: Option<usize>,
    m_rx: Option<usize>,
    streams: Option<usize>,
    weight: Option<f64>,
    power: Option<f64>,
    noise: Option<f64>,
}

/// On-disk form: every field optional. Top-level node fields apply to all
/// nodes; entries of `nodes` override them per node.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    #[serde(rename = "K")]
    k: Option<usize>,
    n_tx: Option<usize>,
    n_rx: Option<usize>,
    m_tx: Option<usize>,
    m_rx: Option<usize>,
    streams: Option<usize>,
    weight: Option<f64>,
    power: Option<f64>,
    noise: Option<f64>,
    nodes: Option<Vec<NodeDocument>>,
    snr_db: Option<Vec<f64>>,
    trials: Option<usize>,
    base_seed: Option<u64>,
    #[serde(default)]
    cluster: Option<ClusterChannelParamsDoc>,
    #[serde(default)]
    si: Option<SiChannelParamsDoc>,
    schemes: Option<Vec<SchemeTag>>,
    #[serde(default)]
    solver: Option<SolverOptionsDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterChannelParamsDoc {
    num_clusters: Option<usize>,
    num_paths: Option<usize>,
    aoa_deg: Option<(f64, f64)>,
    aod_deg: Option<(f64, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiChannelParamsDoc {
    rician_factor: Option<f64>,
    separation_m: Option<f64>,
    relative_angle_deg: Option<f64>,
    wavelength_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverOptionsDoc {
    max_outer_iters: Option<usize>,
    wsr_rel_tol: Option<f64>,
    bisection_tol: Option<f64>,
    multiplier_growth: Option<f64>,
    ridge_eps: Option<f64>,
    max_kron_dim: Option<usize>,
    analog_safeguard: Option<bool>,
}

impl NodeDocument {
    fn or(self, base: &NodeDocument) -> NodeDocument {
        NodeDocument {
            n_tx: self.n_tx.or(base.n_tx),
            n_rx: self.n_rx.or(base.n_rx),
            m_tx: self.m_tx.or(base.m_tx),
            m_rx: self.m_rx.or(base.m_rx),
            streams: self.streams.or(base.streams),
            weight: self.weight.or(base.weight),
            power: self.power.or(base.power),
            noise: self.noise.or(base.noise),
        }
    }

    fn resolve(self) -> NodeConfig {
        let n_tx = self.n_tx.unwrap_or(DEFAULT_ANTENNAS);
        let n_rx = self.n_rx.unwrap_or(DEFAULT_ANTENNAS);
        let m_tx = self.m_tx.unwrap_or(DEFAULT_RF_CHAINS.min(n_tx));
        let m_rx = self.m_rx.unwrap_or(DEFAULT_RF_CHAINS.min(n_rx));
        NodeConfig {
            n_tx,
            n_rx,
            m_tx,
            m_rx,
            streams: self.streams.unwrap_or((m_tx / 2).max(1)),
            weight: self.weight.unwrap_or(1.0),
            power: self.power.unwrap_or(1.0),
            noise: self.noise.unwrap_or(1.0),
        }
    }
}

impl ConfigDocument {
    fn resolve(self) -> Result<SystemConfig> {
        let k = self.k.unwrap_or(DEFAULT_K);
        let node_defaults = NodeDocument {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            m_tx: self.m_tx,
            m_rx: self.m_rx,
            streams: self.streams,
            weight: self.weight,
            power: self.power,
            noise: self.noise,
        };
        let node_docs = match self.nodes {
            Some(list) => {
                if list.len() != 2 * k {
                    return Err(Error::Validation(vec![format!(
                        "nodes lists {} entries but K = {k} needs {}",
                        list.len(),
                        2 * k
                    )]));
                }
                list.into_iter().map(|n| n.or(&node_defaults)).collect()
            }
            None => (0..2 * k)
                .map(|_| NodeDocument::default().or(&node_defaults))
                .collect::<Vec<_>>(),
        };

        let cd = ClusterChannelParams::default();
        let cluster = match self.cluster {
            Some(c) => ClusterChannelParams {
                num_clusters: c.num_clusters.unwrap_or(cd.num_clusters),
                num_paths: c.num_paths.unwrap_or(cd.num_paths),
                aoa_deg: c.aoa_deg.unwrap_or(cd.aoa_deg),
                aod_deg: c.aod_deg.unwrap_or(cd.aod_deg),
            },
            None => cd,
        };
        let sd = SiChannelParams::default();
        let si = match self.si {
            Some(s) => SiChannelParams {
                rician_factor: s.rician_factor.unwrap_or(sd.rician_factor),
                separation_m: s.separation_m.unwrap_or(sd.separation_m),
                relative_angle_deg: s.relative_angle_deg.unwrap_or(sd.relative_angle_deg),
                wavelength_m: s.wavelength_m.unwrap_or(sd.wavelength_m),
            },
            None => sd,
        };
        let od = SolverOptions::default();
        let solver = match self.solver {
            Some(o) => SolverOptions {
                max_outer_iters: o.max_outer_iters.unwrap_or(od.max_outer_iters),
                wsr_rel_tol: o.wsr_rel_tol.unwrap_or(od.wsr_rel_tol),
                bisection_tol: o.bisection_tol.unwrap_or(od.bisection_tol),
                multiplier_growth: o.multiplier_growth.unwrap_or(od.multiplier_growth),
                ridge_eps: o.ridge_eps.unwrap_or(od.ridge_eps),
                max_kron_dim: o.max_kron_dim.unwrap_or(od.max_kron_dim),
                analog_safeguard: o.analog_safeguard.unwrap_or(od.analog_safeguard),
            },
            None => od,
        };

        let config = SystemConfig {
            k,
            nodes: node_docs.into_iter().map(NodeDocument::resolve).collect(),
            snr_db: self.snr_db.unwrap_or_else(|| vec![-10.0, 0.0, 10.0, 20.0]),
            trials: self.trials.unwrap_or(10),
            base_seed: self.base_seed.unwrap_or(1),
            cluster,
            si,
            schemes: self.schemes.unwrap_or_else(|| SchemeTag::ALL.to_vec()),
            solver,
        };
        config.validate()?;
        Ok(config)
    }
}

impl SystemConfig {
    /// Uniform configuration: every node gets the same dimensions, unit
    /// weight, unit power and unit noise.
    pub fn uniform(k: usize, n: usize, m: usize, streams: usize) -> Self {
        let node = NodeConfig {
            n_tx: n,
            n_rx: n,
            m_tx: m,
            m_rx: m,
            streams,
            weight: 1.0,
            power: 1.0,
            noise: 1.0,
        };
        SystemConfig {
            k,
            nodes: vec![node; 2 * k],
            snr_db: vec![-10.0, 0.0, 10.0, 20.0],
            trials: 10,
            base_seed: 1,
            cluster: ClusterChannelParams::default(),
            si: SiChannelParams::default(),
            schemes: SchemeTag::ALL.to_vec(),
            solver: SolverOptions::default(),
        }
    }

    pub fn network(&self) -> Network {
        Network { k: self.k }
    }

    pub fn num_nodes(&self) -> usize {
        2 * self.k
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.weight).collect()
    }

    pub fn noise(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.noise).collect()
    }

    /// Copy with every node's noise set so that `p / σ² = 10^(snr/10)`.
    pub fn at_snr(&self, snr_db: f64) -> SystemConfig {
        let mut out = self.clone();
        let ratio = 10f64.powf(-snr_db / 10.0);
        for node in &mut out.nodes {
            node.noise = node.power * ratio;
        }
        out
    }

    /// Copy with RF chains equal to the antenna counts.
    pub fn fully_digital(&self) -> SystemConfig {
        let mut out = self.clone();
        for node in &mut out.nodes {
            node.m_tx = node.n_tx;
            node.m_rx = node.n_rx;
        }
        out
    }

    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.k == 0 {
            errs.push("K must be >= 1".to_string());
        }
        if self.nodes.len() != 2 * self.k {
            errs.push(format!(
                "nodes lists {} entries but K = {} needs {}",
                self.nodes.len(),
                self.k,
                2 * self.k
            ));
            return errs;
        }
        let net = self.network();
        for (a, node) in self.nodes.iter().enumerate() {
            let label = net.label(a);
            let partner = &self.nodes[net.partner(a)];
            for (name, v) in [("n_tx", node.n_tx), ("n_rx", node.n_rx), ("m_tx", node.m_tx), ("m_rx", node.m_rx), ("streams", node.streams)] {
                if v == 0 {
                    errs.push(format!("node {label}: {name} must be >= 1"));
                }
            }
            if node.m_tx > node.n_tx {
                errs.push(format!("node {label}: m_tx ({}) > n_tx ({})", node.m_tx, node.n_tx));
            }
            if node.m_rx > node.n_rx {
                errs.push(format!("node {label}: m_rx ({}) > n_rx ({})", node.m_rx, node.n_rx));
            }
            let cap = node.m_tx.min(partner.m_rx);
            if node.streams > cap {
                errs.push(format!(
                    "node {label}: streams ({}) > min(m_tx, partner m_rx) ({cap})",
                    node.streams
                ));
            }
            if !(node.power > 0.0 && node.power.is_finite()) {
                errs.push(format!("node {label}: power must be > 0, got {}", node.power));
            }
            if !(node.noise > 0.0 && node.noise.is_finite()) {
                errs.push(format!("node {label}: noise must be > 0, got {}", node.noise));
            }
            if !(node.weight >= 0.0 && node.weight.is_finite()) {
                errs.push(format!("node {label}: weight must be >= 0, got {}", node.weight));
            }
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            errs.push("snr_db must be a non-empty list of finite values".to_string());
        }
        if self.trials == 0 {
            errs.push("trials must be >= 1".to_string());
        }
        if self.schemes.is_empty() {
            errs.push("schemes must not be empty".to_string());
        }
        errs.extend(self.cluster.validation_errors());
        errs.extend(self.si.validation_errors());
        errs.extend(self.solver.validation_errors());
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let doc: ConfigDocument = serde_json::from_str(text)?;
    doc.resolve()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
