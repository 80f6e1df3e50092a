//! Channel realizations: clustered mmWave links between nodes and Rician
//! self-interference channels between a node's own transmit and receive arrays.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{zeros, ComplexMatrix, ComplexVector};

/// Uniform linear array; `spacing` is in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn half_wavelength(num_elements: usize) -> Self {
        Self {
            num_elements,
            spacing: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_elements == 0 || !(self.spacing > 0.0) {
            return Err(Error::Geometry(format!(
                "array needs at least one element and positive spacing, got {} elements at {}",
                self.num_elements, self.spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterChannelParams {
    pub num_clusters: usize,
    pub num_paths: usize,
    /// Angle-of-arrival interval in degrees.
    pub aoa_deg: (f64, f64),
    /// Angle-of-departure interval in degrees.
    pub aod_deg: (f64, f64),
}

impl Default for ClusterChannelParams {
    fn default() -> Self {
        Self {
            num_clusters: 3,
            num_paths: 6,
            aoa_deg: (-20.0, 20.0),
            aod_deg: (-20.0, 20.0),
        }
    }
}

impl ClusterChannelParams {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.num_clusters == 0 {
            errs.push("cluster.num_clusters must be >= 1".to_string());
        }
        if self.num_paths == 0 {
            errs.push("cluster.num_paths must be >= 1".to_string());
        }
        for (name, (lo, hi)) in [("aoa_deg", self.aoa_deg), ("aod_deg", self.aod_deg)] {
            if !(lo <= hi && lo >= -90.0 && hi <= 90.0) {
                errs.push(format!(
                    "cluster.{name} must be an interval within [-90, 90], got [{lo}, {hi}]"
                ));
            }
        }
        errs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiChannelParams {
    /// Linear LoS-to-scattered power ratio κ.
    pub rician_factor: f64,
    /// Distance between transmit and receive array centers, meters.
    pub separation_m: f64,
    /// Angle between the transmit and receive array axes, degrees.
    pub relative_angle_deg: f64,
    pub wavelength_m: f64,
}

impl Default for SiChannelParams {
    fn default() -> Self {
        Self {
            rician_factor: 1e5,
            separation_m: 0.2,
            relative_angle_deg: 90.0,
            wavelength_m: 0.01071,
        }
    }
}

impl SiChannelParams {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.rician_factor >= 0.0) {
            errs.push(format!("si.rician_factor must be >= 0, got {}", self.rician_factor));
        }
        if !(self.separation_m > 0.0) {
            errs.push(format!("si.separation_m must be > 0, got {}", self.separation_m));
        }
        if !(self.wavelength_m > 0.0) {
            errs.push(format!("si.wavelength_m must be > 0, got {}", self.wavelength_m));
        }
        if !self.relative_angle_deg.is_finite() {
            errs.push("si.relative_angle_deg must be finite".to_string());
        }
        errs
    }
}

/// One propagation ray of a clustered channel.
#[derive(Debug, Clone, Copy)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aoa_deg: f64,
    pub aod_deg: f64,
}

/// Every `H[rx][tx]` matrix of one realization, including the diagonal
/// self-interference entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_nodes: usize,
    matrices: Vec<ComplexMatrix>,
}

impl ChannelSet {
    pub fn from_fn(num_nodes: usize, mut f: impl FnMut(usize, usize) -> ComplexMatrix) -> Self {
        let mut matrices = Vec::with_capacity(num_nodes * num_nodes);
        for rx in 0..num_nodes {
            for tx in 0..num_nodes {
                matrices.push(f(rx, tx));
            }
        }
        Self {
            num_nodes,
            matrices,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Channel from transmitter `tx` into receiver `rx`.
    pub fn get(&self, rx: usize, tx: usize) -> &ComplexMatrix {
        &self.matrices[rx * self.num_nodes + tx]
    }

    pub fn get_mut(&mut self, rx: usize, tx: usize) -> &mut ComplexMatrix {
        &mut self.matrices[rx * self.num_nodes + tx]
    }

    /// Replace every self-interference channel by zeros.
    pub fn zero_self_interference(&mut self) {
        for a in 0..self.num_nodes {
            self.get_mut(a, a).fill(Complex64::new(0.0, 0.0));
        }
    }

    /// Same shapes, all entries zero.
    pub fn zeroed(&self) -> Self {
        Self {
            num_nodes: self.num_nodes,
            matrices: self
                .matrices
                .iter()
                .map(|m| zeros(m.nrows(), m.ncols()))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &ComplexMatrix)> {
        let n = self.num_nodes;
        self.matrices
            .iter()
            .enumerate()
            .map(move |(i, m)| ((i / n, i % n), m))
    }
}

/// ULA steering vector, element `n` equal to `exp(j 2π s n sin θ)`.
pub fn ula_response(geometry: &ArrayGeometry, angle_deg: f64) -> Result<ComplexVector> {
    geometry.validate()?;
    if !(angle_deg.abs() <= 90.0) {
        return Err(Error::Parameter(format!(
            "angle {angle_deg} deg outside [-90, 90]"
        )));
    }
    let phase_step = 2.0 * PI * geometry.spacing * angle_deg.to_radians().sin();
    Ok(ComplexVector::from_fn(geometry.num_elements, |n, _| {
        Complex64::from_polar(1.0, phase_step * n as f64)
    }))
}

/// `sqrt(Nr Nt / L) Σ α â_rx(φ) â_txᵀ(θ)` over the given `L` rays, with
/// `â = a / sqrt(N)` the unit-norm array responses, so that
/// `E‖H‖_F² = Nr Nt` for `α ~ CN(0, 1)`.
pub fn channel_from_paths(
    paths: &[PathComponent],
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
) -> Result<ComplexMatrix> {
    if paths.is_empty() {
        return Err(Error::Parameter("channel needs at least one path".into()));
    }
    let scale = 1.0 / (paths.len() as f64).sqrt();
    let mut h = zeros(rx.num_elements, tx.num_elements);
    for p in paths {
        let ar = ula_response(rx, p.aoa_deg)?;
        let at = ula_response(tx, p.aod_deg)?;
        h += (ar * at.transpose()) * p.gain;
    }
    Ok(h * Complex64::new(scale, 0.0))
}

/// Standard circularly-symmetric complex Gaussian sample, `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn draw_cluster_channel<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ClusterChannelParams,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
) -> Result<ComplexMatrix> {
    let errs = params.validation_errors();
    if !errs.is_empty() {
        return Err(Error::Parameter(errs.join("; ")));
    }
    let count = params.num_clusters * params.num_paths;
    let paths: Vec<PathComponent> = (0..count)
        .map(|_| {
            let gain = complex_gaussian(rng);
            let aoa_deg = uniform_angle(rng, params.aoa_deg);
            let aod_deg = uniform_angle(rng, params.aod_deg);
            PathComponent {
                gain,
                aoa_deg,
                aod_deg,
            }
        })
        .collect();
    channel_from_paths(&paths, rx, tx)
}

/// Element distances between the transmit and receive arrays of one node.
///
/// Transmit element `n` sits at `(x_n, 0, 0)`; receive element `m` at
/// `(z_m cos ω, D, z_m sin ω)` where `ω` is the relative angle between the
/// array axes and both arrays are centered on their own origin.
pub fn si_distances(
    params: &SiChannelParams,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
) -> Result<nalgebra::DMatrix<f64>> {
    rx.validate()?;
    tx.validate()?;
    if !(params.separation_m > 0.0) || !(params.wavelength_m > 0.0) {
        return Err(Error::Geometry(format!(
            "separation {} m and wavelength {} m must be positive",
            params.separation_m, params.wavelength_m
        )));
    }
    let omega = params.relative_angle_deg.to_radians();
    let rx_step = rx.spacing * params.wavelength_m;
    let tx_step = tx.spacing * params.wavelength_m;
    let rx_mid = (rx.num_elements as f64 - 1.0) / 2.0;
    let tx_mid = (tx.num_elements as f64 - 1.0) / 2.0;
    let d = params.separation_m;
    let mut dist = nalgebra::DMatrix::zeros(rx.num_elements, tx.num_elements);
    for m in 0..rx.num_elements {
        let z = (m as f64 - rx_mid) * rx_step;
        let (rx_x, rx_z) = (z * omega.cos(), z * omega.sin());
        for n in 0..tx.num_elements {
            let x = (n as f64 - tx_mid) * tx_step;
            let r = ((x - rx_x).powi(2) + d * d + rx_z * rx_z).sqrt();
            if !(r > 0.0) {
                return Err(Error::Geometry(format!(
                    "zero distance between rx element {m} and tx element {n}"
                )));
            }
            dist[(m, n)] = r;
        }
    }
    Ok(dist)
}

/// Near-field LoS self-interference matrix `(ρ / r) exp(-j 2π r / λ)`,
/// normalized to `‖H‖_F² = Nr Nt`.
pub fn si_los_channel(
    params: &SiChannelParams,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
) -> Result<ComplexMatrix> {
    let dist = si_distances(params, rx, tx)?;
    let inv_sq: f64 = dist.iter().map(|r| 1.0 / (r * r)).sum();
    let rho = ((rx.num_elements * tx.num_elements) as f64 / inv_sq).sqrt();
    let k = 2.0 * PI / params.wavelength_m;
    Ok(ComplexMatrix::from_fn(dist.nrows(), dist.ncols(), |m, n| {
        let r = dist[(m, n)];
        Complex64::from_polar(rho / r, -k * r)
    }))
}

/// Rician self-interference channel mixing the LoS matrix with a clustered
/// reflected component.
pub fn draw_si_channel<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SiChannelParams,
    cluster: &ClusterChannelParams,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
) -> Result<ComplexMatrix> {
    let errs = params.validation_errors();
    if !errs.is_empty() {
        return Err(Error::Parameter(errs.join("; ")));
    }
    let los = si_los_channel(params, rx, tx)?;
    let reflected = draw_cluster_channel(rng, cluster, rx, tx)?;
    let kappa = params.rician_factor;
    let w_los = Complex64::new((kappa / (kappa + 1.0)).sqrt(), 0.0);
    let w_ref = Complex64::new((1.0 / (kappa + 1.0)).sqrt(), 0.0);
    Ok(los * w_los + reflected * w_ref)
}

/// All `(2K)²` channels of one realization. Receivers are visited in node
/// order and, for each, transmitters in node order; the RNG is consumed in
/// exactly that order.
pub fn draw_channel_set<R: Rng + ?Sized>(rng: &mut R, config: &SystemConfig) -> Result<ChannelSet> {
    let n = config.num_nodes();
    let mut matrices = Vec::with_capacity(n * n);
    for rx in 0..n {
        let rx_geom = ArrayGeometry::half_wavelength(config.nodes[rx].n_rx);
        for tx in 0..n {
            let tx_geom = ArrayGeometry::half_wavelength(config.nodes[tx].n_tx);
            let h = if rx == tx {
                draw_si_channel(rng, &config.si, &config.cluster, &rx_geom, &tx_geom)?
            } else {
                draw_cluster_channel(rng, &config.cluster, &rx_geom, &tx_geom)?
            };
            matrices.push(h);
        }
    }
    Ok(ChannelSet {
        num_nodes: n,
        matrices,
    })
}
