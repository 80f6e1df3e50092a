//! Receive covariance assembly and the weighted sum-rate objective.
//!
//! For receiver `a` with serving transmitter `p(a)`:
//!
//! ```text
//! R̄ᵃⁿᵗ_a = σ²_a I + Σ_{b ≠ p(a)} H_ab T_b H_abᴴ      (includes b = a, the SI term)
//! Rᵃⁿᵗ_a = R̄ᵃⁿᵗ_a + H_a,p(a) T_p(a) H_a,p(a)ᴴ
//! R_a = F_a Rᵃⁿᵗ_a F_aᴴ,   R̄_a = F_a R̄ᵃⁿᵗ_a F_aᴴ,   S_a = R_a − R̄_a
//! ```

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::config::Network;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_inverse, hermitian_part, identity, logdet_hpd, zeros, ComplexMatrix, RIDGE_EPS,
};

/// Per-node beamforming variables.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBeamformer {
    /// `G`: `n_tx x m_tx`.
    pub analog_tx: ComplexMatrix,
    /// `V`: `m_tx x d`.
    pub digital: ComplexMatrix,
    /// `F`: `m_rx x n_rx`.
    pub analog_rx: ComplexMatrix,
    /// Diagonal of `P`.
    pub power: DVector<f64>,
    pub multiplier: f64,
}

impl NodeBeamformer {
    /// `G V P^{1/2}`, so that `T = W Wᴴ`.
    pub fn effective_precoder(&self) -> Result<ComplexMatrix> {
        let (nt, mt) = self.analog_tx.shape();
        let (mv, d) = self.digital.shape();
        if mt != mv || self.power.len() != d {
            return Err(Error::Dimension(format!(
                "G is {nt}x{mt}, V is {mv}x{d}, P has {} entries",
                self.power.len()
            )));
        }
        let mut w = &self.analog_tx * &self.digital;
        for (k, mut col) in w.column_iter_mut().enumerate() {
            col *= Complex64::new(self.power[k].max(0.0).sqrt(), 0.0);
        }
        Ok(w)
    }

    pub fn streams(&self) -> usize {
        self.digital.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerState {
    pub nodes: Vec<NodeBeamformer>,
}

impl BeamformerState {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// `T = G V P Vᴴ Gᴴ` for one node.
pub fn transmit_covariance(state: &BeamformerState, node: usize) -> Result<ComplexMatrix> {
    let nb = state
        .nodes
        .get(node)
        .ok_or_else(|| Error::Dimension(format!("no node {node}")))?;
    let w = nb.effective_precoder()?;
    Ok(&w * w.adjoint())
}

#[derive(Debug, Clone)]
pub struct ReceiverCovariance {
    pub r: ComplexMatrix,
    pub r_bar: ComplexMatrix,
    pub s: ComplexMatrix,
    pub r_ant: ComplexMatrix,
    pub r_bar_ant: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct CovarianceWorkspace {
    pub receivers: Vec<ReceiverCovariance>,
    /// Ridge used for every inversion/log-determinant of these matrices.
    pub ridge_eps: f64,
}

impl CovarianceWorkspace {
    pub fn num_receivers(&self) -> usize {
        self.receivers.len()
    }
}

fn congruence(h: &ComplexMatrix, t: &ComplexMatrix) -> ComplexMatrix {
    hermitian_part(&(h * t * h.adjoint()))
}

/// Assemble all receive covariances from explicit transmit covariances and
/// analog combiners. `transmit[b]` may be any Hermitian matrix.
pub fn assemble_from_transmit_covariances(
    channels: &ChannelSet,
    transmit: &[ComplexMatrix],
    combiners: &[ComplexMatrix],
    noise: &[f64],
    ridge_eps: f64,
) -> Result<CovarianceWorkspace> {
    let n = channels.num_nodes();
    if transmit.len() != n || combiners.len() != n || noise.len() != n || n % 2 != 0 {
        return Err(Error::Dimension(format!(
            "{n} nodes in the channel set but {} transmit covariances, {} combiners, {} noise levels",
            transmit.len(),
            combiners.len(),
            noise.len()
        )));
    }
    let net = Network { k: n / 2 };
    let mut receivers = Vec::with_capacity(n);
    for a in 0..n {
        let serving = net.partner(a);
        let n_rx = channels.get(a, serving).nrows();
        let f = &combiners[a];
        if f.ncols() != n_rx {
            return Err(Error::Dimension(format!(
                "combiner of node {} has {} columns but the node has {n_rx} receive antennas",
                net.label(a),
                f.ncols()
            )));
        }
        let mut r_bar_ant = identity(n_rx) * Complex64::new(noise[a], 0.0);
        let mut s_ant = zeros(n_rx, n_rx);
        for b in 0..n {
            let h = channels.get(a, b);
            let t = &transmit[b];
            if h.ncols() != t.nrows() || !t.is_square() || h.nrows() != n_rx {
                return Err(Error::Dimension(format!(
                    "channel {}<-{} is {}x{} but transmit covariance is {}x{}",
                    net.label(a),
                    net.label(b),
                    h.nrows(),
                    h.ncols(),
                    t.nrows(),
                    t.ncols()
                )));
            }
            if t.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let term = congruence(h, t);
            if b == serving {
                s_ant += term;
            } else {
                r_bar_ant += term;
            }
        }
        let r_ant = &r_bar_ant + &s_ant;
        let r_bar = congruence(f, &r_bar_ant);
        let s = congruence(f, &s_ant);
        let r = &r_bar + &s;
        receivers.push(ReceiverCovariance {
            r,
            r_bar,
            s,
            r_ant,
            r_bar_ant,
        });
    }
    Ok(CovarianceWorkspace {
        receivers,
        ridge_eps,
    })
}

pub fn assemble_covariances(
    channels: &ChannelSet,
    state: &BeamformerState,
    noise: &[f64],
) -> Result<CovarianceWorkspace> {
    assemble_covariances_with_ridge(channels, state, noise, RIDGE_EPS)
}

pub fn assemble_covariances_with_ridge(
    channels: &ChannelSet,
    state: &BeamformerState,
    noise: &[f64],
    ridge_eps: f64,
) -> Result<CovarianceWorkspace> {
    let transmit = (0..state.num_nodes())
        .map(|b| transmit_covariance(state, b))
        .collect::<Result<Vec<_>>>()?;
    let combiners: Vec<ComplexMatrix> = state.nodes.iter().map(|n| n.analog_rx.clone()).collect();
    assemble_from_transmit_covariances(channels, &transmit, &combiners, noise, ridge_eps)
}

/// `ln det(R̄⁻¹ R)` of every receiver, in nats.
pub fn receiver_rates(workspace: &CovarianceWorkspace) -> Result<Vec<f64>> {
    workspace
        .receivers
        .iter()
        .map(|rc| {
            let eps = workspace.ridge_eps;
            Ok(logdet_hpd(&rc.r, eps, "R")? - logdet_hpd(&rc.r_bar, eps, "R̄")?)
        })
        .collect()
}

/// `ln det(F Rᵃⁿᵗ Fᴴ) − ln det(F R̄ᵃⁿᵗ Fᴴ)` for a candidate combiner `F`.
pub fn combined_rate(rc: &ReceiverCovariance, combiner: &ComplexMatrix, ridge_eps: f64) -> Result<f64> {
    let r = congruence(combiner, &rc.r_ant);
    let r_bar = congruence(combiner, &rc.r_bar_ant);
    Ok(logdet_hpd(&r, ridge_eps, "R")? - logdet_hpd(&r_bar, ridge_eps, "R̄")?)
}

/// `Σ_a w_a ln det(R̄_a⁻¹ R_a)` in nats.
pub fn compute_wsr(workspace: &CovarianceWorkspace, weights: &[f64]) -> Result<f64> {
    if weights.len() != workspace.num_receivers() {
        return Err(Error::Dimension(format!(
            "{} weights for {} receivers",
            weights.len(),
            workspace.num_receivers()
        )));
    }
    let mut total = 0.0;
    for (rc, &w) in workspace.receivers.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let eps = workspace.ridge_eps;
        total += w * (logdet_hpd(&rc.r, eps, "R")? - logdet_hpd(&rc.r_bar, eps, "R̄")?);
    }
    Ok(total)
}

/// Effective channel `F_a H_{a,p(a)} G V P^{1/2}` of the link served at `node`.
pub fn effective_signal_matrix(
    channels: &ChannelSet,
    state: &BeamformerState,
    node: usize,
) -> Result<ComplexMatrix> {
    let net = Network {
        k: channels.num_nodes() / 2,
    };
    let serving = net.partner(node);
    let w = state.nodes[serving].effective_precoder()?;
    Ok(&state.nodes[node].analog_rx * channels.get(node, serving) * w)
}

/// Linear MMSE digital combiner `W = Eᴴ R⁻¹` for the streams received at
/// `node`. Reporting only; rates do not depend on it.
pub fn compute_mmse_digital_combiner(
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    state: &BeamformerState,
    node: usize,
) -> Result<ComplexMatrix> {
    let e = effective_signal_matrix(channels, state, node)?;
    let r_inv = hermitian_inverse(&workspace.receivers[node].r, workspace.ridge_eps, "R")?;
    Ok(e.adjoint() * r_inv)
}

/// Per-stream SINR after MMSE combining, `1 / [I − Eᴴ R⁻¹ E]_kk − 1`.
pub fn per_stream_sinr(
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    state: &BeamformerState,
    node: usize,
) -> Result<Vec<f64>> {
    let e = effective_signal_matrix(channels, state, node)?;
    let w = compute_mmse_digital_combiner(channels, workspace, state, node)?;
    let mse = identity(e.ncols()) - w * e;
    Ok(mse
        .diagonal()
        .iter()
        .map(|m| 1.0 / m.re.max(f64::MIN_POSITIVE) - 1.0)
        .collect())
}
