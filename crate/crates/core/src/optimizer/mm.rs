//! The outer minorization-maximization loop.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use super::gradients::compute_node_gradients;
use super::power::bisect_multiplier;
use super::updates::{update_analog_beamformer, update_analog_combiner};
use super::{SolverOptions, TrialResult};
use crate::benchmarks::SchemeTag;
use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::covariance::{
    assemble_covariances_with_ridge, combined_rate, compute_wsr, transmit_covariance, BeamformerState,
    CovarianceWorkspace, NodeBeamformer,
};
use crate::error::{Error, Result};
use crate::linalg::{eye, hermitian_gevd, identity, normalize_columns, real_trace, ComplexMatrix};

/// Final state and WSR history of one solver run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub state: BeamformerState,
    /// WSR of the initial point (not part of the trace).
    pub initial_wsr: f64,
    /// WSR after every outer iteration.
    pub trace: Vec<f64>,
}

fn random_phases<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // Drawn column by column so the layout matches nalgebra's storage.
    let mut out = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            out[(i, j)] = Complex64::from_polar(1.0, TAU * rng.random::<f64>());
        }
    }
    out
}

fn check_channels(channels: &ChannelSet, config: &SystemConfig) -> Result<()> {
    let n = config.num_nodes();
    if channels.num_nodes() != n {
        return Err(Error::Dimension(format!(
            "channel set has {} nodes, config has {n}",
            channels.num_nodes()
        )));
    }
    let net = config.network();
    for ((rx, tx), h) in channels.iter() {
        let want = (config.nodes[rx].n_rx, config.nodes[tx].n_tx);
        if h.shape() != want {
            return Err(Error::Dimension(format!(
                "channel {}<-{} is {}x{}, expected {}x{}",
                net.label(rx),
                net.label(tx),
                h.nrows(),
                h.ncols(),
                want.0,
                want.1
            )));
        }
    }
    Ok(())
}

/// Starting point of the loop.
///
/// Hybrid nodes get unit-modulus `G` and `F` with uniform random phases (per
/// node in order: `G`, then `F`); fully digital nodes get identity-shaped
/// ones and consume no randomness. `V` spans the top right singular vectors
/// of the serving link `F H G`, `P` is flat and meets the power budget, and
/// `λ = 1`. Transmitters with `active[b] == false` get zero power.
pub fn initialize_state<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    rng: &mut R,
    hybrid: bool,
    active: &[bool],
) -> Result<BeamformerState> {
    check_channels(channels, config)?;
    let net = config.network();
    let n = config.num_nodes();
    let mut analog: Vec<(ComplexMatrix, ComplexMatrix)> = Vec::with_capacity(n);
    for nc in &config.nodes {
        if hybrid {
            let g = random_phases(rng, nc.n_tx, nc.m_tx);
            let f = random_phases(rng, nc.m_rx, nc.n_rx);
            analog.push((g, f));
        } else {
            analog.push((eye(nc.n_tx, nc.m_tx), eye(nc.m_rx, nc.n_rx)));
        }
    }
    let mut nodes = Vec::with_capacity(n);
    for b in 0..n {
        let nc = &config.nodes[b];
        let p = net.partner(b);
        let (g, _) = &analog[b];
        let link = &analog[p].1 * channels.get(p, b) * g;
        let gram = link.adjoint() * &link;
        let mut v = hermitian_gevd(&gram, &identity(nc.m_tx), nc.streams)?.eigvecs;
        normalize_columns(&mut v);
        let power = if active[b] {
            let gv = g * &v;
            let per_unit: f64 = gv.column_iter().map(|c| c.norm_squared()).sum();
            DVector::from_element(nc.streams, nc.power / per_unit)
        } else {
            DVector::zeros(nc.streams)
        };
        nodes.push(NodeBeamformer {
            analog_tx: g.clone(),
            digital: v,
            analog_rx: analog[b].1.clone(),
            power,
            multiplier: 1.0,
        });
    }
    Ok(BeamformerState { nodes })
}

struct Loop<'a> {
    channels: &'a ChannelSet,
    config: &'a SystemConfig,
    options: &'a SolverOptions,
    hybrid: bool,
    active: &'a [bool],
    noise: Vec<f64>,
    weights: Vec<f64>,
}

impl Loop<'_> {
    fn assemble(&self, state: &BeamformerState) -> Result<CovarianceWorkspace> {
        assemble_covariances_with_ridge(self.channels, state, &self.noise, self.options.ridge_eps)
    }

    fn wsr(&self, state: &BeamformerState) -> Result<f64> {
        compute_wsr(&self.assemble(state)?, &self.weights)
    }

    fn node_gradients(
        &self,
        state: &BeamformerState,
        node: usize,
    ) -> Result<(CovarianceWorkspace, super::GradientPair)> {
        let ws = self.assemble(state)?;
        let combiners: Vec<&ComplexMatrix> = state.nodes.iter().map(|n| &n.analog_rx).collect();
        let grads = compute_node_gradients(self.channels, &ws, &combiners, &self.weights, node)?;
        Ok((ws, grads))
    }

    /// Candidate analog beamformer for `node`, with the node's powers scaled
    /// down if the new beamformer would exceed the budget.
    fn with_analog(&self, state: &BeamformerState, node: usize, g: ComplexMatrix) -> BeamformerState {
        let mut cand = state.clone();
        let nb = &mut cand.nodes[node];
        nb.analog_tx = g;
        let gv = &nb.analog_tx * &nb.digital;
        let used: f64 = gv
            .column_iter()
            .zip(nb.power.iter())
            .map(|(c, p)| p * c.norm_squared())
            .sum();
        let budget = self.config.nodes[node].power;
        if used > budget {
            nb.power *= budget / used;
        }
        cand
    }

    /// One outer iteration. Transmitters are refreshed one at a time with
    /// covariances and gradients recomputed before each node update.
    fn step(&self, state: &mut BeamformerState, mut current: f64) -> Result<()> {
        let net = self.config.network();
        let n = self.config.num_nodes();
        let guard = self.options.analog_safeguard;
        let eps = self.options.ridge_eps;
        if self.hybrid {
            for b in (0..n).filter(|&b| self.active[b]) {
                let (ws, grads) = self.node_gradients(state, b)?;
                let g = update_analog_beamformer(
                    b,
                    self.channels,
                    &ws,
                    &grads,
                    state,
                    self.options.max_kron_dim,
                )?;
                let cand = self.with_analog(state, b, g);
                if guard {
                    let wsr = self.wsr(&cand)?;
                    if wsr >= current {
                        *state = cand;
                        current = wsr;
                    }
                } else {
                    *state = cand;
                }
            }
            let ws = self.assemble(state)?;
            for a in (0..n).filter(|&a| self.active[net.partner(a)]) {
                let f = update_analog_combiner(a, &ws, self.config.nodes[a].m_rx)?;
                let rc = &ws.receivers[a];
                // The combiner only affects its own receiver's rate.
                if !guard || combined_rate(rc, &f, eps)? >= combined_rate(rc, &state.nodes[a].analog_rx, eps)? {
                    state.nodes[a].analog_rx = f;
                }
            }
        }
        for b in (0..n).filter(|&b| self.active[b]) {
            let (ws, grads) = self.node_gradients(state, b)?;
            let weight = self.weights[net.partner(b)];
            let budget = self.config.nodes[b].power;
            let upd = bisect_multiplier(b, self.channels, &ws, &grads, state, self.options, weight, budget)?;
            let nb = &mut state.nodes[b];
            nb.multiplier = upd.multiplier;
            nb.digital = upd.allocation.digital;
            nb.power = upd.allocation.power;
        }
        Ok(())
    }
}

/// Runs the loop from a given state until the relative WSR change drops to
/// `options.wsr_rel_tol` or `options.max_outer_iters` is reached.
pub(crate) fn solve_from(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    mut state: BeamformerState,
    hybrid: bool,
    active: &[bool],
) -> Result<Solution> {
    check_channels(channels, config)?;
    let lp = Loop {
        channels,
        config,
        options,
        hybrid,
        active,
        noise: config.noise(),
        weights: config.weights(),
    };
    let initial_wsr = lp.wsr(&state)?;
    let mut prev = initial_wsr;
    let mut trace = Vec::new();
    for iteration in 1..=options.max_outer_iters {
        let wsr = lp
            .step(&mut state, prev)
            .and_then(|_| lp.wsr(&state))
            .map_err(|e| e.at_iteration(iteration))?;
        trace.push(wsr);
        if (wsr - prev).abs() <= options.wsr_rel_tol * wsr.abs() {
            break;
        }
        prev = wsr;
    }
    Ok(Solution {
        state,
        initial_wsr,
        trace,
    })
}

pub(crate) fn solve<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
    hybrid: bool,
    active: &[bool],
) -> Result<Solution> {
    let state = initialize_state(channels, config, rng, hybrid, active)?;
    solve_from(channels, config, options, state, hybrid, active)
}

pub(crate) fn node_powers(state: &BeamformerState) -> Result<Vec<f64>> {
    (0..state.num_nodes())
        .map(|b| transmit_covariance(state, b).map(|t| real_trace(&t)))
        .collect()
}

pub(crate) fn snr_of(config: &SystemConfig) -> f64 {
    let node = &config.nodes[0];
    10.0 * (node.power / node.noise).log10()
}

pub(crate) fn trial_result(scheme: SchemeTag, config: &SystemConfig, sol: &Solution) -> Result<TrialResult> {
    Ok(TrialResult {
        scheme,
        seed: 0,
        snr_db: snr_of(config),
        wsr_trace: sol.trace.clone(),
        final_wsr: sol.trace.last().copied().unwrap_or(sol.initial_wsr),
        iterations: sol.trace.len(),
        final_powers: node_powers(&sol.state)?,
    })
}

/// Hybrid beamforming and combining on one channel realization.
pub fn run_hybf<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<TrialResult> {
    let sol = run_hybf_with_state(channels, config, options, rng)?;
    trial_result(SchemeTag::Hybf, config, &sol)
}

/// As [`run_hybf`], returning the final beamformers as well.
pub fn run_hybf_with_state<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<Solution> {
    let active = vec![true; config.num_nodes()];
    solve(channels, config, options, rng, true, &active)
}
