//! Linearization of the interference-affected rates around the current
//! transmit covariances.
//!
//! For transmitter `b` serving receiver `p(b)`, every other receiver `c`
//! contributes `w_c H_cbᴴ F_cᴴ (R̄_c⁻¹ − R_c⁻¹) F_c H_cb ⪰ 0`, the negative
//! gradient of `w_c ln det(R̄_c⁻¹ R_c)` with respect to `T_b`. The receivers on
//! the far side (other than `p(b)`) make up `Â_b`; those on `b`'s own side,
//! `b` itself included, make up `B̂_b`.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::config::Network;
use crate::covariance::CovarianceWorkspace;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_inverse, hermitian_part, identity, zeros, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub a_hat: ComplexMatrix,
    pub b_hat: ComplexMatrix,
}

impl GradientPair {
    /// `Â + B̂ + λI`.
    pub fn penalty(&self, multiplier: f64) -> ComplexMatrix {
        let n = self.a_hat.nrows();
        &self.a_hat + &self.b_hat + identity(n) * Complex64::new(multiplier, 0.0)
    }
}

/// `w_c F_cᴴ (R̄_c⁻¹ − R_c⁻¹) F_c` for every receiver, at antenna level.
/// Receivers whose rate is identically zero get an exact zero matrix.
pub(crate) fn receiver_sensitivities(
    workspace: &CovarianceWorkspace,
    combiners: &[&ComplexMatrix],
    weights: &[f64],
) -> Result<Vec<ComplexMatrix>> {
    if weights.len() != workspace.num_receivers() || combiners.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} weights and {} combiners for {} receivers",
            weights.len(),
            combiners.len(),
            workspace.num_receivers()
        )));
    }
    workspace
        .receivers
        .iter()
        .zip(combiners)
        .zip(weights)
        .map(|((rc, f), &w)| {
            let n_rx = f.ncols();
            if w == 0.0 || rc.r == rc.r_bar {
                return Ok(zeros(n_rx, n_rx));
            }
            let eps = workspace.ridge_eps;
            let diff = hermitian_inverse(&rc.r_bar, eps, "R̄")? - hermitian_inverse(&rc.r, eps, "R")?;
            Ok(hermitian_part(&(f.adjoint() * diff * *f)) * Complex64::new(w, 0.0))
        })
        .collect()
}

fn gradient_for(
    channels: &ChannelSet,
    sensitivities: &[ComplexMatrix],
    node: usize,
) -> GradientPair {
    let net = Network {
        k: channels.num_nodes() / 2,
    };
    let n_tx = channels.get(0, node).ncols();
    let serving = net.partner(node);
    let mut a_hat = zeros(n_tx, n_tx);
    let mut b_hat = zeros(n_tx, n_tx);
    let add = |acc: &mut ComplexMatrix, c: usize| {
        let e = &sensitivities[c];
        if e.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            return;
        }
        let h = channels.get(c, node);
        *acc += h.adjoint() * e * h;
    };
    for c in net.opposite_side(node) {
        if c != serving {
            add(&mut a_hat, c);
        }
    }
    for c in net.same_side(node) {
        add(&mut b_hat, c);
    }
    GradientPair {
        a_hat: hermitian_part(&a_hat),
        b_hat: hermitian_part(&b_hat),
    }
}

/// Gradient pair of a single transmitter.
pub fn compute_node_gradients(
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    combiners: &[&ComplexMatrix],
    weights: &[f64],
    node: usize,
) -> Result<GradientPair> {
    let sens = receiver_sensitivities(workspace, combiners, weights)?;
    Ok(gradient_for(channels, &sens, node))
}

/// Gradient pairs of every transmitter.
pub fn compute_gradients(
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    state: &crate::covariance::BeamformerState,
    weights: &[f64],
) -> Result<Vec<GradientPair>> {
    let combiners: Vec<&ComplexMatrix> = state.nodes.iter().map(|n| &n.analog_rx).collect();
    let sens = receiver_sensitivities(workspace, &combiners, weights)?;
    Ok((0..channels.num_nodes())
        .map(|b| gradient_for(channels, &sens, b))
        .collect())
}
