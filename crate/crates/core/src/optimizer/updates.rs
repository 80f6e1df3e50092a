//! Generalized-eigenvector updates of the digital beamformer, the analog
//! beamformer and the analog combiner, plus the Σ matrices used by power
//! allocation.

use num_complex::Complex64;

use super::gradients::GradientPair;
use crate::channel::ChannelSet;
use crate::config::Network;
use crate::covariance::{BeamformerState, CovarianceWorkspace};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_gevd_with_ridge, hermitian_inverse, hermitian_part, kron, kronecker_gevd_top, normalize_columns,
    phase_project, real_trace, unvec, ComplexMatrix,
};

/// `Q_b = H_{p,b}ᴴ F_pᴴ R̄_p⁻¹ F_p H_{p,b}`, the whitened signal Gram seen by
/// transmitter `b` at its partner `p`.
pub fn signal_gram(
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    state: &BeamformerState,
    node: usize,
) -> Result<ComplexMatrix> {
    let net = Network {
        k: channels.num_nodes() / 2,
    };
    let rx = net.partner(node);
    let fh = &state.nodes[rx].analog_rx * channels.get(rx, node);
    let r_bar_inv = hermitian_inverse(&workspace.receivers[rx].r_bar, workspace.ridge_eps, "R̄")?;
    Ok(hermitian_part(&(fh.adjoint() * r_bar_inv * fh)))
}

/// Singular values of `G` below this fraction of the largest are treated as
/// zero when restricting the digital pencil to the range of `G`.
const RANGE_RTOL: f64 = 1e-8;

/// The digital-stage pencil of one transmitter, `(Gᴴ Q G, Gᴴ (Â + B̂ + λI) G)`.
///
/// After phase projection `G` is often close to rank one, and forming the
/// pencil directly would square its conditioning. With `G = U Σ Wᴴ` the
/// pencil is solved in range coordinates as `(Uᴴ Q U, Uᴴ (Â + B̂) U + λI)`
/// and mapped back through `V = W Σ⁻¹ Y`; the eigenvectors are the same.
#[derive(Debug, Clone)]
pub struct DigitalPencil {
    analog: ComplexMatrix,
    signal_gram: ComplexMatrix,
    penalty_gram: ComplexMatrix,
    /// `W Σ⁻¹` restricted to the numerical range.
    back: ComplexMatrix,
    /// Digital directions annihilated by `G`.
    null: ComplexMatrix,
    signal: ComplexMatrix,
    penalty0: ComplexMatrix,
}

impl DigitalPencil {
    pub fn new(analog: &ComplexMatrix, signal_gram: &ComplexMatrix, grads: &GradientPair) -> Self {
        let m = analog.ncols();
        let svd = analog.clone().svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let w = svd.v_t.expect("right singular vectors requested").adjoint();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let top = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
        let kept: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| svd.singular_values[i] > RANGE_RTOL * top)
            .collect();
        let range = ComplexMatrix::from_fn(analog.nrows(), kept.len(), |r, c| u[(r, kept[c])]);
        let back = ComplexMatrix::from_fn(m, kept.len(), |r, c| {
            w[(r, kept[c])] / Complex64::new(svd.singular_values[kept[c]], 0.0)
        });
        // The full right basis spans the rest: columns of W outside the range,
        // plus any left over when G is wide.
        let null_cols: Vec<usize> = (0..w.ncols()).filter(|i| !kept.contains(i)).collect();
        let null = ComplexMatrix::from_fn(m, null_cols.len(), |r, c| w[(r, null_cols[c])]);
        let penalty_gram = &grads.a_hat + &grads.b_hat;
        Self {
            signal: hermitian_part(&(range.adjoint() * signal_gram * &range)),
            penalty0: hermitian_part(&(range.adjoint() * &penalty_gram * &range)),
            analog: analog.clone(),
            signal_gram: signal_gram.clone(),
            penalty_gram,
            back,
            null,
        }
    }

    /// Dimension of the numerical range of `G`.
    pub fn rank(&self) -> usize {
        self.back.ncols()
    }

    /// True when the gradients put no cost on any direction `G` can reach.
    pub fn penalty_free(&self) -> bool {
        real_trace(&self.penalty0) <= 0.0
    }

    /// `Gᴴ (Â + B̂ + λI) G`.
    pub fn penalty(&self, multiplier: f64) -> ComplexMatrix {
        let gh = self.analog.adjoint();
        hermitian_part(&(&gh * &self.penalty_gram * &self.analog + &gh * &self.analog * Complex64::new(multiplier, 0.0)))
    }

    /// Dominant `d` generalized eigenvectors, columns scaled to unit norm.
    /// Streams beyond the rank of `G` get directions `G` cannot radiate.
    pub fn beamformer(&self, streams: usize, multiplier: f64, ridge_eps: f64) -> Result<ComplexMatrix> {
        let r = self.rank();
        let used = streams.min(r);
        let mut v = ComplexMatrix::zeros(self.analog.ncols(), streams);
        if used > 0 {
            let b = &self.penalty0 + ComplexMatrix::identity(r, r) * Complex64::new(multiplier, 0.0);
            let gevd = hermitian_gevd_with_ridge(&self.signal, &b, used, ridge_eps)?;
            v.columns_mut(0, used).copy_from(&(&self.back * gevd.eigvecs));
        }
        for k in used..streams {
            v.set_column(k, &self.null.column(k - used));
        }
        normalize_columns(&mut v);
        Ok(v)
    }

    /// `Σ₁ = Vᴴ Gᴴ Q G V` and `Σ₂ = Vᴴ Gᴴ (Â + B̂ + λI) G V`, formed from
    /// `G V` directly.
    pub fn sigma(&self, digital: &ComplexMatrix, multiplier: f64) -> SigmaPair {
        let x = &self.analog * digital;
        let xh = x.adjoint();
        SigmaPair {
            first: hermitian_part(&(&xh * &self.signal_gram * &x)),
            second: hermitian_part(&(&xh * &self.penalty_gram * &x + &xh * &x * Complex64::new(multiplier, 0.0))),
        }
    }

    /// `Tr(G V P Vᴴ Gᴴ)`.
    pub fn transmit_power(&self, digital: &ComplexMatrix, power: &nalgebra::DVector<f64>) -> f64 {
        (&self.analog * digital)
            .column_iter()
            .zip(power.iter())
            .map(|(c, p)| p * c.norm_squared())
            .sum()
    }
}

pub fn update_digital_beamformer(
    node: usize,
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    grads: &GradientPair,
    state: &BeamformerState,
) -> Result<ComplexMatrix> {
    let nb = &state.nodes[node];
    let q = signal_gram(channels, workspace, state, node)?;
    DigitalPencil::new(&nb.analog_tx, &q, grads).beamformer(nb.streams(), nb.multiplier, workspace.ridge_eps)
}

/// Kronecker-structured pencil of the vectorized analog beamformer:
///
/// ```text
/// A = (W (I + Wᴴ Gᴴ Q G W)⁻¹ Wᴴ)ᵀ ⊗ Q,   B = (W Wᴴ)ᵀ ⊗ (Â + B̂ + λI)
/// ```
///
/// with `W = V P^{1/2}` the power-loaded digital beamformer.
pub fn kronecker_analog_pencil(
    signal_gram: &ComplexMatrix,
    penalty: &ComplexMatrix,
    analog: &ComplexMatrix,
    loaded_digital: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (x, y) = analog_pencil_factors(signal_gram, analog, loaded_digital)?;
    let a = hermitian_part(&kron(&x.transpose(), signal_gram));
    let b = hermitian_part(&kron(&y.transpose(), penalty));
    Ok((a, b))
}

/// The `M x M` left factors `X` and `Y` of the analog pencil.
fn analog_pencil_factors(
    signal_gram: &ComplexMatrix,
    analog: &ComplexMatrix,
    loaded_digital: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let w = loaded_digital;
    let d = w.ncols();
    let inner = ComplexMatrix::identity(d, d) + w.adjoint() * analog.adjoint() * signal_gram * analog * w;
    let inner_inv = hermitian_inverse(&hermitian_part(&inner), 0.0, "I + WᴴGᴴQGW")?;
    let x = hermitian_part(&(w * inner_inv * w.adjoint()));
    let y = hermitian_part(&(w * w.adjoint()));
    Ok((x, y))
}

/// Dominant generalized eigenvector of the vectorized pencil, reshaped to
/// `n_tx x m_tx` and projected onto unit-modulus entries.
pub fn analog_from_pencil(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    n_tx: usize,
    m_tx: usize,
    ridge_eps: f64,
) -> Result<ComplexMatrix> {
    let gevd = hermitian_gevd_with_ridge(a, b, 1, ridge_eps)?;
    let g = unvec(&gevd.eigvecs.column(0).into_owned(), n_tx, m_tx)?;
    Ok(phase_project(&g))
}

pub fn update_analog_beamformer(
    node: usize,
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    grads: &GradientPair,
    state: &BeamformerState,
    max_kron_dim: usize,
) -> Result<ComplexMatrix> {
    let nb = &state.nodes[node];
    let (n_tx, m_tx) = nb.analog_tx.shape();
    let dim = n_tx * m_tx;
    if dim > max_kron_dim {
        return Err(Error::Size {
            dim,
            cap: max_kron_dim,
        });
    }
    let mut loaded = nb.digital.clone();
    for (k, mut col) in loaded.column_iter_mut().enumerate() {
        col *= Complex64::new(nb.power[k].max(0.0).sqrt(), 0.0);
    }
    let penalty = grads.penalty(nb.multiplier);
    if real_trace(&penalty) <= 0.0 || loaded.iter().all(|z| z.norm() == 0.0) {
        // Nothing transmitted or no cost on transmit power: the pencil is
        // degenerate and carries no information about G.
        return Ok(nb.analog_tx.clone());
    }
    let q = signal_gram(channels, workspace, state, node)?;
    let (x, y) = analog_pencil_factors(&q, &nb.analog_tx, &loaded)?;
    let top = kronecker_gevd_top(&x.transpose(), &q, &y.transpose(), &penalty, workspace.ridge_eps)?;
    let g = unvec(&top.eigvecs.column(0).into_owned(), n_tx, m_tx)?;
    Ok(phase_project(&g))
}

/// Rows are the conjugated top-`m_rx` generalized eigenvectors of
/// `(Rᵃⁿᵗ, R̄ᵃⁿᵗ)`, projected onto unit-modulus entries.
pub fn update_analog_combiner(
    node: usize,
    workspace: &CovarianceWorkspace,
    m_rx: usize,
) -> Result<ComplexMatrix> {
    let rc = &workspace.receivers[node];
    let gevd = hermitian_gevd_with_ridge(&rc.r_ant, &rc.r_bar_ant, m_rx, workspace.ridge_eps)?;
    Ok(phase_project(&gevd.eigvecs.adjoint()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPair {
    /// `Vᴴ Gᴴ Q G V`.
    pub first: ComplexMatrix,
    /// `Vᴴ Gᴴ (Â + B̂ + λI) G V`.
    pub second: ComplexMatrix,
}

pub fn compute_sigma_matrices(
    node: usize,
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    grads: &GradientPair,
    state: &BeamformerState,
) -> Result<SigmaPair> {
    let nb = &state.nodes[node];
    let q = signal_gram(channels, workspace, state, node)?;
    let pencil = DigitalPencil::new(&nb.analog_tx, &q, grads);
    Ok(pencil.sigma(&nb.digital, nb.multiplier))
}
