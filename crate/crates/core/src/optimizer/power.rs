//! Per-stream power allocation and the bisection on the power multiplier λ.

use nalgebra::DVector;

use super::gradients::GradientPair;
use super::updates::{signal_gram, DigitalPencil, SigmaPair};
use super::SolverOptions;
use crate::channel::ChannelSet;
use crate::covariance::{BeamformerState, CovarianceWorkspace};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_inverse_floored, positive_part_diag, real_trace, ComplexMatrix};

const MAX_DOUBLINGS: usize = 60;
const MAX_BISECTIONS: usize = 200;
/// Brackets narrower than this (absolute) are treated as converged; λ values
/// this small are indistinguishable from an inactive constraint.
const MIN_BRACKET: f64 = 1e-14;

/// `diag⁺(w Σ₂⁻¹ − Σ₁⁻¹)`. A signal matrix with zero trace gets zero power.
pub fn update_power_allocation(sigma: &SigmaPair, weight: f64, ridge_eps: f64) -> Result<DVector<f64>> {
    let d = sigma.first.nrows();
    if sigma.second.nrows() != d || !sigma.first.is_square() || !sigma.second.is_square() {
        return Err(Error::Dimension(format!(
            "Σ₁ is {}x{}, Σ₂ is {}x{}",
            sigma.first.nrows(),
            sigma.first.ncols(),
            sigma.second.nrows(),
            sigma.second.ncols()
        )));
    }
    if real_trace(&sigma.first) <= 0.0 {
        return Ok(DVector::zeros(d));
    }
    let inv1 = hermitian_inverse_floored(&sigma.first, ridge_eps, "Σ₁")?;
    let inv2 = hermitian_inverse_floored(&sigma.second, ridge_eps, "Σ₂")?;
    positive_part_diag(&(inv2 * num_complex::Complex64::new(weight, 0.0) - inv1))
}

/// Beamformer and powers obtained at one multiplier value.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub digital: ComplexMatrix,
    pub power: DVector<f64>,
    /// `Tr(G V P Vᴴ Gᴴ)`.
    pub transmit_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub multiplier: f64,
    pub transmit_power: f64,
}

#[derive(Debug, Clone)]
pub struct MultiplierUpdate {
    pub multiplier: f64,
    pub allocation: Allocation,
    /// Every evaluated (λ, power) pair in evaluation order.
    pub path: Vec<BisectionStep>,
}

/// Finds λ ≥ 0 meeting the power budget for a transmit power that is
/// nonincreasing in λ. `eval` returns `None` where the problem is unbounded
/// (only meaningful at λ = 0).
pub fn bisect_power<F>(mut eval: F, budget: f64, tol: f64, growth: f64, node: usize) -> Result<MultiplierUpdate>
where
    F: FnMut(f64) -> Result<Option<Allocation>>,
{
    let mut path = Vec::new();
    let record = |path: &mut Vec<BisectionStep>, lambda: f64, a: &Allocation| {
        path.push(BisectionStep {
            multiplier: lambda,
            transmit_power: a.transmit_power,
        })
    };
    let upper = budget * (1.0 + tol);
    let lower = budget * (1.0 - tol);

    if let Some(a) = eval(0.0)? {
        record(&mut path, 0.0, &a);
        if a.transmit_power <= upper {
            return Ok(MultiplierUpdate {
                multiplier: 0.0,
                allocation: a,
                path,
            });
        }
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    let mut best = loop {
        let a = eval(hi)?;
        if let Some(a) = a {
            record(&mut path, hi, &a);
            if a.transmit_power <= upper {
                break a;
            }
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Divergence { node, doublings });
        }
        lo = hi;
        hi *= growth;
        doublings += 1;
    };

    for _ in 0..MAX_BISECTIONS {
        if best.transmit_power >= lower || hi - lo <= MIN_BRACKET.max(4.0 * f64::EPSILON * hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let a = match eval(mid)? {
            Some(a) => a,
            None => {
                lo = mid;
                continue;
            }
        };
        record(&mut path, mid, &a);
        if a.transmit_power > upper {
            lo = mid;
        } else {
            hi = mid;
            best = a;
        }
    }
    // The digital beamformer is recomputed at every λ, so the power can jump
    // where the selected eigenvectors switch. If the bracket closed on such a
    // jump, stretch the feasible side onto the budget.
    if best.transmit_power < lower && best.transmit_power > 0.0 {
        let scale = budget / best.transmit_power;
        best.power *= scale;
        best.transmit_power = budget;
    }
    Ok(MultiplierUpdate {
        multiplier: hi,
        allocation: best,
        path,
    })
}

/// Jointly recomputes the digital beamformer and powers of `node` while
/// bisecting its multiplier, with the gradients held fixed.
#[allow(clippy::too_many_arguments)]
pub fn bisect_multiplier(
    node: usize,
    channels: &ChannelSet,
    workspace: &CovarianceWorkspace,
    grads: &GradientPair,
    state: &BeamformerState,
    options: &SolverOptions,
    weight: f64,
    budget: f64,
) -> Result<MultiplierUpdate> {
    let nb = &state.nodes[node];
    let streams = nb.streams();
    let q = signal_gram(channels, workspace, state, node)?;
    let pencil = DigitalPencil::new(&nb.analog_tx, &q, grads);
    let eps = options.ridge_eps;
    let eval = |lambda: f64| -> Result<Option<Allocation>> {
        if lambda == 0.0 && pencil.penalty_free() {
            return Ok(None);
        }
        let digital = match pencil.beamformer(streams, lambda, eps) {
            Ok(v) => v,
            Err(Error::Conditioning { .. }) if lambda == 0.0 => return Ok(None),
            Err(e) => return Err(e),
        };
        let sigma = pencil.sigma(&digital, lambda);
        let mut power = match update_power_allocation(&sigma, weight, eps) {
            Ok(p) => p,
            Err(Error::Conditioning { .. }) if lambda == 0.0 => return Ok(None),
            Err(e) => return Err(e),
        };
        // Streams outside the range of G radiate nothing.
        power.rows_mut(pencil.rank().min(streams), streams.saturating_sub(pencil.rank())).fill(0.0);
        let transmit_power = pencil.transmit_power(&digital, &power);
        Ok(Some(Allocation {
            digital,
            power,
            transmit_power,
        }))
    };
    bisect_power(eval, budget, options.bisection_tol, options.multiplier_growth, node)
}
