//! Minorization-maximization optimizer for hybrid beamforming and combining.

pub mod gradients;
pub(crate) mod mm;
pub mod power;
pub mod updates;

use serde::{Deserialize, Serialize};

use crate::benchmarks::SchemeTag;

pub use gradients::{compute_gradients, compute_node_gradients, GradientPair};
pub use mm::{initialize_state, run_hybf, run_hybf_with_state, Solution};
pub use power::{bisect_multiplier, bisect_power, update_power_allocation, Allocation, BisectionStep, MultiplierUpdate};
pub use updates::{
    compute_sigma_matrices, update_analog_beamformer, update_analog_combiner, update_digital_beamformer,
    SigmaPair,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    /// Stop once `|ΔWSR| ≤ wsr_rel_tol · |WSR|`.
    pub wsr_rel_tol: f64,
    /// Relative band on the per-node transmit power accepted by the bisection.
    pub bisection_tol: f64,
    pub multiplier_growth: f64,
    pub ridge_eps: f64,
    /// Largest `n_tx · m_tx` for which the analog update may build its
    /// Kronecker pencil.
    pub max_kron_dim: usize,
    /// Keep a phase-projected analog beamformer or combiner only if it does
    /// not lower the objective it was computed for.
    pub analog_safeguard: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer_iters: 200,
            wsr_rel_tol: 1e-4,
            bisection_tol: 1e-10,
            multiplier_growth: 2.0,
            ridge_eps: 1e-10,
            max_kron_dim: 1024,
            analog_safeguard: true,
        }
    }
}

impl SolverOptions {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.max_outer_iters == 0 {
            errs.push("solver.max_outer_iters must be >= 1".to_string());
        }
        for (name, v) in [
            ("wsr_rel_tol", self.wsr_rel_tol),
            ("bisection_tol", self.bisection_tol),
            ("ridge_eps", self.ridge_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("solver.{name} must be > 0, got {v}"));
            }
        }
        if !(self.multiplier_growth > 1.0 && self.multiplier_growth.is_finite()) {
            errs.push(format!(
                "solver.multiplier_growth must be > 1, got {}",
                self.multiplier_growth
            ));
        }
        if self.max_kron_dim == 0 {
            errs.push("solver.max_kron_dim must be >= 1".to_string());
        }
        errs
    }
}

/// Outcome of one scheme on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub scheme: SchemeTag,
    /// Seed of the realization; the solvers leave it at 0 and the harness
    /// fills it in.
    pub seed: u64,
    pub snr_db: f64,
    /// WSR after every outer iteration, in nats.
    pub wsr_trace: Vec<f64>,
    pub final_wsr: f64,
    pub iterations: usize,
    /// `Tr(T_b)` of every node at exit.
    pub final_powers: Vec<f64>,
}
