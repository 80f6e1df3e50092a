//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the factorizations used by the library: eigenvalues
//! come from a complex Schur form of `B⁻¹A` (LU solve), eigenvectors from SVD
//! null vectors, log-determinants from LU.
#![allow(dead_code)]

use fdhybf::channel::ChannelSet;
use fdhybf::linalg::ComplexMatrix;
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

/// `X Xᴴ + shift I` with `X` of size `n x (n + extra)`.
pub fn random_hpd<R: Rng>(rng: &mut R, n: usize, shift: f64) -> ComplexMatrix {
    let x = random_matrix(rng, n, n + 2);
    &x * x.adjoint() + ComplexMatrix::identity(n, n) * Complex64::new(shift, 0.0)
}

/// Hermitian PSD of the given rank.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let x = random_matrix(rng, n, rank);
    &x * x.adjoint()
}

pub fn random_channels<R: Rng>(rng: &mut R, k: usize, n_rx: usize, n_tx: usize) -> ChannelSet {
    ChannelSet::from_fn(2 * k, |_, _| random_matrix(rng, n_rx, n_tx))
}

pub fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// All eigenvalues of `B⁻¹A` (real parts), descending.
pub fn brute_force_eigvals(a: &ComplexMatrix, b: &ComplexMatrix) -> Vec<f64> {
    let m = b.clone().lu().solve(a).expect("B invertible");
    let (_, t) = Schur::new(m).unpack();
    let mut vals: Vec<f64> = t.diagonal().iter().map(|z| z.re).collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Right singular vector of the smallest singular value of `m`.
pub fn null_vector(m: &ComplexMatrix) -> nalgebra::DVector<Complex64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .unwrap();
    v_t.row(idx).adjoint()
}

/// Top-`d` eigenvectors of `B⁻¹A` as null vectors of `B⁻¹A − μI`.
pub fn brute_force_eigvecs(a: &ComplexMatrix, b: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let m = b.clone().lu().solve(a).expect("B invertible");
    let vals = brute_force_eigvals(a, b);
    let n = a.nrows();
    let mut out = ComplexMatrix::zeros(n, d);
    for k in 0..d {
        let shifted = &m - ComplexMatrix::identity(n, n) * Complex64::new(vals[k], 0.0);
        out.set_column(k, &null_vector(&shifted));
    }
    out
}

fn orthonormal_basis(x: &ComplexMatrix) -> ComplexMatrix {
    x.clone().qr().q()
}

/// Sine of the largest principal angle between the column spans.
pub fn subspace_sin(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    let qx = orthonormal_basis(x);
    let qy = orthonormal_basis(y);
    let n = qx.nrows();
    let resid = (ComplexMatrix::identity(n, n) - &qx * qx.adjoint()) * qy;
    resid.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// `M + eps (tr M / n) I`, written out independently of the library.
pub fn ridged(m: &ComplexMatrix, eps: f64) -> ComplexMatrix {
    let n = m.nrows();
    let tr: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    m + ComplexMatrix::identity(n, n) * Complex64::new(eps * tr / n as f64, 0.0)
}

/// `ln |det M|` from an LU factorization.
pub fn ln_det(m: &ComplexMatrix) -> f64 {
    m.clone().lu().determinant().norm().ln()
}

/// Weighted sum rate by explicit summation, using LU determinants.
///
/// `transmit[b]` is node `b`'s transmit covariance, `combiners[a]` receiver
/// `a`'s analog combiner. Node `a` is served by `(a + K) mod 2K`.
pub fn wsr_oracle(
    channels: &ChannelSet,
    transmit: &[ComplexMatrix],
    combiners: &[ComplexMatrix],
    noise: &[f64],
    weights: &[f64],
    eps: f64,
) -> f64 {
    let n = channels.num_nodes();
    let k = n / 2;
    let mut total = 0.0;
    for a in 0..n {
        let serving = (a + k) % n;
        let nr = channels.get(a, 0).nrows();
        let mut interference = DMatrix::<Complex64>::identity(nr, nr) * Complex64::new(noise[a], 0.0);
        let mut signal = DMatrix::<Complex64>::zeros(nr, nr);
        for b in 0..n {
            let h = channels.get(a, b);
            let term = h * &transmit[b] * h.adjoint();
            if b == serving {
                signal += term;
            } else {
                interference += term;
            }
        }
        let f = &combiners[a];
        let r_bar = f * &interference * f.adjoint();
        let r = f * (&interference + &signal) * f.adjoint();
        total += weights[a] * (ln_det(&ridged(&r, eps)) - ln_det(&ridged(&r_bar, eps)));
    }
    total
}

/// Classical water-filling by active-set search: `p_k = max(0, ν − 1/γ_k)`
/// with `Σ p_k = budget`. Returns the powers and the water level `ν`.
pub fn water_fill(gains: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let mut floors: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
    floors.sort_by(|x, y| x.total_cmp(y));
    let mut level = f64::NAN;
    for active in (1..=floors.len()).rev() {
        let nu = (budget + floors[..active].iter().sum::<f64>()) / active as f64;
        if nu > floors[active - 1] {
            level = nu;
            break;
        }
    }
    (gains.iter().map(|g| (level - 1.0 / g).max(0.0)).collect(), level)
}

/// Central finite-difference gradient of `f` with respect to the Hermitian
/// matrix argument at `t`, assembled entry by entry from Hermitian
/// perturbation directions (diagonal, real-symmetric, imaginary-antisymmetric).
pub fn fd_hermitian_gradient(t: &ComplexMatrix, step: f64, mut f: impl FnMut(&ComplexMatrix) -> f64) -> ComplexMatrix {
    let n = t.nrows();
    let mut grad = ComplexMatrix::zeros(n, n);
    let mut diff = |dir: &ComplexMatrix| {
        let plus = t + dir * Complex64::new(step, 0.0);
        let minus = t - dir * Complex64::new(step, 0.0);
        (f(&plus) - f(&minus)) / (2.0 * step)
    };
    for i in 0..n {
        for j in i..n {
            let mut sym = ComplexMatrix::zeros(n, n);
            if i == j {
                sym[(i, i)] = Complex64::new(1.0, 0.0);
                grad[(i, i)] = Complex64::new(diff(&sym), 0.0);
                continue;
            }
            sym[(i, j)] = Complex64::new(1.0, 0.0);
            sym[(j, i)] = Complex64::new(1.0, 0.0);
            let mut anti = ComplexMatrix::zeros(n, n);
            anti[(i, j)] = Complex64::new(0.0, 1.0);
            anti[(j, i)] = Complex64::new(0.0, -1.0);
            // tr(G Δ_sym) = 2 Re G_ij, tr(G Δ_anti) = 2 Im G_ij.
            let g = Complex64::new(diff(&sym), diff(&anti)) * 0.5;
            grad[(i, j)] = g;
            grad[(j, i)] = g.conj();
        }
    }
    grad
}

/// Receivers whose rates make up `Â_b` (far side without the partner) and
/// `B̂_b` (own side, `b` included), from plain index arithmetic.
pub fn gradient_receiver_sets(k: usize, b: usize) -> (Vec<usize>, Vec<usize>) {
    let left = b < k;
    let partner = (b + k) % (2 * k);
    let far: Vec<usize> = (0..2 * k).filter(|&c| (c < k) != left && c != partner).collect();
    let near: Vec<usize> = (0..2 * k).filter(|&c| (c < k) == left).collect();
    (far, near)
}

/// Relative errors of `−Â_b` and `−B̂_b` against finite differences of the
/// corresponding partial sum rates with respect to `T_b`. `None` marks an
/// empty receiver set.
pub fn gradient_fd_errors(
    channels: &ChannelSet,
    state: &fdhybf::covariance::BeamformerState,
    noise: &[f64],
    weights: &[f64],
    node: usize,
) -> (Option<f64>, Option<f64>) {
    use fdhybf::covariance::{assemble_covariances, transmit_covariance};
    let n = channels.num_nodes();
    let ws = assemble_covariances(channels, state, noise).unwrap();
    let grads = fdhybf::optimizer::compute_gradients(channels, &ws, state, weights).unwrap();
    let transmit: Vec<ComplexMatrix> = (0..n).map(|b| transmit_covariance(state, b).unwrap()).collect();
    let combiners: Vec<ComplexMatrix> = state.nodes.iter().map(|nb| nb.analog_rx.clone()).collect();
    let (far, near) = gradient_receiver_sets(n / 2, node);
    let err = |set: &[usize], analytic: &ComplexMatrix| -> Option<f64> {
        if set.is_empty() {
            return None;
        }
        let w: Vec<f64> = (0..n).map(|c| if set.contains(&c) { weights[c] } else { 0.0 }).collect();
        let fd = fd_hermitian_gradient(&transmit[node], 1e-5, |t| {
            let mut tx = transmit.clone();
            tx[node] = t.clone();
            wsr_oracle(channels, &tx, &combiners, noise, &w, 0.0)
        });
        let neg = -analytic.clone();
        Some(rel_err(&fd, &neg))
    };
    (err(&far, &grads[node].a_hat), err(&near, &grads[node].b_hat))
}
