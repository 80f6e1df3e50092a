mod common;

use common::*;
use fdhybf::channel::ChannelSet;
use fdhybf::covariance::*;
use fdhybf::linalg::*;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

fn random_state<R: Rng>(g: &mut R, k: usize, n: usize, m: usize, d: usize) -> BeamformerState {
    BeamformerState {
        nodes: (0..2 * k)
            .map(|_| NodeBeamformer {
                analog_tx: phase_project(&random_matrix(g, n, m)),
                digital: random_matrix(g, m, d),
                analog_rx: phase_project(&random_matrix(g, m, n)),
                power: DVector::from_fn(d, |_, _| g.random_range(0.1..1.0)),
                multiplier: 1.0,
            })
            .collect(),
    }
}

#[test]
fn assembled_covariance_matches_monte_carlo() {
    let mut g = rng(31);
    let (k, n, m, d) = (2, 4, 3, 2);
    let channels = random_channels(&mut g, k, n, n);
    let state = random_state(&mut g, k, n, m, d);
    let noise = vec![0.3, 0.5, 0.2, 0.4];
    let ws = assemble_covariances(&channels, &state, &noise).unwrap();
    let precoders: Vec<ComplexMatrix> = state.nodes.iter().map(|nb| nb.effective_precoder().unwrap()).collect();

    let draws = 100_000;
    for a in 0..2 * k {
        let f = &state.nodes[a].analog_rx;
        let mut acc = ComplexMatrix::zeros(m, m);
        for _ in 0..draws {
            let mut y = DVector::from_fn(n, |_, _| cgauss(&mut g) * noise[a].sqrt());
            for (b, w) in precoders.iter().enumerate() {
                let s = DVector::from_fn(d, |_, _| cgauss(&mut g));
                y += channels.get(a, b) * (w * s);
            }
            let r = f * y;
            acc += &r * r.adjoint();
        }
        let empirical = acc / Complex64::new(draws as f64, 0.0);
        let err = rel_err(&empirical, &ws.receivers[a].r);
        assert!(err < 0.03, "receiver {a}: {err}");
    }
}

#[test]
fn wsr_matches_determinant_oracle() {
    let mut g = rng(32);
    for trial in 0..10 {
        let k = 1 + trial % 2;
        let channels = random_channels(&mut g, k, 4, 4);
        let state = random_state(&mut g, k, 4, 2, 1 + trial % 2);
        let noise: Vec<f64> = (0..2 * k).map(|_| g.random_range(0.1..2.0)).collect();
        let weights: Vec<f64> = (0..2 * k).map(|_| g.random_range(0.0..2.0)).collect();
        let ws = assemble_covariances(&channels, &state, &noise).unwrap();
        let got = compute_wsr(&ws, &weights).unwrap();
        let transmit: Vec<_> = (0..2 * k).map(|b| transmit_covariance(&state, b).unwrap()).collect();
        let combiners: Vec<_> = state.nodes.iter().map(|nb| nb.analog_rx.clone()).collect();
        let want = wsr_oracle(&channels, &transmit, &combiners, &noise, &weights, RIDGE_EPS);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn silent_transmitters_leave_exact_zero_rates() {
    let mut g = rng(33);
    let channels = random_channels(&mut g, 2, 3, 3);
    let mut state = random_state(&mut g, 2, 3, 2, 1);
    for nb in &mut state.nodes {
        nb.power.fill(0.0);
    }
    let ws = assemble_covariances(&channels, &state, &[1.0; 4]).unwrap();
    for rc in &ws.receivers {
        assert_eq!(rc.r, rc.r_bar);
        assert!(rc.s.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }
    assert_eq!(compute_wsr(&ws, &[1.0; 4]).unwrap(), 0.0);
}

#[test]
fn self_interference_enters_only_the_interference_covariance() {
    let mut g = rng(34);
    let channels = random_channels(&mut g, 1, 3, 3);
    let state = random_state(&mut g, 1, 3, 3, 1);
    let mut no_si = channels.clone();
    no_si.zero_self_interference();
    let with = assemble_covariances(&channels, &state, &[1.0, 1.0]).unwrap();
    let without = assemble_covariances(&no_si, &state, &[1.0, 1.0]).unwrap();
    for a in 0..2 {
        assert!(rel_err(&with.receivers[a].s, &without.receivers[a].s) < 1e-14);
        let si = &with.receivers[a].r_bar_ant - &without.receivers[a].r_bar_ant;
        let h = channels.get(a, a);
        let t = transmit_covariance(&state, a).unwrap();
        assert!(rel_err(&si, &(h * t * h.adjoint())) < 1e-12);
    }
}

#[test]
fn mmse_combiner_minimizes_mse_against_perturbations() {
    let mut g = rng(35);
    let channels = random_channels(&mut g, 1, 4, 4);
    let state = random_state(&mut g, 1, 4, 3, 2);
    let noise = [0.5, 0.5];
    let ws = assemble_covariances(&channels, &state, &noise).unwrap();
    let e = effective_signal_matrix(&channels, &state, 0).unwrap();
    let r = &ws.receivers[0].r;
    let mse = |w: &ComplexMatrix| -> f64 {
        let d = e.ncols();
        let m = ComplexMatrix::identity(d, d) - w * &e - e.adjoint() * w.adjoint() + w * r * w.adjoint();
        real_trace(&m)
    };
    let w = compute_mmse_digital_combiner(&channels, &ws, &state, 0).unwrap();
    let best = mse(&w);
    for _ in 0..20 {
        let delta = random_matrix(&mut g, w.nrows(), w.ncols()) * Complex64::new(1e-3, 0.0);
        assert!(mse(&(&w + delta)) >= best - 1e-12);
    }
    // Rate identity: ln det(R̄⁻¹R) = −ln det(E_mse) for the MMSE error covariance.
    let d = e.ncols();
    let err_cov = ComplexMatrix::identity(d, d) - &w * &e;
    let rate = receiver_rates(&ws).unwrap()[0];
    assert!((rate + ln_det(&err_cov)).abs() < 1e-8);
}

#[test]
fn mismatched_shapes_are_dimension_errors() {
    let channels = ChannelSet::from_fn(2, |_, _| zeros(3, 3));
    let mut g = rng(36);
    let state = random_state(&mut g, 1, 4, 2, 1);
    assert!(matches!(
        assemble_covariances(&channels, &state, &[1.0, 1.0]),
        Err(fdhybf::Error::Dimension(_))
    ));
}
