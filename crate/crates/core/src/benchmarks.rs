//! Fully digital full-duplex and half-duplex reference schemes.
//!
//! Both run the same MM loop as the hybrid scheme with identity analog stages
//! (RF chains equal to antennas) and no analog or combiner updates.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::optimizer::mm::{node_powers, snr_of, solve, trial_result};
use crate::optimizer::{Solution, SolverOptions, TrialResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeTag {
    Hybf,
    DigitalFd,
    DigitalHd,
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 3] = [SchemeTag::Hybf, SchemeTag::DigitalFd, SchemeTag::DigitalHd];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeTag::Hybf => "hybf",
            SchemeTag::DigitalFd => "digital_fd",
            SchemeTag::DigitalHd => "digital_hd",
        }
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full duplex with `m_tx = n_tx`, `m_rx = n_rx` and identity analog stages.
/// The RNG is accepted for interface symmetry; nothing is drawn from it.
pub fn run_fully_digital_fd<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<TrialResult> {
    let sol = run_fully_digital_fd_with_state(channels, config, options, rng)?;
    trial_result(SchemeTag::DigitalFd, &config.fully_digital(), &sol)
}

/// As [`run_fully_digital_fd`], returning the final beamformers as well.
pub fn run_fully_digital_fd_with_state<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<Solution> {
    let digital = config.fully_digital();
    let active = vec![true; digital.num_nodes()];
    solve(channels, &digital, options, rng, false, &active)
}

/// Half duplex in two equal slots: left nodes transmit in the first, right
/// nodes in the second. Silent nodes never transmit, so no self-interference
/// term enters either slot; concurrent transmitters of the same direction
/// still interfere. The reported WSR is the slot average; the shorter slot's
/// trace is held at its final value.
pub fn run_fully_digital_hd<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<TrialResult> {
    let digital = config.fully_digital();
    let net = digital.network();
    let n = digital.num_nodes();
    let left: Vec<bool> = (0..n).map(|b| net.is_left(b)).collect();
    let right: Vec<bool> = left.iter().map(|l| !l).collect();
    let first = solve(channels, &digital, options, rng, false, &left)?;
    let second = solve(channels, &digital, options, rng, false, &right)?;

    let len = first.trace.len().max(second.trace.len());
    let at = |t: &[f64], init: f64, i: usize| t.get(i).or(t.last()).copied().unwrap_or(init);
    let trace: Vec<f64> = (0..len)
        .map(|i| 0.5 * (at(&first.trace, first.initial_wsr, i) + at(&second.trace, second.initial_wsr, i)))
        .collect();
    let final_wsr = trace
        .last()
        .copied()
        .unwrap_or(0.5 * (first.initial_wsr + second.initial_wsr));

    // Each node transmits in exactly one slot; report that slot's power.
    let p1 = node_powers(&first.state)?;
    let p2 = node_powers(&second.state)?;
    let final_powers = (0..n).map(|b| if left[b] { p1[b] } else { p2[b] }).collect();

    Ok(TrialResult {
        scheme: SchemeTag::DigitalHd,
        seed: 0,
        snr_db: snr_of(&digital),
        iterations: trace.len(),
        wsr_trace: trace,
        final_wsr,
        final_powers,
    })
}

/// Dispatch on the scheme tag.
pub fn run_scheme<R: Rng + ?Sized>(
    scheme: SchemeTag,
    channels: &ChannelSet,
    config: &SystemConfig,
    options: &SolverOptions,
    rng: &mut R,
) -> Result<TrialResult> {
    match scheme {
        SchemeTag::Hybf => crate::optimizer::run_hybf(channels, config, options, rng),
        SchemeTag::DigitalFd => run_fully_digital_fd(channels, config, options, rng),
        SchemeTag::DigitalHd => run_fully_digital_hd(channels, config, options, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip_through_json() {
        for tag in SchemeTag::ALL {
            let s = serde_json::to_string(&tag).unwrap();
            assert_eq!(s, format!("\"{}\"", tag.as_str()));
            assert_eq!(serde_json::from_str::<SchemeTag>(&s).unwrap(), tag);
        }
    }
}
