//! Monte-Carlo experiment driver and CSV/text writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::benchmarks::{run_scheme, SchemeTag};
use crate::channel::{draw_channel_set, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// One line of the summary file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub snr_db: f64,
    pub scheme: SchemeTag,
    /// `"ok"` or the error kind.
    pub status: String,
    pub iterations: usize,
    /// `None` when the run failed.
    pub final_wsr: Option<f64>,
    pub powers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub seed: u64,
    pub snr_db: f64,
    pub scheme: SchemeTag,
    pub iter: usize,
    pub wsr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub summary: Vec<SummaryRow>,
    pub trace: Vec<TraceRow>,
}

/// Channel realization of trial `trial`; the same for every SNR point and
/// scheme.
pub fn trial_seed(config: &SystemConfig, trial: usize) -> u64 {
    config.base_seed.wrapping_add(trial as u64)
}

pub fn draw_trial_channels(config: &SystemConfig, seed: u64) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_channel_set(&mut rng, config)
}

/// Initialization randomness of a trial; independent of the channel stream.
pub fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn run_trial(config: &SystemConfig, snr_db: f64, trial: usize) -> ExperimentOutput {
    let seed = trial_seed(config, trial);
    let at_snr = config.at_snr(snr_db);
    let mut out = ExperimentOutput::default();
    let channels = draw_trial_channels(&at_snr, seed);
    for &scheme in &config.schemes {
        let result = channels.as_ref().map_err(|e| e.kind()).and_then(|ch| {
            let mut rng = init_rng(seed);
            run_scheme(scheme, ch, &at_snr, &config.solver, &mut rng).map_err(|e| e.kind())
        });
        match result {
            Ok(r) => {
                out.trace.extend(r.wsr_trace.iter().enumerate().map(|(i, &wsr)| TraceRow {
                    seed,
                    snr_db,
                    scheme,
                    iter: i + 1,
                    wsr,
                }));
                out.summary.push(SummaryRow {
                    seed,
                    snr_db,
                    scheme,
                    status: "ok".to_string(),
                    iterations: r.iterations,
                    final_wsr: Some(r.final_wsr),
                    powers: r.final_powers,
                });
            }
            Err(kind) => out.summary.push(SummaryRow {
                seed,
                snr_db,
                scheme,
                status: kind.to_string(),
                iterations: 0,
                final_wsr: None,
                powers: Vec::new(),
            }),
        }
    }
    out
}

/// Runs every (SNR point, trial, scheme) combination on `threads` worker
/// threads. Rows come out ordered by SNR point, then trial, then the order of
/// `config.schemes`, whatever the thread count. Solver failures become rows
/// with a non-`ok` status.
pub fn run_experiment(config: &SystemConfig, threads: usize) -> Result<ExperimentOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let jobs: Vec<(f64, usize)> = config
        .snr_db
        .iter()
        .flat_map(|&snr| (0..config.trials).map(move |t| (snr, t)))
        .collect();
    let parts: Vec<ExperimentOutput> =
        pool.install(|| jobs.par_iter().map(|&(snr, t)| run_trial(config, snr, t)).collect());
    let mut out = ExperimentOutput::default();
    for p in parts {
        out.summary.extend(p.summary);
        out.trace.extend(p.trace);
    }
    Ok(out)
}

pub fn summary_header(num_nodes: usize) -> Vec<String> {
    let mut h: Vec<String> = ["seed", "snr_db", "scheme", "status", "iterations", "final_wsr_nats"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=num_nodes).map(|i| format!("power_node_{i}")));
    h
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[SummaryRow], num_nodes: usize) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(summary_header(num_nodes))?;
    for r in rows {
        let mut rec = vec![
            r.seed.to_string(),
            r.snr_db.to_string(),
            r.scheme.to_string(),
            r.status.clone(),
            r.iterations.to_string(),
            r.final_wsr.map(|v| v.to_string()).unwrap_or_default(),
        ];
        rec.extend((0..num_nodes).map(|i| r.powers.get(i).map(|p| p.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["seed", "snr_db", "scheme", "iter", "wsr_nats"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.snr_db.to_string(),
            r.scheme.to_string(),
            r.iter.to_string(),
            r.wsr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` → `results.trace.csv`.
pub fn trace_path(summary: &Path) -> PathBuf {
    let stem = summary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    summary.with_file_name(format!("{stem}.trace.csv"))
}

/// `rows cols` on the first line, then one matrix row per line as
/// space-separated `re,im` pairs.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut s = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

/// Writes every channel of trial `trial` as `H_<rx>_<tx>.txt` into `dir`
/// and returns the paths written.
pub fn dump_channels(config: &SystemConfig, trial: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let channels = draw_trial_channels(config, trial_seed(config, trial))?;
    std::fs::create_dir_all(dir)?;
    let net = config.network();
    let mut written = Vec::with_capacity(channels.len());
    for ((rx, tx), h) in channels.iter() {
        let path = dir.join(format!("H_{}_{}.txt", net.label(rx), net.label(tx)));
        std::fs::write(&path, format_matrix(h))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn matrix_text_format() {
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, -0.5),
                Complex64::new(0.0, 2.0),
                Complex64::new(-3.0, 0.0),
                Complex64::new(0.25, 0.125),
            ],
        );
        assert_eq!(format_matrix(&m), "2 2\n1,-0.5 0,2\n-3,0 0.25,0.125\n");
    }

    #[test]
    fn trace_file_sits_next_to_summary() {
        assert_eq!(trace_path(Path::new("out/run.csv")), PathBuf::from("out/run.trace.csv"));
    }

    #[test]
    fn failed_rows_leave_numeric_fields_empty() {
        let row = SummaryRow {
            seed: 3,
            snr_db: -10.0,
            scheme: SchemeTag::Hybf,
            status: "size_error".into(),
            iterations: 0,
            final_wsr: None,
            powers: vec![],
        };
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[row], 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "seed,snr_db,scheme,status,iterations,final_wsr_nats,power_node_1,power_node_2\n\
             3,-10,hybf,size_error,0,,,\n"
        );
    }
}
