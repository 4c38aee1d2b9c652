use std::fs::File;
use std::io::{BufWriter, Write};

use crate::env::expected_return;
use crate::error::{Error, Result};
use crate::reinforce::{train, EpisodeRecord, TrainOutcome};

use super::config::ExperimentSpec;
use super::summary::{mean_and_variance, CSV_HEADER};

pub const SUMMARY_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalWindow {
    pub episodes: usize,
    pub mean_length: f64,
    pub variance_length: f64,
    pub success_rate: f64,
}

pub struct ExperimentResult {
    pub outcome: TrainOutcome,
    pub final_window: Option<FinalWindow>,
}

pub fn format_record(r: &EpisodeRecord) -> String {
    format!("{},{},{:.2},{},{}", r.episode, r.length, r.total_return, u8::from(r.success), r.baseline)
}

pub fn final_window(records: &[EpisodeRecord], window: usize) -> Option<FinalWindow> {
    if records.is_empty() {
        return None;
    }
    let tail = &records[records.len().saturating_sub(window)..];
    let lengths: Vec<f64> = tail.iter().map(|r| r.length as f64).collect();
    let (mean_length, variance_length) = mean_and_variance(&lengths);
    let success_rate = tail.iter().filter(|r| r.success).count() as f64 / tail.len() as f64;
    Some(FinalWindow { episodes: tail.len(), mean_length, variance_length, success_rate })
}

/// Episodes needed before the trailing `window`-episode mean of
/// `length - optimal_length` first drops to `excess` or below. `None` if the
/// run never gets there.
pub fn episodes_to_threshold(records: &[EpisodeRecord], window: usize, excess: f64) -> Option<usize> {
    if window == 0 || records.len() < window {
        return None;
    }
    let gap = |r: &EpisodeRecord| r.length as f64 - r.optimal_length as f64;
    let mut sum: f64 = records[..window].iter().map(gap).sum();
    if sum / window as f64 <= excess {
        return Some(window);
    }
    for end in window..records.len() {
        sum += gap(&records[end]) - gap(&records[end - window]);
        if sum / window as f64 <= excess {
            return Some(end + 1);
        }
    }
    None
}

/// Checks the return/length identity of one in-memory record.
pub fn reward_identity_holds(r: &EpisodeRecord) -> bool {
    (r.total_return - expected_return(r.length, r.success)).abs() < 1e-9
}

/// Trains per `spec`, writing one CSV row per episode (flushed as it goes).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let file = File::create(&spec.out)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", spec.out.display()))))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let outcome = train(&spec.train, |record| {
        if !reward_identity_holds(record) {
            return Err(Error::contract(format!(
                "episode {} return {} inconsistent with length {}",
                record.episode, record.total_return, record.length
            )));
        }
        writeln!(out, "{}", format_record(record))?;
        out.flush()?;
        Ok(())
    });
    out.flush()?;
    let outcome = outcome?;
    let final_window = final_window(&outcome.records, SUMMARY_WINDOW);
    Ok(ExperimentResult { outcome, final_window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{parse_config, ExperimentId, Overrides};

    #[test]
    fn zero_episodes_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run.csv");
        let spec = parse_config(
            None,
            Overrides {
                experiment: Some(ExperimentId::Constrained),
                episodes: Some(0),
                out: Some(out.clone()),
                ..Default::default()
            },
        )
        .unwrap();
        let result = run_experiment(&spec).unwrap();
        assert!(result.final_window.is_none());
        assert_eq!(std::fs::read_to_string(&out).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let spec = parse_config(
            None,
            Overrides {
                experiment: Some(ExperimentId::NoAttnFixed),
                episodes: Some(1),
                out: Some(dir.path().join("missing").join("run.csv")),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(matches!(run_experiment(&spec), Err(Error::Io(_))));
    }

    fn record(episode: usize, length: usize) -> EpisodeRecord {
        EpisodeRecord { episode, length, total_return: 0.0, success: true, baseline: 0.0, optimal_length: 8 }
    }

    #[test]
    fn threshold_uses_trailing_window() {
        let lengths = [20, 20, 9, 8, 8, 8];
        let records: Vec<_> = lengths.iter().enumerate().map(|(i, &l)| record(i, l)).collect();
        assert_eq!(episodes_to_threshold(&records, 2, 1.0), Some(4));
        assert_eq!(episodes_to_threshold(&records, 2, 0.0), Some(5));
        assert_eq!(episodes_to_threshold(&records, 6, 1.0), None);
        assert_eq!(episodes_to_threshold(&records[..1], 2, 1.0), None);
    }

    #[test]
    fn row_format() {
        let r = EpisodeRecord {
            episode: 3,
            length: 8,
            total_return: 0.93,
            success: true,
            baseline: 0.5,
            optimal_length: 8,
        };
        assert_eq!(format_record(&r), "3,8,0.93,1,0.5");
    }
}
