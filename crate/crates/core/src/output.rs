//! CSV emission and atomic file writes.
//!
//! `curve.csv`: `algorithm,round,mean_alive,ci_low,ci_high`
//! `landmarks.csv`: `algorithm,p,runs,fnd_mean,fnd_ci,hnd_mean,hnd_ci,lnd_mean,lnd_ci,lnd_censored`
//! per-run files: `round,alive,residual_energy_j`

use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::Path;

use crate::engine::{RunMetrics, Summary};

pub fn curve_csv(summaries: &[Summary]) -> String {
    let mut out = String::from("algorithm,round,mean_alive,ci_low,ci_high\n");
    for s in summaries {
        for (i, (&m, &h)) in s.mean_alive.iter().zip(&s.ci_half).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.4},{:.4}",
                s.label,
                i + 1,
                m,
                (m - h).max(0.0),
                m + h
            );
        }
    }
    out
}

pub fn landmarks_csv(summaries: &[Summary]) -> String {
    let mut out = String::from(
        "algorithm,p,runs,fnd_mean,fnd_ci,hnd_mean,hnd_ci,lnd_mean,lnd_ci,lnd_censored\n",
    );
    for s in summaries {
        let p = s.p.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{}",
            s.algorithm,
            p,
            s.runs,
            s.fnd.mean,
            s.fnd.ci_half,
            s.hnd.mean,
            s.hnd.ci_half,
            s.lnd.mean,
            s.lnd.ci_half,
            s.lnd.censored
        );
    }
    out
}

pub fn run_csv(metrics: &RunMetrics) -> String {
    let mut out = String::from("round,alive,residual_energy_j\n");
    for (i, (a, e)) in metrics
        .alive_per_round
        .iter()
        .zip(&metrics.energy_per_round)
        .enumerate()
    {
        let _ = writeln!(out, "{},{},{:.9}", i + 1, a, e);
    }
    out
}

/// Writes through a temporary file in the destination directory and
/// renames it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algorithm;
    use crate::engine::Landmark;

    fn summary() -> Summary {
        let lm = Landmark {
            mean: 10.0,
            ci_half: 1.5,
            censored: 0,
        };
        Summary {
            label: "leach(p=0.05)".into(),
            algorithm: Algorithm::Leach,
            p: Some(0.05),
            runs: 2,
            nodes: 100,
            max_rounds: 2,
            mean_alive: vec![100.0, 0.5],
            ci_half: vec![0.0, 1.0],
            fnd: lm,
            hnd: lm,
            lnd: Landmark { censored: 1, ..lm },
        }
    }

    #[test]
    fn curve_rows() {
        let csv = curve_csv(&[summary()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "algorithm,round,mean_alive,ci_low,ci_high");
        assert_eq!(lines[1], "leach(p=0.05),1,100.0000,100.0000,100.0000");
        assert_eq!(lines[2], "leach(p=0.05),2,0.5000,0.0000,1.5000");
    }

    #[test]
    fn landmark_rows() {
        let csv = landmarks_csv(&[summary()]);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "leach,0.05,2,10.00,1.50,10.00,1.50,10.00,1.50,1"
        );
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
