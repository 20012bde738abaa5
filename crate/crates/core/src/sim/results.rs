use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::st2d::CodingMode;

use super::config::ChannelKind;

/// Outcome of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub snr_db: f64,
    pub n: usize,
    pub s: usize,
    pub t: usize,
    pub k: usize,
    pub channel: ChannelKind,
    pub mode: CodingMode,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub seed: u64,
    /// GA design mean used at this point.
    pub design_mean: f64,
    pub elapsed_seconds: f64,
}

impl SimResult {
    /// `bit_errors / (frames·K)`.
    pub fn ber(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.bit_errors as f64 / (self.frames as f64 * self.k as f64)
    }

    pub fn bler(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.frame_errors as f64 / self.frames as f64
    }

    /// SNR per information bit, `snr_db − 10·log10(K/N)`.
    pub fn ebn0_db(&self) -> f64 {
        self.snr_db - 10.0 * (self.k as f64 / self.n as f64).log10()
    }

    pub fn row(&self) -> ResultRow {
        ResultRow {
            snr_db: self.snr_db,
            n: self.n,
            s: self.s,
            t: self.t,
            k: self.k,
            l: self.channel.receive_antennas(),
            mode: self.mode.as_str().to_string(),
            frames: self.frames,
            bit_errors: self.bit_errors,
            frame_errors: self.frame_errors,
            ber: self.ber(),
            bler: self.bler(),
            seed: self.seed,
        }
    }
}

/// One CSV record. `l` is 0 for the AWGN channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub mode: String,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub bler: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "snr_db,N,S,T,K,L,mode,frames,bit_errors,frame_errors,ber,bler,seed";

/// Rows sorted by SNR, ascending.
pub fn sorted_rows(results: &[SimResult]) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = results.iter().map(SimResult::row).collect();
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    rows
}

/// Serializes rows as CSV text with a header line.
pub fn write_rows<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn results_to_csv(results: &[SimResult]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&sorted_rows(results), &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Writes the results CSV to `path`.
pub fn export_results(results: &[SimResult], path: impl AsRef<Path>) -> Result<()> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("no results to export".into()));
    }
    let path = path.as_ref();
    let text = results_to_csv(results)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a results CSV.
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("{}: unexpected header '{header}'", path.display())));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(snr: f64) -> SimResult {
        SimResult {
            snr_db: snr,
            n: 64,
            s: 4,
            t: 16,
            k: 32,
            channel: ChannelKind::Mimo { l: 8 },
            mode: CodingMode::SpaceTime,
            frames: 1000,
            bit_errors: 7,
            frame_errors: 3,
            seed: 9,
            design_mean: 4.0,
            elapsed_seconds: 0.5,
        }
    }

    #[test]
    fn rates() {
        let r = sample(1.0);
        assert_eq!(r.ber(), 7.0 / 32000.0);
        assert_eq!(r.bler(), 0.003);
        assert!((r.ebn0_db() - (1.0 + 10.0 * 2f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn single_row_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        export_results(&[sample(0.0)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn round_trip_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut a = sample(3.3);
        a.bit_errors = 1;
        let results = vec![a, sample(-1.0), sample(0.1 + 0.2)];
        export_results(&results, &path).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back, sorted_rows(&results));
        let snrs: Vec<f64> = back.iter().map(|r| r.snr_db).collect();
        assert_eq!(snrs, vec![-1.0, 0.1 + 0.2, 3.3]);
        assert_eq!(back[2].ber, 1.0 / 32000.0);
    }

    #[test]
    fn export_errors() {
        assert!(export_results(&[], "/tmp/never.csv").is_err());
        let err = export_results(&[sample(0.0)], "/nonexistent-dir/x.csv").unwrap_err();
        assert!(!err.is_validation());
    }
}
