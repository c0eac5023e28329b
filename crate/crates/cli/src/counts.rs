//! Heralded bin counts as CSV: `phase_setting,detector,bin,counts` with
//! phase `0` or `pi/2`, detector `1` or `2` and bin `e`, `l` or `ll`.
//! Missing cells count as zero; repeated cells are an error.

use std::path::Path;

use sfg_bsm::tomography::{Detector, PhaseSetting, RawBinCounts, TimeBin};

use crate::error::{CliError, Result};
use crate::output::{col, Cell, Table};

pub const HEADER: [&str; 4] = ["phase_setting", "detector", "bin", "counts"];

pub fn phase_label(p: PhaseSetting) -> &'static str {
    match p {
        PhaseSetting::Zero => "0",
        PhaseSetting::HalfPi => "pi/2",
    }
}

pub fn detector_label(d: Detector) -> &'static str {
    match d {
        Detector::One => "1",
        Detector::Two => "2",
    }
}

pub fn bin_label(b: TimeBin) -> &'static str {
    match b {
        TimeBin::E => "e",
        TimeBin::L => "l",
        TimeBin::LL => "ll",
    }
}

fn find<T: Copy>(all: &[T], label: fn(T) -> &'static str, s: &str) -> Option<T> {
    all.iter().copied().find(|&v| label(v) == s)
}

pub fn parse_counts(text: &str, origin: &str) -> Result<RawBinCounts> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let err = |line: u64, msg: String| CliError::Config(format!("{origin}, line {line}: {msg}"));
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.iter().ne(HEADER) {
        return Err(err(1, format!("expected header `{}`", HEADER.join(","))));
    }
    let mut raw = RawBinCounts::default();
    let mut seen = std::collections::HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let phase = find(&PhaseSetting::ALL, phase_label, &rec[0])
            .ok_or_else(|| err(line, format!("phase_setting `{}` is not 0 or pi/2", &rec[0])))?;
        let det = find(&Detector::ALL, detector_label, &rec[1])
            .ok_or_else(|| err(line, format!("detector `{}` is not 1 or 2", &rec[1])))?;
        let bin = find(&TimeBin::ALL, bin_label, &rec[2])
            .ok_or_else(|| err(line, format!("bin `{}` is not e, l or ll", &rec[2])))?;
        let n: f64 = rec[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| err(line, format!("counts `{}` is not a number >= 0", &rec[3])))?;
        if !seen.insert((phase, det, bin)) {
            return Err(err(line, format!("repeated cell {} / {} / {}", &rec[0], &rec[1], &rec[2])));
        }
        raw.set(phase, det, bin, n);
    }
    Ok(raw)
}

pub fn read_counts(path: &Path) -> Result<RawBinCounts> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_counts(&text, &path.display().to_string())
}

/// Whole counts print as integers.
fn count_cell(v: f64) -> Cell {
    if v.fract() == 0.0 && (0.0..9.0e15).contains(&v) {
        Cell::Int(v as u64)
    } else {
        Cell::Num(v)
    }
}

pub fn counts_table(name: &str, raw: &RawBinCounts) -> Table {
    let mut t = Table::new(
        name,
        1,
        vec![
            col("phase_setting", "rad", "analyzer phase, 0 or pi/2"),
            col("detector", "", "analyzer output port, 1 or 2"),
            col("bin", "", "arrival bin: e, l (interfering) or ll"),
            col("counts", "", "heralded coincidences"),
        ],
    );
    for p in PhaseSetting::ALL {
        for d in Detector::ALL {
            for b in TimeBin::ALL {
                t.push(vec![
                    phase_label(p).into(),
                    detector_label(d).into(),
                    bin_label(b).into(),
                    count_cell(raw.get(p, d, b)),
                ]);
            }
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Format;

    #[test]
    fn written_table_parses_back() {
        let mut raw = RawBinCounts::default();
        raw.set(PhaseSetting::HalfPi, Detector::Two, TimeBin::LL, 7.0);
        raw.set(PhaseSetting::Zero, Detector::One, TimeBin::E, 86.0);
        let t = counts_table("c", &raw);
        let dir = tempfile::tempdir().unwrap();
        let (paths, _) = crate::output::write_artifacts(dir.path(), &[crate::output::Artifact::Table(t)], Format::Csv).unwrap();
        assert_eq!(read_counts(&paths[0]).unwrap(), raw);
    }

    #[test]
    fn errors_name_the_line() {
        let bad = "phase_setting,detector,bin,counts\n0,1,e,3\n0,3,e,4\n";
        let msg = parse_counts(bad, "x.csv").unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("detector"), "{msg}");
        let dup = "phase_setting,detector,bin,counts\n0,1,e,3\n0,1,e,4\n";
        assert!(parse_counts(dup, "x.csv").unwrap_err().to_string().contains("repeated"));
        let neg = "phase_setting,detector,bin,counts\npi/2,2,ll,-1\n";
        assert!(parse_counts(neg, "x.csv").is_err());
        assert!(parse_counts("a,b\n", "x.csv").is_err());
    }
}
