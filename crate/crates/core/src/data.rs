//! Datasets: CSV ingestion, summaries and synthetic simulation studies.
//!
//! The input format is one row per recorded conflict per side:
//!
//! ```text
//! battle_id,side,casualties
//! b1,US,1
//! b2,Native,5
//! ```

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{PowerLaw, PowerLawSampler};
use crate::error_model::{corrupt_dataset, ObservationModel, ObservationVariant};
use crate::{Error, Result};

/// Which force a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "US")]
    Us,
    #[serde(rename = "Native")]
    Native,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::Us, Side::Native];

    /// Short tag used in column names.
    pub fn tag(&self) -> &'static str {
        match self {
            Side::Us => "U",
            Side::Native => "N",
        }
    }

    /// Position in joint priors, US first.
    pub fn index(&self) -> usize {
        match self {
            Side::Us => 0,
            Side::Native => 1,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Us => "US",
            Side::Native => "Native",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "US" => Ok(Side::Us),
            "Native" => Ok(Side::Native),
            other => Err(Error::config(format!("unknown side '{other}' (expected US or Native)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub battle_id: String,
    pub side: Side,
    pub casualties: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservedDataset {
    pub records: Vec<Record>,
    pub provenance: String,
}

impl ObservedDataset {
    pub fn new(records: Vec<Record>, provenance: impl Into<String>) -> Result<Self> {
        let d = Self {
            records,
            provenance: provenance.into(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if r.casualties < 1 {
                return Err(Error::data(format!("battle {} has zero casualties", r.battle_id)));
            }
            if !seen.insert((r.side, r.battle_id.as_str())) {
                return Err(Error::data(format!("duplicate battle_id {} for {}", r.battle_id, r.side)));
            }
        }
        Ok(())
    }

    /// Casualty counts for one side, in record order.
    pub fn counts(&self, side: Side) -> Vec<u64> {
        self.records.iter().filter(|r| r.side == side).map(|r| r.casualties).collect()
    }

    /// Sides with at least one record, US first.
    pub fn sides(&self) -> Vec<Side> {
        Side::ALL
            .into_iter()
            .filter(|s| self.records.iter().any(|r| r.side == *s))
            .collect()
    }

    pub fn n_obs(&self, side: Side) -> usize {
        self.records.iter().filter(|r| r.side == side).count()
    }

    pub fn total(&self, side: Side) -> u64 {
        self.counts(side).iter().sum()
    }
}

/// Read and validate a dataset. Every bad row is reported, not just the first.
pub fn load_csv(path: impl AsRef<Path>) -> Result<ObservedDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut d = read_csv(file, &path.display().to_string())?;
    d.provenance = path.display().to_string();
    Ok(d)
}

/// [`load_csv`] over any reader; `name` labels error messages.
pub fn read_csv<R: Read>(reader: R, name: &str) -> Result<ObservedDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["battle_id", "side", "casualties"];
    if headers.iter().collect::<Vec<_>>() != expected {
        if headers.is_empty() {
            return Err(Error::data(format!("{name} is empty")));
        }
        return Err(Error::Rows {
            path: name.to_string(),
            problems: vec![format!("row 1: header must be battle_id,side,casualties, got {}", headers.iter().collect::<Vec<_>>().join(","))],
        });
    }

    let mut records = Vec::new();
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        // header is row 1
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {line}: {e}"));
                continue;
            }
        };
        if row.len() != 3 {
            problems.push(format!("row {line}: expected 3 fields, found {}", row.len()));
            continue;
        }
        let id = row[0].to_string();
        let side = match row[1].parse::<Side>() {
            Ok(s) => Some(s),
            Err(_) => {
                problems.push(format!("row {line}: unknown side '{}'", &row[1]));
                None
            }
        };
        let casualties = match row[2].parse::<u64>() {
            Ok(0) => {
                problems.push(format!("row {line}: casualties must be at least 1"));
                None
            }
            Ok(c) => Some(c),
            Err(_) => {
                problems.push(format!("row {line}: casualties '{}' is not a positive integer", &row[2]));
                None
            }
        };
        if id.is_empty() {
            problems.push(format!("row {line}: empty battle_id"));
            continue;
        }
        if let (Some(side), Some(casualties)) = (side, casualties) {
            if !seen.insert((side, id.clone())) {
                problems.push(format!("row {line}: duplicate battle_id '{id}' for {side}"));
                continue;
            }
            records.push(Record {
                battle_id: id,
                side,
                casualties,
            });
        }
    }
    if !problems.is_empty() {
        return Err(Error::Rows {
            path: name.to_string(),
            problems,
        });
    }
    if records.is_empty() {
        return Err(Error::data(format!("{name} contains no records")));
    }
    Ok(ObservedDataset {
        records,
        provenance: name.to_string(),
    })
}

pub fn write_csv<W: Write>(data: &ObservedDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["battle_id", "side", "casualties"])?;
    for r in &data.records {
        w.write_record([r.battle_id.as_str(), &r.side.to_string(), &r.casualties.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(data: &ObservedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Number of conflicts at each casualty count `1..=max_count`, per side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub max_count: u64,
    pub us: Vec<u64>,
    pub native: Vec<u64>,
}

impl FrequencyTable {
    pub fn side(&self, side: Side) -> &[u64] {
        match side {
            Side::Us => &self.us,
            Side::Native => &self.native,
        }
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["count", "us", "native"])?;
        for c in 0..self.max_count as usize {
            w.write_record([(c + 1).to_string(), self.us[c].to_string(), self.native[c].to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub fn frequency_table(data: &ObservedDataset, max_count: u64) -> FrequencyTable {
    let mut us = vec![0; max_count as usize];
    let mut native = vec![0; max_count as usize];
    for r in &data.records {
        if r.casualties <= max_count {
            let slot = (r.casualties - 1) as usize;
            match r.side {
                Side::Us => us[slot] += 1,
                Side::Native => native[slot] += 1,
            }
        }
    }
    FrequencyTable { max_count, us, native }
}

/// Empirical `Pr(Z ≥ x)` at each distinct observed `x` for one side.
pub fn ccdf_points(data: &ObservedDataset, side: Side) -> Result<Vec<(u64, f64)>> {
    let mut xs = data.counts(side);
    if xs.is_empty() {
        return Err(Error::data(format!("no records for {side}")));
    }
    xs.sort_unstable();
    let n = xs.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        out.push((x, (xs.len() - i) as f64 / n));
        i += xs[i..].partition_point(|&v| v == x);
    }
    Ok(out)
}

pub fn write_ccdf<W: Write>(points: &[(u64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "ccdf"])?;
    for (x, f) in points {
        w.write_record([x.to_string(), f.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Settings for a synthetic single-side study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub p: f64,
    pub n_true: usize,
    pub side: Side,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            alpha: 2.2,
            lambda: 0.007,
            mu: 0.05,
            p: 0.19,
            n_true: 20_000,
            side: Side::Native,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_true < 1 {
            return Err(Error::config("n_true must be at least 1"));
        }
        if !(self.alpha > 1.0) {
            return Err(Error::config(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.lambda > 0.0) || !(self.mu > 0.0) {
            return Err(Error::config("lambda and mu must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::config(format!("p must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }
}

/// Per-event truth for a synthetic study, kept apart from the observed data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub battle_id: String,
    pub true_count: u64,
    pub observed: bool,
    /// Count after counting noise and before heaping; only for recorded events.
    pub pre_heap_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationStudy {
    pub config: SimulationConfig,
    pub true_counts: Vec<u64>,
    pub dataset: ObservedDataset,
    pub ground_truth: Vec<GroundTruthRecord>,
}

impl SimulationStudy {
    pub fn total_true(&self) -> u64 {
        self.true_counts.iter().sum()
    }

    pub fn total_observed(&self) -> u64 {
        self.dataset.records.iter().map(|r| r.casualties).sum()
    }
}

fn battle_id(i: usize) -> String {
    format!("b{}", i + 1)
}

/// Draw `n_true` power-law severities and record them through the error model.
pub fn generate_simulation_study<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<SimulationStudy> {
    config.validate()?;
    let sampler = PowerLawSampler::new(PowerLaw::new(config.alpha, 1)?);
    let true_counts = sampler.sample_n(config.n_true, rng);
    let model = ObservationModel::new(ObservationVariant::ExponentialLinear, config.lambda, config.mu, 0.0)?;
    let corruption = corrupt_dataset(&true_counts, &model, config.p, rng)?;

    let mut ground_truth: Vec<GroundTruthRecord> = true_counts
        .iter()
        .enumerate()
        .map(|(i, &w)| GroundTruthRecord {
            battle_id: battle_id(i),
            true_count: w,
            observed: false,
            pre_heap_count: None,
        })
        .collect();
    let mut records = Vec::with_capacity(corruption.records.len());
    for r in &corruption.records {
        let g = &mut ground_truth[r.index];
        g.observed = true;
        g.pre_heap_count = Some(r.noisy_count);
        records.push(Record {
            battle_id: battle_id(r.index),
            side: config.side,
            casualties: r.observed,
        });
    }
    Ok(SimulationStudy {
        config: *config,
        true_counts,
        dataset: ObservedDataset {
            records,
            provenance: format!(
                "simulated: alpha={} lambda={} mu={} p={} n_true={}",
                config.alpha, config.lambda, config.mu, config.p, config.n_true
            ),
        },
        ground_truth,
    })
}

pub fn write_ground_truth<W: Write>(truth: &[GroundTruthRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["battle_id", "true_count", "observed", "pre_heap_count"])?;
    for g in truth {
        w.write_record([
            g.battle_id.clone(),
            g.true_count.to_string(),
            u8::from(g.observed).to_string(),
            g.pre_heap_count.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_ground_truth<R: Read>(reader: R) -> Result<Vec<GroundTruthRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = || Error::data(format!("ground truth row {}: malformed", i + 2));
        out.push(GroundTruthRecord {
            battle_id: row.get(0).ok_or_else(bad)?.to_string(),
            true_count: row.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            observed: match row.get(2) {
                Some("1") => true,
                Some("0") => false,
                _ => return Err(bad()),
            },
            pre_heap_count: match row.get(3) {
                Some("") | None => None,
                Some(v) => Some(v.parse().map_err(|_| bad())?),
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ObservedDataset> {
        read_csv(text.as_bytes(), "test.csv")
    }

    #[test]
    fn load_happy_path() {
        let d = parse("battle_id,side,casualties\nb1,US,1\nb2,Native,5\n").unwrap();
        assert_eq!(d.records.len(), 2);
        assert_eq!(d.counts(Side::Native), vec![5]);
        assert_eq!(d.sides(), vec![Side::Us, Side::Native]);
    }

    #[test]
    fn load_reports_every_bad_row() {
        let err = parse("battle_id,side,casualties\nb1,US,0\nb2,Martian,4\nb3,US,x\nb4,US,2\n").unwrap_err();
        match err {
            Error::Rows { problems, .. } => {
                assert_eq!(problems.len(), 3);
                assert!(problems[0].starts_with("row 2"));
                assert!(problems[1].starts_with("row 3"));
                assert!(problems[2].starts_with("row 4"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn load_rejects_duplicates_and_empty() {
        assert!(parse("battle_id,side,casualties\nb1,US,3\nb1,US,4\n").is_err());
        // the same id on different sides is allowed
        assert!(parse("battle_id,side,casualties\nb1,US,3\nb1,Native,4\n").is_ok());
        assert!(parse("").is_err());
        assert!(parse("battle_id,side,casualties\n").is_err());
        assert!(parse("id,side,count\nb1,US,3\n").is_err());
    }

    #[test]
    fn frequency_table_counts() {
        let d = parse("battle_id,side,casualties\na,US,1\nb,US,1\nc,US,5\nd,Native,10\ne,Native,11\n").unwrap();
        let t = frequency_table(&d, 10);
        assert_eq!(t.us, vec![2, 0, 0, 0, 1, 0, 0, 0, 0, 0]);
        assert_eq!(t.native, vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        let empty = frequency_table(&ObservedDataset::default(), 10);
        assert!(empty.us.iter().chain(&empty.native).all(|&c| c == 0));
    }

    #[test]
    fn ccdf_examples() {
        let d = parse("battle_id,side,casualties\na,US,1\nb,US,1\nc,US,2\n").unwrap();
        let pts = ccdf_points(&d, Side::Us).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], (1, 1.0));
        assert_eq!(pts[1].0, 2);
        assert!((pts[1].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(ccdf_points(&d, Side::Native).is_err());
        let d = parse("battle_id,side,casualties\na,Native,7\n").unwrap();
        assert_eq!(ccdf_points(&d, Side::Native).unwrap(), vec![(7, 1.0)]);
    }

    #[test]
    fn simulation_without_heaping_has_no_excess() {
        let cfg = SimulationConfig {
            p: 0.0,
            lambda: 0.3,
            n_true: 50_000,
            ..Default::default()
        };
        let mut rng = crate::rng::stream(3, 0);
        let study = generate_simulation_study(&cfg, &mut rng).unwrap();
        let t = frequency_table(&study.dataset, 10);
        let f = t.side(Side::Native);
        // without heaping, 5 sits between its neighbours rather than above both
        assert!(f[4] < f[3], "{f:?}");
        assert!(f[9] < f[8] + 3 * (f[8] as f64).sqrt() as u64, "{f:?}");
    }

    #[test]
    fn simulation_ground_truth_consistent() {
        let mut rng = crate::rng::stream(8, 0);
        let study = generate_simulation_study(&SimulationConfig::default(), &mut rng).unwrap();
        assert_eq!(study.ground_truth.len(), 20_000);
        let observed: Vec<_> = study.ground_truth.iter().filter(|g| g.observed).collect();
        assert_eq!(observed.len(), study.dataset.records.len());
        for (g, r) in observed.iter().zip(&study.dataset.records) {
            assert_eq!(g.battle_id, r.battle_id);
            let y = g.pre_heap_count.unwrap();
            assert!(r.casualties == y || r.casualties == crate::error_model::heap_target(y));
        }
        let mut buf = Vec::new();
        write_ground_truth(&study.ground_truth, &mut buf).unwrap();
        assert_eq!(read_ground_truth(buf.as_slice()).unwrap(), study.ground_truth);
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = SimulationConfig::default();
        let a = generate_simulation_study(&cfg, &mut crate::rng::stream(5, 0)).unwrap();
        let b = generate_simulation_study(&cfg, &mut crate::rng::stream(5, 0)).unwrap();
        assert_eq!(a, b);
        assert!(generate_simulation_study(&SimulationConfig { n_true: 0, ..cfg }, &mut crate::rng::stream(5, 0)).is_err());
    }
}
