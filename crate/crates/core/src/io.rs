//! File formats: counts and labels CSV, model and truth JSON, score CSVs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmModel;
use crate::series::{Label, SurveillanceSeries, WeekIndex, YearWeek};

pub const COUNTS_HEADER: [&str; 3] = ["series_id", "year_week", "count"];
pub const LABELS_HEADER: [&str; 3] = ["series_id", "year_week", "label"];
pub const HMM_SCORES_HEADER: [&str; 4] = ["series_id", "year_week", "p_outbreak", "alarm"];
pub const BASELINE_SCORES_HEADER: [&str; 7] =
    ["series_id", "year_week", "count", "p_value", "threshold", "expected", "alarm"];
pub const GROUPS_HEADER: [&str; 2] = ["series_id", "group_id"];
pub const SCHEMA_VERSION: u32 = 1;

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn ingest(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Records of a CSV file with an exact header, each with its line number.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let file = fs::File::open(path).map_err(|e| ingest(path, 0, format!("cannot open: {e}")))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found = rdr.headers().map_err(|e| ingest(path, 1, e.to_string()))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(ingest(
            path,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            ingest(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_week(path: &Path, line: u64, s: &str) -> Result<YearWeek> {
    s.parse().map_err(|_| ingest(path, line, format!("`{s}` is not a YYYY-Www week")))
}

/// A parsed row `(series_id, week, value)` with its source line.
type Row<T> = (u64, String, YearWeek, T);

pub fn read_counts(path: &Path) -> Result<Vec<Row<u64>>> {
    read_table(path, &COUNTS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let id = r[0].to_string();
            if id.is_empty() {
                return Err(ingest(path, line, "empty series_id"));
            }
            let week = parse_week(path, line, &r[1])?;
            let count = r[2]
                .parse::<u64>()
                .map_err(|_| ingest(path, line, format!("count `{}` is not a non-negative integer", &r[2])))?;
            Ok((line, id, week, count))
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<Row<Label>>> {
    read_table(path, &LABELS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let label = match &r[2] {
                "0" => Label::Endemic,
                "1" => Label::Outbreak,
                "" | "NA" => Label::Unknown,
                other => return Err(ingest(path, line, format!("label `{other}` is not 0 or 1"))),
            };
            Ok((line, r[0].to_string(), parse_week(path, line, &r[1])?, label))
        })
        .collect()
}

/// Series on a common weekly grid.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// Calendar week of grid index 1.
    pub grid_start: YearWeek,
    /// In order of first appearance in the counts file.
    pub series: Vec<SurveillanceSeries>,
    /// Weeks filled with zero count per series.
    pub missing_counts: BTreeMap<String, usize>,
    /// Weeks filled with label 0 per series.
    pub missing_labels: BTreeMap<String, usize>,
}

impl Dataset {
    pub fn last_week(&self) -> YearWeek {
        self.grid_start.offset(self.series[0].len() as i64 - 1)
    }

    pub fn week_index(&self, week: YearWeek) -> Result<WeekIndex> {
        let off = self.grid_start.weeks_until(week);
        let len = self.series[0].len() as i64;
        if !(0..len).contains(&off) {
            return Err(Error::Range(format!(
                "week {week} lies outside the data ({}..{})",
                self.grid_start,
                self.last_week()
            )));
        }
        WeekIndex::new(off as u32 + 1)
    }

    pub fn get(&self, id: &str) -> Option<&SurveillanceSeries> {
        self.series.iter().find(|s| s.id() == id)
    }
}

/// Place count and label rows on the grid spanning all weeks in the counts.
pub fn assemble(counts_path: &Path, counts: &[Row<u64>], labels: Option<(&Path, &[Row<Label>])>) -> Result<Dataset> {
    let (Some(lo), Some(hi)) = (counts.iter().map(|r| r.2).min(), counts.iter().map(|r| r.2).max()) else {
        return Err(ingest(counts_path, 1, "no data rows"));
    };
    let len = lo.weeks_until(hi) as usize + 1;
    let mut order: Vec<&str> = Vec::new();
    let mut grid: HashMap<&str, Vec<Option<u64>>> = HashMap::new();
    for (line, id, week, count) in counts {
        let cells = grid.entry(id.as_str()).or_insert_with(|| {
            order.push(id);
            vec![None; len]
        });
        let slot = &mut cells[lo.weeks_until(*week) as usize];
        if slot.is_some() {
            return Err(ingest(counts_path, *line, format!("duplicate row for `{id}` week {week}")));
        }
        *slot = Some(*count);
    }

    let mut label_grid: HashMap<&str, Vec<Option<Label>>> = HashMap::new();
    if let Some((path, rows)) = labels {
        for (line, id, week, label) in rows {
            if !grid.contains_key(id.as_str()) {
                return Err(ingest(path, *line, format!("series `{id}` has no counts")));
            }
            let off = lo.weeks_until(*week);
            if !(0..len as i64).contains(&off) {
                return Err(ingest(path, *line, format!("week {week} lies outside the counts ({lo}..{hi})")));
            }
            let cells = label_grid.entry(id.as_str()).or_insert_with(|| vec![None; len]);
            let slot = &mut cells[off as usize];
            if slot.is_some() {
                return Err(ingest(path, *line, format!("duplicate label for `{id}` week {week}")));
            }
            *slot = Some(*label);
        }
    }

    let mut missing_counts = BTreeMap::new();
    let mut missing_labels = BTreeMap::new();
    let mut series = Vec::with_capacity(order.len());
    for id in order {
        let cells = &grid[id];
        let gaps = cells.iter().filter(|c| c.is_none()).count();
        if gaps > 0 {
            log::warn!("series `{id}`: {gaps} missing weeks filled with count 0");
            missing_counts.insert(id.to_string(), gaps);
        }
        let labels = labels.map(|_| {
            let cells = label_grid.get(id);
            let gaps = cells.map_or(len, |c| c.iter().filter(|c| c.is_none()).count());
            if gaps > 0 {
                log::warn!("series `{id}`: {gaps} missing weeks labeled 0");
                missing_labels.insert(id.to_string(), gaps);
            }
            (0..len)
                .map(|i| cells.and_then(|c| c[i]).unwrap_or(Label::Endemic))
                .collect()
        });
        series.push(SurveillanceSeries::new(
            id,
            lo,
            cells.iter().map(|c| c.unwrap_or(0)).collect(),
            labels,
        )?);
    }
    Ok(Dataset {
        grid_start: lo,
        series,
        missing_counts,
        missing_labels,
    })
}

/// Read a counts file and optional labels file into a [`Dataset`].
pub fn load_dataset(counts_path: &Path, labels_path: Option<&Path>) -> Result<Dataset> {
    let counts = read_counts(counts_path)?;
    let labels = labels_path.map(|p| read_labels(p).map(|rows| (p, rows))).transpose()?;
    assemble(counts_path, &counts, labels.as_ref().map(|(p, r)| (*p, r.as_slice())))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_counts(path: &Path, series: &[&SurveillanceSeries]) -> Result<()> {
    let bytes = csv_bytes(&COUNTS_HEADER, |w| {
        for s in series {
            for (i, c) in s.counts().iter().enumerate() {
                let t = s.first_t().plus(i as u32);
                w.write_record([s.id(), &s.year_week_at(t).to_string(), &c.to_string()])?;
            }
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// Labels file; unknown labels are written as `NA`.
pub fn write_labels(path: &Path, series: &[&SurveillanceSeries]) -> Result<()> {
    let bytes = csv_bytes(&LABELS_HEADER, |w| {
        for s in series {
            let Some(labels) = s.labels() else { continue };
            for (i, l) in labels.iter().enumerate() {
                let t = s.first_t().plus(i as u32);
                let v = match l {
                    Label::Endemic => "0",
                    Label::Outbreak => "1",
                    Label::Unknown => "NA",
                };
                w.write_record([s.id(), &s.year_week_at(t).to_string(), v])?;
            }
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Versioned on-disk model of one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: u32,
    /// Calendar week of grid index 1; fixes the origin of the trend term.
    pub grid_start: YearWeek,
    pub model: HmmModel,
}

impl ModelFile {
    pub fn new(grid_start: YearWeek, model: HmmModel) -> Self {
        ModelFile {
            schema: SCHEMA_VERSION,
            grid_start,
            model,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: ModelFile = read_json(path)?;
        if m.schema != SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "{}: model schema {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                m.schema
            )));
        }
        Ok(m)
    }
}

pub fn model_file_name(group_id: &str) -> String {
    format!("model_{group_id}.json")
}

/// All `model_*.json` files in `dir`, sorted by file name.
pub fn read_models(dir: &Path) -> Result<Vec<ModelFile>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("model_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Data(format!("no model_*.json files in {}", dir.display())));
    }
    paths.iter().map(|p| ModelFile::read(p)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSeries {
    pub series_id: String,
    pub seed: u64,
    pub a00: f64,
    pub a11: f64,
}

/// Generating parameters written next to simulated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema: u32,
    pub scenario: u32,
    pub beta: [f64; 4],
    pub phi: f64,
    pub power: f64,
    pub alpha: f64,
    pub master_seed: u64,
    pub start_week: YearWeek,
    pub endemic_mean: Vec<f64>,
    pub outbreak_mean: Vec<f64>,
    pub series: Vec<TruthSeries>,
}

pub fn read_group_map(path: &Path) -> Result<Vec<(String, String)>> {
    read_table(path, &GROUPS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            if r[0].is_empty() || r[1].is_empty() {
                return Err(ingest(path, line, "empty series_id or group_id"));
            }
            Ok((r[0].to_string(), r[1].to_string()))
        })
        .collect()
}

pub fn write_group_map(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let bytes = csv_bytes(&GROUPS_HEADER, |w| {
        for (s, g) in rows {
            w.write_record([s, g])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// One row of an HMM scores file.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmScoreRow {
    pub series_id: String,
    pub week: YearWeek,
    pub p_outbreak: f64,
    pub alarm: bool,
}

/// One row of a baseline scores file.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineScoreRow {
    pub series_id: String,
    pub week: YearWeek,
    pub count: u64,
    pub p_value: f64,
    pub threshold: u64,
    pub expected: f64,
    pub alarm: bool,
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn parse_flag(path: &Path, line: u64, s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(ingest(path, line, format!("alarm `{s}` is not 0 or 1"))),
    }
}

fn parse_f64(path: &Path, line: u64, name: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ingest(path, line, format!("{name} `{s}` is not a finite number")))
}

fn parse_prob(path: &Path, line: u64, name: &str, s: &str) -> Result<f64> {
    let x = parse_f64(path, line, name, s)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(ingest(path, line, format!("{name} {x} is outside [0, 1]")));
    }
    Ok(x)
}

pub fn write_hmm_scores(path: &Path, rows: &[HmmScoreRow]) -> Result<()> {
    let bytes = csv_bytes(&HMM_SCORES_HEADER, |w| {
        for r in rows {
            w.write_record([&r.series_id, &r.week.to_string(), &r.p_outbreak.to_string(), flag(r.alarm)])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_hmm_scores(path: &Path) -> Result<Vec<HmmScoreRow>> {
    read_table(path, &HMM_SCORES_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(HmmScoreRow {
                series_id: r[0].to_string(),
                week: parse_week(path, line, &r[1])?,
                p_outbreak: parse_prob(path, line, "p_outbreak", &r[2])?,
                alarm: parse_flag(path, line, &r[3])?,
            })
        })
        .collect()
}

pub fn write_baseline_scores(path: &Path, rows: &[BaselineScoreRow]) -> Result<()> {
    let bytes = csv_bytes(&BASELINE_SCORES_HEADER, |w| {
        for r in rows {
            w.write_record([
                &r.series_id,
                &r.week.to_string(),
                &r.count.to_string(),
                &r.p_value.to_string(),
                &r.threshold.to_string(),
                &r.expected.to_string(),
                flag(r.alarm),
            ])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_baseline_scores(path: &Path) -> Result<Vec<BaselineScoreRow>> {
    read_table(path, &BASELINE_SCORES_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(BaselineScoreRow {
                series_id: r[0].to_string(),
                week: parse_week(path, line, &r[1])?,
                count: r[2].parse().map_err(|_| ingest(path, line, format!("count `{}` is invalid", &r[2])))?,
                p_value: parse_prob(path, line, "p_value", &r[3])?,
                threshold: r[4]
                    .parse()
                    .map_err(|_| ingest(path, line, format!("threshold `{}` is invalid", &r[4])))?,
                expected: parse_f64(path, line, "expected", &r[5])?,
                alarm: parse_flag(path, line, &r[6])?,
            })
        })
        .collect()
}
