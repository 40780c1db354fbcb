//! CSV and JSON file formats.
//!
//! Floats are written in shortest round-trip form, so every CSV reads back
//! to the identical values.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use evostab_core::evolution::GenerationRecord;
use evostab_core::macrostate::{MacroStatePartition, OccupationSeries};
use evostab_core::markov::{Distribution, StochasticMatrix};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: [&str; 6] =
    ["generation", "max_fitness", "mean_fitness", "mean_length", "pop_size", "macro_state"];
pub const SWEEP_HEADER: [&str; 3] = ["mutation_rate", "crossover_rate", "d_ins"];

fn create(path: &Path) -> CliResult<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map_err(|e| CliError::io(path, e))
}

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().flexible(true).from_writer(create(path)?))
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))
}

fn bad_data(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into()))
}

fn parse<T: std::str::FromStr>(path: &Path, field: &str) -> CliResult<T> {
    field.parse().map_err(|_| bad_data(path, format!("cannot parse {field:?}")))
}

pub fn write_trajectory(path: &Path, records: &[GenerationRecord], part: &MacroStatePartition) -> CliResult<()> {
    let mut w = writer(path)?;
    let err = |e| CliError::csv(path, e);
    w.write_record(TRAJECTORY_HEADER).map_err(err)?;
    for r in records {
        w.write_record([
            r.generation.to_string(),
            r.max_fitness.to_string(),
            r.mean_fitness.to_string(),
            r.mean_length.to_string(),
            r.pop_size.to_string(),
            part.name(r.macro_state),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trajectory(path: &Path, part: &MacroStatePartition) -> CliResult<Vec<GenerationRecord>> {
    let mut r = reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        if rec.len() != TRAJECTORY_HEADER.len() {
            return Err(bad_data(path, "trajectory rows have six fields"));
        }
        out.push(GenerationRecord {
            generation: parse(path, &rec[0])?,
            max_fitness: parse(path, &rec[1])?,
            mean_fitness: parse(path, &rec[2])?,
            mean_length: parse(path, &rec[3])?,
            pop_size: parse(path, &rec[4])?,
            macro_state: part
                .parse_name(&rec[5])
                .ok_or_else(|| bad_data(path, format!("unknown macro-state {:?}", &rec[5])))?,
        });
    }
    Ok(out)
}

pub fn write_occupation(path: &Path, series: &OccupationSeries, part: &MacroStatePartition) -> CliResult<()> {
    let mut w = writer(path)?;
    let err = |e| CliError::csv(path, e);
    let mut header = vec!["generation".to_string()];
    header.extend(part.labels().map(|l| part.name(l)));
    w.write_record(&header).map_err(err)?;
    for (g, row) in series.rows.iter().enumerate() {
        let mut rec = vec![g.to_string()];
        rec.extend(row.entries().iter().map(f64::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads an occupation CSV; columns must match `part`.
pub fn read_occupation(path: &Path, part: &MacroStatePartition) -> CliResult<Vec<Distribution>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let expected: Vec<String> = part.labels().map(|l| part.name(l)).collect();
    if header.iter().skip(1).ne(expected.iter().map(String::as_str)) {
        return Err(bad_data(path, "occupation columns do not match the partition"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let p = rec.iter().skip(1).map(|f| parse(path, f)).collect::<CliResult<Vec<f64>>>()?;
        rows.push(Distribution::with_tolerance(p, 1e-9).map_err(|e| bad_data(path, e.to_string()))?);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub d_ins: f64,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = writer(path)?;
    let err = |e| CliError::csv(path, e);
    w.write_record(SWEEP_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([r.mutation_rate.to_string(), r.crossover_rate.to_string(), r.d_ins.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_sweep(path: &Path) -> CliResult<Vec<SweepRow>> {
    let mut r = reader(path)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::csv(path, e))?;
            if rec.len() != 3 {
                return Err(bad_data(path, "sweep rows have three fields"));
            }
            Ok(SweepRow { mutation_rate: parse(path, &rec[0])?, crossover_rate: parse(path, &rec[1])?, d_ins: parse(path, &rec[2])? })
        })
        .collect()
}

/// Header `n_states`, then the state count, then one row per matrix row.
pub fn write_matrix(path: &Path, m: &StochasticMatrix) -> CliResult<()> {
    let mut w = writer(path)?;
    let err = |e| CliError::csv(path, e);
    w.write_record(["n_states"]).map_err(err)?;
    w.write_record([m.n_states().to_string()]).map_err(err)?;
    for row in m.rows() {
        w.write_record(row.iter().map(f64::to_string)).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_matrix(path: &Path) -> CliResult<StochasticMatrix> {
    let mut r = reader(path)?;
    if r.headers().map_err(|e| CliError::csv(path, e))?.iter().ne(["n_states"]) {
        return Err(bad_data(path, "expected header n_states"));
    }
    let mut records = r.records();
    let n: usize = match records.next() {
        Some(rec) => parse(path, &rec.map_err(|e| CliError::csv(path, e))?[0])?,
        None => return Err(bad_data(path, "missing state count")),
    };
    let mut data = Vec::with_capacity(n * n);
    for rec in records {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        if rec.len() != n {
            return Err(bad_data(path, format!("matrix rows have {n} entries")));
        }
        for f in rec.iter() {
            data.push(parse::<f64>(path, f)?);
        }
    }
    StochasticMatrix::from_row_major(n, data).map_err(|e| bad_data(path, e.to_string()))
}

/// One JSON document per line.
pub fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    let mut w = BufWriter::new(create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CliError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
