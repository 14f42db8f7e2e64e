//! Balanced ANOVA datasets and their CSV representation.
//!
//! One-way data is read from a `level,value` table and two-way data from an
//! `a,b,value` table. The replicate index is implicit: each row is one
//! observation, and every level (or cell) must carry the same number of rows.
//! Level labels are arbitrary strings and are numbered in order of first
//! appearance.

use std::collections::HashMap;

use crate::{Error, Result};

/// Observations `y[i][j]` for `p` levels with `r` replicates each.
#[derive(Debug, Clone, PartialEq)]
pub struct OneWayDataset {
    levels: Vec<String>,
    r: usize,
    // row-major, level-major: index i * r + j
    values: Vec<f64>,
}

/// Observations `y[i][j][k]` for a `p x q` grid of cells with `r` replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayDataset {
    a_levels: Vec<String>,
    b_levels: Vec<String>,
    r: usize,
    // index (i * q + j) * r + k
    values: Vec<f64>,
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(idx) => Err(Error::Domain(format!(
            "observation {idx} is not finite ({})",
            values[idx]
        ))),
        None => Ok(()),
    }
}

impl OneWayDataset {
    /// Builds a dataset from per-level rows, labelling levels `1..=p`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let levels = (1..=rows.len()).map(|i| i.to_string()).collect();
        Self::with_labels(levels, rows)
    }

    pub fn with_labels(levels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != rows.len() {
            return Err(Error::Domain(format!(
                "{} labels for {} levels",
                levels.len(),
                rows.len()
            )));
        }
        let r = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|row| row.len() != r) {
            return Err(Error::Balance(format!(
                "level {:?} has {} observations, expected {r}",
                levels[bad],
                rows[bad].len()
            )));
        }
        check_design(&[("levels", rows.len())], r)?;
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        check_finite(&values)?;
        Ok(OneWayDataset { levels, r, values })
    }

    /// Number of factor levels.
    pub fn p(&self) -> usize {
        self.levels.len()
    }

    /// Replicates per level.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Total number of observations.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    /// Observations of level `i`.
    pub fn level(&self, i: usize) -> &[f64] {
        &self.values[i * self.r..(i + 1) * self.r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.r)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.r + j]
    }

    /// All observations, level-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every observation.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        check_finite(&values)?;
        Ok(OneWayDataset {
            levels: self.levels.clone(),
            r: self.r,
            values,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["level", "value"]).expect("in-memory write");
        for (label, row) in self.levels.iter().zip(self.rows()) {
            for v in row {
                w.write_record([label.as_str(), &v.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

impl TwoWayDataset {
    /// Builds a dataset from `cells[i][j] = replicates`, labelling levels by index.
    pub fn from_cells(cells: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let p = cells.len();
        let q = cells.first().map_or(0, Vec::len);
        let a_levels = (1..=p).map(|i| i.to_string()).collect();
        let b_levels = (1..=q).map(|j| j.to_string()).collect();
        Self::with_labels(a_levels, b_levels, cells)
    }

    pub fn with_labels(
        a_levels: Vec<String>,
        b_levels: Vec<String>,
        cells: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let (p, q) = (a_levels.len(), b_levels.len());
        if cells.len() != p || cells.iter().any(|row| row.len() != q) {
            return Err(Error::Balance(format!(
                "cell grid does not match {p} x {q} levels"
            )));
        }
        let r = cells
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len);
        for (i, row) in cells.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if cell.len() != r {
                    return Err(Error::Balance(format!(
                        "cell ({:?}, {:?}) has {} observations, expected {r}",
                        a_levels[i],
                        b_levels[j],
                        cell.len()
                    )));
                }
            }
        }
        check_design(&[("A levels", p), ("B levels", q)], r)?;
        let values: Vec<f64> = cells.into_iter().flatten().flatten().collect();
        check_finite(&values)?;
        Ok(TwoWayDataset {
            a_levels,
            b_levels,
            r,
            values,
        })
    }

    pub fn p(&self) -> usize {
        self.a_levels.len()
    }

    pub fn q(&self) -> usize {
        self.b_levels.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn a_levels(&self) -> &[String] {
        &self.a_levels
    }

    pub fn b_levels(&self) -> &[String] {
        &self.b_levels
    }

    /// Replicates of cell `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.q() + j) * self.r;
        &self.values[start..start + self.r]
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.cell(i, j)[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        check_finite(&values)?;
        Ok(TwoWayDataset {
            a_levels: self.a_levels.clone(),
            b_levels: self.b_levels.clone(),
            r: self.r,
            values,
        })
    }

    /// Views the `p * q` cells as the levels of a single factor.
    pub fn cells_as_one_way(&self) -> OneWayDataset {
        let levels = self
            .a_levels
            .iter()
            .flat_map(|a| self.b_levels.iter().map(move |b| format!("{a}:{b}")))
            .collect();
        OneWayDataset {
            levels,
            r: self.r,
            values: self.values.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["a", "b", "value"])
            .expect("in-memory write");
        for (i, a) in self.a_levels.iter().enumerate() {
            for (j, b) in self.b_levels.iter().enumerate() {
                for v in self.cell(i, j) {
                    w.write_record([a.as_str(), b.as_str(), &v.to_string()])
                        .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

fn check_design(factors: &[(&str, usize)], r: usize) -> Result<()> {
    for &(name, count) in factors {
        if count < 2 {
            return Err(Error::DegenerateDesign(format!(
                "need at least 2 {name}, found {count}"
            )));
        }
    }
    if r < 2 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 2 replicates per cell, found {r}"
        )));
    }
    Ok(())
}

/// Interns labels in order of first appearance.
#[derive(Default)]
struct LabelIndex {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelIndex {
    fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |pos| pos.line());
    Error::Parse {
        line,
        msg: err.to_string(),
    }
}

fn expect_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(csv_error)?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                found.join(",")
            ),
        });
    }
    Ok(())
}

fn parse_value(field: &str, line: u64) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("value is not finite: {field:?}"),
        });
    }
    Ok(v)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |pos| pos.line())
}

/// Parses a `level,value` table into a balanced one-way dataset.
pub fn parse_one_way(text: &str) -> Result<OneWayDataset> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["level", "value"])?;

    let mut labels = LabelIndex::default();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let i = labels.intern(&record[0]);
        let v = parse_value(&record[1], line)?;
        if i == groups.len() {
            groups.push(Vec::new());
        }
        groups[i].push(v);
    }
    if groups.is_empty() {
        return Err(Error::DegenerateDesign("no observations".into()));
    }
    OneWayDataset::with_labels(labels.labels, groups)
}

/// Parses an `a,b,value` table into a balanced two-way dataset.
pub fn parse_two_way(text: &str) -> Result<TwoWayDataset> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["a", "b", "value"])?;

    let mut a_labels = LabelIndex::default();
    let mut b_labels = LabelIndex::default();
    let mut cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let i = a_labels.intern(&record[0]);
        let j = b_labels.intern(&record[1]);
        let v = parse_value(&record[2], line)?;
        cells.entry((i, j)).or_default().push(v);
    }
    if cells.is_empty() {
        return Err(Error::DegenerateDesign("no observations".into()));
    }

    let (p, q) = (a_labels.labels.len(), b_labels.labels.len());
    let mut grid = Vec::with_capacity(p);
    for i in 0..p {
        let mut row = Vec::with_capacity(q);
        for j in 0..q {
            match cells.remove(&(i, j)) {
                Some(cell) => row.push(cell),
                None => {
                    return Err(Error::Balance(format!(
                        "cell ({:?}, {:?}) has no observations",
                        a_labels.labels[i], b_labels.labels[j]
                    )))
                }
            }
        }
        grid.push(row);
    }
    TwoWayDataset::with_labels(a_labels.labels, b_labels.labels, grid)
}
