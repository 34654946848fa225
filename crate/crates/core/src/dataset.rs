//! Point sets, their loaders, and the preprocessing pipeline.
//!
//! A [`Dataset`] holds the feature matrix `X` with one column per point, so
//! `X` is `r x n`. Engines share the matrix through an `Arc`.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    x: Arc<DMatrix<f64>>,
    labels: Option<Vec<u8>>,
    ids: Vec<String>,
    meta: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        x: DMatrix<f64>,
        labels: Option<Vec<u8>>,
        ids: Vec<String>,
        meta: Option<Vec<String>>,
    ) -> Result<Self> {
        let (r, n) = x.shape();
        if n == 0 {
            return Err(Error::Empty);
        }
        if r == 0 {
            return Err(Error::Shape("points have zero features".into()));
        }
        if let Some((k, _)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "non-finite feature {} of point {}",
                k % r,
                k / r
            )));
        }
        if ids.len() != n {
            return Err(Error::Shape(format!("{} ids for {n} points", ids.len())));
        }
        let mut seen = HashSet::with_capacity(n);
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Precondition(format!("duplicate point id `{dup}`")));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::Shape(format!("{} labels for {n} points", labels.len())));
            }
            if let Some(i) = labels.iter().position(|&y| y > 1) {
                return Err(param("label", format!("point {i} has label {}", labels[i])));
            }
        }
        if let Some(meta) = &meta {
            if meta.len() != n {
                return Err(Error::Shape(format!("{} meta strings for {n} points", meta.len())));
            }
        }
        Ok(Dataset {
            x: Arc::new(x),
            labels,
            ids,
            meta,
        })
    }

    /// Dataset with ids `"0".."n-1"` and no metadata.
    pub fn from_matrix(x: DMatrix<f64>, labels: Option<Vec<u8>>) -> Result<Self> {
        let ids = (0..x.ncols()).map(|i| i.to_string()).collect();
        Self::new(x, labels, ids, None)
    }

    fn with_matrix(&self, x: DMatrix<f64>) -> Self {
        Dataset {
            x: Arc::new(x),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn shared_x(&self) -> Arc<DMatrix<f64>> {
        Arc::clone(&self.x)
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn r(&self) -> usize {
        self.x.nrows()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn meta(&self) -> Option<&[String]> {
        self.meta.as_deref()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    pub fn positives(&self) -> Option<usize> {
        self.labels().map(|l| l.iter().filter(|&&y| y == 1).count())
    }

    pub fn prevalence(&self) -> Option<f64> {
        self.positives().map(|p| p as f64 / self.n() as f64)
    }

    /// Points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let cols: Vec<_> = indices.iter().map(|&i| self.x.column(i)).collect();
        if cols.is_empty() {
            return Err(Error::Empty);
        }
        let x = DMatrix::from_columns(&cols);
        let pick = |v: &[String]| indices.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Self::new(
            x,
            self.labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            pick(&self.ids),
            self.meta.as_deref().map(pick),
        )
    }
}

/// Options for [`load_csv`]. Column indices refer to columns of the file.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label_column: Option<usize>,
    /// Columns holding category names, expanded one-hot at load.
    pub categorical: Vec<usize>,
}

pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let file = File::open(path)?;
    parse_csv(file, opts)
}

pub fn parse_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut width = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {w} fields, found {}", rec.len()),
                })
            }
            _ => {}
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    let width = width.ok_or(Error::Empty)?;

    if let Some(c) = opts.label_column.filter(|&c| c >= width) {
        return Err(param("label_column", format!("column {c} of {width}")));
    }
    if let Some(&c) = opts.categorical.iter().find(|&&c| c >= width) {
        return Err(param("categorical", format!("column {c} of {width}")));
    }

    let n = rows.len();
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut labels = opts.label_column.map(|_| Vec::with_capacity(n));
    for col in 0..width {
        if Some(col) == opts.label_column {
            let out = labels.as_mut().expect("label column set");
            for (line, row) in &rows {
                match row[col].as_str() {
                    "0" | "0.0" => out.push(0),
                    "1" | "1.0" => out.push(1),
                    other => {
                        return Err(Error::Parse {
                            line: *line,
                            msg: format!("column {col}: label `{other}` is not 0 or 1"),
                        })
                    }
                }
            }
        } else if opts.categorical.contains(&col) {
            let cats: BTreeSet<&str> = rows.iter().map(|(_, r)| r[col].as_str()).collect();
            for cat in cats {
                features.push(
                    rows.iter()
                        .map(|(_, r)| if r[col] == cat { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        } else {
            let mut values = Vec::with_capacity(n);
            for (line, row) in &rows {
                values.push(parse_cell(&row[col], *line, col)?);
            }
            features.push(values);
        }
    }
    if features.is_empty() {
        return Err(Error::Shape("no feature columns".into()));
    }
    let r = features.len();
    let x = DMatrix::from_fn(r, n, |k, i| features[k][i]);
    Dataset::from_matrix(x, labels)
}

fn parse_cell(cell: &str, line: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("column {col}: `{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("column {col}: non-finite value `{cell}`"),
        });
    }
    Ok(v)
}

/// Writes one row per point, labels (if any) in the last column.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so reloading reproduces `X` bit for bit.
pub fn write_csv<W: Write>(d: &Dataset, mut out: W) -> Result<()> {
    for i in 0..d.n() {
        let col = d.x().column(i);
        let mut line = col
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(",");
        if let Some(l) = d.labels() {
            line.push(',');
            line.push_str(&l[i].to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads `label idx:val idx:val ...`, one point per line, 1-based indices.
///
/// The feature dimension is `dim` when given, else the largest index seen.
pub fn load_sparse(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    parse_sparse(BufReader::new(File::open(path)?), dim)
}

pub fn parse_sparse<R: BufRead>(reader: R, dim: Option<usize>) -> Result<Dataset> {
    let mut points: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_idx = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        let y = match label {
            "0" => 0,
            "1" | "+1" => 1,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("label `{other}` is not 0 or 1"),
                })
            }
        };
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("`{tok}` is not idx:val"),
            })?;
            let idx: usize = idx
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("bad feature index `{idx}`"),
                })?;
            let val = parse_cell(val, lineno, idx)?;
            max_idx = max_idx.max(idx);
            entries.push((idx - 1, val));
        }
        points.push(entries);
        labels.push(y);
    }
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let r = match dim {
        Some(d) if d < max_idx => {
            return Err(Error::Shape(format!("index {max_idx} exceeds dimension {d}")))
        }
        Some(d) => d,
        None => max_idx,
    };
    let mut x = DMatrix::zeros(r, points.len());
    for (i, entries) in points.iter().enumerate() {
        for &(k, v) in entries {
            x[(k, i)] = v;
        }
    }
    Dataset::from_matrix(x, Some(labels))
}

/// Per-feature bin edges used to turn a continuous feature categorical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretize {
    pub feature: usize,
    pub edges: Vec<f64>,
}

/// Preprocessing applied in the order one-hot, normalize, bias.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub bias: bool,
    /// Feature rows holding category codes.
    #[serde(default)]
    pub categorical: Vec<usize>,
    #[serde(default)]
    pub discretize: Vec<Discretize>,
}

impl PreprocessSpec {
    pub fn validate(&self, r: usize) -> Result<()> {
        if let Some(&c) = self.categorical.iter().find(|&&c| c >= r) {
            return Err(param("categorical", format!("feature {c} of {r}")));
        }
        for d in &self.discretize {
            if d.feature >= r {
                return Err(param("discretize", format!("feature {} of {r}", d.feature)));
            }
            if d.edges.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(param(
                    "discretize",
                    format!("edges for feature {} are not strictly increasing", d.feature),
                ));
            }
        }
        Ok(())
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        let mut out = if self.categorical.is_empty() && self.discretize.is_empty() {
            d.clone()
        } else {
            one_hot(d, self)?
        };
        if self.normalize {
            out = unit_normalize(&out).0;
        }
        if self.bias {
            out = append_bias(&out);
        }
        Ok(out)
    }
}

/// Scales every nonzero point to unit length. Returns the count of zero
/// points, which are left untouched.
pub fn unit_normalize(d: &Dataset) -> (Dataset, usize) {
    let mut x = d.x().clone();
    let mut zeros = 0;
    for mut col in x.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            zeros += 1;
        }
    }
    if zeros > 0 {
        warn!("{zeros} zero-norm points left unnormalized");
    }
    (d.with_matrix(x), zeros)
}

/// Replaces each categorical or discretized feature with `m` indicator
/// features, one per category, in place. Categories are ordered by value;
/// a discretized feature with `k` edges always has `k + 1` bins.
pub fn one_hot(d: &Dataset, spec: &PreprocessSpec) -> Result<Dataset> {
    spec.validate(d.r())?;
    let x = d.x();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for k in 0..d.r() {
        let feature = x.row(k);
        if let Some(disc) = spec.discretize.iter().find(|t| t.feature == k) {
            let bins: Vec<usize> = feature
                .iter()
                .map(|&v| disc.edges.partition_point(|&e| e <= v))
                .collect();
            for b in 0..=disc.edges.len() {
                rows.push(DVector::from_iterator(
                    d.n(),
                    bins.iter().map(|&c| if c == b { 1.0 } else { 0.0 }),
                ));
            }
        } else if spec.categorical.contains(&k) {
            let mut cats: Vec<f64> = feature.iter().copied().collect();
            cats.sort_by(f64::total_cmp);
            cats.dedup();
            for cat in cats {
                rows.push(DVector::from_iterator(
                    d.n(),
                    feature.iter().map(|&v| if v == cat { 1.0 } else { 0.0 }),
                ));
            }
        } else {
            rows.push(feature.transpose());
        }
    }
    let out = DMatrix::from_fn(rows.len(), d.n(), |k, i| rows[k][i]);
    Ok(d.with_matrix(out))
}

/// Appends a constant-1 feature to every point.
pub fn append_bias(d: &Dataset) -> Dataset {
    let x = d.x();
    if x.row_iter().any(|row| row.iter().all(|&v| v == 1.0)) {
        warn!("appending a bias feature to data that already has a constant-1 feature");
    }
    let r = d.r();
    let out = DMatrix::from_fn(r + 1, d.n(), |k, i| if k == r { 1.0 } else { x[(k, i)] });
    d.with_matrix(out)
}

/// Drops points of the over-represented class until the positive fraction
/// is `target` (as close as integer counts allow). Kept points retain their
/// original order.
pub fn subsample_to_prevalence(d: &Dataset, target: f64, seed: u64) -> Result<Dataset> {
    if !(target > 0.0 && target < 1.0) {
        return Err(param("prevalence", format!("must lie in (0, 1), got {target}")));
    }
    let labels = d
        .labels()
        .ok_or_else(|| Error::Precondition("subsampling needs ground-truth labels".into()))?;
    let mut pos: Vec<usize> = (0..d.n()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..d.n()).filter(|&i| labels[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Precondition("both classes must be present".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let current = pos.len() as f64 / d.n() as f64;
    if current > target {
        let keep = ((target * neg.len() as f64) / (1.0 - target)).round().max(1.0) as usize;
        pos.shuffle(&mut rng);
        pos.truncate(keep);
    } else {
        let keep = ((1.0 - target) * pos.len() as f64 / target).round() as usize;
        neg.shuffle(&mut rng);
        neg.truncate(keep);
    }
    let mut keep: Vec<usize> = pos.into_iter().chain(neg).collect();
    keep.sort_unstable();
    d.subset(&keep)
}
