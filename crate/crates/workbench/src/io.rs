//! On-disk formats: snapshot, cloud and series CSV files, and run manifests.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use qnvp_core::phase::{DistField, PhaseGrid};
use qnvp_core::transport::WeightedCloud;
use serde::{Deserialize, Serialize};

use crate::error::{WorkbenchError, WorkbenchResult};

/// Full round-trip precision for `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_err(what: &'static str, detail: impl Into<String>) -> WorkbenchError {
    WorkbenchError::Format { what, detail: detail.into() }
}

/// Writes `# t=.. nx=.. nv=.. L=.. vmax=..` then one row of `nv` values per `x` cell.
pub fn write_snapshot(path: &Path, f: &DistField) -> WorkbenchResult<()> {
    let g = f.grid;
    let mut out = String::with_capacity(g.cells() * 24 + 128);
    out.push_str(&format!(
        "# t={} nx={} nv={} L={} vmax={}\n",
        fmt_real(f.time),
        g.nx,
        g.nv,
        fmt_real(g.length),
        fmt_real(g.vmax)
    ));
    for i in 0..g.nx {
        let row: Vec<String> = f.row(i).iter().map(|v| fmt_real(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| WorkbenchError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> WorkbenchResult<DistField> {
    let file = fs::File::open(path).map_err(|e| WorkbenchError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err("snapshot", "empty file"))?
        .map_err(|e| WorkbenchError::io(path, e))?;
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| format_err("snapshot", "missing `#` header"))?;
    let (mut t, mut nx, mut nv, mut length, mut vmax) = (None, None, None, None, None);
    for item in body.split_whitespace() {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format_err("snapshot", format!("bad header item `{item}`")))?;
        let bad = || format_err("snapshot", format!("bad header value `{item}`"));
        match k {
            "t" => t = Some(v.parse::<f64>().map_err(|_| bad())?),
            "nx" => nx = Some(v.parse::<usize>().map_err(|_| bad())?),
            "nv" => nv = Some(v.parse::<usize>().map_err(|_| bad())?),
            "L" => length = Some(v.parse::<f64>().map_err(|_| bad())?),
            "vmax" => vmax = Some(v.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(format_err("snapshot", format!("unknown header key `{k}`"))),
        }
    }
    let missing = || format_err("snapshot", "incomplete header");
    let grid = PhaseGrid::new(nx.ok_or_else(missing)?, nv.ok_or_else(missing)?, length.ok_or_else(missing)?, vmax.ok_or_else(missing)?)?;
    let mut values = Vec::with_capacity(grid.cells());
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| WorkbenchError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for cell in line.split(',') {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| format_err("snapshot", format!("row {}: bad value `{cell}`", n + 1)))?,
            );
        }
        if values.len() - before != grid.nv {
            return Err(format_err("snapshot", format!("row {} has {} values, expected {}", n + 1, values.len() - before, grid.nv)));
        }
    }
    if values.len() != grid.cells() {
        return Err(format_err("snapshot", format!("{} rows, expected {}", values.len() / grid.nv.max(1), grid.nx)));
    }
    Ok(DistField::new(grid, values, t.ok_or_else(missing)?)?)
}

/// Cloud CSV: header `x,v,w` (indexed as `x1,..,v1,..` in higher dimension).
pub fn write_cloud(path: &Path, cloud: &WeightedCloud) -> WorkbenchResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err("cloud", e.to_string()))?;
    let mut header: Vec<String> = Vec::new();
    let name = |base: &str, n: usize, i: usize| if n == 1 { base.to_string() } else { format!("{base}{}", i + 1) };
    for i in 0..cloud.dim_x {
        header.push(name("x", cloud.dim_x, i));
    }
    for i in 0..cloud.dim_v {
        header.push(name("v", cloud.dim_v, i));
    }
    header.push("w".into());
    w.write_record(&header).map_err(|e| format_err("cloud", e.to_string()))?;
    for i in 0..cloud.len() {
        let (x, v) = cloud.point(i);
        let mut rec: Vec<String> = x.iter().chain(v).map(|c| fmt_real(*c)).collect();
        rec.push(fmt_real(cloud.weights[i]));
        w.write_record(&rec).map_err(|e| format_err("cloud", e.to_string()))?;
    }
    w.flush().map_err(|e| WorkbenchError::io(path, e))
}

/// Reads a cloud CSV; weights are renormalized to total one and the period is `length`.
pub fn read_cloud(path: &Path, length: f64) -> WorkbenchResult<WeightedCloud> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err("cloud", format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| format_err("cloud", e.to_string()))?.clone();
    let dim_x = header.iter().filter(|h| h.starts_with('x')).count();
    let dim_v = header.iter().filter(|h| h.starts_with('v')).count();
    if dim_x + dim_v + 1 != header.len() || header.get(header.len() - 1) != Some("w") || dim_x == 0 {
        return Err(format_err("cloud", "expected columns x..., v..., w"));
    }
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err("cloud", e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format_err("cloud", format!("row {}: bad number", n + 1)))?;
        if vals.len() != header.len() {
            return Err(format_err("cloud", format!("row {} has {} columns", n + 1, vals.len())));
        }
        coords.extend_from_slice(&vals[..dim_x + dim_v]);
        weights.push(vals[dim_x + dim_v]);
    }
    Ok(WeightedCloud::normalized(dim_x, dim_v, &coords, &weights, length)?)
}

/// A table of named real columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> WorkbenchResult<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| format_err("table", e.to_string()))?;
        w.write_record(&self.columns).map_err(|e| format_err("table", e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| format_err("table", e.to_string()))?;
        }
        w.flush().map_err(|e| WorkbenchError::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Reads a series CSV and returns the named columns.
pub fn read_series(path: &Path, time_col: &str, value_col: &str) -> WorkbenchResult<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err("series", format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| format_err("series", e.to_string()))?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format_err("series", format!("missing column `{name}`")))
    };
    let (ti, vi) = (find(time_col)?, find(value_col)?);
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err("series", e.to_string()))?;
        let parse = |i: usize| {
            rec.get(i)
                .and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| format_err("series", format!("row {}: bad number", n + 1)))
        };
        t.push(parse(ti)?);
        v.push(parse(vi)?);
    }
    Ok((t, v))
}

/// One emitted file and the operation that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub operation: String,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub artifacts: Vec<Artifact>,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let started = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            started_unix: started,
            wall_seconds: 0.0,
            artifacts: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn record(&mut self, path: &str, operation: &str, inputs: &[&str]) {
        self.artifacts.push(Artifact {
            path: path.into(),
            operation: operation.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        });
    }

    /// Checks that every indexed artifact exists under `dir`.
    pub fn validate(&self, dir: &Path) -> WorkbenchResult<()> {
        for a in &self.artifacts {
            if !dir.join(&a.path).is_file() {
                return Err(WorkbenchError::Validation(format!("manifest references missing artifact {}", a.path)));
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> WorkbenchResult<()> {
        self.validate(dir)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| format_err("manifest", e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| WorkbenchError::io(&path, e))
    }

    pub fn read(dir: &Path) -> WorkbenchResult<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| WorkbenchError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| format_err("manifest", e.to_string()))
    }
}

/// Creates `dir`, failing if it already holds files unless `force` is set.
pub fn prepare_output(dir: &Path, force: bool) -> WorkbenchResult<PathBuf> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(|e| WorkbenchError::io(dir, e))?;
        if entries.next().is_some() && !force {
            return Err(WorkbenchError::OutputExists(dir.display().to_string()));
        }
    }
    fs::create_dir_all(dir).map_err(|e| WorkbenchError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

pub fn write_text(path: &Path, text: &str) -> WorkbenchResult<()> {
    let mut f = fs::File::create(path).map_err(|e| WorkbenchError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| WorkbenchError::io(path, e))
}
