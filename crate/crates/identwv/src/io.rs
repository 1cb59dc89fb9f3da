//! Versioned plain-text file formats.
//!
//! Dataset files (`IDENTWV-DATA v1`):
//!
//! ```text
//! IDENTWV-DATA v1
//! dims=1
//! n_x=256
//! n_t=300
//! x_min=-3.141592653589793
//! x_max=3.141592653589793
//! t_max=0.006
//! has_clean=true
//! sim.equation=kdv
//! values
//! <n_t+1 lines of n_x+1 numbers>
//! clean
//! <same layout>
//! ```
//!
//! 2D files add `n_y`, `y_min`, `y_max`; each time slice is then a block of
//! `n_y+1` lines followed by a blank line. Numbers are written with 17
//! significant digits, so a write/read round trip is bit exact. Keys with a
//! `sim.` prefix carry free-form metadata (the simulation spec).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use identwv_core::{Axis, Dataset, FeatureLibrary, Grid, IdentResult, TestFunctionGrid, WeakSystem};

use crate::error::{Error, Result};

pub const DATA_MAGIC: &str = "IDENTWV-DATA v1";
pub const RESULT_MAGIC: &str = "IDENTWV-RESULT v1";
pub const SYSTEM_MAGIC: &str = "IDENTWV-SYSTEM v1";
pub const INDICATORS_MAGIC: &str = "IDENTWV-INDICATORS v1";
pub const MANIFEST_MAGIC: &str = "IDENTWV-MANIFEST v1";

/// Ordered key/value pairs.
pub type Metadata = Vec<(String, String)>;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Fixed 17 significant digits, used for dataset values.
fn fmt_17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Dataset together with the free-form metadata stored next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub dataset: Dataset,
    /// Keys without the `sim.` prefix.
    pub metadata: Metadata,
}

impl DatasetFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn write_block(out: &mut String, grid: &Grid, values: &[f64]) {
    let nx = grid.x().cells + 1;
    let two_d = grid.spatial_dims() == 2;
    let rows_per_slice = grid.slice_len() / nx;
    for (r, row) in values.chunks(nx).enumerate() {
        let line: Vec<String> = row.iter().map(|&v| fmt_17(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
        if two_d && (r + 1) % rows_per_slice == 0 {
            out.push('\n');
        }
    }
}

pub fn format_dataset(dataset: &Dataset, metadata: &[(String, String)]) -> String {
    let grid = dataset.grid();
    let mut out = String::new();
    out.push_str(DATA_MAGIC);
    out.push('\n');
    let x = grid.x();
    let _ = writeln!(out, "dims={}", grid.spatial_dims());
    let _ = writeln!(out, "n_x={}", x.cells);
    if let Some(y) = grid.space().get(1) {
        let _ = writeln!(out, "n_y={}", y.cells);
    }
    let _ = writeln!(out, "n_t={}", grid.n_t());
    let _ = writeln!(out, "x_min={}", fmt_f64(x.min));
    let _ = writeln!(out, "x_max={}", fmt_f64(x.max));
    if let Some(y) = grid.space().get(1) {
        let _ = writeln!(out, "y_min={}", fmt_f64(y.min));
        let _ = writeln!(out, "y_max={}", fmt_f64(y.max));
    }
    let _ = writeln!(out, "t_max={}", fmt_f64(grid.t_max()));
    let _ = writeln!(out, "has_clean={}", dataset.clean_values().is_some());
    for (k, v) in metadata {
        let _ = writeln!(out, "sim.{k}={v}");
    }
    out.push_str("values\n");
    write_block(&mut out, grid, dataset.values());
    if let Some(clean) = dataset.clean_values() {
        out.push_str("clean\n");
        write_block(&mut out, grid, clean);
    }
    out
}

pub fn write_dataset(path: &Path, dataset: &Dataset, metadata: &[(String, String)]) -> Result<()> {
    write_text(path, &format_dataset(dataset, metadata))
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format { path: self.path.to_path_buf(), line: self.last, message: message.into() }
    }

    fn next(&mut self) -> Option<&'a str> {
        let (i, l) = self.inner.next()?;
        self.last = i + 1;
        Some(l)
    }
}

fn parse_values(lines: &mut Lines, count: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(count);
    while values.len() < count {
        let line = lines.next().ok_or_else(|| lines.err(format!("expected {count} values, found {}", values.len())))?;
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| lines.err(format!("bad number `{tok}`")))?;
            if !v.is_finite() {
                return Err(lines.err(format!("non-finite value `{tok}`")));
            }
            values.push(v);
        }
    }
    if values.len() != count {
        return Err(lines.err(format!("expected {count} values, found {}", values.len())));
    }
    Ok(values)
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<DatasetFile> {
    let mut lines = Lines { inner: text.lines().enumerate().peekable(), path, last: 0 };
    if lines.next().map(str::trim) != Some(DATA_MAGIC) {
        return Err(lines.err(format!("missing `{DATA_MAGIC}` header")));
    }
    let mut header: Metadata = Vec::new();
    let mut metadata = Vec::new();
    loop {
        let line = lines.next().ok_or_else(|| lines.err("missing `values` section"))?.trim();
        if line == "values" {
            break;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| lines.err(format!("expected key=value, got `{line}`")))?;
        match k.strip_prefix("sim.") {
            Some(k) => metadata.push((k.to_string(), v.to_string())),
            None => header.push((k.to_string(), v.to_string())),
        }
    }
    let key = |k: &str| -> Result<&str> {
        header
            .iter()
            .find(|(hk, _)| hk == k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format { path: path.to_path_buf(), line: 0, message: format!("missing key `{k}`") })
    };
    let num = |k: &str| -> Result<f64> {
        key(k)?.parse().map_err(|_| Error::Format { path: path.to_path_buf(), line: 0, message: format!("bad `{k}`") })
    };
    let count = |k: &str| -> Result<usize> {
        key(k)?.parse().map_err(|_| Error::Format { path: path.to_path_buf(), line: 0, message: format!("bad `{k}`") })
    };
    let dims = count("dims")?;
    let mut space = vec![Axis::new(num("x_min")?, num("x_max")?, count("n_x")?)?];
    if dims == 2 {
        space.push(Axis::new(num("y_min")?, num("y_max")?, count("n_y")?)?);
    } else if dims != 1 {
        return Err(Error::Core(identwv_core::Error::UnsupportedDimension(dims)));
    }
    let grid = Grid::new(space, num("t_max")?, count("n_t")?)?;
    let has_clean = match key("has_clean")? {
        "true" => true,
        "false" => false,
        other => return Err(lines.err(format!("bad has_clean `{other}`"))),
    };
    let n = grid.num_points();
    let values = parse_values(&mut lines, n)?;
    let dataset = if has_clean {
        loop {
            match lines.next() {
                Some(l) if l.trim().is_empty() => continue,
                Some(l) if l.trim() == "clean" => break,
                _ => return Err(lines.err("missing `clean` section")),
            }
        }
        let clean = parse_values(&mut lines, n)?;
        Dataset::with_clean(grid, values, clean)?
    } else {
        Dataset::new(grid, values)?
    };
    Ok(DatasetFile { dataset, metadata })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `key=value` lines under a magic header.
pub fn format_key_values(magic: &str, entries: &[(String, String)]) -> String {
    let mut out = format!("{magic}\n");
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

/// Manifest echoing the effective configuration of a run.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    write_text(path, &format_key_values(MANIFEST_MAGIC, entries))
}

/// Result file: configuration and summary as key=value, then one row per
/// library feature with its occurrence, average magnitude and final coefficient.
pub fn format_result(result: &IdentResult, library: &FeatureLibrary, config: &[(String, String)]) -> String {
    let mut out = format_key_values(RESULT_MAGIC, config);
    let d = &result.diagnostics;
    let _ = writeln!(out, "equation={}", result.coefficients.format_equation(library));
    let _ = writeln!(out, "support_b={}", join_names(library, &result.support_b));
    let _ = writeln!(out, "support_c={}", join_names(library, &result.support_c));
    let _ = writeln!(out, "empty_support={}", d.empty_support);
    let _ = writeln!(out, "rank_deficient={}", d.rank_deficient);
    let _ = writeln!(out, "relative_residual={}", fmt_f64(d.relative_residual));
    let _ = writeln!(out, "condition_number={}", fmt_f64(d.condition_number));
    let _ = writeln!(out, "rows={}", d.rows);
    for sub in &result.subresults {
        let _ = writeln!(
            out,
            "subresult.{}={}",
            sub.reference.name(),
            sub.coefficients.format_equation(library)
        );
    }
    out.push_str("features\nname occurrence avg_magnitude coefficient\n");
    for (l, name) in library.names().iter().enumerate() {
        let _ = writeln!(
            out,
            "{name} {} {} {}",
            fmt_f64(result.occurrence[l]),
            fmt_f64(result.average_magnitude[l]),
            fmt_f64(result.coefficients.values()[l])
        );
    }
    out
}

fn join_names(library: &FeatureLibrary, idx: &[usize]) -> String {
    let names = library.names();
    idx.iter().map(|&l| names[l].as_str()).collect::<Vec<_>>().join(",")
}

/// `W` and `b`: a header naming the columns, then one line `b_h w_h1 ... w_hL` per row.
pub fn format_system(sys: &WeakSystem) -> String {
    let mut out = format!("{SYSTEM_MAGIC}\nrows={}\ncols={}\n", sys.rows(), sys.cols());
    let _ = writeln!(out, "b {}", sys.library.names().join(" "));
    for h in 0..sys.rows() {
        out.push_str(&fmt_f64(sys.b[h]));
        for l in 0..sys.cols() {
            out.push(' ');
            out.push_str(&fmt_f64(sys.w[(h, l)]));
        }
        out.push('\n');
    }
    out
}

/// One grid-shaped matrix per reference feature: rows are time centers,
/// columns spatial centers (x fastest, then y).
pub fn format_indicators(result: &IdentResult, tfs: &TestFunctionGrid) -> String {
    let per_slice: usize = tfs.centers().iter().map(Vec::len).product();
    let mut out = format!("{INDICATORS_MAGIC}\n");
    let _ = writeln!(out, "centers_t={}", join_usize(tfs.centers_t()));
    for (axis, c) in ["x", "y"].iter().zip(tfs.centers()) {
        let _ = writeln!(out, "centers_{axis}={}", join_usize(c));
    }
    for sub in &result.subresults {
        let _ = writeln!(out, "reference={}", sub.reference.name());
        for row in sub.weights.r.chunks(per_slice) {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}
