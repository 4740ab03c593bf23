//! CSV reading and writing.
//!
//! Every file starts with a `#`-prefixed metadata line carrying the format
//! version, master seed and config hash, followed by a normal header row.
//! Values use '.' decimals regardless of locale.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct FileMeta {
    pub master_seed: u64,
    pub config_hash: String,
    /// Extra key=value pairs (acceptance rate, method, ...).
    pub extra: Vec<(String, String)>,
}

impl FileMeta {
    pub fn new(master_seed: u64, config_hash: &str) -> Self {
        FileMeta {
            master_seed,
            config_hash: config_hash.to_string(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    fn line(&self) -> String {
        let mut line = format!(
            "# format_version={} master_seed={} config_hash={}",
            crate::bundle::FORMAT_VERSION,
            self.master_seed,
            self.config_hash
        );
        for (k, v) in &self.extra {
            let _ = write!(line, " {k}={v}");
        }
        line
    }

    pub fn get_extra(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn write_csv(
    path: &Path,
    meta: &FileMeta,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> CliResult<()> {
    let mut out = String::new();
    out.push_str(&meta.line());
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// A parsed CSV: metadata (when present), header fields and data rows.
pub struct CsvFile {
    pub meta: Option<FileMeta>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv(path: &Path) -> CliResult<CsvFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().peekable();
    let meta = match lines.peek() {
        Some(l) if l.starts_with('#') => {
            let parsed = parse_meta(lines.next().expect("peeked"));
            Some(parsed)
        }
        _ => None,
    };
    let header = lines
        .next()
        .ok_or_else(|| CliError::validation(format!("{}: missing header row", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.is_empty() {
            return Err(CliError::validation(format!(
                "{}: malformed row {}",
                path.display(),
                i + 2
            )));
        }
        rows.push(fields);
    }
    Ok(CsvFile { meta, header, rows })
}

fn parse_meta(line: &str) -> FileMeta {
    let mut meta = FileMeta::new(0, "");
    for token in line.trim_start_matches('#').split_whitespace() {
        let Some((k, v)) = token.split_once('=') else { continue };
        match k {
            "master_seed" => meta.master_seed = v.parse().unwrap_or(0),
            "config_hash" => meta.config_hash = v.to_string(),
            "format_version" => {}
            _ => meta.extra.push((k.to_string(), v.to_string())),
        }
    }
    meta
}

/// Reads the x,y columns of a points CSV.
pub fn read_points(path: &Path) -> CliResult<(Vec<[f64; 2]>, Option<FileMeta>)> {
    let file = read_csv(path)?;
    let xi = column_index(&file.header, "x", path)?;
    let yi = column_index(&file.header, "y", path)?;
    let mut points = Vec::with_capacity(file.rows.len());
    for (i, row) in file.rows.iter().enumerate() {
        let parse = |idx: usize| -> CliResult<f64> {
            row.get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "{}: row {} has no numeric column {}",
                        path.display(),
                        i + 1,
                        idx
                    ))
                })
        };
        points.push([parse(xi)?, parse(yi)?]);
    }
    Ok((points, file.meta))
}

pub fn column_index(header: &[String], name: &str, path: &Path) -> CliResult<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| {
        CliError::validation(format!("{}: missing column '{name}'", path.display()))
    })
}

/// Formats a float with enough digits for exact f64 round-trips.
pub fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}
