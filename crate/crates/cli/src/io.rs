//! CSV and JSON artifacts.
//!
//! Panel CSVs carry `id,t,state`, an optional `origin_offset`, then one
//! column per covariate. Lines starting with `#` are comments, except for
//! a `# columns name:kind,...` directive that fixes the column kinds.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use msm_core::panel::{build_panel, ColumnKind, CovValue, Panel, RawRecord, StateSpace};
use serde::Serialize;

use crate::config::{ArtifactMeta, PanelSection};

const COLUMNS_DIRECTIVE: &str = "# columns ";
const ORIGIN_COLUMN: &str = "origin_offset";

fn kind_name(kind: ColumnKind) -> &'static str {
    match kind {
        ColumnKind::Numeric => "numeric",
        ColumnKind::TimeVarying => "time_varying",
        ColumnKind::Categorical => "categorical",
    }
}

fn parse_kind(s: &str) -> Result<ColumnKind> {
    match s {
        "numeric" => Ok(ColumnKind::Numeric),
        "time_varying" => Ok(ColumnKind::TimeVarying),
        "categorical" => Ok(ColumnKind::Categorical),
        other => bail!("unknown column kind `{other}`"),
    }
}

fn directive_kinds(text: &str) -> Result<HashMap<String, ColumnKind>> {
    let mut out = HashMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix(COLUMNS_DIRECTIVE) {
            for item in rest.split(',').filter(|s| !s.is_empty()) {
                let (name, kind) =
                    item.split_once(':').ok_or_else(|| anyhow!("malformed column directive `{item}`"))?;
                out.insert(name.trim().to_string(), parse_kind(kind.trim())?);
            }
        }
    }
    Ok(out)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

/// Reads a panel CSV. Column kinds come from the file's directive, then
/// from `overrides`, and are otherwise inferred: non-numeric columns are
/// categorical, numeric columns that change within a subject are
/// time-varying.
pub fn read_panel(path: &Path, overrides: &PanelSection) -> Result<Panel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading panel {}", path.display()))?;
    parse_panel(&text, overrides).with_context(|| format!("panel {}", path.display()))
}

pub fn parse_panel(text: &str, overrides: &PanelSection) -> Result<Panel> {
    let declared = directive_kinds(text)?;
    let mut rdr = csv_reader(text);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 3 || headers[0] != "id" || headers[1] != "t" || headers[2] != "state" {
        bail!("panel header must start with `id,t,state`, found `{}`", headers.join(","));
    }
    let origin_col = headers.iter().position(|h| h == ORIGIN_COLUMN);
    let cov_idx: Vec<usize> = (3..headers.len()).filter(|&j| Some(j) != origin_col).collect();
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let mut columns = Vec::with_capacity(cov_idx.len());
    for &j in &cov_idx {
        let name = &headers[j];
        let listed = |list: &[String]| list.iter().any(|c| c == name);
        let kind = if let Some(k) = declared.get(name) {
            *k
        } else if listed(&overrides.categorical) {
            ColumnKind::Categorical
        } else if listed(&overrides.time_varying) {
            ColumnKind::TimeVarying
        } else if listed(&overrides.numeric) {
            ColumnKind::Numeric
        } else {
            infer_kind(&rows, j)
        };
        columns.push((name.clone(), kind));
    }

    let mut records = Vec::with_capacity(rows.len());
    for (line, row) in rows.iter().enumerate() {
        let field = |j: usize| row.get(j).unwrap_or("");
        let bad = |what: &str, j: usize| anyhow!("data row {}: cannot parse {what} `{}`", line + 1, field(j));
        let t: u32 = field(1).parse().map_err(|_| bad("time", 1))?;
        let state: usize = field(2).parse().map_err(|_| bad("state", 2))?;
        let origin_offset: i64 = match origin_col {
            Some(j) => field(j).parse().map_err(|_| bad("origin offset", j))?,
            None => 0,
        };
        let mut values = Vec::with_capacity(cov_idx.len());
        for (&j, (_, kind)) in cov_idx.iter().zip(&columns) {
            values.push(if kind.is_numeric() {
                CovValue::Num(field(j).parse().map_err(|_| bad(&headers[j], j))?)
            } else {
                CovValue::Cat(field(j).to_string())
            });
        }
        records.push(RawRecord { id: field(0).to_string(), t, state, origin_offset, values });
    }
    Ok(build_panel(records, &columns, StateSpace::delinquency())?)
}

fn infer_kind(rows: &[csv::StringRecord], j: usize) -> ColumnKind {
    let mut first: HashMap<&str, &str> = HashMap::new();
    let mut varies = false;
    for row in rows {
        let v = row.get(j).unwrap_or("");
        if v.parse::<f64>().is_err() {
            return ColumnKind::Categorical;
        }
        let seen = first.entry(row.get(0).unwrap_or("")).or_insert(v);
        varies |= *seen != v;
    }
    if varies {
        ColumnKind::TimeVarying
    } else {
        ColumnKind::Numeric
    }
}

/// Writes a panel so that [`read_panel`] reproduces it exactly.
pub fn write_panel(panel: &Panel, path: &Path, meta: &ArtifactMeta) -> Result<()> {
    let schema = panel.schema();
    let mut out = open(path)?;
    writeln!(out, "{}", meta.header_line())?;
    let kinds: Vec<String> = schema.columns().iter().map(|c| format!("{}:{}", c.name, kind_name(c.kind))).collect();
    writeln!(out, "{COLUMNS_DIRECTIVE}{}", kinds.join(","))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "t".into(), "state".into(), ORIGIN_COLUMN.into()];
    header.extend(schema.columns().iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for (i, s) in panel.subjects().iter().enumerate() {
        for (t, state) in s.states.iter().enumerate() {
            let mut rec = vec![s.id.clone(), t.to_string(), state.to_string(), s.origin_offset.to_string()];
            for c in schema.columns() {
                rec.push(if c.kind.is_numeric() {
                    panel.numeric_at(i, t as u32, c.slot()).to_string()
                } else {
                    c.levels[panel.category_at(i, t as u32, c.slot()) as usize].clone()
                });
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// CSV writer whose first line is the provenance header.
pub fn csv_writer(path: &Path, meta: &ArtifactMeta) -> Result<csv::Writer<BufWriter<File>>> {
    let mut out = open(path)?;
    writeln!(out, "{}", meta.header_line())?;
    Ok(csv::Writer::from_writer(out))
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    meta: &'a ArtifactMeta,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with the provenance under a top-level `meta` key.
pub fn write_json<T: Serialize>(path: &Path, meta: &ArtifactMeta, body: &T) -> Result<()> {
    let mut out = open(path)?;
    serde_json::to_writer_pretty(&mut out, &Stamped { meta, body })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Parses a JSON artifact, ignoring its `meta` block.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("meta");
    }
    serde_json::from_value(value).with_context(|| format!("decoding {}", path.display()))
}

pub type TableRow = BTreeMap<String, String>;

/// Rows of a headed CSV as maps from column name to field.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<TableRow>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rdr = csv_reader(&text);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("parsing {}", path.display()))?;
        rows.push(headers.iter().cloned().zip(rec.iter().map(str::to_string)).collect());
    }
    Ok((headers, rows))
}
