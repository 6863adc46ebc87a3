//! Machine-readable result records. All scalars are serialized as strings
//! (full-precision decimal or reduced fraction), never as native floats,
//! and field ordering is fixed so identical runs are byte-identical.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::AppError;

#[derive(Clone, Debug, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub n: u32,
    pub x: u32,
    pub value_closed: String,
    pub value_operator: String,
    pub abs_diff: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRecord {
    pub kind: String,
    pub params: String,
    pub backend: String,
    pub max_residual: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub version: String,
    pub backend: String,
    pub precision: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRecord {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<NamedValue>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<ReportRecord>,
    pub failures: usize,
    pub metadata: Metadata,
}

impl ResultRecord {
    pub fn new(cfg: &RunConfig) -> Self {
        let mut inputs = BTreeMap::new();
        if let Some(q) = &cfg.q {
            inputs.insert("q".to_string(), q.clone());
        }
        if let Some(t) = &cfg.theta2 {
            inputs.insert("theta2".to_string(), t.clone());
        }
        if let Some(p) = &cfg.p {
            inputs.insert("p".to_string(), p.clone());
        }
        if let Some(n) = cfg.big_n {
            inputs.insert("N".to_string(), n.to_string());
        }
        if let Some(n) = cfg.n {
            inputs.insert("n".to_string(), n.to_string());
        }
        if let Some(x) = cfg.x {
            inputs.insert("x".to_string(), x.to_string());
        }
        if let Some(q) = &cfg.quantity {
            inputs.insert("quantity".to_string(), q.clone());
        }
        if let Some(t) = &cfg.tau {
            inputs.insert("tau".to_string(), t.clone());
        }
        if !cfg.suite.is_empty() {
            inputs.insert("suite".to_string(), cfg.suite.join(","));
        }
        ResultRecord {
            command: cfg.command.clone(),
            inputs,
            values: Vec::new(),
            table: Vec::new(),
            reports: Vec::new(),
            failures: 0,
            metadata: Metadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                backend: cfg.backend.as_str().to_string(),
                precision: cfg.precision,
            },
        }
    }

    fn to_csv(&self) -> String {
        let esc = |s: &str| {
            if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        if !self.table.is_empty() {
            out.push_str("n,x,value_closed,value_operator,abs_diff\n");
            for r in &self.table {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.n, r.x, r.value_closed, r.value_operator, r.abs_diff
                ));
            }
        } else if !self.reports.is_empty() {
            out.push_str("kind,params,backend,max_residual,pass\n");
            for r in &self.reports {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    esc(&r.kind),
                    esc(&r.params),
                    r.backend,
                    esc(&r.max_residual),
                    r.pass
                ));
            }
        } else {
            out.push_str("name,value\n");
            for v in &self.values {
                out.push_str(&format!("{},{}\n", esc(&v.name), esc(&v.value)));
            }
        }
        out
    }

    pub fn emit(&self, cfg: &RunConfig) -> Result<(), AppError> {
        let text = match cfg.output {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self)
                    .map_err(|e| AppError::Usage(format!("serialization failed: {e}")))?;
                s.push('\n');
                s
            }
            OutputFormat::Csv => self.to_csv(),
        };
        match &cfg.out_path {
            Some(path) => std::fs::write(path, text).map_err(|e| {
                AppError::Usage(format!("cannot write {}: {e}", path.display()))
            })?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| AppError::Usage(format!("stdout write failed: {e}")))?;
            }
        }
        Ok(())
    }
}
