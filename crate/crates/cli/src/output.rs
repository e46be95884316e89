use std::fmt::Display;
use std::path::Path;

use holonomy_lab::report::Table;
use holonomy_lab::Result;
use serde_json::{Map, Value};

/// Everything a command produces, written once at the end.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub command: &'static str,
    pub passed: bool,
    /// Effective configuration, echoed in both report forms.
    pub config: Vec<(String, Value)>,
    pub lines: Vec<String>,
    pub result: Value,
    pub tables: Vec<(String, Table)>,
}

impl Artifacts {
    pub fn new(command: &'static str) -> Self {
        Artifacts {
            command,
            passed: true,
            config: Vec::new(),
            lines: Vec::new(),
            result: Value::Null,
            tables: Vec::new(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl serde::Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.config.push((key.to_string(), v));
    }

    pub fn line(&mut self, text: impl Display) {
        self.lines.push(text.to_string());
    }

    pub fn table(&mut self, file: &str, table: Table) {
        self.tables.push((file.to_string(), table));
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn summary(&self) -> String {
        format!("{}: {}", self.command, self.verdict())
    }

    pub fn text(&self) -> String {
        let mut s = format!("holonomy-lab {}\n\nconfiguration\n", self.command);
        for (k, v) in &self.config {
            s.push_str(&format!("  {k}: {v}\n"));
        }
        s.push_str("\nresults\n");
        for l in &self.lines {
            s.push_str(&format!("  {l}\n"));
        }
        if !self.tables.is_empty() {
            s.push_str("\ntables\n");
            for (f, t) in &self.tables {
                s.push_str(&format!("  {f} ({} rows)\n", t.rows.len()));
            }
        }
        s.push_str(&format!("\nverdict: {}\n", self.verdict()));
        s
    }

    pub fn json(&self) -> String {
        let mut config = Map::new();
        for (k, v) in &self.config {
            config.insert(k.clone(), v.clone());
        }
        let mut root = Map::new();
        root.insert("command".into(), Value::from(self.command));
        root.insert("verdict".into(), Value::from(self.verdict()));
        root.insert("config".into(), Value::Object(config));
        root.insert("result".into(), self.result.clone());
        root.insert(
            "tables".into(),
            Value::from(self.tables.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>()),
        );
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.text())?;
        std::fs::write(dir.join("report.json"), self.json())?;
        for (f, t) in &self.tables {
            t.write(&dir.join(f))?;
        }
        Ok(())
    }
}
