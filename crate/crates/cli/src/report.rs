//! Run reports: ordered `key: value` lines, optionally followed by a CSV
//! block.

use std::fmt::Write;
use std::time::Duration;

#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, String)>,
    timings: Vec<(String, Duration)>,
    block: Option<(String, String)>,
}

/// Shell-style rendering of an argument list.
pub fn echo_command(args: &[String]) -> String {
    args.iter()
        .map(|a| {
            let plain = !a.is_empty()
                && a.chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_./=,:+@%".contains(c));
            if plain {
                a.clone()
            } else {
                format!("'{}'", a.replace('\'', r"'\''"))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    /// Float field in shortest round-trip form.
    pub fn number(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.field(key, format!("{value:?}"))
    }

    pub fn timing(&mut self, key: impl Into<String>, d: Duration) -> &mut Self {
        self.timings.push((key.into(), d));
        self
    }

    pub fn block(&mut self, name: impl Into<String>, csv: impl Into<String>) -> &mut Self {
        self.block = Some((name.into(), csv.into()));
        self
    }

    /// Header (command, version, seed) first, then fields in insertion
    /// order, timings, warnings and the CSV block.
    pub fn render(
        &self,
        command: &str,
        seed: Option<u64>,
        total: Duration,
        warnings: &[String],
    ) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {command}");
        let _ = writeln!(out, "version: {}", env!("CARGO_PKG_VERSION"));
        match seed {
            Some(s) => {
                let _ = writeln!(out, "seed: {s}");
            }
            None => out.push_str("seed: none\n"),
        }
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}: {v}");
        }
        for (k, d) in &self.timings {
            let _ = writeln!(out, "timing.{k}_ms: {:.3}", d.as_secs_f64() * 1e3);
        }
        let _ = writeln!(out, "timing.total_ms: {:.3}", total.as_secs_f64() * 1e3);
        let _ = writeln!(out, "warnings: {}", warnings.len());
        for w in warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        if let Some((name, csv)) = &self.block {
            let _ = writeln!(out, "\n[{name}]");
            out.push_str(csv);
        }
        out
    }
}
