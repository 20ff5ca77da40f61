use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::{Map, Value};
use sgnoise::dephasing::DephasingResult;

/// Ordered `name = value unit` lines, mirrored to `<dir>/<name>.json`.
pub struct Report {
    name: &'static str,
    lines: Vec<(String, f64, &'static str)>,
}

impl Report {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            lines: Vec::new(),
        }
    }

    pub fn num(&mut self, key: &str, value: f64, unit: &'static str) {
        self.lines.push((key.to_string(), value, unit));
    }

    fn render(&self) -> String {
        let width = self.lines.iter().map(|l| l.0.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v, u) in &self.lines {
            s.push_str(format!("{k:<width$} = {v:.9e} {u}").trim_end());
            s.push('\n');
        }
        s
    }

    pub fn print_to_stderr(&self) {
        eprint!("{}", self.render());
    }

    pub fn finish(&self, dir: &Option<PathBuf>) -> Result<()> {
        print!("{}", self.render());
        if let Some(d) = dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let mut m = Map::new();
            for (k, v, _) in &self.lines {
                let n = serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null);
                m.insert(k.clone(), n);
            }
            let p = d.join(format!("{}.json", self.name));
            std::fs::write(&p, serde_json::to_string_pretty(&Value::Object(m))? + "\n")
                .with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }
}

pub fn write_gamma_csv<W: Write>(w: &mut W, rows: &[(&str, DephasingResult)]) -> Result<()> {
    writeln!(w, "transfer,gamma_per_s,coherence,integral,abs_error,tail_bound")?;
    for (name, r) in rows {
        let tail = r.tail_estimate.map(|t| format!("{t:.9e}")).unwrap_or_default();
        writeln!(
            w,
            "{name},{:.9e},{:.9e},{:.9e},{:.9e},{tail}",
            r.gamma, r.coherence, r.integral_value, r.diagnostics.abs_error
        )?;
    }
    Ok(())
}
