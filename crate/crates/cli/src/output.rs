use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Rendered output and whether the run counts as a pass.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

impl Outcome {
    pub fn ok(text: String) -> Self {
        Outcome { text, pass: true }
    }
}

/// An exactly known number, kept as text so nothing is rounded.
pub fn exact(s: impl ToString) -> Value {
    json!({ "exact": s.to_string() })
}

pub fn approx(x: f64, stderr: Option<f64>) -> Value {
    match stderr {
        Some(se) => json!({ "approx": x, "stderr": se }),
        None => json!({ "approx": x }),
    }
}

/// The stable top-level JSON shape shared by every subcommand.
pub fn envelope(command: &str, seed: Option<u64>, result: Value) -> String {
    let v = json!({
        "tool": "permprof",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Whitespace-aligned columns for human reading.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (c, w) in cells.iter().zip(&widths) {
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count() + 2));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}
