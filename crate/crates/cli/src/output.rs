//! Bit-stable emission: every float is written with 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // Keeps CSV cells parseable by `f64::from_str`.
        format!("{v}").to_lowercase()
    }
}

/// Pretty or compact JSON with fixed-precision floats; non-finite floats become `null`.
struct Fixed<F> {
    inner: F,
}

impl<F: Formatter> Formatter for Fixed<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

struct Compact;

impl Formatter for Compact {}

fn encode<F: Formatter>(value: &impl Serialize, formatter: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed { inner: formatter });
    value.serialize(&mut ser).expect("report types serialize infallibly");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Indented JSON document followed by a newline.
pub fn json(value: &impl Serialize) -> String {
    let mut s = encode(value, PrettyFormatter::new());
    s.push('\n');
    s
}

/// One JSON object per line.
pub fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|v| encode(v, Compact) + "\n").collect()
}

/// A CSV table of floats with a fixed header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[f64]) {
        let cells: Vec<String> = cells.iter().map(|&v| float(v)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    /// A row whose trailing cell is a label.
    pub fn labelled_row(&mut self, cells: &[f64], label: &str) {
        let mut cells: Vec<String> = cells.iter().map(|&v| float(v)).collect();
        cells.push(label.to_string());
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Files go to `--out DIR`; without it only the main report is printed.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> io::Result<Sink> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir })
    }

    /// Writes an auxiliary file; dropped when there is no output directory.
    pub fn file(&self, name: &str, contents: &str) -> io::Result<()> {
        match &self.dir {
            Some(d) => fs::write(d.join(name), contents),
            None => Ok(()),
        }
    }

    /// The main report: written as `name` and echoed to stdout.
    pub fn report(&self, name: &str, contents: &str) -> io::Result<()> {
        self.file(name, contents)?;
        io::stdout().write_all(contents.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.0, -0.0] {
            let s = float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(float(0.25), "2.5000000000000000e-1");
        assert_eq!(float(f64::NAN).parse::<f64>().map(f64::is_nan), Ok(true));
    }

    #[test]
    fn json_uses_fixed_floats() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: Vec<f64>,
            c: f64,
        }
        let r = R { a: 0.5, b: vec![1.0], c: f64::NAN };
        let line = jsonl(&[r]);
        assert_eq!(line, "{\"a\":5.0000000000000000e-1,\"b\":[1.0000000000000000e0],\"c\":null}\n");
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.5));
    }
}
