//! CSV output: a provenance comment block (the re-runnable resolved config),
//! one header row, then data rows with `.`-decimal floats at 17 significant
//! digits.

use std::fmt::Write as _;

/// 17 significant digits; round-trips every `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

#[derive(Clone, Debug)]
pub enum Cell {
    Str(String),
    F64(f64),
    U64(u64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F64(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U64(x)
    }
}

pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    /// Starts the file with the version banner and the provenance block.
    pub fn new(version_banner: &str, provenance: &str) -> Self {
        let mut buf = String::new();
        writeln!(buf, "# {version_banner}").unwrap();
        buf.push_str(provenance);
        Self { buf }
    }

    pub fn header(&mut self, columns: &[&str]) {
        writeln!(self.buf, "{}", columns.join(",")).unwrap();
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line = cells
            .iter()
            .map(|c| match c {
                Cell::Str(s) => s.clone(),
                Cell::F64(x) => fmt_f64(*x),
                Cell::U64(x) => x.to_string(),
                Cell::Empty => String::new(),
            })
            .collect::<Vec<_>>()
            .join(",");
        writeln!(self.buf, "{line}").unwrap();
    }

    /// Trailing annotation; uses `:` so it never parses as a config key.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.buf, "# {key}: {value}").unwrap();
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_at_17_digits() {
        for &x in &[0.1, 2.0 / 3.0, 1e-300, -123456.789, 0.99] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(s.contains('.') || s.contains('e'));
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn layout_is_comment_block_header_rows() {
        let mut b = CsvBuilder::new("uhmc 0.1.0", "# command = analyze\n");
        b.header(&["a", "b"]);
        b.row(&[Cell::from(1.0), Cell::from("x")]);
        b.note("check", "pass");
        let text = b.finish();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# uhmc 0.1.0");
        assert_eq!(lines[1], "# command = analyze");
        assert_eq!(lines[2], "a,b");
        assert_eq!(lines[3], "1.0000000000000000e0,x");
        assert_eq!(lines[4], "# check: pass");
    }
}
