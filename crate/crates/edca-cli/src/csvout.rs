//! Minimal RFC-4180 CSV writer: header row, CRLF line endings, '.' decimal
//! separator, quoting only where required.

use std::io::Write;

pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

fn needs_quoting(field: &str) -> bool {
    field.contains(',') || field.contains('"') || field.contains('\r') || field.contains('\n')
}

pub fn escape(field: &str) -> String {
    if needs_quoting(field) {
        let mut s = String::with_capacity(field.len() + 2);
        s.push('"');
        for ch in field.chars() {
            if ch == '"' {
                s.push('"');
            }
            s.push(ch);
        }
        s.push('"');
        s
    } else {
        field.to_string()
    }
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, header: &[&str]) -> std::io::Result<Self> {
        let line: Vec<String> = header.iter().map(|h| escape(h)).collect();
        write!(out, "{}\r\n", line.join(","))?;
        Ok(CsvWriter { out, columns: header.len() })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        assert_eq!(fields.len(), self.columns, "row width does not match header");
        let line: Vec<String> = fields.iter().map(|f| escape(f)).collect();
        write!(self.out, "{}\r\n", line.join(","))
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Format a float with enough digits to round-trip, using `.` regardless of
/// locale (Rust's formatter is locale-independent).
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return String::new();
    }
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_only_when_needed() {
        assert_eq!(escape("plain"), "plain");
        assert_eq!(escape("a,b"), "\"a,b\"");
        assert_eq!(escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn writes_crlf_rows() {
        let mut buf = Vec::new();
        {
            let mut w = CsvWriter::new(&mut buf, &["a", "b"]).unwrap();
            w.row(&["1".into(), "x,y".into()]).unwrap();
        }
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\r\n1,\"x,y\"\r\n");
    }

    #[test]
    fn num_roundtrips() {
        let v = 0.1234567890123_f64;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
        assert_eq!(opt_num(None), "");
    }
}
