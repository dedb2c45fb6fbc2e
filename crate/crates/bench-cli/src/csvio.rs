//! CSV emission and parsing. Every written file carries one `#` comment
//! line recording the resolved spec and artifact version, then a header
//! row. The parser reports the offending line on malformed input.

use std::path::Path;

use crate::BenchError;

pub struct CsvWriter {
    buffer: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(spec_comment: &str, header: &[&str]) -> Self {
        let mut buffer = String::new();
        buffer.push_str("# ");
        buffer.push_str(spec_comment);
        buffer.push('\n');
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        CsvWriter {
            buffer,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    pub fn write_to(&self, path: &Path) -> Result<(), BenchError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| BenchError::Runtime(format!("creating {}: {e}", parent.display())))?;
        }
        std::fs::write(path, &self.buffer)
            .map_err(|e| BenchError::Runtime(format!("writing {}: {e}", path.display())))
    }

    pub fn contents(&self) -> &str {
        &self.buffer
    }
}

/// A parsed CSV: header names and rows of string fields.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, BenchError> {
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match &header {
                None => header = Some(fields),
                Some(h) => {
                    if fields.len() != h.len() {
                        return Err(BenchError::Usage(format!(
                            "{} line {}: {} fields, header has {}",
                            origin.display(),
                            lineno + 1,
                            fields.len(),
                            h.len()
                        )));
                    }
                    rows.push(fields);
                }
            }
        }
        let header = header.ok_or_else(|| {
            BenchError::Usage(format!("{}: no header row found", origin.display()))
        })?;
        Ok(CsvTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn f64_at(&self, row: usize, col: usize, origin: &Path) -> Result<f64, BenchError> {
        self.rows[row][col].parse().map_err(|_| {
            BenchError::Usage(format!(
                "{} data row {}: `{}` is not a number",
                origin.display(),
                row + 1,
                self.rows[row][col]
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn writer_emits_comment_header_rows() {
        let mut w = CsvWriter::new("spec here", &["a", "b"]);
        w.row(&["1".into(), "2".into()]);
        assert_eq!(w.contents(), "# spec here\na,b\n1,2\n");
    }

    #[test]
    fn parser_roundtrips_and_reports_bad_rows() {
        let origin = PathBuf::from("x.csv");
        let t = CsvTable::parse("# c\na,b\n1,2\n3,4\n", &origin).unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.rows.len(), 2);
        let err = CsvTable::parse("a,b\n1\n", &origin).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "{msg}");
        assert!(CsvTable::parse("# only comment\n", &origin).is_err());
    }
}
