use std::collections::HashMap;

use crate::error::{Error, Result};

/// Column-major numeric table. Missing entries are stored as NaN.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl DataTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_columns<S: Into<String>>(cols: impl IntoIterator<Item = (S, Vec<f64>)>) -> Result<Self> {
        let mut t = Self::new();
        for (name, values) in cols {
            t.push_column(name, values)?;
        }
        Ok(t)
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate column `{name}`")));
        }
        if let Some(first) = self.columns.first() {
            if first.len() != values.len() {
                return Err(Error::Config(format!(
                    "column `{name}` has {} rows, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.index
            .get(name)
            .map(|&i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.columns[i]),
            None => Err(Error::MissingColumn(name.to_string())),
        }
    }

    /// Parse delimited text with a header row. Cells equal to `missing` (or empty) become NaN.
    pub fn parse_delimited(text: &str, delimiter: char, missing: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse("input has no header row".into()))?;
        let names: Vec<String> = header.split(delimiter).map(|s| s.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (lineno, line) in lines {
            let cells: Vec<&str> = line.split(delimiter).collect();
            if cells.len() != names.len() {
                return Err(Error::Parse(format!(
                    "line {}: {} fields, header has {}",
                    lineno + 1,
                    cells.len(),
                    names.len()
                )));
            }
            for (col, cell) in columns.iter_mut().zip(cells) {
                let cell = cell.trim();
                let value = if cell.is_empty() || cell == missing {
                    f64::NAN
                } else {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: cannot parse `{cell}`", lineno + 1)))?;
                    if !v.is_finite() {
                        return Err(Error::Parse(format!("line {}: non-finite value `{cell}`", lineno + 1)));
                    }
                    v
                };
                col.push(value);
            }
        }
        Self::from_columns(names.into_iter().zip(columns))
    }

    /// Indices of rows where every named column is present.
    pub fn complete_rows(&self, names: &[&str]) -> Result<Vec<usize>> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.column(n)).collect::<Result<_>>()?;
        Ok((0..self.nrows()).filter(|&i| cols.iter().all(|c| !c[i].is_nan())).collect())
    }

    /// Render with a header row; NaN is written as `missing`. Values round-trip exactly.
    pub fn to_delimited(&self, delimiter: char, missing: &str) -> String {
        let mut out = String::new();
        let sep = delimiter.to_string();
        out.push_str(&self.names.join(&sep));
        out.push('\n');
        for i in 0..self.nrows() {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| if c[i].is_nan() { missing.to_string() } else { c[i].to_string() })
                .collect();
            out.push_str(&row.join(&sep));
            out.push('\n');
        }
        out
    }
}
