//! CSV tables: comma separated, header row, `\n` line ends, floats with 17
//! significant digits so a reread is bit exact.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

/// Samples accepted by `reconstruct`, chosen by the header.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSet {
    /// `lambda, arg_t`.
    Phase(Vec<(f64, f64)>),
    /// `x, a_sq` with `a^2 = F / r^2` in the tortoise coordinate.
    Tortoise(Vec<(f64, f64)>),
    /// `r, a_sq`.
    Radial(Vec<(f64, f64)>),
}

impl SampleSet {
    pub fn kind(&self) -> &'static str {
        match self {
            SampleSet::Phase(_) => "phase",
            SampleSet::Tortoise(_) => "tortoise",
            SampleSet::Radial(_) => "radial",
        }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        match self {
            SampleSet::Phase(v) | SampleSet::Tortoise(v) | SampleSet::Radial(v) => v,
        }
    }
}

/// Parses a two-column sample file. Extra columns are ignored; every row must
/// hold finite numbers in the two named ones.
pub fn parse_samples(text: &str) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (kind, a, b) = if let (Some(a), Some(b)) = (col("lambda"), col("arg_t")) {
        (0, a, b)
    } else if let (Some(a), Some(b)) = (col("x"), col("a_sq")) {
        (1, a, b)
    } else if let (Some(a), Some(b)) = (col("r"), col("a_sq")) {
        (2, a, b)
    } else {
        return Err(Error::Parse(
            "header needs lambda,arg_t or x,a_sq or r,a_sq".into(),
        ));
    };
    let mut pairs = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", n + 1)))?;
        let num = |i: usize| -> Result<f64> {
            let s = rec
                .get(i)
                .ok_or_else(|| Error::Parse(format!("row {}: missing column", n + 1)))?;
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse(format!(
                    "row {}: not a finite number: {s:?}",
                    n + 1
                ))),
            }
        };
        pairs.push((num(a)?, num(b)?));
    }
    if pairs.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(match kind {
        0 => SampleSet::Phase(pairs),
        1 => SampleSet::Tortoise(pairs),
        _ => SampleSet::Radial(pairs),
    })
}
