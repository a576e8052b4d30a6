//! Row-major datasets and their headerless CSV format.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_vars: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(num_vars: usize, values: Vec<f64>) -> Result<Self> {
        if num_vars == 0 && !values.is_empty() {
            return Err(Error::Format("dataset with values but no columns".into()));
        }
        if num_vars > 0 && !values.len().is_multiple_of(num_vars) {
            return Err(Error::Format(format!(
                "{} values do not fill rows of {num_vars}",
                values.len()
            )));
        }
        Ok(Dataset { num_vars, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(num_vars: usize, rows: &[R]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * num_vars);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != num_vars {
                return Err(Error::Format(format!("row {i} has {} columns, expected {num_vars}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Dataset::new(num_vars, values)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.num_vars).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_vars..(i + 1) * self.num_vars]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.num_vars.max(1))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.num_vars);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset { num_vars: self.num_vars, values }
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut num_vars = None;
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Format(format!("csv row {i}: {e}")))?;
            let width = *num_vars.get_or_insert(rec.len());
            if rec.len() != width {
                return Err(Error::Format(format!("csv row {i} has {} columns, expected {width}", rec.len())));
            }
            for field in rec.iter() {
                let x: f64 = field
                    .parse()
                    .map_err(|_| Error::Format(format!("csv row {i}: not a number: {field:?}")))?;
                if !x.is_finite() {
                    return Err(Error::Format(format!("csv row {i}: non-finite value")));
                }
                values.push(x);
            }
        }
        Dataset::new(num_vars.unwrap_or(0), values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        for row in self.rows() {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let d = Dataset::from_rows(2, &[[0.5, -1.0], [3.0, 1e-7]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        d.write_csv(&p).unwrap();
        assert_eq!(Dataset::read_csv(&p).unwrap(), d);
    }

    #[test]
    fn ragged_or_non_numeric_rows_fail() {
        assert!(Dataset::from_csv_reader("1,2\n3\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("1,a\n".as_bytes()).is_err());
        assert!(Dataset::from_csv_reader("1,nan\n".as_bytes()).is_err());
        let d = Dataset::from_csv_reader("1, 2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }
}
