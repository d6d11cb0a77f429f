use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Layout};

/// Which header columns hold targets. Every other column is a feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub target_columns: Vec<String>,
    pub task: Task,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut is_target = vec![false; headers.len()];
    let mut target_pos = Vec::with_capacity(schema.target_columns.len());
    for name in &schema.target_columns {
        let k = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("no column named `{name}`") })?;
        is_target[k] = true;
        target_pos.push(k);
    }
    if target_pos.is_empty() {
        return Err(Error::InvalidParameter("schema names no target column".into()));
    }
    let feature_pos: Vec<usize> = (0..headers.len()).filter(|&k| !is_target[k]).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut n = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let line = r + 2;
        let field = |k: usize| -> Result<f64> {
            let s = record.get(k).unwrap_or("");
            s.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("`{s}`: {e}") })
        };
        for &k in &feature_pos {
            x.push(field(k)?);
        }
        for &k in &target_pos {
            y.push(field(k)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(
        Features::Dense(DenseMatrix::new(n, feature_pos.len(), Layout::RowMajor, x)?),
        DenseMatrix::new(n, target_pos.len(), Layout::RowMajor, y)?,
        schema.task,
    )
}

/// Writes a header `x0,...,x{p-1},y0,...,y{d-1}` and one row per sample;
/// sparse inputs are written densely.
pub fn write_csv<W: Write>(ds: &Dataset, w: W) -> Result<()> {
    let x = ds.x.to_dense(Layout::RowMajor)?;
    let mut wr = csv::Writer::from_writer(w);
    let header: Vec<String> = (0..ds.n_features())
        .map(|j| format!("x{j}"))
        .chain((0..ds.n_outputs()).map(|j| format!("y{j}")))
        .collect();
    wr.write_record(&header)?;
    for i in 0..ds.n_samples() {
        let row: Vec<String> = x
            .row(i)
            .unwrap()
            .iter()
            .chain(&ds.y.row_vec(i))
            .map(f64::to_string)
            .collect();
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Schema matching the header of [`write_csv`].
pub fn written_schema(n_outputs: usize, task: Task) -> CsvSchema {
    CsvSchema {
        target_columns: (0..n_outputs).map(|j| format!("y{j}")).collect(),
        task,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_features_and_targets_by_name() {
        let text = "a,target,b\n1,0.5,2\n3,1.5,4\n";
        let schema = CsvSchema { target_columns: vec!["target".into()], task: Task::Regression };
        let ds = read_csv(text.as_bytes(), &schema).unwrap();
        let Features::Dense(x) = &ds.x else { panic!() };
        assert_eq!(x.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.y.values(), &[0.5, 1.5]);
    }

    #[test]
    fn written_tables_read_back() {
        let ds = crate::datasets::gen_friedman1_group(20, 3, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x0,x1,x2,x3,x4,y0,y1,y2\n"));
        let back = read_csv(buf.as_slice(), &written_schema(3, Task::Regression)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn errors() {
        let schema = CsvSchema { target_columns: vec!["y".into()], task: Task::Binary };
        assert!(matches!(read_csv("a,y\n".as_bytes(), &schema), Err(Error::EmptyDataset)));
        assert!(matches!(read_csv("a,y\n1,x\n".as_bytes(), &schema), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_csv("a,b\n1,1\n".as_bytes(), &schema), Err(Error::Parse { .. })));
        assert!(matches!(read_csv("a,y\n1,0.5\n".as_bytes(), &schema), Err(Error::InvalidTarget(_))));
    }
}
