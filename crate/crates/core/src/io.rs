//! Plain CSV matrices: one row per line, comma separated, no header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, SfpcaError};
use crate::linalg::{ensure_finite, DenseMatrix};

/// Parses a CSV matrix; ragged rows and non-numeric cells are rejected.
pub fn read_matrix<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| SfpcaError::Parse(format!("row {}: {e}", line + 1)))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(SfpcaError::Parse(format!(
                    "row {} has {} fields, expected {c}",
                    line + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                SfpcaError::Parse(format!("row {}, column {}: {field:?} is not a number", line + 1, j + 1))
            })?;
            data.push(value);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| SfpcaError::Parse("empty matrix".into()))?;
    let m = DenseMatrix::from_row_slice(rows, cols, &data);
    ensure_finite(&m, "CSV matrix")?;
    Ok(m)
}

pub fn write_matrix<W: Write>(mut writer: W, m: &DenseMatrix) -> Result<()> {
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            // `{}` on f64 is the shortest representation that round-trips.
            line.push_str(&format!("{}", m[(i, j)]));
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| SfpcaError::Parse(format!("cannot open {}: {e}", path.display())))?;
    read_matrix(file)
}

pub fn write_matrix_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut buf = std::io::BufWriter::new(file);
    write_matrix(&mut buf, m)?;
    buf.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_rows() {
        let m = read_matrix("1,2,3\n4.5,-6,7e-2\n".as_bytes()).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(1, 2)], 0.07);
        assert_eq!(m[(1, 0)], 4.5);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = read_matrix("1,2,3\n4,5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, SfpcaError::Parse(_)), "{err}");
    }

    #[test]
    fn rejects_garbage_and_comma_decimal() {
        assert!(read_matrix("1,abc\n".as_bytes()).is_err());
        assert!(read_matrix("\"1,5\",2\n".as_bytes()).is_err());
        assert!(read_matrix("".as_bytes()).is_err());
    }

    #[test]
    fn round_trips_bit_exact() {
        let m = DenseMatrix::from_row_slice(2, 2, &[0.1, -1.0 / 3.0, 1e-300, 123456789.125]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }
}
