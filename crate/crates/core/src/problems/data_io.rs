//! Persisted measurement sequences (`t,y` CSV).

use std::path::Path;

use crate::error::{Error, Result};

pub fn write_series_csv(path: &Path, y: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "y"])?;
    for (t, v) in y.iter().enumerate() {
        w.write_record([(t + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "y"] {
        return Err(Error::Io(format!(
            "{}: expected header t,y",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let t: usize = rec[0]
            .parse()
            .map_err(|_| Error::Io(format!("bad t on row {}", row + 1)))?;
        if t != row + 1 {
            return Err(Error::Io(format!(
                "non-consecutive t = {t} on row {}",
                row + 1
            )));
        }
        out.push(
            rec[1]
                .parse()
                .map_err(|_| Error::Io(format!("bad y on row {}", row + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        let y = vec![0.1, -2.5, 1e-300, 3.0];
        write_series_csv(&path, &y).unwrap();
        assert_eq!(read_series_csv(&path).unwrap(), y);
    }
}
