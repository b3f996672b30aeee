use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::domain::{QuantileLevel, Series, SpectralField};
use crate::error::{Error, Result};
use crate::Complex64;

/// Header of the long-format field CSV.
pub const FIELD_HEADER: &str = "t0,omega,tau1,tau2,re,im";

/// Column to read from an input CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// Zero-based position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(0)
    }
}

impl ColumnSelector {
    /// Digits select by position, anything else by name.
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.trim().to_string()),
        }
    }
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("'{}' is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Reads one numeric column. A first row whose selected cell is not a number
/// is taken as a header. Rows are numbered from 1 as they appear in the file.
pub fn ingest_csv(path: &Path, column: &ColumnSelector) -> Result<Series> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let mut idx = match column {
        ColumnSelector::Index(i) => Some(*i),
        ColumnSelector::Name(_) => None,
    };
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if i == 0 {
            if let ColumnSelector::Name(name) = column {
                let pos = rec.iter().position(|c| c == name).ok_or_else(|| {
                    Error::Config(format!("column '{name}' not found in header of {}", path.display()))
                })?;
                idx = Some(pos);
                continue;
            }
        }
        let c = idx.expect("column resolved");
        let cell = rec.get(c).ok_or_else(|| Error::Parse {
            row,
            column: c + 1,
            message: format!("row has only {} columns", rec.len()),
        })?;
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("non-finite value {v}"),
                })
            }
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("'{cell}' is not a number"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(Error::Config(format!("{} contains no data", path.display())));
    }
    Series::new(values)
}

/// `r_t = ln p_{t+1} - ln p_t`. Indices in errors are 1-based.
pub fn log_returns(prices: &Series) -> Result<Series> {
    if prices.len() < 2 {
        return Err(Error::Domain("log returns need at least 2 prices".into()));
    }
    if let Some(i) = prices.values().iter().position(|p| *p <= 0.0) {
        return Err(Error::Domain(format!(
            "non-positive price {} at index {}",
            prices.values()[i],
            i + 1
        )));
    }
    let r = prices
        .values()
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    Series::new(r)
}

/// One value per line under the header `x`.
pub fn series_to_csv(series: &Series) -> String {
    let mut s = String::with_capacity(series.len() * 20 + 2);
    s.push_str("x\n");
    for v in series.values() {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

pub fn write_series(series: &Series, path: &Path) -> Result<()> {
    write_atomic(path, series_to_csv(series).as_bytes())
}

/// Long format, rows in `(t0, omega, tau1, tau2)` order of the field's axes.
/// Reals use the shortest representation that parses back to the same value.
pub fn field_to_csv(field: &SpectralField) -> String {
    let q = field.quantiles();
    let mut s = String::with_capacity(field.values().len() * 64 + 32);
    s.push_str(FIELD_HEADER);
    s.push('\n');
    for (ti, t0) in field.t0s().iter().enumerate() {
        for (wi, w) in field.freqs().iter().enumerate() {
            for (a, ta) in q.iter().enumerate() {
                for (b, tb) in q.iter().enumerate() {
                    let z = field.get(ti, wi, a, b);
                    s.push_str(&format!(
                        "{t0},{w},{},{},{},{}\n",
                        ta.value(),
                        tb.value(),
                        z.re,
                        z.im
                    ));
                }
            }
        }
    }
    s
}

pub fn export_field(field: &SpectralField, path: &Path) -> Result<()> {
    write_atomic(path, field_to_csv(field).as_bytes())
}

fn push_unique<T: PartialEq + Copy>(axis: &mut Vec<T>, v: T) {
    if !axis.contains(&v) {
        axis.push(v);
    }
}

/// Parses the long format written by [`field_to_csv`]. The window length is
/// recovered from the lowest frequency `2 pi / n`.
pub fn field_from_csv(text: &str) -> Result<SpectralField> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        row: 1,
        column: 0,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != FIELD_HEADER {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: format!("expected header '{FIELD_HEADER}'"),
        });
    }
    let mut rows: Vec<(usize, f64, f64, f64, Complex64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        let num = |c: usize| -> Result<f64> {
            let cell = rec.get(c).unwrap_or("");
            cell.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("'{cell}' is not a number"),
            })
        };
        let t0 = rec.get(0).unwrap_or("").parse::<usize>().map_err(|_| Error::Parse {
            row,
            column: 1,
            message: format!("'{}' is not a window center", rec.get(0).unwrap_or("")),
        })?;
        rows.push((t0, num(1)?, num(2)?, num(3)?, Complex64::new(num(4)?, num(5)?)));
    }
    if rows.is_empty() {
        return Err(Error::Config("field file has no rows".into()));
    }
    let (mut t0s, mut freqs, mut taus) = (Vec::new(), Vec::new(), Vec::new());
    for r in &rows {
        push_unique(&mut t0s, r.0);
        push_unique(&mut freqs, r.1);
        push_unique(&mut taus, r.2);
    }
    let nq = taus.len();
    let size = t0s.len() * freqs.len() * nq * nq;
    if rows.len() != size {
        return Err(Error::Config(format!(
            "field file has {} rows, a full grid needs {size}",
            rows.len()
        )));
    }
    let mut values = Vec::with_capacity(size);
    let mut it = rows.iter().enumerate();
    for t0 in &t0s {
        for w in &freqs {
            for ta in &taus {
                for tb in &taus {
                    let (i, r) = it.next().expect("row count checked");
                    if (r.0, r.1, r.2, r.3) != (*t0, *w, *ta, *tb) {
                        return Err(Error::Parse {
                            row: i as u64 + 2,
                            column: 1,
                            message: "rows are not in (t0, omega, tau1, tau2) grid order".into(),
                        });
                    }
                    values.push(r.4);
                }
            }
        }
    }
    let n = (2.0 * PI / freqs[0]).round() as usize;
    let quantiles = taus
        .into_iter()
        .map(QuantileLevel::new)
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_parts(n, t0s, freqs, quantiles, None, values)
}

pub fn import_field(path: &Path) -> Result<SpectralField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    field_from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{quantile_levels, EstimationPlan};
    use crate::estimator::sweep;
    use crate::kernel::LagWindow;

    fn tmp_file(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn ingest_plain_and_header() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(&d, "a.csv", "1.0\n2.0\n3.0");
        assert_eq!(ingest_csv(&p, &ColumnSelector::default()).unwrap().values(), &[1.0, 2.0, 3.0]);
        let p = tmp_file(&d, "b.csv", "price\n1.0\n2.0\n");
        assert_eq!(ingest_csv(&p, &ColumnSelector::default()).unwrap().values(), &[1.0, 2.0]);
        let p = tmp_file(&d, "c.csv", "date,open\n2020-01-01,5\n2020-01-02,6\n");
        assert_eq!(
            ingest_csv(&p, &ColumnSelector::Name("open".into())).unwrap().values(),
            &[5.0, 6.0]
        );
        assert_eq!(ingest_csv(&p, &ColumnSelector::Index(1)).unwrap().values(), &[5.0, 6.0]);
    }

    #[test]
    fn ingest_errors() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(&d, "bad.csv", "1\n2\n3\n4\nabc\n6\n");
        match ingest_csv(&p, &ColumnSelector::default()) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (5, 1)),
            other => panic!("{other:?}"),
        }
        let p = tmp_file(&d, "empty.csv", "");
        assert!(ingest_csv(&p, &ColumnSelector::default()).is_err());
        let p = tmp_file(&d, "hdr.csv", "price\n");
        assert!(ingest_csv(&p, &ColumnSelector::default()).is_err());
        assert!(matches!(
            ingest_csv(&d.path().join("missing.csv"), &ColumnSelector::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn returns() {
        let e = std::f64::consts::E;
        let r = log_returns(&Series::new(vec![1.0, e, e * e]).unwrap()).unwrap();
        assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let r = log_returns(&Series::new(vec![4.0; 5]).unwrap()).unwrap();
        assert_eq!(r.values(), &[0.0; 4]);
        let err = log_returns(&Series::new(vec![1.0, 2.0, 0.0, 3.0]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("index 3"), "{err}");
    }

    #[test]
    fn single_value_row() {
        let plan = EstimationPlan::new(
            4,
            1.0,
            LagWindow::Parzen,
            vec![2],
            quantile_levels(&[0.5]).unwrap(),
        )
        .unwrap();
        let mut f = SpectralField::zeros(&plan);
        f.set(0, 0, 0, 0, Complex64::new(0.5, 0.0));
        let csv = field_to_csv(&f);
        assert_eq!(csv, format!("{FIELD_HEADER}\n2,{},0.5,0.5,0.5,0\n", PI / 2.0));
    }

    #[test]
    fn field_round_trip() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 7919) % 1009) as f64 / 13.0).collect();
        let s = Series::new(x).unwrap();
        let plan = EstimationPlan::new(
            64,
            7.0,
            LagWindow::Parzen,
            vec![32, 100, 268],
            quantile_levels(&[0.1, 0.5, 0.9]).unwrap(),
        )
        .unwrap();
        let f = sweep(&s, &plan).unwrap();
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("field.csv");
        export_field(&f, &p).unwrap();
        let g = import_field(&p).unwrap();
        assert_eq!(g.n(), 64);
        assert!(g.same_grid(&f));
        assert_eq!(g.values(), f.values());
        assert_eq!(field_to_csv(&g), fs::read_to_string(&p).unwrap());
    }

    #[test]
    fn unwritable_target() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("no/such/dir/field.csv");
        assert!(matches!(write_atomic(&p, b"x"), Err(Error::Io { .. })));
    }

    #[test]
    fn import_rejects_shuffled_rows() {
        let text = format!("{FIELD_HEADER}\n2,1.5,0.5,0.5,1,0\n2,1.5,0.5,0.5,1,0\n");
        assert!(field_from_csv(&text).is_err());
        assert!(field_from_csv("a,b\n1,2\n").is_err());
    }
}
