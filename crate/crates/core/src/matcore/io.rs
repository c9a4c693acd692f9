//! Dense CSV and MatrixMarket readers and writers.
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! `load(save(a)) == a` bit for bit in both formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcore::DenseMatrix;

/// On-disk matrix format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Comma-separated rows; `header` skips a leading header line.
    Csv { header: bool },
    /// MatrixMarket `coordinate` or `array` layout, real or integer, general.
    MatrixMarket,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MatrixFormat::Csv { header: false }),
            "mtx" | "mm" | "matrix-market" | "matrixmarket" => Ok(MatrixFormat::MatrixMarket),
            other => Err(Error::Parameter(format!("unknown matrix format '{other}'"))),
        }
    }
}

/// Reads a non-negative matrix from `path`.
pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m = match format {
        MatrixFormat::Csv { header } => parse_csv(&text, header)?,
        MatrixFormat::MatrixMarket => parse_matrix_market(&text)?,
    };
    m.ensure_non_negative()?;
    Ok(m)
}

pub fn save_matrix(a: &DenseMatrix, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        MatrixFormat::Csv { .. } => write_csv(a),
        MatrixFormat::MatrixMarket => write_matrix_market(a),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn check_value(v: f64, i: usize, j: usize) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("non-finite entry {v} at ({i}, {j})")));
    }
    Ok(v)
}

/// Parses dense CSV text. Entries must be finite; sign is not checked here.
pub fn parse_csv(text: &str, header: bool) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("csv: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Format(format!(
                    "csv row {i} has {} fields, expected {c}",
                    record.len()
                )))
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("csv: cannot parse '{field}' at ({i}, {j})")))?;
            data.push(check_value(v, i, j)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Format("csv: no data rows".into()))?;
    DenseMatrix::new(rows, cols, data)
}

pub fn write_csv(a: &DenseMatrix) -> String {
    let mut out = String::with_capacity(a.rows() * a.cols() * 4);
    for i in 0..a.rows() {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses MatrixMarket text (`matrix coordinate|array real|integer general`).
pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines();
    let banner = lines
        .next()
        .ok_or_else(|| Error::Format("matrix market: empty input".into()))?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Format(format!("matrix market: bad banner '{banner}'")));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::Format(format!("matrix market: unsupported layout '{other}'"))),
    };
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::Format(format!("matrix market: unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(Error::Format(format!("matrix market: unsupported symmetry '{}'", tokens[4])));
    }

    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = body
        .next()
        .ok_or_else(|| Error::Format("matrix market: missing size line".into()))?;
    let sizes = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Format(format!("matrix market: bad size line '{size_line}'")))?;
    let expected_sizes = if coordinate { 3 } else { 2 };
    if sizes.len() != expected_sizes {
        return Err(Error::Format(format!("matrix market: bad size line '{size_line}'")));
    }
    let (rows, cols) = (sizes[0], sizes[1]);
    if rows == 0 || cols == 0 {
        return Err(Error::Format("matrix market: empty matrix".into()));
    }
    let parse = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::Format(format!("matrix market: cannot parse '{t}'")))
    };

    let mut data = vec![0.0; rows * cols];
    if coordinate {
        let nnz = sizes[2];
        let mut seen = 0;
        for line in body {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Format(format!("matrix market: bad entry line '{line}'")));
            }
            let i: usize = f[0]
                .parse()
                .map_err(|_| Error::Format(format!("matrix market: bad row index '{}'", f[0])))?;
            let j: usize = f[1]
                .parse()
                .map_err(|_| Error::Format(format!("matrix market: bad column index '{}'", f[1])))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(Error::Format(format!("matrix market: index ({i}, {j}) out of range")));
            }
            data[(i - 1) * cols + (j - 1)] = check_value(parse(f[2])?, i - 1, j - 1)?;
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::Format(format!("matrix market: expected {nnz} entries, found {seen}")));
        }
    } else {
        // column-major
        let mut count = 0;
        for tok in body.flat_map(str::split_whitespace) {
            if count >= rows * cols {
                return Err(Error::Format("matrix market: too many array entries".into()));
            }
            let (i, j) = (count % rows, count / rows);
            data[i * cols + j] = check_value(parse(tok)?, i, j)?;
            count += 1;
        }
        if count != rows * cols {
            return Err(Error::Format(format!(
                "matrix market: expected {} array entries, found {count}",
                rows * cols
            )));
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// Writes the `array real general` layout.
pub fn write_matrix_market(a: &DenseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    writeln!(out, "{} {}", a.rows(), a.cols()).unwrap();
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(out, "{:?}", a.get(i, j)).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic() {
        let m = parse_csv("1,2\n3,4", false).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn csv_zero_matrix_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.csv");
        fs::write(&p, "0,0\n0,0\n").unwrap();
        let m = load_matrix(&p, MatrixFormat::Csv { header: false }).unwrap();
        assert_eq!(m, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn csv_negative_rejected_with_coordinate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        fs::write(&p, "1,-1").unwrap();
        match load_matrix(&p, MatrixFormat::Csv { header: false }) {
            Err(Error::Domain(msg)) => assert!(msg.contains("(0, 1)"), "{msg}"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn csv_header_and_errors() {
        let m = parse_csv("a,b\n1,2\n", true).unwrap();
        assert_eq!(m.shape(), (1, 2));
        assert!(matches!(parse_csv("1,x\n", false), Err(Error::Format(_))));
        assert!(matches!(parse_csv("1,2\n3\n", false), Err(Error::Format(_))));
        assert!(matches!(parse_csv("1,inf\n", false), Err(Error::Domain(_))));
        assert!(matches!(parse_csv("", false), Err(Error::Format(_))));
    }

    #[test]
    fn matrix_market_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 3 2\n1 1 1.5\n2 3 4\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.5, 0.0, 0.0], vec![0.0, 0.0, 4.0]]);
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").is_err());
    }

    #[test]
    fn matrix_market_array_is_column_major() {
        let m = parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
    }

    #[test]
    fn unknown_format_name() {
        assert!("xlsx".parse::<MatrixFormat>().is_err());
        assert_eq!("mtx".parse::<MatrixFormat>().unwrap(), MatrixFormat::MatrixMarket);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix() -> impl Strategy<Value = DenseMatrix> {
            (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
                proptest::collection::vec(0.0f64..1e6, r * c)
                    .prop_map(move |d| DenseMatrix::new(r, c, d).unwrap())
            })
        }

        proptest! {
            #[test]
            fn round_trip_is_exact(a in matrix(), tiny in 1e-300f64..1e-200) {
                let mut a = a;
                a.set(0, 0, tiny);
                prop_assert_eq!(&parse_csv(&write_csv(&a), false).unwrap(), &a);
                prop_assert_eq!(&parse_matrix_market(&write_matrix_market(&a)).unwrap(), &a);
            }
        }
    }
}
