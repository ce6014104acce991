//! Matrix Market (coordinate, real, general) and flat vector I/O.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use crate::sparse::SparseMatrix;
use crate::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_matrix_market<W: Write>(a: &SparseMatrix, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for r in 0..a.n_rows() {
        for (c, v) in a.row(r) {
            writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a real or integer coordinate file. `symmetric` and `skew-symmetric`
/// storage is expanded to the full matrix.
pub fn read_matrix_market<R: Read>(input: R) -> Result<SparseMatrix> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let header = header?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected a coordinate Matrix Market header".into(),
        });
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported field type {}", fields[3]),
        });
    }
    let mirror = match fields[4] {
        "general" => 0.0,
        "symmetric" => 1.0,
        "skew-symmetric" => -1.0,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry {other}"),
            })
        }
    };

    let mut size = None;
    let mut trip = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let parse_err = |msg: &str| Error::Parse {
            line: lineno,
            msg: msg.to_string(),
        };
        let tok: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(parse_err("expected `rows cols nnz`"));
                }
                let dims: Vec<usize> = tok
                    .iter()
                    .map(|t| t.parse().map_err(|_| parse_err("bad size line")))
                    .collect::<Result<_>>()?;
                size = Some((dims[0], dims[1], dims[2]));
                trip.reserve(dims[2]);
            }
            Some((rows, cols, _)) => {
                if tok.len() != 3 {
                    return Err(parse_err("expected `row col value`"));
                }
                let r: usize = tok[0].parse().map_err(|_| parse_err("bad row index"))?;
                let c: usize = tok[1].parse().map_err(|_| parse_err("bad column index"))?;
                let v: f64 = tok[2].parse().map_err(|_| parse_err("bad value"))?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(parse_err("index out of range"));
                }
                trip.push((r - 1, c - 1, v));
                if mirror != 0.0 && r != c {
                    trip.push((c - 1, r - 1, mirror * v));
                }
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let stored = if mirror == 0.0 {
        trip.len()
    } else {
        trip.iter().filter(|(r, c, _)| r >= c).count()
    };
    if stored != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {nnz} entries, found {stored}"),
        });
    }
    SparseMatrix::from_triplets_rect(rows, cols, &trip)
}

/// One value per line, shortest round-trip formatting.
pub fn write_vector_text<W: Write>(v: &[f64], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for x in v {
        writeln!(w, "{x:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_text<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        v.push(line.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad value {line:?}"),
        })?);
    }
    Ok(v)
}

/// Raw little-endian `f64` values, no header.
pub fn write_vector_binary<W: Write>(v: &[f64], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_binary<R: Read>(mut input: R) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("binary vector length {} is not a multiple of 8", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(3, &[(0, 0, 2.0), (0, 2, -0.1), (1, 1, 1e-300), (2, 0, 3.5)]).unwrap()
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let a = sample();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(HEADER));
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), a);
    }

    #[test]
    fn symmetric_storage_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 -1\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match read_matrix_market(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(read_matrix_market("%%MatrixMarket matrix array real general\n".as_bytes()).is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
    }

    #[test]
    fn vector_round_trips() {
        let v = vec![0.1, -2.5e-17, 3.0, f64::MIN_POSITIVE];
        let mut t = Vec::new();
        write_vector_text(&v, &mut t).unwrap();
        assert_eq!(read_vector_text(&t[..]).unwrap(), v);
        let mut b = Vec::new();
        write_vector_binary(&v, &mut b).unwrap();
        assert_eq!(b.len(), 32);
        assert_eq!(read_vector_binary(&b[..]).unwrap(), v);
        assert!(read_vector_binary(&b[..5]).is_err());
    }
}
