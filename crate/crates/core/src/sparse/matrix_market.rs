//! MatrixMarket coordinate format (`real`/`integer`/`pattern`, `general`/`symmetric`).

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

/// Parses a coordinate MatrixMarket stream. Symmetric files are expanded to
/// both triangles and the result is flagged symmetric.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("bad banner: {header}"),
        });
    }
    if tokens[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("only coordinate format is supported, got {}", tokens[2]),
        });
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported field {other}"),
            })
        }
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry {other}"),
            })
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("{s}: {e}"),
            })
        };
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "size line needs rows cols nnz".into(),
                    });
                }
                let s = (parse_usize(parts[0])?, parse_usize(parts[1])?, parse_usize(parts[2])?);
                triplets.reserve(if symmetric { 2 * s.2 } else { s.2 });
                size = Some(s);
            }
            Some((nr, nc, _)) => {
                let want = if field == Field::Pattern { 2 } else { 3 };
                if parts.len() < want {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {want} fields"),
                    });
                }
                let i = parse_usize(parts[0])?;
                let j = parse_usize(parts[1])?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("index ({i}, {j}) outside {nr}x{nc}"),
                    });
                }
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    parts[2].parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("{}: {e}", parts[2]),
                    })?
                };
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or(Error::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("declared {nnz} entries, found {stored}"),
        });
    }
    let m = CsrMatrix::from_triplets(nr, nc, &triplets)?;
    if symmetric {
        m.into_symmetric()
    } else {
        Ok(m)
    }
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let f = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(f))
}

/// Serializes to MatrixMarket text. Matrices flagged symmetric are written
/// as `symmetric` (lower triangle), all others as `general`. Values use the
/// shortest round-trip representation.
pub fn to_matrix_market_string(m: &CsrMatrix) -> String {
    let symmetric = m.is_symmetric() && m.nrows() == m.ncols();
    let mut out = String::new();
    let kind = if symmetric { "symmetric" } else { "general" };
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real {kind}");
    let mut entries = Vec::with_capacity(m.nnz());
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if !symmetric || j <= i {
                entries.push((i, j, v));
            }
        }
    }
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), entries.len());
    // Column-major entry order, as most MatrixMarket producers emit.
    entries.sort_by_key(|&(i, j, _)| (j, i));
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

pub fn write_matrix_market<W: Write>(m: &CsrMatrix, mut w: W) -> Result<()> {
    w.write_all(to_matrix_market_string(m).as_bytes())?;
    Ok(())
}

pub fn write_matrix_market_file(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_matrix_market_string(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_symmetric_and_expands() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2.0\n2 1 -1\n2 2 2\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert!(m.is_symmetric());
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn reads_pattern_general() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n3 2 2\n1 2\n3 1\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!((m.nrows(), m.ncols(), m.nnz()), (3, 2, 2));
        assert_eq!(m.get(2, 0), 1.0);
    }

    #[test]
    fn rejects_bad_counts_and_indices() {
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n";
        assert!(matches!(read_matrix_market(short.as_bytes()), Err(Error::Parse { .. })));
        let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(read_matrix_market(oob.as_bytes()), Err(Error::Parse { .. })));
        let dense = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        assert!(read_matrix_market(dense.as_bytes()).is_err());
    }

    #[test]
    fn writes_lower_triangle_for_symmetric() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 0.1)])
            .unwrap()
            .into_symmetric()
            .unwrap();
        let s = to_matrix_market_string(&m);
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n"));
        let back = read_matrix_market(s.as_bytes()).unwrap();
        assert_eq!(back, m);
    }
}
