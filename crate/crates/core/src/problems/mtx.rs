//! Matrix Market coordinate format, `real general` only.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::matrix::BlockSparseMatrix;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn read_matrix_market(path: impl AsRef<Path>, block_size: usize) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix".into());
    let mut inst = read_matrix_market_from(BufReader::new(file), block_size)?;
    inst.label = label;
    inst.provenance = format!("Matrix Market file {}", path.display());
    Ok(inst)
}

pub fn read_matrix_market_from<R: BufRead>(reader: R, block_size: usize) -> Result<ProblemInstance> {
    if block_size == 0 {
        return Err(Error::InvalidSpec("block size must be at least 1".into()));
    }
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };

    let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(ln, format!("not a Matrix Market header: `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(ln, format!("unsupported format `{}` (only coordinate)", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(ln, format!("unsupported field `{}` (only real)", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(parse_err(ln, format!("unsupported symmetry `{}` (only general)", tokens[4])));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(ln, "size line must have three integers".into()));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_err(ln, format!("bad integer `{s}`")));
                let (r, c, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if r % block_size != 0 || c % block_size != 0 {
                    return Err(parse_err(ln, format!("dimensions {r}x{c} not divisible by block size {block_size}")));
                }
                size = Some((r, c, nnz));
                entries.reserve(nnz);
            }
            Some((r, c, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(ln, format!("expected `row col value`, got `{t}`")));
                }
                let i: usize = fields[0].parse().map_err(|_| parse_err(ln, format!("bad row index `{}`", fields[0])))?;
                let j: usize = fields[1].parse().map_err(|_| parse_err(ln, format!("bad column index `{}`", fields[1])))?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(ln, format!("bad value `{}`", fields[2])))?;
                if i == 0 || i > r || j == 0 || j > c {
                    return Err(parse_err(ln, format!("entry ({i}, {j}) outside {r}x{c}")));
                }
                entries.push((i - 1, j - 1, v));
            }
        }
    }
    let (r, c, nnz) = size.ok_or_else(|| parse_err(0, "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(Error::Parse {
            line: 0,
            message: format!("declared {nnz} entries, found {}", entries.len()),
        });
    }
    let matrix = BlockSparseMatrix::from_scalar_triplets(r / block_size, c / block_size, block_size, entries)?;
    ProblemInstance::new(matrix, None, "matrix", "Matrix Market stream")
}

pub fn write_matrix_market(instance: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_matrix_market_to(instance, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes every entry of every stored block (stored zeros included) in
/// row-major scalar order with 17 significant digits.
pub fn write_matrix_market_to<W: Write>(instance: &ProblemInstance, w: &mut W) -> Result<()> {
    let a = &instance.matrix;
    if a.nrows() == 0 || a.nnz_blocks() == 0 {
        return Err(Error::InvalidMatrix("refusing to write an empty matrix".into()));
    }
    let b = a.block_size();
    writeln!(w, "{HEADER}")?;
    writeln!(w, "% {} ({})", instance.label, instance.provenance.replace('\n', " "))?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for r in 0..a.nrows_blocks() {
        let (cols, blks) = a.row(r);
        for p in 0..b {
            for (k, &c) in cols.iter().enumerate() {
                for q in 0..b {
                    let v = blks[k * b * b + p * b + q];
                    writeln!(w, "{} {} {:.16e}", r * b + p + 1, c * b + q + 1, v)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Cursor;

    #[test]
    fn reads_diagonal() {
        let text = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 2.0\n2 2 3.0\n";
        let inst = read_matrix_market_from(Cursor::new(text), 1).unwrap();
        assert_eq!(inst.matrix.to_dense(), vec![2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 2.0\n1 1 0.5\n2 2 3.0\n";
        let inst = read_matrix_market_from(Cursor::new(text), 1).unwrap();
        assert_eq!(inst.matrix.block(0, 0).unwrap(), &[2.5]);
        assert_eq!(inst.matrix.nnz(), 2);
    }

    #[test]
    fn groups_entries_into_blocks() {
        let text = "%%MatrixMarket matrix coordinate real general\n4 4 3\n1 2 1.0\n4 3 2.0\n3 1 5.0\n";
        let inst = read_matrix_market_from(Cursor::new(text), 2).unwrap();
        let a = &inst.matrix;
        assert_eq!(a.block(0, 0).unwrap(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.block(1, 1).unwrap(), &[0.0, 0.0, 2.0, 0.0]);
        assert_eq!(a.block(1, 0).unwrap(), &[5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_unsupported_and_malformed() {
        let cases = [
            "%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
            "%%MatrixMarket matrix array real general\n1 1\n1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n3 3 1\n1 1 1.0\n",
        ];
        for (idx, text) in cases.iter().enumerate() {
            let b = if idx == 6 { 2 } else { 1 };
            assert!(read_matrix_market_from(Cursor::new(*text), b).is_err(), "case {idx}");
        }
        match read_matrix_market_from(Cursor::new(cases[5]), 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn writes_header_size_and_entries() {
        let m = BlockSparseMatrix::from_dense(2, 2, 1, &[2.0, 0.0, 0.0, 3.0]).unwrap();
        let inst = ProblemInstance::new(m, None, "diag", "test").unwrap();
        let mut buf = Vec::new();
        write_matrix_market_to(&inst, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[2], "2 2 2");
        assert_eq!(lines[3], "1 1 2.0000000000000000e0");
    }

    #[test]
    fn empty_matrix_rejected() {
        let m = BlockSparseMatrix::new(0, 0, 1, vec![0], vec![], vec![]).unwrap();
        let inst = ProblemInstance::new(m, None, "empty", "test").unwrap();
        assert!(write_matrix_market_to(&inst, &mut Vec::new()).is_err());
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for b in [1, 3] {
            let n = 17;
            let mut trip: Vec<(usize, usize, Vec<f64>)> = Vec::new();
            for r in 0..n {
                for c in 0..n {
                    if rng.gen::<f64>() < 0.2 {
                        let v = (0..b * b).map(|_| rng.gen::<f64>() * 10f64.powi(rng.gen_range(-8..8))).collect();
                        trip.push((r, c, v));
                    }
                }
            }
            let m = BlockSparseMatrix::from_block_triplets(n, n, b, trip.iter().map(|(r, c, v)| (*r, *c, v.as_slice()))).unwrap();
            let inst = ProblemInstance::new(m, None, "rand", "test").unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.mtx");
            write_matrix_market(&inst, &path).unwrap();
            let back = read_matrix_market(&path, b).unwrap();
            assert_eq!(back.matrix, inst.matrix);
            assert_eq!(back.label, "m");
        }
    }
}
