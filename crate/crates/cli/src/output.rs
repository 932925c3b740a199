//! CSV serialization and all-or-nothing directory output.

use std::fs;
use std::io;
use std::path::Path;

use crate::scenario::Artifact;

/// Nine significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.8e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(Cell::render)).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

/// Writes every artifact into a temporary directory next to `out_dir` and
/// only then moves the files into place, so a failure leaves `out_dir`
/// untouched.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> io::Result<()> {
    let parent = match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::env::current_dir()?,
    };
    fs::create_dir_all(&parent)?;
    let staging = tempfile::Builder::new().prefix(".holeburn-").tempdir_in(&parent)?;
    for a in artifacts {
        let path = staging.path().join(&a.path);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, &a.contents)?;
    }
    fs::create_dir_all(out_dir)?;
    for a in artifacts {
        let target = out_dir.join(&a.path);
        if let Some(dir) = target.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::rename(staging.path().join(&a.path), &target)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000e0");
        assert_eq!(fmt_num(-0.000123456789123), "-1.23456789e-4");
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }

    #[test]
    fn table_has_header_and_rows() {
        let t = csv_table(&["a", "b"], vec![vec![Cell::Num(2.5), Cell::Text("x".into())], vec![Cell::Int(3), Cell::Num(0.0)]]);
        assert_eq!(String::from_utf8(t).unwrap(), "a,b\n2.50000000e0,x\n3,0.00000000e0\n");
    }

    #[test]
    fn artifacts_land_in_subdirectories() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let artifacts = vec![
            Artifact { path: "a.csv".into(), contents: b"x\n".to_vec() },
            Artifact { path: "points/b.csv".into(), contents: b"y\n".to_vec() },
        ];
        write_artifacts(&out, &artifacts).unwrap();
        assert_eq!(fs::read(out.join("a.csv")).unwrap(), b"x\n");
        assert_eq!(fs::read(out.join("points/b.csv")).unwrap(), b"y\n");
        // no staging directory left behind
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(leftovers, vec![std::ffi::OsString::from("run")]);
    }
}
