//! File writers. Every float is printed with 17 significant digits so that
//! reruns are byte-identical and values round-trip.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use berryfield::grid::{ParameterGrid, ScalarField, VectorField};
use serde::Serialize;

use crate::error::CliError;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(CliError::io(path))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

/// A field dump: `i,j,k,tau,x,y,z,t,mask,c0[,c1,c2]`, one row per node with
/// `tau` varying fastest.
fn write_nodes(
    path: &Path,
    grid: &ParameterGrid,
    components: usize,
    valid: &[bool],
    value: impl Fn(usize) -> [f64; 3],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = ["i", "j", "k", "tau", "x", "y", "z", "t", "mask"]
        .map(String::from)
        .to_vec();
    header.extend((0..components).map(|c| format!("c{c}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for p in 0..grid.len() {
        let (i, j, k, tau) = grid.unravel(p);
        let (r, t) = grid.point(p);
        row.clear();
        row.extend([i, j, k, tau].map(|n| n.to_string()));
        row.extend(r.map(float));
        row.push(float(t));
        row.push(if valid[p] { "1" } else { "0" }.to_string());
        row.extend(value(p)[..components].iter().map(|&x| float(x)));
        w.write_record(&row)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_scalar_csv(path: &Path, field: &ScalarField) -> Result<(), CliError> {
    write_nodes(path, &field.grid, 1, &field.valid, |p| {
        [field.values[p], 0.0, 0.0]
    })
}

pub fn write_vector_csv(path: &Path, field: &VectorField) -> Result<(), CliError> {
    write_nodes(path, &field.grid, 3, &field.valid, |p| field.values[p])
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(CliError::io(path))
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn dump_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = ParameterGrid::spatial([0.0; 3], [0.5, 1.0, 2.0], [3, 1, 1]).unwrap();
        let mut f = ScalarField::from_fn(g, |r, _| r[0]);
        f.valid[1] = false;
        let path = dir.path().join("f.csv");
        write_scalar_csv(&path, &f).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,k,tau,x,y,z,t,mask,c0");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1,0,0,0,5.0000000000000000e-1,"));
        assert!(lines[2].contains(",0,5.0000000000000000e-1"));

        let v = VectorField::from_fn(g, |r, _| [r[0], 1.0, 2.0]);
        write_vector_csv(&path, &v).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("i,j,k,tau,x,y,z,t,mask,c0,c1,c2\n"));
        assert!(text
            .lines()
            .nth(3)
            .unwrap()
            .ends_with(",1,1.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e0"));
    }
}
