use std::io::Write;
use std::path::Path;

/// Writes to a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PlotRow {
    pub parameter: f64,
    pub sigma_min: f64,
    pub kernel_dim: usize,
}

/// CSV with columns (parameter, sigma_min, kernel_dim), sorted by parameter.
pub fn emit_plot_data(rows: &[PlotRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["parameter", "sigma_min", "kernel_dim"]).expect("in-memory write");
    for r in &sorted {
        w.write_record([format!("{:.12}", r.parameter), format!("{:.12e}", r.sigma_min), r.kernel_dim.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scan_is_header_only() {
        assert_eq!(emit_plot_data(&[]), "parameter,sigma_min,kernel_dim\n");
    }

    #[test]
    fn rows_are_sorted() {
        let rows = [
            PlotRow { parameter: 1.0, sigma_min: 0.5, kernel_dim: 0 },
            PlotRow { parameter: -1.0, sigma_min: 0.0, kernel_dim: 2 },
        ];
        let s = emit_plot_data(&rows);
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[1].starts_with("-1.0"));
        assert!(lines[1].ends_with(",2"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
