//! Profile files and atomic output.
//!
//! A profile file is a header line `# nu=<v> h=<v> n=<v> L=<v>` followed by
//! one `x theta` pair per line. Values are written with 17 significant digits
//! so reading a file back reproduces the samples bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams, WallProfile};

/// Writes `contents` to a sibling temporary file, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

/// Two-column text, one `a b` pair per line, each at full precision.
pub fn two_columns(a: &[f64], b: &[f64]) -> String {
    let mut out = String::with_capacity(a.len() * 48);
    for (x, y) in a.iter().zip(b) {
        out.push_str(&format!("{x:.16e} {y:.16e}\n"));
    }
    out
}

pub fn profile_to_string(p: &WallProfile) -> String {
    let g = p.grid();
    let mut out = format!(
        "# nu={} h={} n={} L={}\n",
        p.params().nu(),
        p.params().h(),
        g.len(),
        g.half_width()
    );
    out.push_str(&two_columns(g.nodes(), p.theta()));
    out
}

pub fn write_profile(path: &Path, p: &WallProfile) -> Result<()> {
    write_atomic(path, profile_to_string(p).as_bytes())
}

fn header_value<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Option<&'a str> {
    fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

pub fn parse_profile(text: &str, path: &Path) -> Result<WallProfile> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| err(1, "missing '# nu=.. h=.. n=.. L=..' header".into()))?;
    let fields: Vec<(&str, &str)> = header
        .split_whitespace()
        .filter_map(|f| f.split_once('='))
        .collect();
    let num = |key: &str| -> Result<f64> {
        header_value(&fields, key)
            .ok_or_else(|| err(1, format!("header lacks {key}")))?
            .parse::<f64>()
            .map_err(|e| err(1, format!("{key}: {e}")))
    };
    let params = ModelParams::new(num("nu")?, num("h")?)?;
    let n = header_value(&fields, "n")
        .ok_or_else(|| err(1, "header lacks n".into()))?
        .parse::<usize>()
        .map_err(|e| err(1, format!("n: {e}")))?;
    let grid = Grid::new(n, num("L")?)?;

    let mut theta = Vec::with_capacity(n);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let (Some(x), Some(t), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(err(i + 1, "expected two columns".into()));
        };
        let x: f64 = x.parse().map_err(|e| err(i + 1, format!("x: {e}")))?;
        let t: f64 = t.parse().map_err(|e| err(i + 1, format!("theta: {e}")))?;
        let k = theta.len();
        if k >= n {
            return Err(err(i + 1, format!("more than {n} samples")));
        }
        let expect = grid.nodes()[k];
        if (x - expect).abs() > 1e-9 * grid.half_width() {
            return Err(err(i + 1, format!("node {x} does not match grid node {expect}")));
        }
        theta.push(t);
    }
    if theta.len() != n {
        return Err(err(
            text.lines().count(),
            format!("found {} samples, header says {n}", theta.len()),
        ));
    }
    WallProfile::new(grid, params, theta)
}

pub fn read_profile(path: &Path) -> Result<WallProfile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_initial_profile, InitKind, Perturbation};

    #[test]
    fn round_trip_is_bit_exact() {
        let params = ModelParams::new(1.3, 0.3).unwrap();
        let grid = Grid::new(257, 17.5).unwrap();
        let bump = Perturbation::from_seed(3, 2.0, &params);
        let p = make_initial_profile(&grid, &params, InitKind::Perturbed { width: 2.0, bump })
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.txt");
        write_profile(&path, &p).unwrap();
        let q = read_profile(&path).unwrap();
        assert_eq!(p.params(), q.params());
        assert_eq!(p.grid(), q.grid());
        for (a, b) in p.theta().iter().zip(q.theta()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed_files() {
        let path = Path::new("mem");
        assert!(parse_profile("", path).is_err());
        assert!(parse_profile("0 1\n", path).is_err());
        let p = make_initial_profile(
            &Grid::new(17, 4.0).unwrap(),
            &ModelParams::new(1.0, 0.0).unwrap(),
            InitKind::Template,
        )
        .unwrap();
        let text = profile_to_string(&p);
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_profile(&truncated, path),
            Err(Error::Parse { .. })
        ));
        let bad = text.replacen("n=17", "n=19", 1);
        assert!(parse_profile(&bad, path).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"{}").unwrap();
        write_atomic(&path, b"[1]").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "[1]");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
