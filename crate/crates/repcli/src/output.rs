//! CSV and JSON writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::manifest::RunManifest;
use crate::Error;

/// Plain decimal for moderate magnitudes, scientific otherwise. Always the
/// shortest text that parses back to the same value.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Manifest comment block, header row and records.
pub fn csv_string(manifest: &RunManifest, header: &[&str], rows: &[Vec<String>]) -> Result<String, Error> {
    let mut buf = manifest.csv_comment().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| Error::Format(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
    }
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Header and records of a CSV written by [`csv_string`].
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), Error> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Format(e.to_string()))?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((header, rows))
}

#[derive(Serialize)]
struct WithManifest<'a, T: Serialize> {
    manifest: RunManifest,
    #[serde(flatten)]
    record: &'a T,
}

/// One pretty-printed JSON object with the manifest under `"manifest"`.
pub fn json_string<T: Serialize>(manifest: &RunManifest, record: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(&WithManifest { manifest: manifest.for_data(), record })
        .map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        _ => match std::io::stdout().write_all(text.as_bytes()) {
            // A closed pipe (`| head`) is not an error for a filter-style tool.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| Error::Io(e.to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, 24.891, 1e-9, 142857.14285714287, 3.5e12, -0.25] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(4.0), "4");
        assert_eq!(fmt_num(2e-6), "2e-6");
    }

    #[test]
    fn csv_reads_back() {
        let m = RunManifest::new("test");
        let rows = vec![vec!["1".to_string(), "2e-6".to_string()]];
        let text = csv_string(&m, &["a", "b"], &rows).unwrap();
        assert!(text.starts_with("# command: test\n"));
        let (h, r) = read_csv(&text).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(r, rows);
    }

    #[test]
    fn json_embeds_manifest() {
        #[derive(Serialize)]
        struct R {
            x: f64,
        }
        let text = json_string(&RunManifest::new("mc").stamped(), &R { x: 1.5 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["x"], 1.5);
        assert_eq!(v["manifest"]["command"], "mc");
        assert!(v["manifest"].get("timestamp").is_none());
    }
}
