//! CSV layouts shared by the library and the command line tool.
//!
//! Every file starts with `# name {json}` metadata lines, followed by a
//! header row and data rows. Reals are written with 17 significant digits.

use crate::eigen::{Spectrum, SpectrumMeta};
use crate::mds::Embedding;
use crate::shapedna::{DissimilarityMatrix, ShapeDna};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing `# {0}` metadata line")]
    MissingMeta(&'static str),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Full-precision rendering of a real.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn meta_line<T: Serialize>(name: &str, value: &T) -> String {
    format!(
        "# {name} {}\n",
        serde_json::to_string(value).expect("metadata serializes")
    )
}

/// Metadata lines and the remaining (header and data) lines of a file.
struct Parsed<'a> {
    meta: Vec<(usize, &'a str, &'a str)>,
    rows: Vec<(usize, &'a str)>,
}

fn split(text: &str) -> Parsed<'_> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix("# ") {
            let (name, body) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.push((i + 1, name, body));
        } else if !line.trim().is_empty() {
            rows.push((i + 1, line));
        }
    }
    Parsed { meta, rows }
}

impl Parsed<'_> {
    fn get<T: DeserializeOwned>(&self, name: &'static str) -> Result<Option<T>, FormatError> {
        match self.meta.iter().find(|(_, n, _)| *n == name) {
            None => Ok(None),
            Some((line, _, body)) => {
                serde_json::from_str(body)
                    .map(Some)
                    .map_err(|e| FormatError::Parse {
                        line: *line,
                        reason: format!("bad `{name}` metadata: {e}"),
                    })
            }
        }
    }

    fn require<T: DeserializeOwned>(&self, name: &'static str) -> Result<T, FormatError> {
        self.get(name)?.ok_or(FormatError::MissingMeta(name))
    }

    /// Data rows after checking the header row.
    fn body(&self, header: &str) -> Result<&[(usize, &str)], FormatError> {
        match self.rows.first() {
            Some((_, h)) if h.trim() == header => Ok(&self.rows[1..]),
            Some((line, h)) => Err(FormatError::Parse {
                line: *line,
                reason: format!("expected header `{header}`, found `{h}`"),
            }),
            None => Err(FormatError::Parse {
                line: 0,
                reason: format!("missing header `{header}`"),
            }),
        }
    }
}

fn fields(line: usize, row: &str, n: usize) -> Result<Vec<&str>, FormatError> {
    let f: Vec<&str> = row.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(FormatError::Parse {
            line,
            reason: format!("expected {n} fields, found {}", f.len()),
        });
    }
    Ok(f)
}

fn number(line: usize, s: &str) -> Result<f64, FormatError> {
    s.parse::<f64>().map_err(|_| FormatError::Parse {
        line,
        reason: format!("`{s}` is not a number"),
    })
}

fn check_index(line: usize, s: &str, want: usize) -> Result<(), FormatError> {
    match s.parse::<usize>() {
        Ok(i) if i == want => Ok(()),
        _ => Err(FormatError::Parse {
            line,
            reason: format!("expected index {want}, found `{s}`"),
        }),
    }
}

/// Spectrum file. `extra` metadata lines (such as the job that produced it)
/// are written before the spectrum metadata.
pub fn spectrum_csv(s: &Spectrum, extra: &[(&str, serde_json::Value)]) -> String {
    let mut out = String::new();
    for (name, value) in extra {
        out += &meta_line(name, value);
    }
    out += &meta_line("spectrum", &s.meta);
    out += "index,lambda,residual\n";
    for (i, (l, r)) in s.values.iter().zip(&s.residuals).enumerate() {
        out += &format!("{i},{},{}\n", real(*l), real(*r));
    }
    out
}

/// Parses a spectrum file, returning it with the raw text of every
/// metadata line by name.
pub fn parse_spectrum_csv(text: &str) -> Result<(Spectrum, Vec<(String, String)>), FormatError> {
    let p = split(text);
    let meta: SpectrumMeta = p.require("spectrum")?;
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    for (i, (line, row)) in p.body("index,lambda,residual")?.iter().enumerate() {
        let f = fields(*line, row, 3)?;
        check_index(*line, f[0], i)?;
        values.push(number(*line, f[1])?);
        residuals.push(number(*line, f[2])?);
    }
    let raw = p
        .meta
        .iter()
        .map(|(_, n, b)| (n.to_string(), b.to_string()))
        .collect();
    Ok((
        Spectrum {
            values,
            residuals,
            meta,
        },
        raw,
    ))
}

#[derive(Serialize, Deserialize)]
struct DnaMeta {
    label: String,
    scale_factor: f64,
    zero_count: usize,
}

pub fn dna_csv(d: &ShapeDna) -> String {
    let mut out = meta_line(
        "dna",
        &DnaMeta {
            label: d.label.clone(),
            scale_factor: d.scale_factor,
            zero_count: d.zero_count,
        },
    );
    out += "index,value\n";
    for (i, v) in d.values.iter().enumerate() {
        out += &format!("{i},{}\n", real(*v));
    }
    out
}

pub fn parse_dna_csv(text: &str) -> Result<ShapeDna, FormatError> {
    let p = split(text);
    let meta: DnaMeta = p.require("dna")?;
    let mut values = Vec::new();
    for (i, (line, row)) in p.body("index,value")?.iter().enumerate() {
        let f = fields(*line, row, 2)?;
        check_index(*line, f[0], i)?;
        values.push(number(*line, f[1])?);
    }
    Ok(ShapeDna {
        values,
        scale_factor: meta.scale_factor,
        zero_count: meta.zero_count,
        label: meta.label,
    })
}

/// Labels must not contain commas.
pub fn dissimilarity_csv(d: &DissimilarityMatrix, k: usize) -> String {
    let mut out = meta_line(
        "dissimilarity",
        &serde_json::json!({ "k": k, "n": d.len() }),
    );
    out += "label";
    for l in &d.labels {
        out += &format!(",{l}");
    }
    out.push('\n');
    for (i, l) in d.labels.iter().enumerate() {
        out += l;
        for j in 0..d.len() {
            out += &format!(",{}", real(d.get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn parse_dissimilarity_csv(text: &str) -> Result<DissimilarityMatrix, FormatError> {
    let p = split(text);
    let (hline, header) = *p.rows.first().ok_or(FormatError::Parse {
        line: 0,
        reason: "empty file".into(),
    })?;
    let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if labels.first().map(String::as_str) != Some("label") {
        return Err(FormatError::Parse {
            line: hline,
            reason: "header must start with `label`".into(),
        });
    }
    let labels = labels[1..].to_vec();
    let n = labels.len();
    let body = &p.rows[1..];
    if body.len() != n {
        return Err(FormatError::Parse {
            line: hline,
            reason: format!("{n} labels but {} rows", body.len()),
        });
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, (line, row)) in body.iter().enumerate() {
        let f = fields(*line, row, n + 1)?;
        if f[0] != labels[i] {
            return Err(FormatError::Parse {
                line: *line,
                reason: format!("row label `{}` does not match `{}`", f[0], labels[i]),
            });
        }
        for s in &f[1..] {
            data.push(number(*line, s)?);
        }
    }
    DissimilarityMatrix::new(labels, data).map_err(|e| FormatError::Parse {
        line: hline,
        reason: e.to_string(),
    })
}

pub fn embedding_csv(e: &Embedding) -> String {
    let dim = e.dim();
    let mut out = meta_line(
        "embedding",
        &serde_json::json!({ "dim": dim, "iterations": e.iterations, "converged": e.converged }),
    );
    out += "label";
    for c in ["x", "y", "z"].iter().take(dim) {
        out += &format!(",{c}");
    }
    out += ",stress\n";
    for (l, p) in e.labels.iter().zip(&e.points) {
        out += l;
        for v in p {
            out += &format!(",{}", real(*v));
        }
        out += &format!(",{}\n", real(e.stress));
    }
    out
}

/// Reads back labels and coordinates of an embedding file.
pub fn parse_embedding_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), FormatError> {
    let p = split(text);
    #[derive(Deserialize)]
    struct Meta {
        dim: usize,
    }
    let meta: Meta = p.require("embedding")?;
    let mut header = String::from("label");
    for c in ["x", "y", "z"].iter().take(meta.dim) {
        header += &format!(",{c}");
    }
    header += ",stress";
    let mut labels = Vec::new();
    let mut points = Vec::new();
    for (line, row) in p.body(&header)? {
        let f = fields(*line, row, meta.dim + 2)?;
        labels.push(f[0].to_string());
        points.push(
            f[1..=meta.dim]
                .iter()
                .map(|s| number(*line, s))
                .collect::<Result<_, _>>()?,
        );
    }
    Ok((labels, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::BoundaryCondition;

    #[test]
    fn spectrum_round_trip() {
        let s = Spectrum {
            values: vec![0.0, 1.9986256607123456, 2.0 / 3.0],
            residuals: vec![1e-12, 3.5e-10, 0.1],
            meta: SpectrumMeta {
                surface: "sphere(r=1)".into(),
                dx: 0.1,
                bc: BoundaryCondition::Closed,
                gamma: 600.0,
                sigma: 0.1,
                k: 3,
                band_points: 999,
                bandwidth: 0.35,
            },
        };
        let text = spectrum_csv(&s, &[("job", serde_json::json!({"dx": 0.1}))]);
        let (back, raw) = parse_spectrum_csv(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(raw[0].0, "job");
        assert_eq!(
            spectrum_csv(&back, &[("job", serde_json::json!({"dx": 0.1}))]),
            text
        );
    }

    #[test]
    fn seventeen_digits() {
        let x = 0.1f64 + 0.2;
        assert_eq!(real(x).parse::<f64>().unwrap(), x);
        assert_eq!(real(x), "3.0000000000000004e-1");
    }

    #[test]
    fn dna_round_trip() {
        let d = ShapeDna {
            values: vec![0.0, 1.0, 1.0, 3.0000000000000004],
            scale_factor: 2.0,
            zero_count: 1,
            label: "s".into(),
        };
        assert_eq!(parse_dna_csv(&dna_csv(&d)).unwrap(), d);
    }

    #[test]
    fn dissimilarity_round_trip() {
        let d = DissimilarityMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 0.3, 0.3, 0.0])
            .unwrap();
        assert_eq!(
            parse_dissimilarity_csv(&dissimilarity_csv(&d, 5)).unwrap(),
            d
        );
        assert!(parse_dissimilarity_csv("label,a,b\na,0,1\nb,2,0\n").is_err());
        assert!(parse_dissimilarity_csv("label,a,b\na,0,1\n").is_err());
    }

    #[test]
    fn bad_rows_report_lines() {
        let err = parse_dna_csv("# dna {\"label\":\"x\",\"scale_factor\":1.0,\"zero_count\":0}\nindex,value\n0,1.0\n1,abc\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 4, .. }), "{err}");
        assert!(matches!(
            parse_dna_csv("index,value\n"),
            Err(FormatError::MissingMeta("dna"))
        ));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
