//! Self-describing model files.
//!
//! ```text
//! # spectral-support model
//! format=text
//! kernel=abel sigma=0.5
//! filter=tikhonov lambda=1e-3
//! tau=0
//! algorithm=cholesky
//! points=200 dim=2
//! decomposition=none
//! data
//! <points, one comma-separated row each>
//! ```
//!
//! With `format=binary` everything after the `data` line is little-endian
//! `f64`: the points row-major, then (if `decomposition=included`) the `n`
//! eigenvalues followed by the eigenvector matrix column-major. The text
//! format writes the same blocks as rows under `eigenvalues` and
//! `eigenvectors` marker lines. Numbers are written in shortest round-trip
//! form, so a reload reproduces the fitted scores.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::{Algorithm, SupportModel};
use crate::filters::{FilterSpec, SpectralDecomposition};
use crate::kernels::KernelSpec;
use crate::point::Point;
use crate::textfmt::{parse_f64, Record};

const MAGIC: &str = "# spectral-support model";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy)]
pub struct SaveOptions {
    pub format: ModelFormat,
    pub include_decomposition: bool,
}

impl Default for SaveOptions {
    fn default() -> Self {
        SaveOptions {
            format: ModelFormat::Text,
            include_decomposition: false,
        }
    }
}

fn join_row(values: impl Iterator<Item = f64>) -> String {
    values
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn to_bytes(model: &SupportModel, opts: SaveOptions) -> Result<Vec<u8>> {
    let decomposition = if opts.include_decomposition {
        Some(model.decomposition()?)
    } else {
        None
    };
    let mut out = Vec::new();
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "format={}",
        match opts.format {
            ModelFormat::Text => "text",
            ModelFormat::Binary => "binary",
        }
    )?;
    writeln!(out, "{}", model.kernel())?;
    writeln!(out, "{}", model.filter())?;
    writeln!(out, "tau={:?}", model.tau())?;
    writeln!(out, "algorithm={}", model.algorithm())?;
    writeln!(out, "points={} dim={}", model.n(), model.dim())?;
    writeln!(
        out,
        "decomposition={}",
        if decomposition.is_some() {
            "included"
        } else {
            "none"
        }
    )?;
    writeln!(out, "data")?;
    match opts.format {
        ModelFormat::Text => {
            for p in model.points() {
                writeln!(out, "{}", join_row(p.iter().copied()))?;
            }
            if let Some(d) = decomposition {
                writeln!(out, "eigenvalues")?;
                writeln!(out, "{}", join_row(d.eigenvalues().iter().copied()))?;
                writeln!(out, "eigenvectors")?;
                for col in d.eigenvectors().column_iter() {
                    writeln!(out, "{}", join_row(col.iter().copied()))?;
                }
            }
        }
        ModelFormat::Binary => {
            for p in model.points() {
                for v in p.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            if let Some(d) = decomposition {
                for v in d.eigenvalues().iter().chain(d.eigenvectors().iter()) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

pub fn save(model: &SupportModel, path: &Path, opts: SaveOptions) -> Result<()> {
    fs::write(path, to_bytes(model, opts)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SupportModel> {
    from_bytes(&fs::read(path)?)
}

struct Header {
    format: ModelFormat,
    kernel: KernelSpec,
    filter: FilterSpec,
    tau: f64,
    algorithm: Algorithm,
    n: usize,
    dim: usize,
    decomposition: bool,
}

fn parse_header(lines: &[&str]) -> Result<Header> {
    let mut format = None;
    let mut kernel = None;
    let mut filter = None;
    let mut tau = None;
    let mut algorithm = None;
    let mut shape = None;
    let mut decomposition = None;
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        let wrap = |e: Error| Error::parse(lineno, None, e.to_string());
        if i == 0 {
            if *line != MAGIC {
                return Err(Error::parse(1, None, "not a spectral-support model file"));
            }
            continue;
        }
        let key = line.split('=').next().unwrap_or_default();
        match key {
            "format" => {
                format = Some(match &line["format=".len()..] {
                    "text" => ModelFormat::Text,
                    "binary" => ModelFormat::Binary,
                    other => {
                        return Err(Error::parse(
                            lineno,
                            None,
                            format!("unknown format `{other}`"),
                        ))
                    }
                })
            }
            "kernel" => kernel = Some(line.parse::<KernelSpec>().map_err(wrap)?),
            "filter" => filter = Some(line.parse::<FilterSpec>().map_err(wrap)?),
            "tau" => tau = Some(parse_f64(&line["tau=".len()..], "tau").map_err(wrap)?),
            "algorithm" => algorithm = Some(line["algorithm=".len()..].parse().map_err(wrap)?),
            "points" => {
                let rec = Record::parse(line).map_err(wrap)?;
                let n = rec.require("points").map_err(wrap)?;
                let d = rec.require("dim").map_err(wrap)?;
                let bad = |_| Error::parse(lineno, None, "bad shape line");
                shape = Some((
                    n.parse::<usize>().map_err(bad)?,
                    d.parse::<usize>().map_err(bad)?,
                ));
            }
            "decomposition" => {
                decomposition = Some(match &line["decomposition=".len()..] {
                    "included" => true,
                    "none" => false,
                    other => {
                        return Err(Error::parse(
                            lineno,
                            None,
                            format!("bad decomposition `{other}`"),
                        ))
                    }
                })
            }
            _ => {
                return Err(Error::parse(
                    lineno,
                    None,
                    format!("unexpected header line `{line}`"),
                ))
            }
        }
    }
    let missing = |what: &str| Error::parse(lines.len(), None, format!("header lacks `{what}`"));
    let (n, dim) = shape.ok_or_else(|| missing("points"))?;
    Ok(Header {
        format: format.ok_or_else(|| missing("format"))?,
        kernel: kernel.ok_or_else(|| missing("kernel"))?,
        filter: filter.ok_or_else(|| missing("filter"))?,
        tau: tau.ok_or_else(|| missing("tau"))?,
        algorithm: algorithm.ok_or_else(|| missing("algorithm"))?,
        n,
        dim,
        decomposition: decomposition.ok_or_else(|| missing("decomposition"))?,
    })
}

fn parse_row(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>> {
    let row = line
        .split(',')
        .enumerate()
        .map(|(c, tok)| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(lineno, Some(c + 1), format!("`{tok}` is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if row.len() != expected {
        return Err(Error::parse(
            lineno,
            None,
            format!("expected {expected} values, found {}", row.len()),
        ));
    }
    Ok(row)
}

pub fn from_bytes(bytes: &[u8]) -> Result<SupportModel> {
    // header is ASCII up to and including the `data` line
    let mut header_lines = Vec::new();
    let mut offset = 0;
    loop {
        let rest = &bytes[offset..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(header_lines.len() + 1, None, "truncated header"))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::parse(header_lines.len() + 1, None, "header is not UTF-8"))?
            .trim_end_matches('\r');
        offset += nl + 1;
        if line == "data" {
            break;
        }
        header_lines.push(line);
    }
    let h = parse_header(&header_lines)?;
    let body = &bytes[offset..];
    let n = h.n;
    let (rows, decomposition) = match h.format {
        ModelFormat::Binary => {
            let mut need = n * h.dim;
            if h.decomposition {
                need += n + n * n;
            }
            if body.len() != need * 8 {
                return Err(Error::parse(
                    header_lines.len() + 1,
                    None,
                    format!(
                        "binary body has {} bytes, expected {}",
                        body.len(),
                        need * 8
                    ),
                ));
            }
            let vals: Vec<f64> = body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            let rows = vals[..n * h.dim]
                .chunks(h.dim)
                .map(<[f64]>::to_vec)
                .collect();
            let decomposition = if h.decomposition {
                let ev = DVector::from_column_slice(&vals[n * h.dim..n * h.dim + n]);
                let vecs = DMatrix::from_column_slice(n, n, &vals[n * h.dim + n..]);
                Some(SpectralDecomposition::from_parts(ev, vecs)?)
            } else {
                None
            };
            (rows, decomposition)
        }
        ModelFormat::Text => {
            let text = std::str::from_utf8(body)
                .map_err(|_| Error::parse(header_lines.len() + 2, None, "body is not UTF-8"))?;
            let base = header_lines.len() + 2;
            let lines: Vec<&str> = text.lines().collect();
            let expected_len = if h.decomposition { n + 3 + n } else { n };
            if lines.len() != expected_len {
                return Err(Error::parse(
                    base + lines.len().min(expected_len),
                    None,
                    format!("expected {expected_len} body lines, found {}", lines.len()),
                ));
            }
            let rows = lines[..n]
                .iter()
                .enumerate()
                .map(|(i, l)| parse_row(l, base + i, h.dim))
                .collect::<Result<Vec<_>>>()?;
            let decomposition = if h.decomposition {
                if lines[n] != "eigenvalues" || lines[n + 2] != "eigenvectors" {
                    return Err(Error::parse(
                        base + n,
                        None,
                        "malformed decomposition block",
                    ));
                }
                let ev = parse_row(lines[n + 1], base + n + 1, n)?;
                let mut cols = Vec::with_capacity(n * n);
                for (i, l) in lines[n + 3..].iter().enumerate() {
                    cols.extend(parse_row(l, base + n + 3 + i, n)?);
                }
                Some(SpectralDecomposition::from_parts(
                    DVector::from_vec(ev),
                    DMatrix::from_vec(n, n, cols),
                )?)
            } else {
                None
            };
            (rows, decomposition)
        }
    };
    let points = rows
        .into_iter()
        .map(Point::new)
        .collect::<Result<Vec<_>>>()?;
    SupportModel::fit_inner(points, h.kernel, h.filter, h.algorithm, decomposition)?.with_tau(h.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{sample, Task};

    fn models() -> Vec<SupportModel> {
        let train = sample(&Task::Circle, 40, 11).unwrap();
        let k = KernelSpec::abel(0.5).unwrap();
        vec![
            SupportModel::fit(
                train.clone(),
                k.clone(),
                FilterSpec::tikhonov(1e-3).unwrap(),
                Algorithm::Cholesky,
            )
            .unwrap()
            .with_tau(0.2)
            .unwrap(),
            SupportModel::fit(
                train.clone(),
                k.clone(),
                FilterSpec::spectral_cutoff(1e-3).unwrap(),
                Algorithm::Spectral,
            )
            .unwrap(),
            SupportModel::fit(
                train.clone(),
                k.clone(),
                FilterSpec::landweber(30),
                Algorithm::Landweber,
            )
            .unwrap(),
            SupportModel::fit(
                train,
                k,
                FilterSpec::kpca_rank(5).unwrap(),
                Algorithm::Spectral,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn round_trips_preserve_scores() {
        let probes = sample(&Task::Cube { dim: 2 }, 50, 12).unwrap();
        for model in models() {
            let before = model.score_batch(&probes).unwrap();
            for format in [ModelFormat::Text, ModelFormat::Binary] {
                for include_decomposition in [false, true] {
                    let opts = SaveOptions {
                        format,
                        include_decomposition,
                    };
                    let back = from_bytes(&to_bytes(&model, opts).unwrap()).unwrap();
                    assert_eq!(back.points(), model.points());
                    assert_eq!(back.kernel(), model.kernel());
                    assert_eq!(back.filter(), model.filter());
                    assert_eq!(back.algorithm(), model.algorithm());
                    assert_eq!(back.tau(), model.tau());
                    let after = back.score_batch(&probes).unwrap();
                    for (a, b) in before.iter().zip(after.iter()) {
                        assert!((a - b).abs() <= 1e-12, "{format:?} {include_decomposition}");
                    }
                }
            }
        }
    }

    #[test]
    fn saves_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        let model = models().remove(0);
        save(&model, &path, SaveOptions::default()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# spectral-support model\nformat=text\nkernel=abel sigma=0.5\n"));
        assert_eq!(load(&path).unwrap().points(), model.points());
    }

    #[test]
    fn rejects_malformed_files() {
        let model = models().remove(0);
        let good = to_bytes(&model, SaveOptions::default()).unwrap();
        let text = String::from_utf8(good.clone()).unwrap();

        assert!(from_bytes(b"hello\ndata\n").is_err());
        assert!(from_bytes(&good[..20]).is_err());
        let short = text.replace("points=40", "points=41");
        assert!(from_bytes(short.as_bytes()).is_err());
        let bad = text.replace("algorithm=cholesky", "algorithm=qr");
        assert!(matches!(
            from_bytes(bad.as_bytes()),
            Err(Error::Parse { line: 6, .. })
        ));
        let missing = text.replace("tau=0.2\n", "");
        assert!(from_bytes(missing.as_bytes()).is_err());

        let bin = to_bytes(
            &model,
            SaveOptions {
                format: ModelFormat::Binary,
                include_decomposition: false,
            },
        )
        .unwrap();
        assert!(from_bytes(&bin[..bin.len() - 8]).is_err());
    }
}
