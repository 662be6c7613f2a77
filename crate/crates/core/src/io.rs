//! File formats and output helpers.
//!
//! A matrix literal is `{"dim": d, "re": [[…]], "im": [[…]]}` (row-major, `im`
//! optional). Channel files are `{"dim": d, "states": [literal, …], "labels":
//! […]}`, codebook files `{"n": n, "words": [[…], …]}` with 1-based letters,
//! and POVM files a JSON list of literals with `X₀` first.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Codebook, CqChannel, DensityOperator, Povm};
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixLiteral {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixLiteral {
    pub fn to_matrix(&self) -> Result<HermitianMatrix> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::input("matrix dimension must be positive"));
        }
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&self.re) || !self.im.as_ref().map_or(true, shape_ok) {
            return Err(Error::input(format!("matrix entries do not form a {d}x{d} array")));
        }
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
                data.push(C64::new(self.re[i][j], im));
            }
        }
        HermitianMatrix::new_checked(d, data)
    }

    pub fn from_matrix(m: &HermitianMatrix) -> Self {
        let d = m.dim();
        let re = (0..d).map(|i| (0..d).map(|j| m.get(i, j).re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| m.get(i, j).im).collect()).collect();
        let any_im = im.iter().flatten().any(|x| *x != 0.0);
        Self {
            dim: d,
            re,
            im: any_im.then_some(im),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    dim: usize,
    states: Vec<MatrixLiteral>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    n: usize,
    words: Vec<Vec<usize>>,
}

fn json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        context: format!("invalid {what} file"),
        source,
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Json { context, source } => Error::Json {
            context: format!("{}: {context}", path.display()),
            source,
        },
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_channel(text: &str) -> Result<CqChannel> {
    let file: ChannelFile = json(text, "channel")?;
    let states = file
        .states
        .iter()
        .enumerate()
        .map(|(k, lit)| {
            if lit.dim != file.dim {
                return Err(Error::input(format!(
                    "state {k} has dim {}, channel declares {}",
                    lit.dim, file.dim
                )));
            }
            let m = lit.to_matrix().map_err(|e| Error::input(format!("state {k}: {e}")))?;
            DensityOperator::new(m).map_err(|e| Error::input(format!("state {k}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let ch = CqChannel::new(states)?;
    match file.labels {
        Some(labels) => ch.with_labels(labels),
        None => Ok(ch),
    }
}

pub fn load_channel(path: &Path) -> Result<CqChannel> {
    with_path(path, parse_channel(&read(path)?))
}

pub fn channel_to_json(ch: &CqChannel) -> String {
    let file = ChannelFile {
        dim: ch.dim(),
        states: ch.states().iter().map(|s| MatrixLiteral::from_matrix(s.matrix())).collect(),
        labels: ch.labels().map(|l| l.to_vec()),
    };
    serde_json::to_string_pretty(&file).expect("channel serializes")
}

pub fn parse_codebook(text: &str) -> Result<Codebook> {
    let file: CodebookFile = json(text, "codebook")?;
    let words = file
        .words
        .iter()
        .enumerate()
        .map(|(k, w)| {
            w.iter()
                .map(|&l| {
                    l.checked_sub(1)
                        .ok_or_else(|| Error::input(format!("codeword {k}: letters are 1-based, found 0")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Codebook::new(file.n, words)
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    with_path(path, parse_codebook(&read(path)?))
}

pub fn parse_povm(text: &str) -> Result<Povm> {
    let lits: Vec<MatrixLiteral> = json(text, "POVM")?;
    let elements = lits
        .iter()
        .enumerate()
        .map(|(k, lit)| lit.to_matrix().map_err(|e| Error::input(format!("element {k}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

pub fn load_povm(path: &Path) -> Result<Povm> {
    with_path(path, parse_povm(&read(path)?))
}

/// Twelve significant digits, shortest form, `.` as decimal separator.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// CSV text with a header line; every row must match the header width.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZERO_PLUS: &str = r#"{"dim": 2, "states": [
        {"dim": 2, "re": [[1, 0], [0, 0]]},
        {"dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]], "im": [[0, 0], [0, 0]]}
    ], "labels": ["zero", "plus"]}"#;

    #[test]
    fn channel_round_trip() {
        let ch = parse_channel(ZERO_PLUS).unwrap();
        assert_eq!(ch.alphabet_size(), 2);
        assert_eq!(ch.labels().unwrap()[1], "plus");
        assert!(ch.state(1).unwrap().is_pure());
        let again = parse_channel(&channel_to_json(&ch)).unwrap();
        assert_eq!(again, ch);
    }

    #[test]
    fn channel_rejections() {
        let bad_trace = r#"{"dim": 1, "states": [{"dim": 1, "re": [[2]]}]}"#;
        assert!(parse_channel(bad_trace).unwrap_err().to_string().contains("state 0"));
        let not_herm = r#"{"dim": 2, "states": [{"dim": 2, "re": [[0.5, 0.1], [0, 0.5]]}]}"#;
        assert!(parse_channel(not_herm).is_err());
        let unknown = r#"{"dim": 1, "states": [{"dim": 1, "re": [[1]]}], "extra": 1}"#;
        assert!(parse_channel(unknown).is_err());
        let ragged = r#"{"dim": 2, "states": [{"dim": 2, "re": [[1, 0], [0]]}]}"#;
        assert!(parse_channel(ragged).is_err());
        let not_psd = r#"{"dim": 2, "states": [{"dim": 2, "re": [[1.5, 0], [0, -0.5]]}]}"#;
        assert!(parse_channel(not_psd).is_err());
        let syntax = "{\"dim\": 2,\n \"states\": [}";
        let msg = parse_channel(syntax).unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn codebook_is_one_based() {
        let cb = parse_codebook(r#"{"n": 2, "words": [[1, 2], [2, 2]]}"#).unwrap();
        assert_eq!(cb.words(), &[vec![0, 1], vec![1, 1]]);
        assert!(parse_codebook(r#"{"n": 1, "words": [[0]]}"#).is_err());
        assert!(parse_codebook(r#"{"n": 2, "words": [[1]]}"#).is_err());
    }

    #[test]
    fn povm_file() {
        let p = parse_povm(r#"[{"dim": 1, "re": [[0.25]]}, {"dim": 1, "re": [[0.75]]}]"#).unwrap();
        assert_eq!(p.decisions(), 1);
        assert!(parse_povm(r#"[{"dim": 1, "re": [[0.25]]}]"#).is_err());
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(2f64.ln()), "0.69314718056");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(1234567.0), "1234567");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(-3.0e15), "-3e15");
        assert_eq!(format_number(0.95 * 0.4), "0.38");
        assert_eq!(format_number(f64::NAN), "nan");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"a\n").unwrap();
        write_atomic(&path, b"b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_eq!(csv(&["x", "y"], &[vec!["1".into(), "2".into()]]), "x,y\n1,2\n");
    }
}
