//! The bracketed-section model file format.
//!
//! ```text
//! [matrices]              # one-lead model
//! A    = 0 0 -0.2083333 ; 0 0 -0.1041667 ; 0 0 0.4166667
//! Ahat = ...
//! B    = ...
//! R    = ...
//!
//! [general]               # multi-lead/lag model (alternative to [matrices])
//! h = 2
//! l = 1
//! A_0_0 = 1
//! A_1_1 = 1
//! A_2_1 = -1
//! B = -1
//! R = 0
//!
//! [init]                  # optional
//! x_prev    = 0 0 0
//! xhat_prev = 0 0 0
//! u_prev    = 0 0 0
//!
//! [shocks]                # optional
//! seed = 42
//! cov  = 1 1 1            # diagonal list, or a full matrix with ';'
//! ```
//!
//! Matrix literals are rows joined by `;` with whitespace-separated decimal
//! entries.  Lines starting with `#` are comments.  Exactly one of
//! `[matrices]` or `[general]` must be present.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rex_core::model::{GeneralModel, InitCond, ModelCM, ShockSpec};
use rex_core::{Error as CoreError, Tolerances};

/// Parse failure with source position.
#[derive(Debug)]
pub enum FileError {
    /// Syntax problem at (line, column).
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    /// Structurally well-formed but dimensionally inconsistent.
    Dimension(String),
    /// Model invariant violated (Ahat = 0, irregular characteristic matrix,
    /// A_00 != I).
    Invariant(String),
    Io(std::io::Error),
}

impl std::fmt::Display for FileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FileError::Parse { line, col, msg } => {
                write!(f, "parse error at line {line}, column {col}: {msg}")
            }
            FileError::Dimension(msg) => write!(f, "dimension error: {msg}"),
            FileError::Invariant(msg) => write!(f, "model invariant violated: {msg}"),
            FileError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for FileError {}

/// Parsed contents of a model file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: ParsedModel,
    pub init: Option<InitCond>,
    pub shocks: Option<ShockSpec>,
    pub source: PathBuf,
}

/// Either model kind.
#[derive(Debug, Clone)]
pub enum ParsedModel {
    Cm(ModelCM),
    General(GeneralModel),
}

impl ModelFile {
    /// Dimensions (n, m) of the parsed model.
    pub fn dims(&self) -> (usize, usize) {
        match &self.model {
            ParsedModel::Cm(m) => (m.n(), m.m()),
            ParsedModel::General(g) => (g.n(), g.m()),
        }
    }

    /// Initial conditions, zero-filled when the file has no `[init]`.
    pub fn init_or_zero(&self) -> InitCond {
        let (n, m) = self.dims();
        self.init.clone().unwrap_or_else(|| InitCond::zero(n, m))
    }
}

struct RawSection {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize, usize)>, // key, value, line, col
}

fn split_sections(text: &str) -> Result<Vec<RawSection>, FileError> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(FileError::Parse {
                line: line_no,
                col: line.len(),
                msg: "unterminated section header".into(),
            })?;
            sections.push(RawSection {
                name: name.trim().to_ascii_lowercase(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let eq = trimmed.find('=').ok_or(FileError::Parse {
            line: line_no,
            col: 1,
            msg: "expected `key = value`".into(),
        })?;
        let key = trimmed[..eq].trim().to_string();
        let value = trimmed[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(FileError::Parse {
                line: line_no,
                col: 1,
                msg: "empty key".into(),
            });
        }
        let col = raw_line.find('=').map(|p| p + 2).unwrap_or(1);
        match sections.last_mut() {
            Some(s) => s.entries.push((key, value, line_no, col)),
            None => {
                return Err(FileError::Parse {
                    line: line_no,
                    col: 1,
                    msg: "key outside any [section]".into(),
                })
            }
        }
    }
    Ok(sections)
}

fn parse_matrix(value: &str, line: usize, col: usize) -> Result<DMatrix<f64>, FileError> {
    let rows: Vec<&str> = value.split(';').collect();
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in &rows {
        let entries = row
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| FileError::Parse {
                    line,
                    col,
                    msg: format!("`{tok}` is not a decimal number"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if entries.is_empty() {
            return Err(FileError::Parse {
                line,
                col,
                msg: "empty matrix row".into(),
            });
        }
        data.push(entries);
    }
    let width = data[0].len();
    if data.iter().any(|r| r.len() != width) {
        return Err(FileError::Parse {
            line,
            col,
            msg: "matrix rows have unequal lengths".into(),
        });
    }
    let flat: Vec<f64> = data.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(flat.len() / width, width, &flat))
}

fn parse_vector(value: &str, line: usize, col: usize) -> Result<DVector<f64>, FileError> {
    let m = parse_matrix(value, line, col)?;
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(FileError::Parse {
            line,
            col,
            msg: "expected a vector (one row of numbers)".into(),
        });
    }
    Ok(DVector::from_iterator(m.len(), m.iter().copied()))
}

fn core_to_file_error(e: CoreError) -> FileError {
    match e {
        CoreError::DimensionMismatch(msg) => FileError::Dimension(msg),
        CoreError::ZeroAhat => FileError::Invariant("Ahat must be nonzero".into()),
        CoreError::NotRegular => {
            FileError::Invariant("characteristic matrix polynomial is not regular".into())
        }
        other => FileError::Invariant(other.to_string()),
    }
}

/// Parses a model file; dimension and invariant checks run eagerly.
pub fn parse_model(path: &Path, tol: &Tolerances) -> Result<ModelFile, FileError> {
    let text = std::fs::read_to_string(path).map_err(FileError::Io)?;
    parse_model_str(&text, path, tol)
}

/// Parses model-file text (the file-reading half split out for tests).
pub fn parse_model_str(
    text: &str,
    path: &Path,
    tol: &Tolerances,
) -> Result<ModelFile, FileError> {
    let sections = split_sections(text)?;
    let mut matrices: Option<&RawSection> = None;
    let mut general: Option<&RawSection> = None;
    let mut init: Option<&RawSection> = None;
    let mut shocks: Option<&RawSection> = None;
    for s in &sections {
        let slot = match s.name.as_str() {
            "matrices" => &mut matrices,
            "general" => &mut general,
            "init" => &mut init,
            "shocks" => &mut shocks,
            other => {
                return Err(FileError::Parse {
                    line: s.line,
                    col: 1,
                    msg: format!("unknown section [{other}]"),
                })
            }
        };
        if slot.is_some() {
            return Err(FileError::Parse {
                line: s.line,
                col: 1,
                msg: format!("duplicate section [{}]", s.name),
            });
        }
        *slot = Some(s);
    }

    let model = match (matrices, general) {
        (Some(m), None) => ParsedModel::Cm(parse_cm(m, tol)?),
        (None, Some(g)) => ParsedModel::General(parse_general(g, tol)?),
        (Some(_), Some(_)) => {
            return Err(FileError::Invariant(
                "exactly one of [matrices] or [general] may be present, found both".into(),
            ))
        }
        (None, None) => {
            return Err(FileError::Invariant(
                "missing model section: need [matrices] or [general]".into(),
            ))
        }
    };
    let (n, m) = match &model {
        ParsedModel::Cm(mm) => (mm.n(), mm.m()),
        ParsedModel::General(g) => (g.n(), g.m()),
    };

    let init = match init {
        None => None,
        Some(s) => {
            let mut x_prev = None;
            let mut xhat_prev = None;
            let mut u_prev = None;
            for (key, value, line, col) in &s.entries {
                let v = parse_vector(value, *line, *col)?;
                match key.as_str() {
                    "x_prev" => x_prev = Some(v),
                    "xhat_prev" => xhat_prev = Some(v),
                    "u_prev" => u_prev = Some(v),
                    other => {
                        return Err(FileError::Parse {
                            line: *line,
                            col: 1,
                            msg: format!("unknown [init] key `{other}`"),
                        })
                    }
                }
            }
            let ic = InitCond::new(
                x_prev.unwrap_or_else(|| DVector::zeros(n)),
                xhat_prev.unwrap_or_else(|| DVector::zeros(n)),
                u_prev.unwrap_or_else(|| DVector::zeros(m)),
            );
            if ic.x_prev.len() != n || ic.xhat_prev.len() != n || ic.u_prev.len() != m {
                return Err(FileError::Dimension(
                    "[init] vector lengths must match the model".into(),
                ));
            }
            Some(ic)
        }
    };

    let shocks = match shocks {
        None => None,
        Some(s) => {
            let mut seed: Option<u64> = None;
            let mut cov: Option<DMatrix<f64>> = None;
            for (key, value, line, col) in &s.entries {
                match key.as_str() {
                    "seed" => {
                        seed = Some(value.parse::<u64>().map_err(|_| FileError::Parse {
                            line: *line,
                            col: *col,
                            msg: format!("`{value}` is not a nonnegative integer seed"),
                        })?)
                    }
                    "cov" => {
                        let parsed = parse_matrix(value, *line, *col)?;
                        cov = Some(if parsed.nrows() == 1 && parsed.ncols() == m {
                            DMatrix::from_diagonal(&DVector::from_iterator(
                                m,
                                parsed.iter().copied(),
                            ))
                        } else {
                            parsed
                        });
                    }
                    other => {
                        return Err(FileError::Parse {
                            line: *line,
                            col: 1,
                            msg: format!("unknown [shocks] key `{other}`"),
                        })
                    }
                }
            }
            let seed = seed.ok_or(FileError::Invariant("[shocks] needs a seed".into()))?;
            let cov = cov.unwrap_or_else(|| DMatrix::identity(m, m));
            if cov.nrows() != m {
                return Err(FileError::Dimension(
                    "[shocks] covariance size must match the model inputs".into(),
                ));
            }
            Some(ShockSpec::new(cov, seed).map_err(core_to_file_error)?)
        }
    };

    Ok(ModelFile {
        model,
        init,
        shocks,
        source: path.to_path_buf(),
    })
}

fn parse_cm(section: &RawSection, tol: &Tolerances) -> Result<ModelCM, FileError> {
    let mut a = None;
    let mut ahat = None;
    let mut b = None;
    let mut r = None;
    for (key, value, line, col) in &section.entries {
        let m = parse_matrix(value, *line, *col)?;
        match key.as_str() {
            "A" => a = Some(m),
            "Ahat" => ahat = Some(m),
            "B" => b = Some(m),
            "R" => r = Some(m),
            other => {
                return Err(FileError::Parse {
                    line: *line,
                    col: 1,
                    msg: format!("unknown [matrices] key `{other}`"),
                })
            }
        }
    }
    let missing: Vec<&str> = [("A", &a), ("Ahat", &ahat), ("B", &b), ("R", &r)]
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(k, _)| *k)
        .collect();
    if !missing.is_empty() {
        return Err(FileError::Parse {
            line: section.line,
            col: 1,
            msg: format!("[matrices] is missing keys: {}", missing.join(", ")),
        });
    }
    ModelCM::new(a.unwrap(), ahat.unwrap(), b.unwrap(), r.unwrap(), tol)
        .map_err(core_to_file_error)
}

fn parse_general(section: &RawSection, tol: &Tolerances) -> Result<GeneralModel, FileError> {
    let mut h: Option<usize> = None;
    let mut l: Option<usize> = None;
    let mut b = None;
    let mut r = None;
    let mut coeffs: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
    for (key, value, line, col) in &section.entries {
        match key.as_str() {
            "h" | "l" => {
                let v = value.parse::<usize>().map_err(|_| FileError::Parse {
                    line: *line,
                    col: *col,
                    msg: format!("`{value}` is not a nonnegative integer"),
                })?;
                if key == "h" {
                    h = Some(v)
                } else {
                    l = Some(v)
                }
            }
            "B" => b = Some(parse_matrix(value, *line, *col)?),
            "R" => r = Some(parse_matrix(value, *line, *col)?),
            k if k.starts_with("A_") => {
                let parts: Vec<&str> = k[2..].split('_').collect();
                let bad = || FileError::Parse {
                    line: *line,
                    col: 1,
                    msg: format!("coefficient key `{k}` must look like A_<i>_<j>"),
                };
                if parts.len() != 2 {
                    return Err(bad());
                }
                let i = parts[0].parse::<usize>().map_err(|_| bad())?;
                let j = parts[1].parse::<usize>().map_err(|_| bad())?;
                coeffs.insert((i, j), parse_matrix(value, *line, *col)?);
            }
            other => {
                return Err(FileError::Parse {
                    line: *line,
                    col: 1,
                    msg: format!("unknown [general] key `{other}`"),
                })
            }
        }
    }
    let h = h.ok_or(FileError::Invariant("[general] needs h".into()))?;
    let l = l.ok_or(FileError::Invariant("[general] needs l".into()))?;
    let b = b.ok_or(FileError::Invariant("[general] needs B".into()))?;
    let n = b.nrows();
    let m = b.ncols();
    let r = r.unwrap_or_else(|| DMatrix::zeros(m, m));
    coeffs
        .entry((0, 0))
        .or_insert_with(|| DMatrix::identity(n, n));
    GeneralModel::new(h, l, coeffs, b, r, tol).map_err(core_to_file_error)
}

fn fmt_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        if i > 0 {
            out.push_str(" ; ");
        }
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            // shortest round-trip float formatting keeps emit/parse bit-exact
            let _ = write!(out, "{}", m[(i, j)]);
        }
    }
    out
}

fn fmt_vector(v: &DVector<f64>) -> String {
    let mut out = String::new();
    for (j, x) in v.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
    out
}

/// Serializes a model file in the same format that [`parse_model`] reads;
/// floats round-trip bit-for-bit.
pub fn emit(file: &ModelFile) -> String {
    let mut out = String::new();
    match &file.model {
        ParsedModel::Cm(m) => {
            out.push_str("[matrices]\n");
            let _ = writeln!(out, "A = {}", fmt_matrix(&m.a));
            let _ = writeln!(out, "Ahat = {}", fmt_matrix(&m.ahat));
            let _ = writeln!(out, "B = {}", fmt_matrix(&m.b));
            let _ = writeln!(out, "R = {}", fmt_matrix(&m.r));
        }
        ParsedModel::General(g) => {
            out.push_str("[general]\n");
            let _ = writeln!(out, "h = {}", g.h());
            let _ = writeln!(out, "l = {}", g.l());
            for (&(i, j), c) in g.coeffs() {
                let _ = writeln!(out, "A_{i}_{j} = {}", fmt_matrix(c));
            }
            let _ = writeln!(out, "B = {}", fmt_matrix(&g.b));
            let _ = writeln!(out, "R = {}", fmt_matrix(&g.r));
        }
    }
    if let Some(ic) = &file.init {
        out.push_str("\n[init]\n");
        let _ = writeln!(out, "x_prev = {}", fmt_vector(&ic.x_prev));
        let _ = writeln!(out, "xhat_prev = {}", fmt_vector(&ic.xhat_prev));
        let _ = writeln!(out, "u_prev = {}", fmt_vector(&ic.u_prev));
    }
    if let Some(s) = &file.shocks {
        out.push_str("\n[shocks]\n");
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "cov = {}", fmt_matrix(&s.covariance));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    const NK: &str = "\
[matrices]
A = 0 0 -0.2083333 ; 0 0 -0.1041667 ; 0 0 0.4166667
Ahat = 0.8333333 0.1897917 0 ; 0.4166667 1.0848958 0 ; 0.3333333 0.6204167 0
B = 0.8333333 0.1666667 -0.4166667 ; 0.4166667 -0.4166667 -0.2083333 ; 0.3333333 -0.3333333 0.8333333
R = 0.7 0 0 ; 0 0.7 0 ; 0 0 0
";

    #[test]
    fn parses_cm_model() {
        let mf = parse_model_str(NK, Path::new("nk.model"), &tol()).unwrap();
        match &mf.model {
            ParsedModel::Cm(m) => {
                assert_eq!(m.n(), 3);
                assert!((m.a[(0, 2)] + 0.2083333).abs() < 1e-12);
            }
            _ => panic!("expected [matrices] model"),
        }
    }

    #[test]
    fn missing_keys_are_listed() {
        let text = "[matrices]\nA = 1\n";
        let err = parse_model_str(text, Path::new("x"), &tol()).unwrap_err();
        match err {
            FileError::Parse { msg, .. } => {
                assert!(msg.contains("Ahat") && msg.contains("B") && msg.contains("R"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn taylor_general_file_matches_builder() {
        let text = "\
[general]
h = 2
l = 1
A_1_1 = 1
A_2_1 = -1
B = -1
R = 0
";
        let mf = parse_model_str(text, Path::new("taylor.model"), &tol()).unwrap();
        let built = rex_core::model::build_taylor(1.0, &tol()).unwrap();
        match &mf.model {
            ParsedModel::General(g) => assert_eq!(g, &built),
            _ => panic!("expected [general] model"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let text = format!(
            "{NK}\n[init]\nx_prev = 0.1 -0.25 0.725\nxhat_prev = 1e-3 2.5e-17 -0.33333333333333331\nu_prev = 0 0 0\n\n[shocks]\nseed = 42\ncov = 1 0.5 0.25\n"
        );
        let mf = parse_model_str(&text, Path::new("x"), &tol()).unwrap();
        let emitted = emit(&mf);
        let mf2 = parse_model_str(&emitted, Path::new("x"), &tol()).unwrap();
        match (&mf.model, &mf2.model) {
            (ParsedModel::Cm(a), ParsedModel::Cm(b)) => assert_eq!(a, b),
            _ => panic!("model kind changed in round trip"),
        }
        assert_eq!(mf.init, mf2.init);
        assert_eq!(mf.shocks, mf2.shocks);
    }

    #[test]
    fn zero_ahat_is_an_invariant_error() {
        let text = "\
[matrices]
A = 0.5
Ahat = 0
B = 1
R = 0
";
        let err = parse_model_str(text, Path::new("x"), &tol()).unwrap_err();
        assert!(matches!(err, FileError::Invariant(_)));
    }

    #[test]
    fn both_sections_rejected() {
        let text = "[matrices]\nA = 1\nAhat = 1\nB = 1\nR = 0\n[general]\nh = 1\nl = 0\nB = 1\n";
        let err = parse_model_str(text, Path::new("x"), &tol()).unwrap_err();
        assert!(matches!(err, FileError::Invariant(_)));
    }
}
