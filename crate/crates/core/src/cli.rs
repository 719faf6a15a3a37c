//! Command-line front end: input parsing, the report, and its renderings.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::embed::{
    embeddable, embeddable_2x2, Comparison, Criterion, EmbedOptions, EmbeddabilityVerdict,
};
use crate::expm::{brute_force_search, exp_residual};
use crate::matrix::{is_indecomposable, validate_stochastic, SpectrumClass, ValidatedMatrix};

pub const EXIT_EMBEDDABLE: i32 = 0;
pub const EXIT_NOT_EMBEDDABLE: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Human,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Path(PathBuf),
    Inline(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliRequest {
    pub source: Source,
    /// Inferred from the file extension or the first character when absent.
    pub format: Option<InputFormat>,
    pub witness: bool,
    pub all_branches: bool,
    pub tol: Tolerances,
    pub output: OutputFormat,
    pub seed: u64,
    /// Run the randomized generator search with this many samples.
    pub brute_force: Option<usize>,
}

impl CliRequest {
    pub fn inline(text: impl Into<String>) -> Self {
        Self {
            source: Source::Inline(text.into()),
            format: None,
            witness: false,
            all_branches: false,
            tol: Tolerances::DEFAULT,
            output: OutputFormat::Human,
            seed: 0,
            brute_force: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("entry ({row}, {col}) is not a number: {text:?}")]
    NonNumeric { row: usize, col: usize, text: String },
    #[error("matrix must be 2x2 or 3x3, got {rows}x{cols}")]
    BadDimension { rows: usize, cols: usize },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn infer_format(text: &str) -> InputFormat {
    if text.trim_start().starts_with('[') {
        InputFormat::Json
    } else {
        InputFormat::Csv
    }
}

/// Parses CSV (one row per line) or JSON (array of arrays) into a square 2x2
/// or 3x3 matrix of raw numbers. Row and column indices in errors are 1-based.
pub fn parse_matrix(text: &str, format: InputFormat) -> Result<Vec<Vec<f64>>, ParseError> {
    let rows = match format {
        InputFormat::Csv => parse_csv(text)?,
        InputFormat::Json => parse_json(text)?,
    };
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(ParseError::RaggedRows { row: i + 1, expected: cols, found: row.len() });
        }
    }
    if n != cols || !(2..=3).contains(&n) {
        return Err(ParseError::BadDimension { rows: n, cols });
    }
    Ok(rows)
}

fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>, ParseError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .enumerate()
                .map(|(j, cell)| {
                    let cell = cell.trim();
                    cell.parse::<f64>().map_err(|_| ParseError::NonNumeric {
                        row: i + 1,
                        col: j + 1,
                        text: cell.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

fn parse_json(text: &str) -> Result<Vec<Vec<f64>>, ParseError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    let rows = value
        .as_array()
        .ok_or_else(|| ParseError::Json("expected an array of rows".into()))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let row = row
                .as_array()
                .ok_or_else(|| ParseError::Json(format!("row {} is not an array", i + 1)))?;
            row.iter()
                .enumerate()
                .map(|(j, v)| {
                    v.as_f64().ok_or_else(|| ParseError::NonNumeric {
                        row: i + 1,
                        col: j + 1,
                        text: v.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub case: String,
    /// Real eigenvalues, or `[modulus, argument]` for a complex pair.
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonalizable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: String,
    pub holds: bool,
    /// 1-based `[row, col]` of the binding entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub branch: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub matrix: Vec<Vec<f64>>,
    pub h: f64,
    pub branch: i64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub samples: usize,
    pub seed: u64,
    pub found: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
}

/// Everything the CLI prints. Fields that were not reached stay `null`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub valid: bool,
    pub indecomposable: Option<bool>,
    pub mu: Option<Vec<f64>>,
    pub spectrum: Option<SpectrumReport>,
    pub goodman: Option<bool>,
    pub criterion: Option<CriterionReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchReport>,
    pub lambda_bound: Option<f64>,
    pub embeddable: Option<bool>,
    pub witnesses: Vec<WitnessReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    fn failed(message: String) -> Self {
        Report { error: Some(message), ..Default::default() }
    }

    /// 0 embeddable, 1 not embeddable, 2 input or validation error.
    pub fn exit_code(&self) -> i32 {
        match self.embeddable {
            Some(true) => EXIT_EMBEDDABLE,
            Some(false) => EXIT_NOT_EMBEDDABLE,
            None => EXIT_INPUT_ERROR,
        }
    }
}

fn criterion_report(criterion: Criterion, c: &Comparison) -> CriterionReport {
    CriterionReport {
        name: criterion.name().to_string(),
        lhs: c.lhs,
        rhs: c.rhs,
        relation: c.relation.symbol().to_string(),
        holds: c.holds,
        entry: c.entry.map(|(i, j)| [i + 1, j + 1]),
    }
}

fn spectrum_report(case: &SpectrumClass) -> SpectrumReport {
    SpectrumReport {
        case: case.name().to_string(),
        values: case.values(),
        diagonalizable: match case {
            SpectrumClass::CoincidingPositive { diagonalizable, .. } => Some(*diagonalizable),
            _ => None,
        },
    }
}

fn fill_from_verdict<const N: usize>(report: &mut Report, v: &EmbeddabilityVerdict<N>) {
    report.mu = v.mu.map(|m| m.components().to_vec());
    report.spectrum = Some(spectrum_report(&v.case));
    report.goodman = Some(v.goodman);
    report.criterion = Some(criterion_report(v.criterion, &v.comparison));
    report.branches = v
        .branches
        .iter()
        .map(|b| BranchReport {
            branch: b.branch.index(),
            lhs: b.comparison.lhs,
            rhs: b.comparison.rhs,
            relation: b.comparison.relation.symbol().to_string(),
            holds: b.comparison.holds,
        })
        .collect();
    report.lambda_bound = v.lambda_bound;
    report.embeddable = Some(v.embeddable);
    report.witnesses = v
        .witnesses
        .iter()
        .map(|w| WitnessReport {
            matrix: w.generator.rows(),
            h: w.scaling,
            branch: w.branch,
            residual: w.residual,
        })
        .collect();
    report.note = v.note.clone();
}

fn read_source(req: &CliRequest) -> Result<(String, InputFormat), ParseError> {
    match &req.source {
        Source::Inline(text) => Ok((text.clone(), req.format.unwrap_or_else(|| infer_format(text)))),
        Source::Path(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let by_extension = match path.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("json") => Some(InputFormat::Json),
                Some(ext) if ext.eq_ignore_ascii_case("csv") => Some(InputFormat::Csv),
                _ => None,
            };
            let format = req.format.or(by_extension).unwrap_or_else(|| infer_format(&text));
            Ok((text, format))
        }
    }
}

/// Runs one request end to end. The exit code depends on the verdict only.
pub fn run(req: &CliRequest) -> (i32, Report) {
    let report = build_report(req);
    (report.exit_code(), report)
}

fn build_report(req: &CliRequest) -> Report {
    if let Err((name, value)) = req.tol.check() {
        return Report::failed(format!("tolerance {name} must be positive, got {value}"));
    }
    let rows = match read_source(req).and_then(|(text, format)| parse_matrix(&text, format)) {
        Ok(rows) => rows,
        Err(e) => return Report::failed(e.to_string()),
    };
    log::debug!("parsed {}x{} matrix", rows.len(), rows.len());
    let validated = match validate_stochastic(&rows, &req.tol) {
        Ok(v) => v,
        Err(e) => return Report::failed(e.to_string()),
    };
    let opts = EmbedOptions {
        witness: req.witness || req.all_branches,
        all_branches: req.all_branches,
        tol: req.tol,
    };
    let mut report = Report { valid: true, ..Default::default() };
    match validated {
        ValidatedMatrix::Two(p) => {
            report.indecomposable = Some(is_indecomposable(&p));
            fill_from_verdict(&mut report, &embeddable_2x2(&p, &opts));
        }
        ValidatedMatrix::Three(p) => {
            report.indecomposable = Some(is_indecomposable(&p));
            match embeddable(&p, &opts) {
                Ok(v) => {
                    log::debug!("case {} decided by {}", v.case.name(), v.criterion);
                    fill_from_verdict(&mut report, &v);
                    if let (Some(samples), Some(mu)) = (req.brute_force, v.mu) {
                        let found = brute_force_search(&p, &mu, samples, req.seed);
                        report.search = Some(SearchReport {
                            samples,
                            seed: req.seed,
                            found: found.is_some(),
                            witness: found.map(|g| WitnessReport {
                                matrix: g.rows(),
                                h: 1.0,
                                branch: 0,
                                residual: exp_residual(g.entries(), p.entries())
                                    .unwrap_or(f64::INFINITY),
                            }),
                        });
                    }
                }
                // decomposable chains land here and exit with the input-error code
                Err(e) => report.error = Some(e.to_string()),
            }
        }
    }
    report
}

/// `%g`-style rendering with six significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exp}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let fixed = format!("{x:.decimals$}");
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_g(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn shown_symbol(c: &CriterionReport) -> &'static str {
    let holds = c.holds;
    match (c.relation.as_str(), holds) {
        ("<", true) | (">=", false) => "<",
        ("<", false) | (">=", true) => ">=",
        (">", true) | ("<=", false) => ">",
        _ => "<=",
    }
}

fn criterion_line(c: &CriterionReport) -> String {
    let (l, r, op) = (fmt_g(c.lhs), fmt_g(c.rhs), shown_symbol(c));
    let entry = c.entry.map(|[i, j]| (i, j));
    match c.name.as_str() {
        "kendall" => format!("Kendall: trace {l} {op} {r}"),
        "goodman" => match entry {
            Some((i, _)) => format!("Goodman: p{i}{i} = {l} {op} {r} = det P"),
            None => format!("Goodman: det P = {l} {op} {r}"),
        },
        "rank-one-structure" => {
            format!("rank-one structure: deviation {l} {op} {r} (not diagonalizable)")
        }
        "coinciding-negative" => {
            format!("coinciding negative: pi/(-log|lambda|) = {l} {op} {r} = H_max(mu)")
        }
        "positive-spectrum" | "complex-spectrum" => {
            let (i, j) = entry.unwrap_or((0, 0));
            let label = if c.name == "positive-spectrum" { "positive spectrum" } else { "complex pair" };
            format!("{label}: p{i}{j} = {l} {op} {r} = mu{j} * threshold")
        }
        "negative-real-eigenvalue" => format!("negative real eigenvalue: lambda2 = {l} {op} {r}"),
        "unit-modulus-eigenvalue" => format!("unit-modulus eigenvalue: |lambda| = {l} {op} {r}"),
        other => format!("{other}: {l} {op} {r}"),
    }
}

fn write_matrix(out: &mut String, m: &[Vec<f64>]) {
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| format!("{:>12}", fmt_g(*v))).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
}

pub fn render_human(r: &Report) -> String {
    let mut out = String::new();
    if let Some(err) = &r.error {
        if r.valid {
            let _ = writeln!(out, "valid: yes");
            if let Some(ind) = r.indecomposable {
                let _ = writeln!(out, "indecomposable: {}", if ind { "yes" } else { "no" });
            }
        }
        let _ = writeln!(out, "error: {err}");
        return out;
    }
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(out, "valid: yes");
    if let Some(ind) = r.indecomposable {
        let _ = writeln!(out, "indecomposable: {}", yes_no(ind));
    }
    match &r.mu {
        Some(mu) => {
            let _ = writeln!(out, "stationary distribution: {}", fmt_list(mu));
        }
        None => {
            let _ = writeln!(out, "stationary distribution: not unique");
        }
    }
    if let Some(s) = &r.spectrum {
        let values = if s.case == "complex-pair" {
            format!("modulus {}, argument {}", fmt_g(s.values[0]), fmt_g(s.values[1]))
        } else {
            fmt_list(&s.values)
        };
        let extra = match s.diagonalizable {
            Some(true) => ", diagonalizable",
            Some(false) => ", not diagonalizable",
            None => "",
        };
        let _ = writeln!(out, "spectrum: {} {}{}", s.case, values, extra);
    }
    if let Some(g) = r.goodman {
        let _ = writeln!(out, "goodman precheck: {}", if g { "pass" } else { "fail" });
    }
    if let Some(c) = &r.criterion {
        let _ = writeln!(out, "{}", criterion_line(c));
    }
    for b in &r.branches {
        let name = if b.branch == 0 { "principal" } else { "shifted" };
        let _ = writeln!(
            out,
            "  {name} branch: binding {} {} {} ({})",
            fmt_g(b.lhs),
            b.relation,
            fmt_g(b.rhs),
            if b.holds { "holds" } else { "fails" }
        );
    }
    if let Some(lb) = r.lambda_bound {
        let _ = writeln!(out, "lambda lower bound: {}", fmt_g(lb));
    }
    if let Some(e) = r.embeddable {
        let _ = writeln!(out, "embeddable: {}", yes_no(e));
    }
    for w in &r.witnesses {
        let _ = writeln!(
            out,
            "witness generator (branch {}, h = {}, residual {}):",
            w.branch,
            fmt_g(w.h),
            fmt_g(w.residual)
        );
        write_matrix(&mut out, &w.matrix);
    }
    if let Some(s) = &r.search {
        let _ = writeln!(
            out,
            "brute-force search ({} samples, seed {}): {}",
            s.samples,
            s.seed,
            if s.found { "witness found" } else { "no witness" }
        );
        if let Some(w) = &s.witness {
            let _ = writeln!(out, "  residual {}", fmt_g(w.residual));
            write_matrix(&mut out, &w.matrix);
        }
    }
    if let Some(note) = &r.note {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

/// JSON with shortest round-trip float formatting (up to 17 significant digits).
pub fn render_json(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("report serializes")
}

pub fn render(r: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Human => render_human(r),
        OutputFormat::Json => render_json(r) + "\n",
    }
}
