//! Benchmark harness: classifies a corpus of moded programs and
//! compares the results against an expected table.
//!
//! Each corpus program is classified along three columns:
//!
//! - **SM** — is the program simply moded?
//! - **IC** — is it input consistent?  Blank when SM fails, since the
//!   check builds on the moding discipline.
//! - **L** — do delay-respecting and input-consuming scheduling select
//!   the same atoms (the head-shape conditions of
//!   [`check_selection_equivalence`])?  Blank when a prerequisite (SM,
//!   IC, or simple delay declarations) fails.
//!
//! The expected table is CSV with columns `name,moding,SM,IC,L`.  The
//! `name` column names the corpus file (`<dir>/<name>.icp`); `moding`
//! is a human-readable mode string and may itself contain commas (the
//! line is split from both ends, so only the other columns must be
//! comma-free).  Column values are `y`, `n`, or `-` for blank; an `SM`
//! value of `skipped` marks a row whose source is not bundled — it is
//! listed but not compared.  Blank lines, `#` comments, and an
//! optional `name,moding,SM,IC,L` header line are ignored.
//!
//! Programs are classified in parallel; the report order is
//! deterministic (sorted by name), and any mismatch, missing file, or
//! unreadable file makes the overall run fail.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::analysis::{
    check_input_consistent, check_selection_equivalence, check_simple_delays, check_simply_moded,
};
use crate::frontend::{parse_program, Program};

/// Why the harness could not produce a report at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    /// A file the harness itself needs could not be read.
    #[error("cannot read {path}: {message}")]
    Io {
        /// The offending path.
        path: String,
        /// The operating system's complaint.
        message: String,
    },
    /// The expected table is malformed.
    #[error("expected table, line {line}: {message}")]
    Table {
        /// 1-based line number in the table file.
        line: usize,
        /// What was wrong with the line.
        message: String,
    },
}

/// One classification column value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Col {
    /// The property holds (`y`).
    Yes,
    /// The property fails (`n`).
    No,
    /// The column does not apply (`-`).
    Blank,
}

impl Col {
    /// Parses `y`, `n`, or `-`.
    pub fn parse(s: &str) -> Option<Col> {
        match s {
            "y" => Some(Col::Yes),
            "n" => Some(Col::No),
            "-" => Some(Col::Blank),
            _ => None,
        }
    }
}

impl fmt::Display for Col {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Col::Yes => "y",
            Col::No => "n",
            Col::Blank => "-",
        })
    }
}

/// The SM/IC/L classification of one program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Columns {
    /// Simply moded?
    pub sm: Col,
    /// Input consistent? Blank when SM fails.
    pub ic: Col,
    /// Selection equivalence? Blank when SM, IC, or simple delays fail.
    pub l: Col,
}

impl fmt::Display for Columns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.sm, self.ic, self.l)
    }
}

/// Classifies a parsed program along the three columns.
///
/// # Examples
///
/// ```
/// use icp_core::bench::{classify_program, Col};
/// use icp_core::frontend::parse_program;
///
/// let program = parse_program(
///     ":- mode append(in,in,out).\n\
///      :- delay append(Xs,_,_) until nonvar(Xs).\n\
///      append([],Ys,Ys).\n\
///      append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n",
///     "append",
/// )
/// .unwrap();
/// let cols = classify_program(&program);
/// assert_eq!((cols.sm, cols.ic, cols.l), (Col::Yes, Col::Yes, Col::Yes));
/// ```
pub fn classify_program(program: &Program) -> Columns {
    if !check_simply_moded(program).holds {
        return Columns { sm: Col::No, ic: Col::Blank, l: Col::Blank };
    }
    if !check_input_consistent(program).holds {
        return Columns { sm: Col::Yes, ic: Col::No, l: Col::Blank };
    }
    if !check_simple_delays(program).simple {
        return Columns { sm: Col::Yes, ic: Col::Yes, l: Col::Blank };
    }
    let l = if check_selection_equivalence(program).holds() { Col::Yes } else { Col::No };
    Columns { sm: Col::Yes, ic: Col::Yes, l }
}

/// One parsed line of the expected table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedRow {
    /// Corpus file stem.
    pub name: String,
    /// Human-readable moding, carried through to the report.
    pub moding: String,
    /// Expected columns, or `None` for a `skipped` row.
    pub expected: Option<Columns>,
}

/// Parses the expected table (see the module docs for the format).
pub fn parse_expected_table(text: &str) -> Result<Vec<ExpectedRow>, BenchError> {
    let mut rows: Vec<ExpectedRow> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 5 {
            return Err(BenchError::Table {
                line,
                message: format!("expected 5 columns (name,moding,SM,IC,L), found {}", fields.len()),
            });
        }
        let name = fields[0];
        let moding = fields[1..fields.len() - 3].join(",");
        let tail = &fields[fields.len() - 3..];
        if line == 1 && name.eq_ignore_ascii_case("name") && moding.eq_ignore_ascii_case("moding") {
            continue;
        }
        if rows.iter().any(|r| r.name == name) {
            return Err(BenchError::Table { line, message: format!("duplicate row for {name}") });
        }
        let expected = if tail[0] == "skipped" {
            None
        } else {
            let mut cols = [Col::Blank; 3];
            for (slot, field) in cols.iter_mut().zip(tail) {
                *slot = Col::parse(field).ok_or_else(|| BenchError::Table {
                    line,
                    message: format!("bad column value {field:?} (want y, n, or -)"),
                })?;
            }
            Some(Columns { sm: cols[0], ic: cols[1], l: cols[2] })
        };
        rows.push(ExpectedRow { name: name.to_string(), moding, expected });
    }
    Ok(rows)
}

/// What the harness found for one table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowOutcome {
    /// The program parsed and was classified.
    Classified(Columns),
    /// The table marks the row `skipped`; nothing was compared.
    Skipped,
    /// The corpus has no file for the row.
    Missing,
    /// The file exists but could not be read or parsed.
    Unreadable(String),
}

/// One row of the benchmark report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    /// Corpus file stem.
    pub name: String,
    /// Moding string from the table.
    pub moding: String,
    /// Expected columns (`None` for skipped rows).
    pub expected: Option<Columns>,
    /// What the harness computed.
    pub outcome: RowOutcome,
    /// True when expected and computed agree (skipped rows pass;
    /// missing or unreadable files fail).
    pub matches: bool,
}

/// A full benchmark run, rows sorted by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchReport {
    /// One row per table line.
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// True when every row matches.
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(|r| r.matches)
    }

    /// The rows that failed to match.
    pub fn mismatches(&self) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| !r.matches).collect()
    }

    /// Number of rows actually compared (not skipped).
    pub fn compared(&self) -> usize {
        self.rows.iter().filter(|r| !matches!(r.outcome, RowOutcome::Skipped)).count()
    }

    /// Renders the report as an aligned text table with a summary line.
    pub fn render(&self) -> String {
        let mut widths = ["name".len(), "moding".len(), "expected".len(), "computed".len()];
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                let expected = match &r.expected {
                    Some(c) => c.to_string(),
                    None => "skipped".to_string(),
                };
                let (computed, status) = match &r.outcome {
                    RowOutcome::Classified(c) => {
                        (c.to_string(), if r.matches { "ok" } else { "MISMATCH" }.to_string())
                    }
                    RowOutcome::Skipped => ("-".to_string(), "skipped".to_string()),
                    RowOutcome::Missing => ("-".to_string(), "MISSING".to_string()),
                    RowOutcome::Unreadable(why) => ("-".to_string(), format!("UNREADABLE: {why}")),
                };
                [r.name.clone(), r.moding.clone(), expected, computed, status]
            })
            .collect();
        for row in &cells {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let header = ["name", "moding", "expected", "computed", "status"];
        for (i, h) in header.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i < widths.len() {
                out.push_str(&format!("{h:<width$}", width = widths[i]));
            } else {
                out.push_str(h);
            }
        }
        out.push('\n');
        for row in &cells {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                if i < widths.len() {
                    out.push_str(&format!("{cell:<width$}", width = widths[i]));
                } else {
                    out.push_str(cell);
                }
            }
            out.push('\n');
        }
        let mismatches = self.rows.len() - self.rows.iter().filter(|r| r.matches).count();
        let skipped = self.rows.len() - self.compared();
        out.push_str(&format!(
            "{} rows: {} compared, {} skipped, {} mismatched\n",
            self.rows.len(),
            self.compared(),
            skipped,
            mismatches
        ));
        out
    }
}

/// Classifies every program named by the expected table against the
/// corpus directory.
///
/// Programs are processed in parallel; the returned rows are sorted by
/// name.  A missing or unreadable corpus file marks its row as failing
/// rather than aborting the run, so one bad file cannot hide the rest
/// of the report.
pub fn run_benchmarks(corpus_dir: &Path, expected: &Path) -> Result<BenchReport, BenchError> {
    let text = fs::read_to_string(expected).map_err(|e| BenchError::Io {
        path: expected.display().to_string(),
        message: e.to_string(),
    })?;
    let mut table = parse_expected_table(&text)?;
    table.sort_by(|a, b| a.name.cmp(&b.name));

    let mut outcomes: Vec<Option<RowOutcome>> = vec![None; table.len()];
    let jobs: Vec<(usize, &ExpectedRow)> = table
        .iter()
        .enumerate()
        .filter(|(_, row)| row.expected.is_some())
        .collect();
    if !jobs.is_empty() {
        let threads = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(jobs.len());
        let chunk_size = jobs.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in jobs.chunks(chunk_size) {
                handles.push(scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(i, row)| (*i, classify_file(corpus_dir, &row.name)))
                        .collect::<Vec<_>>()
                }));
            }
            for handle in handles {
                for (i, outcome) in handle.join().expect("classification thread panicked") {
                    outcomes[i] = Some(outcome);
                }
            }
        });
    }

    let rows = table
        .into_iter()
        .zip(outcomes)
        .map(|(row, outcome)| {
            let outcome = outcome.unwrap_or(RowOutcome::Skipped);
            let matches = match (&row.expected, &outcome) {
                (None, RowOutcome::Skipped) => true,
                (Some(want), RowOutcome::Classified(got)) => want == got,
                _ => false,
            };
            BenchRow { name: row.name, moding: row.moding, expected: row.expected, outcome, matches }
        })
        .collect();
    Ok(BenchReport { rows })
}

/// Reads and classifies one corpus file.
fn classify_file(corpus_dir: &Path, name: &str) -> RowOutcome {
    let path = corpus_dir.join(format!("{name}.icp"));
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return RowOutcome::Missing,
        Err(e) => return RowOutcome::Unreadable(e.to_string()),
    };
    match parse_program(&text, name) {
        Ok(program) => RowOutcome::Classified(classify_program(&program)),
        Err(e) => RowOutcome::Unreadable(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_values_render_as_they_parse() {
        for (s, c) in [("y", Col::Yes), ("n", Col::No), ("-", Col::Blank)] {
            assert_eq!(Col::parse(s), Some(c));
            assert_eq!(c.to_string(), s);
        }
        assert_eq!(Col::parse("yes"), None);
        let cols = Columns { sm: Col::Yes, ic: Col::No, l: Col::Blank };
        assert_eq!(cols.to_string(), "y,n,-");
    }

    #[test]
    fn the_expected_table_tolerates_headers_comments_and_moded_commas() {
        let text = "name,moding,SM,IC,L\n\
                    # transcribed rows\n\
                    \n\
                    append_iio,append(in,in,out),y,y,y\n\
                    sum_ooi,sum(out,out,in),skipped,-,-\n";
        let rows = parse_expected_table(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name, "append_iio");
        assert_eq!(rows[0].moding, "append(in,in,out)");
        assert_eq!(
            rows[0].expected,
            Some(Columns { sm: Col::Yes, ic: Col::Yes, l: Col::Yes })
        );
        assert_eq!(rows[1].name, "sum_ooi");
        assert_eq!(rows[1].expected, None);
    }

    #[test]
    fn malformed_tables_are_rejected_with_line_numbers() {
        let short = parse_expected_table("a,b,c\n").unwrap_err();
        assert!(matches!(short, BenchError::Table { line: 1, .. }), "got {short}");

        let bad = parse_expected_table("p,p(in),y,maybe,n\n").unwrap_err();
        match bad {
            BenchError::Table { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("maybe"), "unexpected message: {message}");
            }
            other => panic!("expected a table error, got {other}"),
        }

        let dup = parse_expected_table("p,p(in),y,y,y\np,p(in),y,y,n\n").unwrap_err();
        assert!(matches!(dup, BenchError::Table { line: 2, .. }), "got {dup}");
    }

    #[test]
    fn classification_blanks_dependent_columns() {
        // Not simply moded: the body output position repeats a head
        // input variable.
        let not_sm = parse_program(
            ":- mode p(in,out).\n:- mode q(in,out).\np(X,Y) :- q(X,X).\n",
            "not_sm",
        )
        .unwrap();
        assert_eq!(
            classify_program(&not_sm),
            Columns { sm: Col::No, ic: Col::Blank, l: Col::Blank }
        );

        // Simply moded but not input consistent: a nested head input.
        let not_ic = parse_program(
            ":- mode ordered(in).\nordered([]).\nordered([X]).\nordered([X,Y|Xs]) :- ordered([Y|Xs]).\n",
            "not_ic",
        )
        .unwrap();
        assert_eq!(
            classify_program(&not_ic),
            Columns { sm: Col::Yes, ic: Col::No, l: Col::Blank }
        );

        // A ground delay condition is not simple, so L is blank.
        let ground_delay = parse_program(
            ":- mode p(in).\n:- delay p(X) until ground(X).\np([]).\n",
            "ground_delay",
        )
        .unwrap();
        assert_eq!(
            classify_program(&ground_delay),
            Columns { sm: Col::Yes, ic: Col::Yes, l: Col::Blank }
        );

        // Everything applies, but an unguarded input holds a non-variable.
        let l_no = parse_program(
            ":- mode append(in,in,out).\n\
             append([],Ys,Ys).\n\
             append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n",
            "l_no",
        )
        .unwrap();
        assert_eq!(
            classify_program(&l_no),
            Columns { sm: Col::Yes, ic: Col::Yes, l: Col::No }
        );
    }

    #[test]
    fn the_harness_reports_matches_misses_and_skips() {
        let dir = std::env::temp_dir().join(format!("icp-bench-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(
            dir.join("append_iio.icp"),
            ":- mode append(in,in,out).\n\
             :- delay append(Xs,_,_) until nonvar(Xs).\n\
             append([],Ys,Ys).\n\
             append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n",
        )
        .unwrap();
        fs::write(dir.join("broken.icp"), "p(.\n").unwrap();
        let table = dir.join("expected.csv");
        fs::write(
            &table,
            "zeta,z(in),y,y,y\n\
             append_iio,append(in,in,out),y,y,y\n\
             broken,broken(in),y,n,-\n\
             ghost,ghost(in),skipped,-,-\n",
        )
        .unwrap();

        let report = run_benchmarks(&dir, &table).unwrap();
        let _ = fs::remove_dir_all(&dir);

        let names: Vec<&str> = report.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["append_iio", "broken", "ghost", "zeta"], "rows must sort by name");

        assert!(report.rows[0].matches);
        assert_eq!(
            report.rows[0].outcome,
            RowOutcome::Classified(Columns { sm: Col::Yes, ic: Col::Yes, l: Col::Yes })
        );
        assert!(!report.rows[1].matches);
        assert!(matches!(report.rows[1].outcome, RowOutcome::Unreadable(_)));
        assert!(report.rows[2].matches, "skipped rows are not compared");
        assert_eq!(report.rows[2].outcome, RowOutcome::Skipped);
        assert!(!report.rows[3].matches);
        assert_eq!(report.rows[3].outcome, RowOutcome::Missing);

        assert!(!report.all_match());
        assert_eq!(report.mismatches().len(), 2);
        assert_eq!(report.compared(), 3);

        let rendered = report.render();
        assert!(rendered.contains("MISSING"), "render lists the missing row:\n{rendered}");
        assert!(rendered.contains("4 rows: 3 compared, 1 skipped, 2 mismatched"), "{rendered}");
    }

    #[test]
    fn a_missing_expected_table_is_an_io_error() {
        let bogus = Path::new("/nonexistent/expected.csv");
        match run_benchmarks(Path::new("/nonexistent"), bogus) {
            Err(BenchError::Io { path, .. }) => assert!(path.contains("expected.csv")),
            other => panic!("expected an io error, got {other:?}"),
        }
    }
}
