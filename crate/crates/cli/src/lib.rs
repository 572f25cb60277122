//! The `cpv` command-line tool: instance and protocol files, command
//! dispatch, and JSON reports.
//!
//! Exit codes: 0 when the property holds or the command succeeded, 1 when
//! it fails or nonexistence is proven, 2 on input or resource errors.

pub mod app;
pub mod doc;
pub mod error;
pub mod files;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use crate::app::{execute, Cli};

/// Parses `args` (program name first), runs the command and writes its
/// report. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let sink: &mut dyn Write = if shown { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return if shown { 0 } else { 2 };
        }
    };
    let (code, report) = match execute(&cli.command) {
        Ok(outcome) => (outcome.code, outcome.report),
        Err(e) => {
            let _ = writeln!(stderr, "cpv: {e}");
            (2, json!({ "error": e.to_json() }))
        }
    };
    let text = if cli.pretty {
        report::pretty(&report)
    } else {
        let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
        s.push('\n');
        s
    };
    let _ = stdout.write_all(text.as_bytes());
    code
}
