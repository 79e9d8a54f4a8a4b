use std::fs;
use std::path::Path;

use tms_core::dephasing::DephasingCurve;

use crate::error::CliResult;

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// `tau_s,<value_column>[,stderr]`.
pub fn curve_csv(curve: &DephasingCurve, value_column: &str) -> String {
    let with_se = curve.has_stderr();
    let mut header = vec!["tau_s", value_column];
    if with_se {
        header.push("stderr");
    }
    table(
        &header,
        curve.points().iter().map(|p| {
            let mut row = vec![p.tau, p.value];
            if let Some(se) = p.stderr.filter(|_| with_se) {
                row.push(se);
            }
            row
        }),
    )
}

pub fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(crate::error::CliError::runtime)?;
    s.push('\n');
    Ok(s)
}
