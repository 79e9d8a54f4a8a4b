use std::path::Path;

use tms_core::dephasing::{CurveKind, CurvePoint, DephasingCurve};

use crate::error::{CliError, CliResult};

const VALUE_COLUMNS: [&str; 3] = ["value", "nk", "g2"];

/// Reads a `tau_s,value[,stderr]` trace. The value column may also be named
/// `nk` or `g2`, as written by the sweep commands.
pub fn read_curve(path: &Path, kind: CurveKind) -> CliResult<DephasingCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(CliError::Usage(format!("{}: {e}", path.display()))),
        None => return Err(CliError::Usage(format!("{}: empty file", path.display()))),
    };
    let fields: Vec<&str> = header.iter().collect();
    let header_ok = matches!(fields.len(), 2 | 3)
        && fields[0] == "tau_s"
        && VALUE_COLUMNS.contains(&fields[1])
        && (fields.len() == 2 || fields[2] == "stderr");
    if !header_ok {
        return Err(CliError::Usage(format!(
            "{} line 1: expected header tau_s,value[,stderr], found {:?}",
            path.display(),
            fields.join(",")
        )));
    }
    let width = fields.len();
    let mut points = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| CliError::Usage(format!("{} line {line}: {msg}", path.display()));
        if rec.len() != width {
            return Err(bad(format!("expected {width} fields, found {}", rec.len())));
        }
        let mut nums = [0.0; 3];
        for (i, cell) in rec.iter().enumerate() {
            nums[i] = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("not a finite number: {cell:?}")))?;
        }
        points.push(CurvePoint {
            tau: nums[0],
            value: nums[1],
            stderr: (width == 3).then_some(nums[2]),
        });
    }
    DephasingCurve::new(kind, points).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
