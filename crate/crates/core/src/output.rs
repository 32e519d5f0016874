//! CSV conventions shared by every report: RFC 4180, UTF-8, `.` decimal
//! separator, nine significant digits, optional `#` timestamp line.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

/// Formats `x` with nine significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.8e}")
}

/// Writes the `# generated-unix <seconds>` line that precedes a CSV table.
pub fn write_timestamp<W: Write>(w: &mut W) -> std::io::Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(w, "# generated-unix {secs}")
}
