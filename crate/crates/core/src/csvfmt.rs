//! Number formatting and small CSV helpers shared by the exporters.

use std::io;

/// Formats a float with 17 significant digits in scientific notation.
///
/// This round-trips every finite `f64` and does not depend on locale.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header and numeric rows as CSV with `\n` line endings.
pub fn write_rows<W, I, R>(out: W, header: &[&str], rows: I) -> io::Result<()>
where
    W: io::Write,
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header).map_err(io::Error::other)?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|v| fmt_f64(*v)))
            .map_err(io::Error::other)?;
    }
    w.flush()
}
