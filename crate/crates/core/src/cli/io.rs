//! Field files, JSON reports and plot scripts.
//!
//! A field file is plain text: the domain fingerprint on the first line, then
//! one nodal value per line (x fastest). Values are written in the shortest
//! form that parses back to the same `f64`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Domain, GridField};

pub fn write_field(path: &Path, field: &GridField) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", field.domain().fingerprint())?;
    for v in field.values() {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_field(text: &str) -> Result<GridField> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Data("empty field file".into()))?;
    let domain = Domain::parse_fingerprint(header)?;
    let values = lines
        .enumerate()
        .map(|(k, l)| {
            l.parse::<f64>()
                .map_err(|_| Error::Data(format!("value {} is not a number: '{l}'", k + 1)))
        })
        .collect::<Result<Vec<f64>>>()?;
    GridField::new(domain, values)
}

pub fn read_field(path: &Path) -> Result<GridField> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_field(&text).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Gnuplot script for the columns of `series.csv`.
pub fn gnuplot_script(csv_name: &str, title: &str) -> String {
    format!(
        "# gnuplot -p plot.gp\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 't'\n\
         set title '{title}'\n\
         set multiplot layout 2,1\n\
         set logscale y\n\
         plot '{csv_name}' using 1:2 with lines title 'E', \\\n     '' using 1:5 with lines title 'L'\n\
         unset logscale y\n\
         plot '{csv_name}' using 1:3 with lines title 'I', \\\n     '' using 1:7 with lines title 'grad_sq'\n\
         unset multiplot\n"
    )
}
