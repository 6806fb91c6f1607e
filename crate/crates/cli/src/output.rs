use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use krein_core::sweep::SweepResult;

use crate::args::{Format, OutputArgs};
use crate::error::{CliError, CliResult};

/// `steps` points from `min` to `max` inclusive; a single point when the
/// endpoints coincide.
pub fn linspace(name: &str, min: f64, max: f64, steps: usize) -> CliResult<Vec<f64>> {
    if !(min.is_finite() && max.is_finite()) {
        return Err(CliError::Usage(format!(
            "--{name}-min/--{name}-max must be finite"
        )));
    }
    if min == max {
        return Ok(vec![min]);
    }
    if steps < 2 {
        return Err(CliError::Usage(format!(
            "--{name}-steps must be at least 2 for a range"
        )));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            if k + 1 == steps {
                max
            } else {
                min + (max - min) * (k as f64 / last)
            }
        })
        .collect())
}

pub fn positive_count(name: &str, n: usize) -> CliResult<usize> {
    if n == 0 {
        return Err(CliError::Usage(format!("--{name} must be at least 1")));
    }
    Ok(n)
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs `write` against the `--out` file or standard output.
pub fn with_sink<F>(out: Option<&Path>, write: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    match out {
        Some(path) => {
            let file = File::create(path).map_err(io_error(path))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(io_error(path))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush().map_err(io_error(Path::new("<stdout>")))
        }
    }
}

pub fn write_text(out: Option<&Path>, text: &str) -> CliResult<()> {
    with_sink(out, |w| {
        w.write_all(text.as_bytes())
            .map_err(io_error(out.unwrap_or(Path::new("<stdout>"))))
    })
}

/// Writes a sweep in the requested format. Tracking diagnostics are also
/// reported on standard error.
pub fn emit_sweep(
    result: &SweepResult,
    output: &OutputArgs,
    upper_half_only: bool,
) -> CliResult<()> {
    for d in &result.diagnostics {
        eprintln!("krein-spectra: warning: {d}");
    }
    let text = match output.format {
        Format::Csv => result.to_csv_string(upper_half_only)?,
        Format::Json => result.to_json()? + "\n",
    };
    write_text(output.out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(linspace("nu", -2.0, 0.0, 3).unwrap(), vec![-2.0, -1.0, 0.0]);
        assert_eq!(linspace("c", 0.0, 0.0, 50).unwrap(), vec![0.0]);
        let g = linspace("b", 1.0, 8.0, 141).unwrap();
        assert_eq!((g[0], g[140], g.len()), (1.0, 8.0, 141));
        assert!(linspace("b", 1.0, 2.0, 1).is_err());
        assert!(linspace("b", f64::NAN, 2.0, 4).is_err());
    }
}
