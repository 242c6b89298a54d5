//! CSV files led by a config-hash comment line.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Creates `dir/name` and writes the `# config-hash:` line.
pub fn create(dir: &Path, name: &str, hash: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config-hash: {hash}").map_err(|e| io_err(&path, e))?;
    Ok((path, w))
}

/// Writes a CSV with a header row after the hash line.
pub fn write_table<R>(dir: &Path, name: &str, hash: &str, header: &[&str], rows: R) -> Result<PathBuf, CliError>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let (path, w) = create(dir, name, hash)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header).map_err(|e| io_err(&path, e))?;
    for row in rows {
        csv.write_record(&row).map_err(|e| io_err(&path, e))?;
    }
    csv.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub(crate) fn finish(path: &Path, mut w: impl Write) -> Result<(), CliError> {
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads a CSV written by [`write_table`], skipping the hash line.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(|e| io_err(path, e)))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}
