//! File helpers shared by every reader and writer.
//!
//! Any path ending in `.gz` is transparently (de)compressed with gzip.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext == "gz")
}

pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if is_gzip(path) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Iterates `(line_number, line)` pairs, 1-based, with I/O errors attributed to `path`.
pub fn read_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let reader = open_reader(path)?;
    let owned = path.to_path_buf();
    Ok(reader
        .lines()
        .enumerate()
        .map(move |(i, line)| line.map(|l| (i + 1, l)).map_err(|e| Error::io(&owned, e))))
}

/// Reads a one-entry-per-line file, skipping blank lines and `#` comments.
pub fn read_entries(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in read_lines(path)? {
        let (_, line) = item?;
        if let Some(entry) = clean_entry(&line) {
            out.push(entry.to_string());
        }
    }
    Ok(out)
}

pub(crate) fn clean_entry(line: &str) -> Option<&str> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        None
    } else {
        Some(trimmed)
    }
}

/// Writer that only appears at its final path once [`AtomicWriter::finish`] succeeds.
///
/// Output goes to `<path>.partial`; if the writer is dropped without finishing
/// the partial file is removed.
pub struct AtomicWriter {
    inner: Option<Box<dyn Write>>,
    partial: PathBuf,
    target: PathBuf,
}

impl AtomicWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut partial = path.as_os_str().to_owned();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&partial).map_err(|e| Error::io(&partial, e))?;
        let buffered = BufWriter::new(file);
        let inner: Box<dyn Write> = if is_gzip(path) {
            Box::new(GzEncoder::new(buffered, Compression::default()))
        } else {
            Box::new(buffered)
        };
        Ok(AtomicWriter {
            inner: Some(inner),
            partial,
            target: path.to_path_buf(),
        })
    }

    pub fn write_all(&mut self, bytes: &[u8]) -> Result<()> {
        let inner = self.inner.as_mut().expect("writer used after finish");
        inner.write_all(bytes).map_err(|e| Error::io(&self.partial, e))
    }

    pub fn finish(mut self) -> Result<()> {
        let mut inner = self.inner.take().expect("writer finished twice");
        inner.flush().map_err(|e| Error::io(&self.partial, e))?;
        // dropping the boxed encoder writes the gzip trailer
        drop(inner);
        fs::rename(&self.partial, &self.target).map_err(|e| Error::io(&self.target, e))
    }
}

impl Drop for AtomicWriter {
    fn drop(&mut self) {
        if self.inner.take().is_some() {
            let _ = fs::remove_file(&self.partial);
        }
    }
}

/// Hex SHA-256 of the (decompressed) content at `path`.
pub fn content_hash(path: &Path) -> Result<String> {
    let mut reader = open_reader(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
