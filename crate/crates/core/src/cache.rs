//! Text cache of prime coefficients `a_f(p)`, one file per `(k, P)`.
//!
//! Header lines are followed by a `---` separator and one record per
//! `(k, form, p)`: `k form p numer scale_bits`, meaning
//! `a_f(p) = numer / 2^scale_bits` (an exact integer when `scale_bits = 0`).
//! The header carries the format version and a SHA-256 of the record body.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use crate::eigen::{eigenforms, EigenForm, PrimeCoefficient};
use crate::error::{LabError, Result};

pub const CACHE_FORMAT: &str = concat!("heckelab-eigen-", env!("CARGO_PKG_VERSION"), "-r1");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    /// Loaded from an existing file.
    Hit(PathBuf),
    /// Computed and written.
    Computed(PathBuf),
    /// An existing file was unusable; recomputed and rewritten.
    Recomputed { path: PathBuf, reason: String },
}

impl CacheOutcome {
    pub fn path(&self) -> &Path {
        match self {
            Self::Hit(p) | Self::Computed(p) | Self::Recomputed { path: p, .. } => p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenCache {
    dir: PathBuf,
}

/// Cache key recorded in manifests.
pub fn cache_key(k: u32, prime_bound: u64) -> String {
    format!("eigen/k={k}/P={prime_bound}/{CACHE_FORMAT}")
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, k: u32, prime_bound: u64) -> PathBuf {
        self.dir.join(format!("eigen-k{k:04}-P{prime_bound}.txt"))
    }

    /// Existing files for weight `k` with bound at least `prime_bound`, smallest first.
    fn candidates(&self, k: u32, prime_bound: u64) -> Result<Vec<(u64, PathBuf)>> {
        let prefix = format!("eigen-k{k:04}-P");
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(rest) = name.strip_prefix(&prefix) else { continue };
            let Some(bound) = rest.strip_suffix(".txt").and_then(|b| b.parse::<u64>().ok()) else {
                continue;
            };
            if bound >= prime_bound {
                out.push((bound, entry.path()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Eigenforms of weight `k` to `prime_bound`, from cache when possible.
    pub fn load_or_compute(&self, k: u32, prime_bound: u64) -> Result<(Vec<EigenForm>, CacheOutcome)> {
        let mut problem = None;
        for (_, path) in self.candidates(k, prime_bound)? {
            match read_cache_file(&path, k, prime_bound) {
                Ok(forms) => return Ok((forms, CacheOutcome::Hit(path))),
                Err(e) => {
                    eprintln!("warning: ignoring cache file {}: {e}", path.display());
                    problem.get_or_insert((path, e.to_string()));
                }
            }
        }
        let forms = eigenforms(k, prime_bound)?;
        let path = self.path_for(k, prime_bound);
        write_cache_file(&path, k, prime_bound, &forms)?;
        let outcome = match problem {
            Some((bad, reason)) => {
                if bad != path && fs::remove_file(&bad).is_err() {
                    eprintln!("warning: could not remove {}", bad.display());
                }
                CacheOutcome::Recomputed { path, reason }
            }
            None => CacheOutcome::Computed(path),
        };
        Ok((forms, outcome))
    }
}

fn render_body(k: u32, forms: &[EigenForm]) -> String {
    let mut body = String::new();
    for f in forms {
        for (&p, c) in f.primes().iter().zip(f.coefficients()) {
            writeln!(body, "{k} {} {p} {} {}", f.index(), c.numer, c.scale_bits).unwrap();
        }
    }
    body
}

fn digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

pub fn write_cache_file(path: &Path, k: u32, prime_bound: u64, forms: &[EigenForm]) -> Result<()> {
    let body = render_body(k, forms);
    let header = format!(
        "heckelab eigen cache\nformat {CACHE_FORMAT}\nweight {k}\nprime_bound {prime_bound}\nforms {}\nchecksum {}\n---\n",
        forms.len(),
        digest(&body)
    );
    // unique per writer so concurrent computations of one key cannot interleave
    static SERIAL: AtomicU64 = AtomicU64::new(0);
    let tmp = path.with_extension(format!(
        "{}.{}.tmp",
        std::process::id(),
        SERIAL.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, header + &body)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header_field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    let line = lines
        .next()
        .ok_or_else(|| LabError::Cache(format!("missing header field {key}")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| LabError::Cache(format!("expected header field {key}, found {line:?}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| LabError::Cache(format!("malformed {what}: {s:?}")))
}

/// Read a cache file, keeping primes up to `prime_bound`.
pub fn read_cache_file(path: &Path, k: u32, prime_bound: u64) -> Result<Vec<EigenForm>> {
    let text = fs::read_to_string(path)?;
    let (head, body) = text
        .split_once("---\n")
        .ok_or_else(|| LabError::Cache("missing separator".into()))?;
    let mut lines = head.lines();
    if lines.next() != Some("heckelab eigen cache") {
        return Err(LabError::Cache("not an eigen cache file".into()));
    }
    let format = header_field(&mut lines, "format")?;
    if format != CACHE_FORMAT {
        return Err(LabError::Cache(format!("format {format} differs from {CACHE_FORMAT}")));
    }
    let weight: u32 = parse_num(header_field(&mut lines, "weight")?, "weight")?;
    let stored_bound: u64 = parse_num(header_field(&mut lines, "prime_bound")?, "prime bound")?;
    let count: usize = parse_num(header_field(&mut lines, "forms")?, "form count")?;
    let checksum = header_field(&mut lines, "checksum")?;
    if weight != k || stored_bound < prime_bound {
        return Err(LabError::Cache(format!(
            "file holds weight {weight} to {stored_bound}, wanted weight {k} to {prime_bound}"
        )));
    }
    if digest(body) != checksum {
        return Err(LabError::Cache("checksum mismatch".into()));
    }
    let mut per_form: Vec<(Vec<u64>, Vec<PrimeCoefficient>)> = vec![(Vec::new(), Vec::new()); count];
    for line in body.lines() {
        let fields: Vec<&str> = line.split(' ').collect();
        let [kk, form, p, numer, scale] = fields[..] else {
            return Err(LabError::Cache(format!("malformed record {line:?}")));
        };
        let p: u64 = parse_num(p, "prime")?;
        if p > prime_bound {
            continue;
        }
        let form: usize = parse_num(form, "form index")?;
        if parse_num::<u32>(kk, "weight")? != k || form >= count {
            return Err(LabError::Cache(format!("inconsistent record {line:?}")));
        }
        let numer: BigInt = parse_num(numer, "coefficient")?;
        let scale_bits: u32 = parse_num(scale, "scale")?;
        per_form[form].0.push(p);
        per_form[form].1.push(PrimeCoefficient { numer, scale_bits });
    }
    per_form
        .into_iter()
        .enumerate()
        .map(|(index, (primes, coeffs))| EigenForm::from_coefficients(k, index, prime_bound, primes, coeffs))
        .collect()
}
