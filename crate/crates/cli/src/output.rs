//! Artifact writing: 17-significant-digit numbers, atomic file replacement
//! and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

/// Round-trip exact decimal form of a double.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Pretty JSON whose floats are written as [`num`].
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(num(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Rows of already formatted cells.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{c}");
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes through a sibling temp file and a rename, so readers never see a
/// partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// `path` with `suffix` appended to the full file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub params: serde_json::Value,
    pub version: &'static str,
    pub wall_time_s: f64,
    /// Digest of the canonical field serialization, independent of how the
    /// field was specified.
    pub config_sha256: String,
    pub outputs: Vec<String>,
}

/// Collects artifacts for one command and finishes with a manifest.
pub struct Run {
    command: String,
    params: serde_json::Value,
    config_sha256: String,
    started: Instant,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(command: &str, params: serde_json::Value, canonical_config: &str) -> Self {
        Run {
            command: command.into(),
            params,
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            started: Instant::now(),
            outputs: Vec::new(),
        }
    }

    /// Write to `path`, or stdout when `path` is `None`.
    pub fn emit(&mut self, path: Option<&Path>, contents: &str) -> io::Result<()> {
        match path {
            Some(p) => {
                write_atomic(p, contents)?;
                self.outputs.push(p.to_path_buf());
            }
            None => io::stdout().write_all(contents.as_bytes())?,
        }
        Ok(())
    }

    /// Writes `<primary>.manifest.json` next to the primary artifact.
    pub fn finish(self, primary: Option<&Path>) -> io::Result<()> {
        let Some(primary) = primary else { return Ok(()) };
        let manifest = Manifest {
            command: self.command,
            params: self.params,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            config_sha256: self.config_sha256,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        write_atomic(&sidecar(primary, ".manifest.json"), &to_json(&manifest))
    }
}
