//! Output plumbing: JSON with 17 significant digits, stdout plus optional
//! files in the output directory.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use pvmra::Error;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

/// Compact JSON formatter that prints every float as d.ddddddddddddddddde±x.
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f32(writer, value)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser).expect("serializable");
    String::from_utf8(buf).expect("utf8")
}

pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Output { dir }
    }

    /// Print to stdout and, with an output directory, write `name` there.
    pub fn emit(&mut self, name: &str, content: &str) -> Result<(), Error> {
        let mut stdout = io::stdout().lock();
        let _ = stdout.write_all(content.as_bytes());
        if !content.ends_with('\n') {
            let _ = stdout.write_all(b"\n");
        }
        self.write_file(name, content)
    }

    /// Write `name` to the output directory, if one was given.
    pub fn write_file(&mut self, name: &str, content: &str) -> Result<(), Error> {
        let Some(dir) = &self.dir else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.display())))?;
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    /// Informational JSON line on stderr.
    pub fn note(&mut self, value: serde_json::Value) {
        let _ = writeln!(io::stderr(), "{}", to_json(&value));
    }
}
