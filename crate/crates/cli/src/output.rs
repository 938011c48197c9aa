use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const SCHEMA: &str = "# schema=v1";

/// `%.12g`: twelve significant digits, trailing zeros trimmed.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    // rounding can carry into the next decade, so trust the formatter's exponent
    let (mantissa, e) = sci.split_once('e').unwrap();
    let e: i32 = e.parse().unwrap();
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{SCHEMA}")?;
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}
