//! Level-list and spectrum files.
//!
//! Level lists are CSV `v,E` (a header line is optional, `#` starts a
//! comment). Spectrum files are CSV `v,E,err_estimate,engine` preceded by
//! `#` header lines describing the run.

use std::io::{Read, Write};
use std::path::Path;

use crate::eigensolver::LevelSpectrum;
use crate::error::{Error, Result};
use crate::format::{fmt_energy, fmt_sci};
use crate::sed::SedSequence;

/// Reads `v,E` pairs; extra columns are ignored.
pub fn read_levels<R: Read>(input: R) -> Result<Vec<(usize, f64)>> {
    Ok(read_labelled_levels(input)?.1)
}

fn strip_comments<R: Read>(mut input: R) -> Result<String> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    // drop trailing comments but keep line numbering
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| [l, "\n"])
        .collect())
}

/// Like [`read_levels`], also returning the name of the first header
/// column when the file has a header line.
pub fn read_labelled_levels<R: Read>(input: R) -> Result<(Option<String>, Vec<(usize, f64)>)> {
    let text = strip_comments(input)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut label = None;
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(None, e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize);
        if rec.len() < 2 {
            return Err(Error::format(line, "expected at least two fields: v,E"));
        }
        let v = rec[0].parse::<usize>();
        let e = rec[1].parse::<f64>();
        match (v, e) {
            (Ok(v), Ok(e)) if e.is_finite() => out.push((v, e)),
            (Err(_), _) if n == 0 && rec[0].parse::<f64>().is_err() => label = Some(rec[0].to_string()),
            _ => {
                return Err(Error::format(
                    line,
                    format!("cannot read level '{}','{}'", &rec[0], &rec[1]),
                ))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::format(None, "no levels found"));
    }
    Ok((label, out))
}

/// Reads an `index,E,sed` file as written by [`write_sed`].
pub fn read_sed<R: Read>(input: R) -> Result<Vec<(usize, f64, f64)>> {
    let text = strip_comments(input)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::format(Some(1), e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(None, format!("no '{name}' column")))
    };
    let (ci, ce, cs) = (col("index")?, col("E")?, col("sed")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(None, e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize);
        let field = |c: usize| rec.get(c).unwrap_or("");
        match (field(ci).parse(), field(ce).parse(), field(cs).parse()) {
            (Ok(i), Ok(e), Ok(s)) => out.push((i, e, s)),
            _ => return Err(Error::format(line, "expected index,E,sed")),
        }
    }
    if out.is_empty() {
        return Err(Error::format(None, "no SED entries found"));
    }
    Ok(out)
}

pub fn read_levels_file(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    read_levels(std::fs::File::open(path)?)
}

fn write_header<W: Write>(out: &mut W, header: &[String]) -> std::io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

pub fn write_levels<W: Write>(mut out: W, header: &[String], levels: &[(usize, f64)]) -> std::io::Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "v,E")?;
    for (v, e) in levels {
        writeln!(out, "{v},{}", fmt_energy(*e))?;
    }
    Ok(())
}

pub fn write_spectrum<W: Write>(mut out: W, header: &[String], s: &LevelSpectrum) -> std::io::Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "v,E,err_estimate,engine")?;
    for l in &s.levels {
        writeln!(
            out,
            "{},{},{},{}",
            l.v,
            fmt_energy(l.energy),
            fmt_sci(l.report.err_estimate, 2),
            s.engine
        )?;
    }
    Ok(())
}

/// CSV `index,E,sed` in the layout of the reference table.
pub fn write_sed<W: Write>(mut out: W, header: &[String], s: &SedSequence) -> std::io::Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "index,E,sed")?;
    for e in &s.entries {
        writeln!(out, "{},{},{:.6}", e.index, fmt_energy(e.energy), e.sed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_header_and_comments() {
        let text = "# from a run\nv,E\n0, -1.5\n1,-1.25e-01 # trailing\n\n2,-3e-5,extra\n";
        let lv = read_levels(text.as_bytes()).unwrap();
        assert_eq!(lv, vec![(0, -1.5), (1, -0.125), (2, -3e-5)]);
        let bare = read_levels("3,-2\n4,-1\n".as_bytes()).unwrap();
        assert_eq!(bare, vec![(3, -2.0), (4, -1.0)]);
    }

    #[test]
    fn malformed_input_reports_line() {
        let err = read_levels("v,E\n0,-1\n1,abc\n".as_bytes()).unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
        assert!(read_levels("# nothing\n".as_bytes()).is_err());
        assert!(read_levels("v,E\n0\n".as_bytes()).is_err());
    }

    #[test]
    fn levels_round_trip() {
        let lv = vec![(0, -1.7887), (1, -9.5438e-2), (2, -4.1916e-11)];
        let mut buf = Vec::new();
        write_levels(&mut buf, &["unit = cm^-1".into()], &lv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# unit = cm^-1\nv,E\n0,-1.78870000\n"));
        assert_eq!(read_levels(text.as_bytes()).unwrap(), lv);
    }

    #[test]
    fn header_label_and_sed_round_trip() {
        let (label, lv) = read_labelled_levels("index,E\n1,-2\n2,-1\n".as_bytes()).unwrap();
        assert_eq!(label.as_deref(), Some("index"));
        assert_eq!(lv.len(), 2);
        let s = crate::sed::sed_sequence(&lv, 0.5, 0.1, crate::sed::HSource::Explicit).unwrap();
        let mut buf = Vec::new();
        write_sed(&mut buf, &[], &s).unwrap();
        let back = read_sed(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].0, 2);
        assert!((back[0].2 - s.entries[0].sed).abs() < 1e-6);
        assert!(read_sed("index,E\n1,2\n".as_bytes()).is_err());
    }
}
