//! Reference level table for the Na₂ 0g⁻ long-range well and spectrum diffs.
//!
//! Forty levels from a reference calculation (three of them extrapolated)
//! next to thirty-eight levels from a CFM calculation, each with its column
//! of scaled energy differences. The compiled-in text is the CSV file under
//! `data/`.

use std::io::Write;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};

/// The reference table exactly as shipped in `data/reference_table.csv`.
pub const REFERENCE_CSV: &str = include_str!("../data/reference_table.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    /// 1-based row index (v + 1).
    pub index: usize,
    pub e_reference: f64,
    pub sed_reference: Option<f64>,
    pub e_cfm: Option<f64>,
    pub sed_cfm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Reference,
    Cfm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceTable {
    pub rows: Vec<ReferenceRow>,
}

impl ReferenceTable {
    /// (index, E) for every row where the column has an energy.
    pub fn energies(&self, column: Column) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| match column {
                Column::Reference => Some((r.index, r.e_reference)),
                Column::Cfm => r.e_cfm.map(|e| (r.index, e)),
            })
            .collect()
    }

    /// (index, SED) for every row where the column has an SED entry.
    pub fn sed(&self, column: Column) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| match column {
                Column::Reference => r.sed_reference.map(|s| (r.index, s)),
                Column::Cfm => r.sed_cfm.map(|s| (r.index, s)),
            })
            .collect()
    }

    pub fn row(&self, index: usize) -> Option<&ReferenceRow> {
        self.rows.iter().find(|r| r.index == index)
    }
}

fn parse_table(text: &str) -> Result<ReferenceTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let opt = |s: &str, line: Option<usize>| -> Result<Option<f64>> {
        if s.trim().is_empty() {
            Ok(None)
        } else {
            s.trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::format(line, format!("bad number '{s}'")))
        }
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(None, e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize);
        if rec.len() != 5 {
            return Err(Error::format(line, "expected 5 fields"));
        }
        let index = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::format(line, "bad index"))?;
        rows.push(ReferenceRow {
            index,
            e_reference: opt(&rec[1], line)?.ok_or_else(|| Error::format(line, "missing energy"))?,
            sed_reference: opt(&rec[2], line)?,
            e_cfm: opt(&rec[3], line)?,
            sed_cfm: opt(&rec[4], line)?,
        });
    }
    Ok(ReferenceTable { rows })
}

/// The embedded table, parsed once.
pub fn reference_table() -> &'static ReferenceTable {
    static TABLE: OnceLock<ReferenceTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(REFERENCE_CSV).expect("embedded reference table parses"))
}

/// Writes the embedded table verbatim.
pub fn dump_reference<W: Write>(mut out: W) -> std::io::Result<()> {
    out.write_all(REFERENCE_CSV.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub index: usize,
    pub e_a: f64,
    pub e_b: f64,
    /// e_b − e_a.
    pub delta_e: f64,
    /// (−e_b)^κ − (−e_a)^κ.
    pub delta_kappa: f64,
    /// |Δ(−E)^κ| / (−e_a)^κ.
    pub rel_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub kappa: f64,
    pub rows: Vec<ComparisonRow>,
    pub max_rel_kappa: f64,
    pub max_rel_kappa_index: usize,
    pub max_rel_energy: f64,
    pub max_rel_energy_index: usize,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

/// Aligns two (index, E) lists on their index and reports the differences.
pub fn compare_spectra(a: &[(usize, f64)], b: &[(usize, f64)], kappa: f64) -> Result<ComparisonReport> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    let mut rows = Vec::new();
    let mut unmatched_a = Vec::new();
    for &(i, ea) in a {
        match b.iter().find(|(j, _)| *j == i) {
            Some(&(_, eb)) => {
                if !(ea < 0.0 && eb < 0.0) {
                    return Err(Error::domain(format!("index {i}: energies must be negative")));
                }
                let (ta, tb) = ((-ea).powf(kappa), (-eb).powf(kappa));
                rows.push(ComparisonRow {
                    index: i,
                    e_a: ea,
                    e_b: eb,
                    delta_e: eb - ea,
                    delta_kappa: tb - ta,
                    rel_kappa: (tb - ta).abs() / ta,
                });
            }
            None => unmatched_a.push(i),
        }
    }
    if rows.is_empty() {
        return Err(Error::domain("level lists share no index"));
    }
    let unmatched_b = b
        .iter()
        .filter(|(j, _)| !a.iter().any(|(i, _)| i == j))
        .map(|(j, _)| *j)
        .collect();
    let argmax = |key: &dyn Fn(&ComparisonRow) -> f64| {
        rows.iter()
            .fold((0, -1.0), |acc, r| if key(r) > acc.1 { (r.index, key(r)) } else { acc })
    };
    let (ik, mk) = argmax(&|r| r.rel_kappa);
    let (ie, me) = argmax(&|r| (r.delta_e / r.e_a).abs());
    Ok(ComparisonReport {
        kappa,
        max_rel_kappa: mk,
        max_rel_kappa_index: ik,
        max_rel_energy: me,
        max_rel_energy_index: ie,
        rows,
        unmatched_a,
        unmatched_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fnv1a(bytes: &[u8]) -> u64 {
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        })
    }

    // FNV-1a of the shipped file; any edit to the data must update this
    #[test]
    fn checksum_pinned() {
        assert_eq!(fnv1a(REFERENCE_CSV.as_bytes()), 0x7aae_9a66_f541_9419);
    }

    #[test]
    fn shape_and_spot_values() {
        let t = reference_table();
        assert_eq!(t.rows.len(), 40);
        let r1 = t.row(1).unwrap();
        assert_eq!(r1.e_reference, -1.7887);
        assert_eq!(r1.e_cfm, Some(-1.7864488));
        assert!(r1.sed_reference.is_none() && r1.sed_cfm.is_none());
        let r17 = t.row(17).unwrap();
        assert_eq!(r17.e_reference, -9.5438e-2);
        assert_eq!(r17.e_cfm, Some(-9.5022588e-2));
        let r40 = t.row(40).unwrap();
        assert_eq!(r40.e_reference, -4.1916e-11);
        assert!(r40.e_cfm.is_none());
        assert!(t.row(39).unwrap().e_cfm.is_none());
        assert_eq!(t.row(38).unwrap().sed_cfm, Some(1.2814));
        assert_eq!(t.energies(Column::Reference).len(), 40);
        assert_eq!(t.energies(Column::Cfm).len(), 38);
        assert_eq!(t.sed(Column::Reference).len(), 39);
        assert_eq!(t.sed(Column::Cfm).len(), 37);
    }

    #[test]
    fn columns_increase_toward_threshold() {
        let t = reference_table();
        for col in [Column::Reference, Column::Cfm] {
            let e = t.energies(col);
            assert!(e.windows(2).all(|w| w[1].1 > w[0].1 && w[1].0 == w[0].0 + 1));
            assert!(e.iter().all(|x| x.1 < 0.0));
        }
    }

    #[test]
    fn dump_is_verbatim() {
        let mut buf = Vec::new();
        dump_reference(&mut buf).unwrap();
        assert_eq!(buf, REFERENCE_CSV.as_bytes());
        assert_eq!(parse_table(std::str::from_utf8(&buf).unwrap()).unwrap(), *reference_table());
    }

    #[test]
    fn compare_identical_and_disjoint() {
        let a = vec![(1, -2.0), (2, -1.0), (3, -0.5)];
        let r = compare_spectra(&a, &a, 1.0 / 6.0).unwrap();
        assert!(r.rows.iter().all(|x| x.delta_e == 0.0 && x.delta_kappa == 0.0));
        assert_eq!(r.max_rel_kappa, 0.0);
        assert!(r.unmatched_a.is_empty() && r.unmatched_b.is_empty());
        let b = vec![(7, -1.0), (8, -0.2)];
        assert!(compare_spectra(&a, &b, 1.0 / 6.0).is_err());
    }

    #[test]
    fn compare_table_columns() {
        let t = reference_table();
        let r = compare_spectra(&t.energies(Column::Reference), &t.energies(Column::Cfm), 1.0 / 6.0)
            .unwrap();
        assert_eq!(r.rows.len(), 38);
        assert_eq!(r.unmatched_a, vec![39, 40]);
        assert!(r.unmatched_b.is_empty());
        // largest relative gap sits among the last rows
        assert!(r.max_rel_energy_index >= 30, "{}", r.max_rel_energy_index);
    }
}
