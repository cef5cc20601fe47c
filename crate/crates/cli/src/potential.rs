//! Potential selection from `key=value,...` flag values or a file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use vibrelevel::potentials::read_tabulated_file;
use vibrelevel::{make_lj_like, make_morse, make_power_tail, MorseParams, PotentialModel, Wall};

use crate::config::Resolver;
use crate::usage;

#[derive(Debug, Args, Default)]
pub struct PotentialArgs {
    /// Morse oscillator, e.g. De=1000,a=1,re=3
    #[arg(long)]
    pub morse: Option<String>,
    /// -Cn/r^n tail with optional Cm/r^m wall, e.g. n=3,Cn=1e4,m=6,Cm=1e5
    #[arg(long)]
    pub power_tail: Option<String>,
    /// Depth-and-position form, e.g. depth=400,re=4,n=6,m=12
    #[arg(long)]
    pub lj: Option<String>,
    /// Tabulated `r V` file with a `#tail n Cn` line
    #[arg(long)]
    pub potential_file: Option<PathBuf>,
}

fn params(spec: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value in '{item}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("'{}' is not a number", v.trim())))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn take(p: &BTreeMap<String, f64>, key: &str, what: &str) -> Result<f64> {
    p.get(key)
        .copied()
        .ok_or_else(|| usage(format!("{what} needs {key}=")))
}

fn exponent(x: f64, key: &str) -> Result<u32> {
    if x.fract() != 0.0 || !(1.0..=64.0).contains(&x) {
        return Err(usage(format!("{key} must be a whole number in 1..64, got {x}")));
    }
    Ok(x as u32)
}

fn check_keys(p: &BTreeMap<String, f64>, allowed: &[&str], what: &str) -> Result<()> {
    match p.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(usage(format!("{what}: unknown parameter '{k}'"))),
        None => Ok(()),
    }
}

pub fn resolve(args: &PotentialArgs, r: &mut Resolver) -> Result<PotentialModel> {
    let morse = r.get("morse", args.morse.clone())?;
    let tail = r.get("power_tail", args.power_tail.clone())?;
    let lj = r.get("lj", args.lj.clone())?;
    let file = r.get("potential_file", args.potential_file.as_ref().map(|p| p.display().to_string()))?;
    let given = [morse.is_some(), tail.is_some(), lj.is_some(), file.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if given != 1 {
        return Err(usage(
            "give exactly one of --morse, --power-tail, --lj, --potential-file",
        ));
    }
    let model = if let Some(spec) = morse {
        let p = params(&spec)?;
        check_keys(&p, &["De", "a", "re"], "--morse")?;
        make_morse(MorseParams {
            de: take(&p, "De", "--morse")?,
            a: take(&p, "a", "--morse")?,
            re: take(&p, "re", "--morse")?,
        })
    } else if let Some(spec) = tail {
        let p = params(&spec)?;
        check_keys(&p, &["n", "Cn", "m", "Cm"], "--power-tail")?;
        let wall = match (p.get("m"), p.get("Cm")) {
            (Some(&m), Some(&cm)) => Some(Wall {
                m: exponent(m, "m")?,
                cm,
            }),
            (None, None) => None,
            _ => return Err(usage("--power-tail: give both m= and Cm= or neither")),
        };
        make_power_tail(exponent(take(&p, "n", "--power-tail")?, "n")?, take(&p, "Cn", "--power-tail")?, wall)
    } else if let Some(spec) = lj {
        let p = params(&spec)?;
        check_keys(&p, &["depth", "re", "n", "m"], "--lj")?;
        make_lj_like(
            take(&p, "depth", "--lj")?,
            take(&p, "re", "--lj")?,
            exponent(take(&p, "n", "--lj")?, "n")?,
            exponent(take(&p, "m", "--lj")?, "m")?,
        )
    } else {
        let path = file.expect("one source given");
        return read_tabulated_file(&path).with_context(|| format!("loading potential {path}"));
    };
    // parameter values the constructors reject are flag errors
    model.map_err(|e| usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    #[test]
    fn parses_each_form() {
        let file = ConfigFile::default();
        let mut r = Resolver::new(&file);
        let args = PotentialArgs {
            morse: Some("De=1000, a=1,re=3".into()),
            ..Default::default()
        };
        let m = resolve(&args, &mut r).unwrap();
        assert!((m.well().unwrap().v_min + 1000.0).abs() < 1e-9);
        let args = PotentialArgs {
            power_tail: Some("n=3,Cn=1e4,m=6,Cm=1e5".into()),
            ..Default::default()
        };
        assert!(resolve(&args, &mut r).unwrap().tail().is_some());
    }

    #[test]
    fn rejects_bad_specs() {
        let file = ConfigFile::default();
        let mut r = Resolver::new(&file);
        for bad in ["De=1000,a=1", "De=x,a=1,re=3", "De=1000,a=1,re=3,q=2", "De=-5,a=1,re=3"] {
            let args = PotentialArgs {
                morse: Some(bad.into()),
                ..Default::default()
            };
            assert!(resolve(&args, &mut r).is_err(), "{bad}");
        }
        assert!(resolve(&PotentialArgs::default(), &mut r).is_err());
        let args = PotentialArgs {
            power_tail: Some("n=2.5,Cn=1".into()),
            ..Default::default()
        };
        assert!(resolve(&args, &mut r).is_err());
    }
}
