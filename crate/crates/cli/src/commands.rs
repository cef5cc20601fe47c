use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use serde_json::json;
use vibrelevel::eigensolver::LevelSpectrum;
use vibrelevel::format::{fmt_energy, fmt_sci};
use vibrelevel::io::{read_labelled_levels, read_sed, write_levels, write_sed, write_spectrum};
use vibrelevel::refdata::{dump_reference, Column};
use vibrelevel::sed::{indexed, HSource};
use vibrelevel::semiclassical::{lb_slope_closed_form, wkb_phase, wkb_phase_derivative};
use vibrelevel::{
    calibrate_h, compare_spectra, extrapolate_levels, fit_lb, fit_lb_weighted, kinetic_coefficient,
    lb_energy, lb_slope, make_morse, make_power_tail, reference_table, sed_sequence,
    sed_trend_report, solve_spectrum, wkb_level, Engine, FitWindow, LbModel, MorseParams,
    SolverConfig, Wall,
};

use crate::config::{ConfigFile, Resolver};
use crate::output::Sink;
use crate::plot::{render, Figure, Series};
use crate::{potential, usage, Cli, Command, LevelSource, OutputArgs};

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if cli.dump_reference {
        if cli.command.is_some() {
            return Err(usage("--dump-reference takes no subcommand"));
        }
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        dump_reference(&mut lock)?;
        lock.flush()?;
        return Ok(());
    }
    let mut r = Resolver::new(&file);
    if cli.stamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        r.note("generated", secs);
    }
    match cli.command {
        Some(Command::Spectrum(a)) => spectrum(a, &mut r),
        Some(Command::Sed(a)) => sed(a, &mut r),
        Some(Command::Lbfit(a)) => lbfit(a, &mut r),
        Some(Command::Compare(a)) => compare(a, &mut r),
        Some(Command::Validate(a)) => validate(a.verbose),
        Some(Command::Wkb(a)) => wkb(a, &mut r),
        Some(Command::Plot(a)) => plot(a, &mut r),
        None => Err(usage("no subcommand given (try --help)")),
    }
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!("--{} must be positive, got {x}", key.replace('_', "-"))))
    }
}

pub fn parse_kappa(text: &str) -> Result<f64> {
    let value = match text.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (
                a.trim().parse().map_err(|_| usage(format!("bad kappa '{text}'")))?,
                b.trim().parse().map_err(|_| usage(format!("bad kappa '{text}'")))?,
            );
            a / b
        }
        None => text.trim().parse().map_err(|_| usage(format!("bad kappa '{text}'")))?,
    };
    if !(value > 0.0 && value < 1.0) {
        return Err(usage(format!("kappa must lie in (0, 1), got {text}")));
    }
    Ok(value)
}

fn kappa_of_n(n: u32) -> Result<f64> {
    if n <= 2 {
        return Err(usage(format!("tail power must exceed 2, got n = {n}")));
    }
    Ok((n as f64 - 2.0) / (2.0 * n as f64))
}

fn table_column(name: &str) -> Result<Column> {
    match name {
        "reference" => Ok(Column::Reference),
        "cfm" => Ok(Column::Cfm),
        other => Err(usage(format!("unknown table column '{other}' (reference or cfm)"))),
    }
}

/// Levels numbered by v, with a label for headers.
fn load_levels(src: &LevelSource, r: &mut Resolver) -> Result<(String, Vec<(usize, f64)>)> {
    let column = r.get("column", src.column.clone())?;
    let path = src.levels.as_ref().map(|p| p.display().to_string());
    match (column, path) {
        (Some(_), Some(_)) => Err(usage("give either --levels or --column, not both")),
        (None, None) => Err(usage("missing --levels (or --column for the embedded table)")),
        (Some(name), None) => {
            let col = table_column(&name)?;
            let lv = reference_table().energies(col).into_iter().map(|(i, e)| (i - 1, e)).collect();
            Ok((format!("table:{name}"), lv))
        }
        (None, Some(path)) => {
            r.note("levels", &path);
            let file = std::fs::File::open(&path).with_context(|| format!("opening {path}"))?;
            let (label, lv) = read_labelled_levels(file).with_context(|| format!("reading {path}"))?;
            let default = match label.as_deref() {
                Some("index") => "index",
                _ => "v",
            };
            let first = r.or("first_column", src.first_column.clone(), default.to_string())?;
            match first.as_str() {
                "v" => Ok((path, lv)),
                "index" => {
                    if lv.iter().any(|l| l.0 == 0) {
                        return Err(anyhow!("{path}: index column starts at 1"));
                    }
                    Ok((path, lv.into_iter().map(|(i, e)| (i - 1, e)).collect()))
                }
                other => Err(usage(format!("--first-column must be v or index, got '{other}'"))),
            }
        }
    }
}

fn to_index(lv: &[(usize, f64)]) -> Vec<(usize, f64)> {
    lv.iter().map(|&(v, e)| (v + 1, e)).collect()
}

enum Format {
    Csv,
    Json,
}

fn output_format(o: &OutputArgs, r: &mut Resolver) -> Result<Format> {
    match r.or("format", o.format.clone(), "csv".to_string())?.as_str() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(usage(format!("--format must be csv or json, got '{other}'"))),
    }
}

fn sink(o: &OutputArgs, r: &mut Resolver, name: &str) -> Result<Sink> {
    let out = r.get("out", o.out.as_ref().map(|p| p.display().to_string()))?;
    let s = Sink::resolve(out.as_deref().map(std::path::Path::new), name);
    // the destination itself is not echoed so output is independent of it
    r.echoed.remove("out");
    Ok(s)
}

fn write_json(s: &Sink, value: &serde_json::Value) -> Result<()> {
    s.write_with(|w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn comment_lines(w: &mut dyn Write, lines: &[String]) -> std::io::Result<()> {
    for l in lines {
        writeln!(w, "# {l}")?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct CrossRow {
    v: usize,
    e_cfm: f64,
    e_numerov: f64,
    delta_t: f64,
    bound: f64,
    within: bool,
}

fn cross_diff(a: &LevelSpectrum, b: &LevelSpectrum, kappa: f64) -> Vec<CrossRow> {
    let terr = |e: f64, err: f64| kappa * (-e).powf(kappa - 1.0) * err;
    a.levels
        .iter()
        .zip(&b.levels)
        .map(|(x, y)| {
            let delta_t = (-x.energy).powf(kappa) - (-y.energy).powf(kappa);
            let bound = 2.0 * (terr(x.energy, x.report.err_estimate) + terr(y.energy, y.report.err_estimate));
            CrossRow {
                v: x.v,
                e_cfm: x.energy,
                e_numerov: y.energy,
                delta_t,
                bound,
                within: delta_t.abs() <= bound,
            }
        })
        .collect()
}

fn spectrum(a: crate::SpectrumArgs, r: &mut Resolver) -> Result<()> {
    let model = potential::resolve(&a.potential, r)?;
    r.note("potential", model.label());
    let mu = positive("mu", r.require("mu", a.solver.mu)?)?;
    let engines = match r.or("engine", a.engine.clone(), "cfm".to_string())?.as_str() {
        "cfm" => vec![Engine::Cfm],
        "numerov" => vec![Engine::Numerov],
        "both" => vec![Engine::Cfm, Engine::Numerov],
        other => return Err(usage(format!("--engine must be cfm, numerov or both, got '{other}'"))),
    };
    let mut cfg = SolverConfig::default();
    cfg.tol = positive("tol", r.or("tol", a.solver.tol, cfg.tol)?)?;
    cfg.grid.phase_step = positive("phase_step", r.or("phase_step", a.solver.phase_step, cfg.grid.phase_step)?)?;
    cfg.grid.rungs = r.or("rungs", a.solver.rungs, cfg.grid.rungs)?;
    if !(2..=8).contains(&cfg.grid.rungs) {
        return Err(usage(format!("--rungs must be between 2 and 8, got {}", cfg.grid.rungs)));
    }
    if cfg.tol >= 1e-2 || cfg.grid.phase_step > 1.0 {
        return Err(usage("--tol must be below 1e-2 and --phase-step at most 1"));
    }
    let format = output_format(&a.output, r)?;
    let out = sink(&a.output, r, "spectrum.csv")?;

    let spectra = engines
        .iter()
        .map(|&e| solve_spectrum(&model, mu, e, &cfg))
        .collect::<vibrelevel::Result<Vec<_>>>()?;
    let kappa = model.tail().and_then(|t| t.kappa()).unwrap_or(0.5);
    let cross = (spectra.len() == 2).then(|| cross_diff(&spectra[0], &spectra[1], kappa));

    let mut header = r.header("spectrum");
    for s in &spectra {
        header.push(format!("{}: {}", s.engine, s.threshold_statement()));
    }
    match format {
        Format::Json => write_json(
            &out,
            &json!({ "header": header, "spectra": spectra, "cross_engine": cross }),
        )?,
        Format::Csv => out.write_with(|w| {
            comment_lines(w, &header)?;
            for (i, s) in spectra.iter().enumerate() {
                // one column header for the whole file
                let h: &[String] = &[];
                let mut buf = Vec::new();
                write_spectrum(&mut buf, h, s)?;
                let text = String::from_utf8_lossy(&buf);
                let body = if i == 0 { &text[..] } else { text.split_once('\n').map(|x| x.1).unwrap_or("") };
                w.write_all(body.as_bytes())?;
            }
            if let Some(rows) = &cross {
                writeln!(w, "# cross-engine, kappa = {kappa}: v,dt,bound,within")?;
                for c in rows {
                    writeln!(w, "# {},{},{},{}", c.v, fmt_sci(c.delta_t, 3), fmt_sci(c.bound, 3), c.within)?;
                }
            }
            Ok(())
        })?,
    }
    let failures: Vec<String> = spectra
        .iter()
        .flat_map(|s| s.failures.iter().map(move |f| format!("{} v = {}: {}", s.engine, f.v, f.message)))
        .collect();
    if !failures.is_empty() {
        return Err(anyhow!("{} level(s) failed:\n  {}", failures.len(), failures.join("\n  ")));
    }
    if let Some(rows) = &cross {
        let outside = rows.iter().filter(|c| !c.within).count();
        if outside > 0 {
            eprintln!("note: {outside} level(s) differ between engines by more than twice the summed error estimates");
        }
    }
    Ok(())
}

fn sed(a: crate::SedArgs, r: &mut Resolver) -> Result<()> {
    let (source, lv) = load_levels(&a.source, r)?;
    let n = r.get("n", a.n)?;
    let kappa = match r.get("kappa", a.kappa.clone())? {
        Some(k) => parse_kappa(&k)?,
        None => kappa_of_n(n.ok_or_else(|| usage("give --kappa or --n"))?)?,
    };
    let levels = to_index(&lv);
    let explicit = r.get("h", a.h)?;
    let row = r.get("calibrate_row", a.calibrate_row)?;
    let (h, h_source) = if let Some(h) = explicit {
        (positive("h", h)?, HSource::Explicit)
    } else if let Some(index) = row {
        let target = positive("target", r.or("target", a.target, 1.0)?)?;
        (calibrate_h(&levels, kappa, index, target)?, HSource::Calibrated { index, target })
    } else if a.lb_slope {
        let n = n.ok_or_else(|| usage("--lb-slope needs --n"))?;
        let cn = positive("cn", r.require("cn", a.cn)?)?;
        let mu = positive("mu", r.require("mu", a.mu)?)?;
        if (kappa - kappa_of_n(n)?).abs() > 1e-12 {
            return Err(usage("--kappa disagrees with (n - 2)/(2n) for --lb-slope"));
        }
        (lb_slope(n, cn, mu)?, HSource::LbSlope { n })
    } else {
        return Err(usage("give --h, --calibrate-row or --lb-slope"));
    };
    r.note("kappa", kappa);
    r.note("h", h);
    r.note("h_source", serde_json::to_string(&h_source)?);
    let format = output_format(&a.output, r)?;
    let out = sink(&a.output, r, "sed.csv")?;
    let mut s = sed_sequence(&levels, kappa, h, h_source)?;
    s.source = source;
    let trend = if s.entries.len() >= 3 { Some(sed_trend_report(&s)?) } else { None };
    let mut header = r.header("sed");
    if let Some(t) = &trend {
        header.push(format!("closest to 1: index {} (|sed - 1| = {:.6})", t.closest_index, t.closest_deviation));
        header.push(format!("last: index {} (|sed - 1| = {:.6})", t.last_index, t.last_deviation));
        header.push(format!("outliers: {:?}", t.outliers));
    }
    match format {
        Format::Json => write_json(&out, &json!({ "header": header, "sed": s, "trend": trend })),
        Format::Csv => out.write_with(|w| write_sed(w, &header, &s)),
    }
}

fn parse_window(text: &str) -> Result<FitWindow> {
    let bad = || usage(format!("--window must be last:K or FIRST-LAST, got '{text}'"));
    if let Some(k) = text.strip_prefix("last:") {
        return Ok(FitWindow::Last(k.trim().parse().map_err(|_| bad())?));
    }
    let (a, b) = text.split_once('-').ok_or_else(bad)?;
    let (first, last) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if first > last {
        return Err(bad());
    }
    Ok(FitWindow::Range { first, last })
}

fn lbfit(a: crate::LbfitArgs, r: &mut Resolver) -> Result<()> {
    let (_, lv) = load_levels(&a.source, r)?;
    let n = r.or("n", a.n, 3)?;
    kappa_of_n(n)?;
    let window_text = r.or("window", a.window.clone(), "last:8".to_string())?;
    let window = parse_window(&window_text)?;
    let count = r.or("extrapolate", a.extrapolate, 3)?;
    let mu = r.get("mu", a.mu)?.map(|m| positive("mu", m)).transpose()?;
    r.note("weighted", a.weighted);
    let format = output_format(&a.output, r)?;
    let out = sink(&a.output, r, "lbfit.csv")?;
    let mut fit = if a.weighted { fit_lb_weighted(&lv, n, window)? } else { fit_lb(&lv, n, window)? };
    if let Some(mu) = mu {
        fit = fit.with_inferred_cn(mu)?;
    }
    let ext = if count > 0 { extrapolate_levels(&fit, count)? } else { Vec::new() };
    let mut header = r.header("lbfit");
    header.push(format!("H_n = {:.10e}", fit.model.h_n));
    header.push(format!("v_D = {:.6}", fit.model.v_d));
    header.push(format!("rms = {:.3e}", fit.rms));
    header.push(format!("fitted v = {}..{}", fit.window.0, fit.window.1));
    if let Some(cn) = fit.inferred_cn {
        header.push(format!("inferred Cn = {cn:.6e}"));
    }
    match format {
        Format::Json => write_json(&out, &json!({ "header": header, "fit": fit, "extrapolated": ext })),
        Format::Csv => out.write_with(|w| {
            comment_lines(w, &header)?;
            writeln!(w, "v,E,residual,kind")?;
            for &(v, res) in &fit.residuals {
                let e = lv.iter().find(|l| l.0 == v).map(|l| l.1).unwrap_or(f64::NAN);
                writeln!(w, "{v},{},{},fit", fmt_energy(e), fmt_sci(res, 3))?;
            }
            for &(v, e) in &ext {
                writeln!(w, "{v},{},,extrapolated", fmt_energy(e))?;
            }
            Ok(())
        }),
    }
}

fn compare(a: crate::CompareArgs, r: &mut Resolver) -> Result<()> {
    let (_, mine) = load_levels(&a.source, r)?;
    let against = r.require("against", a.against.clone())?;
    let theirs: Vec<(usize, f64)> = match against.as_str() {
        "reference" | "cfm" => reference_table().energies(table_column(&against)?),
        path => {
            let file = std::fs::File::open(path).with_context(|| format!("opening {path}"))?;
            let (label, lv) = read_labelled_levels(file).with_context(|| format!("reading {path}"))?;
            if label.as_deref() == Some("index") {
                lv
            } else {
                to_index(&lv)
            }
        }
    };
    let kappa = parse_kappa(&r.or("kappa", a.kappa.clone(), "1/6".to_string())?)?;
    let format = output_format(&a.output, r)?;
    let out = sink(&a.output, r, "compare.csv")?;
    let rep = compare_spectra(&to_index(&mine), &theirs, kappa)?;
    let mut header = r.header("compare");
    header.push(format!(
        "max relative (-E)^kappa difference {:.3e} at index {}",
        rep.max_rel_kappa, rep.max_rel_kappa_index
    ));
    header.push(format!(
        "max relative energy difference {:.3e} at index {}",
        rep.max_rel_energy, rep.max_rel_energy_index
    ));
    header.push(format!("only in levels: {:?}; only in {against}: {:?}", rep.unmatched_a, rep.unmatched_b));
    match format {
        Format::Json => write_json(&out, &json!({ "header": header, "report": rep })),
        Format::Csv => out.write_with(|w| {
            comment_lines(w, &header)?;
            writeln!(w, "index,E_levels,E_against,delta_E,delta_kappa,rel_kappa")?;
            for row in &rep.rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    row.index,
                    fmt_energy(row.e_a),
                    fmt_energy(row.e_b),
                    fmt_sci(row.delta_e, 3),
                    fmt_sci(row.delta_kappa, 3),
                    fmt_sci(row.rel_kappa, 3)
                )?;
            }
            Ok(())
        }),
    }
}

type Check = (&'static str, fn() -> std::result::Result<String, String>);

fn check_morse() -> std::result::Result<String, String> {
    let p = make_morse(MorseParams { de: 1000.0, a: 1.0, re: 3.0 }).map_err(|e| e.to_string())?;
    let k = kinetic_coefficient(10.0).map_err(|e| e.to_string())?;
    let omega = 2.0 * (1000.0 * k).sqrt();
    let mut worst = 0.0f64;
    for engine in [Engine::Cfm, Engine::Numerov] {
        let s = solve_spectrum(&p, 10.0, engine, &SolverConfig::default()).map_err(|e| e.to_string())?;
        if s.levels.len() != 24 || !s.is_complete() {
            return Err(format!("{engine}: {} levels, {} failures", s.levels.len(), s.failures.len()));
        }
        for l in &s.levels {
            let x = l.v as f64 + 0.5;
            let exact = -1000.0 + omega * x - omega * omega * x * x / 4000.0;
            worst = worst.max(((l.energy - exact) / exact).abs());
        }
    }
    if worst > 1e-8 {
        return Err(format!("max relative error {worst:.2e}"));
    }
    Ok(format!("24 levels per engine, max relative error {worst:.1e}"))
}

fn check_lb_exact() -> std::result::Result<String, String> {
    let m = LbModel::new(3, 0.0257, 40.3).map_err(|e| e.to_string())?;
    let e: Vec<f64> = (0..40).map(|v| lb_energy(&m, v as f64)).collect::<vibrelevel::Result<_>>().map_err(|e| e.to_string())?;
    let s = sed_sequence(&indexed(&e), m.kappa, m.h_n, HSource::Explicit).map_err(|e| e.to_string())?;
    let dev = s.values().iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let lv: Vec<(usize, f64)> = e.into_iter().enumerate().collect();
    let f = fit_lb(&lv, 3, FitWindow::default()).map_err(|e| e.to_string())?;
    if dev > 1e-12 || (f.model.v_d - 40.3).abs() > 1e-6 || (f.model.h_n / 0.0257 - 1.0).abs() > 1e-8 {
        return Err(format!("sed dev {dev:.1e}, fit v_D {}, H {}", f.model.v_d, f.model.h_n));
    }
    Ok(format!("max |sed - 1| {dev:.1e}, fit recovers v_D and H"))
}

fn check_table() -> std::result::Result<String, String> {
    let t = reference_table();
    let h = calibrate_h(&t.energies(Column::Reference), 1.0 / 6.0, 2, 0.9566).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for col in [Column::Reference, Column::Cfm] {
        let s = sed_sequence(&t.energies(col), 1.0 / 6.0, h, HSource::Explicit).map_err(|e| e.to_string())?;
        for (i, stored) in t.sed(col) {
            let x = s.get(i).ok_or_else(|| format!("index {i} missing"))?;
            worst = worst.max((x - stored).abs());
        }
    }
    if worst > 0.002 {
        return Err(format!("max deviation {worst:.2e}"));
    }
    Ok(format!("both SED columns reproduced, max deviation {worst:.1e}"))
}

fn check_slope() -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for n in [3, 4, 6] {
        let q = lb_slope(n, 1.0, 1.0).map_err(|e| e.to_string())?;
        let c = lb_slope_closed_form(n, 1.0, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max(((q - c) / c).abs());
    }
    if worst > 1e-6 {
        return Err(format!("routes differ by {worst:.2e}"));
    }
    Ok(format!("quadrature and Gamma form agree to {worst:.1e}"))
}

fn check_engines() -> std::result::Result<String, String> {
    let p = make_power_tail(3, 1e4, Some(Wall { m: 6, cm: 1e5 })).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::default();
    let a = solve_spectrum(&p, 11.494_888_5, Engine::Cfm, &cfg).map_err(|e| e.to_string())?;
    let b = solve_spectrum(&p, 11.494_888_5, Engine::Numerov, &cfg).map_err(|e| e.to_string())?;
    if a.levels.len() != b.levels.len() || a.levels.len() < 20 || !a.is_complete() || !b.is_complete() {
        return Err(format!("{} vs {} levels", a.levels.len(), b.levels.len()));
    }
    let rows = cross_diff(&a, &b, 1.0 / 6.0);
    match rows.iter().find(|c| !c.within) {
        Some(c) => Err(format!("v = {}: dt {:.2e} > {:.2e}", c.v, c.delta_t, c.bound)),
        None => Ok(format!("{} levels agree within twice the summed error estimates", rows.len())),
    }
}

fn validate(verbose: bool) -> Result<()> {
    let checks: [Check; 5] = [
        ("morse oracle", check_morse),
        ("LB-exact spectrum", check_lb_exact),
        ("table SED reconstruction", check_table),
        ("lb_slope routes", check_slope),
        ("engine agreement", check_engines),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = check();
        let took = if verbose { format!(" [{:.2?}]", start.elapsed()) } else { String::new() };
        match result {
            Ok(msg) => println!("PASS  {name}: {msg}{took}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}{took}");
            }
        }
    }
    if failed > 0 {
        return Err(anyhow!("{failed} check(s) failed"));
    }
    Ok(())
}

fn wkb(a: crate::WkbArgs, r: &mut Resolver) -> Result<()> {
    let model = potential::resolve(&a.potential, r)?;
    r.note("potential", model.label());
    let mu = positive("mu", r.require("mu", a.mu)?)?;
    let format = output_format(&a.output, r)?;
    let out = sink(&a.output, r, "wkb.csv")?;
    if let Some(e) = a.energy {
        r.note("energy", e);
        let phi = wkb_phase(&model, mu, e)?;
        let dphi = wkb_phase_derivative(&model, mu, e)?;
        let header = r.header("wkb");
        return match format {
            Format::Json => write_json(&out, &json!({ "header": header, "E": e, "phi": phi, "dphi_dE": dphi })),
            Format::Csv => out.write_with(|w| {
                comment_lines(w, &header)?;
                writeln!(w, "E,phi,dphi_dE")?;
                writeln!(w, "{},{},{}", fmt_energy(e), fmt_sci(phi, 10), fmt_sci(dphi, 10))
            }),
        };
    }
    let levels: Vec<(usize, f64)> = match a.v {
        Some(v) => {
            if v < 0 {
                return Err(usage(format!("--v must be >= 0, got {v}")));
            }
            r.note("v", v);
            vec![(v as usize, wkb_level(&model, mu, v)?)]
        }
        None => {
            let mut lv = Vec::new();
            // levels are bound while Φ(0⁻) exceeds v + ½
            while let Ok(e) = wkb_level(&model, mu, lv.len() as i64) {
                lv.push((lv.len(), e));
                if lv.len() >= SolverConfig::default().max_levels {
                    break;
                }
            }
            lv
        }
    };
    let header = r.header("wkb");
    match format {
        Format::Json => write_json(&out, &json!({ "header": header, "levels": levels })),
        Format::Csv => out.write_with(|w| write_levels(w, &header, &levels)),
    }
}

fn plot(a: crate::PlotArgs, r: &mut Resolver) -> Result<()> {
    let kind = r.or("kind", a.kind.clone(), "sed".to_string())?;
    let n = r.or("n", a.n, 3)?;
    let kappa = kappa_of_n(n)?;
    let out = Sink::resolve(a.out.as_deref(), "plot.svg");
    let mut series = Vec::new();
    if a.reference {
        if kind != "sed" {
            return Err(usage("--reference plots the SED columns; use --kind sed"));
        }
        let t = reference_table();
        for (label, col) in [("reference", Column::Reference), ("cfm", Column::Cfm)] {
            series.push(Series {
                label: label.into(),
                points: t.sed(col).into_iter().map(|(i, s)| (i as f64, s)).collect(),
                overlay: false,
            });
        }
    }
    for path in &a.input {
        let label = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        match kind.as_str() {
            "sed" => {
                let rows = read_sed(file).with_context(|| format!("reading {}", path.display()))?;
                series.push(Series {
                    label,
                    points: rows.into_iter().map(|(i, _, s)| (i as f64, s)).collect(),
                    overlay: false,
                });
            }
            "lb" => {
                let (_, lv) = read_labelled_levels(file).with_context(|| format!("reading {}", path.display()))?;
                if lv.iter().any(|l| !(l.1 < 0.0)) {
                    return Err(anyhow!("{}: energies must be negative", path.display()));
                }
                if a.fit {
                    let fit = fit_lb(&lv, n, FitWindow::default())?;
                    let lo = fit.window.0 as f64;
                    let line = vec![(lo, fit.model.h_n * (fit.model.v_d - lo)), (fit.model.v_d, 0.0)];
                    series.push(Series {
                        label: format!("{label} LB fit"),
                        points: line,
                        overlay: true,
                    });
                }
                series.push(Series {
                    label,
                    points: lv.iter().map(|&(v, e)| (v as f64, (-e).powf(kappa))).collect(),
                    overlay: false,
                });
            }
            other => return Err(usage(format!("--kind must be sed or lb, got '{other}'"))),
        }
    }
    if series.is_empty() {
        return Err(usage("nothing to plot: give --input or --reference"));
    }
    let (title, x_label, y_label, hlines) = match kind.as_str() {
        "sed" => ("Scaled energy differences", "index", "SED", vec![1.0]),
        _ => ("LeRoy-Bernstein plot", "v", "(-E)^kappa", vec![]),
    };
    let title = r.or("title", a.title.clone(), title.to_string())?;
    let fig = Figure {
        title,
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
        hlines,
        comment: Some(r.header("plot").join("; ")),
    };
    let svg = render(&fig);
    out.write_with(|w| w.write_all(svg.as_bytes()))
}
