//! Resolution of arguments into core configurations, and the commands.

use std::fmt::Write as _;

use dnstat::config::{ModelSpec, ScheduleSpec, SeqSpec, WeightSpec};
use dnstat::density::DensityConfig;
use dnstat::detectors::{st_dndc, st_dnm, st_dnp, DetectorConfig, DistributionVerdict};
use dnstat::dnmeans::{convolution, dn_mean};
use dnstat::korovkin::{korovkin_check, KorovkinConfig, LiftedMkz, Mode, Perturbation, SampledFunction};
use dnstat::repro::{reproduce, ReproConfig};
use dnstat::{ConvergenceVerdict, DeferredSchedule, Error, NormalizerMode, RvModel, WeightScheme};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{DetectArgs, Detector, KorovkinArgs, MeanArgs, ReproArgs};

/// A failure tagged with the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Compute(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

/// Input-stage errors are always configuration errors.
fn cfg<T>(r: dnstat::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(e.to_string()))
}

/// One command's result in every output format.
pub struct Output {
    pub config: Value,
    pub result: Value,
    pub table: String,
    pub csv: Vec<Vec<String>>,
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn schedule_of(spec: Option<ScheduleSpec>, default: &str, horizon: u64) -> Result<(String, DeferredSchedule), Failure> {
    let spec = spec.unwrap_or(ScheduleSpec::Named(default.into()));
    let schedule = cfg(spec.resolve_checked(horizon))?;
    Ok((schedule.label(), schedule))
}

fn weights_of(spec: Option<WeightSpec>, default: &str) -> Result<WeightScheme, Failure> {
    cfg(spec.unwrap_or(WeightSpec::Named(default.into())).resolve())
}

pub fn mean(a: MeanArgs) -> Result<Output, Failure> {
    let horizon = a.horizon.unwrap_or(10);
    if horizon == 0 {
        return Err(Failure::Config("horizon must be >= 1".into()));
    }
    let seq_spec = a.seq.unwrap_or(SeqSpec::Named("identity".into()));
    let seq = cfg(seq_spec.resolve())?;
    let (schedule_label, schedule) = schedule_of(a.schedule, "plain", horizon)?;
    let weights = weights_of(a.weights, "ones")?;
    let mode = a.mode.unwrap_or_default();
    let config = json!({
        "command": "mean",
        "seq": seq.label(),
        "schedule": schedule_label,
        "weights": weights.label(),
        "horizon": horizon,
        "normalizer_mode": mode,
    });

    let mut rows = Vec::with_capacity(horizon as usize);
    for m in 1..=horizon {
        let r = convolution(&schedule, &weights, m, mode)?;
        let t = dn_mean(&seq, &schedule, &weights, m, mode)?;
        rows.push((m, r, t));
    }
    let mut table = format!("{:>8} {:>16} {:>20}\n", "m", "R_m", "t_m");
    for (m, r, t) in &rows {
        let _ = writeln!(table, "{m:>8} {r:>16} {t:>20}");
    }
    let mut csv = vec![vec!["m".into(), "R_m".into(), "t_m".into()]];
    csv.extend(rows.iter().map(|(m, r, t)| vec![m.to_string(), r.to_string(), t.to_string()]));
    let result = json!({
        "rows": rows.iter().map(|(m, r, t)| json!({"m": m, "R_m": r, "t_m": t})).collect::<Vec<_>>(),
    });
    Ok(Output { config, result, table, csv })
}

fn summarize(name: &str, v: &ConvergenceVerdict) -> Value {
    let last = v.trace.last();
    let mut out = json!({
        "detector": name,
        "verdict": v.verdict,
        "tail_max": v.tail_max,
        "tail_start": v.tail_start,
        "final": last.map(to_value),
    });
    if let Some(raw) = v.raw_sequence.as_ref().and_then(|r| r.last()) {
        out["final_q"] = json!(raw.value);
    }
    out
}

fn trace_rows(name: &str, t: Option<f64>, v: &ConvergenceVerdict, rows: &mut Vec<Vec<String>>) {
    let t = t.map(|t| t.to_string()).unwrap_or_default();
    for p in &v.trace {
        rows.push(vec![
            name.to_string(),
            t.clone(),
            p.m.to_string(),
            p.normalizer.to_string(),
            p.count.to_string(),
            p.density.to_string(),
        ]);
    }
}

pub fn detect(a: DetectArgs) -> Result<Output, Failure> {
    let defaults = DetectorConfig::default();
    let density = DensityConfig {
        horizon: a.horizon.unwrap_or(defaults.density.horizon),
        tail_fraction: a.tail_fraction.unwrap_or(defaults.density.tail_fraction),
        tolerance: a.tolerance.unwrap_or(defaults.density.tolerance),
        mode: a.normalizer.unwrap_or(defaults.density.mode),
        weighting: a.weighting.unwrap_or(defaults.density.weighting),
    };
    let det = DetectorConfig {
        eps: a.eps.unwrap_or(defaults.eps),
        delta: a.delta.unwrap_or(defaults.delta),
        r: a.r.unwrap_or(defaults.r),
        grid: a.grid,
        density,
    };
    cfg(det.validate())?;
    let model_spec = a.model.unwrap_or(ModelSpec::Named("example1".into()));
    let model: RvModel = cfg(model_spec.resolve())?;
    cfg(model.support(1).map(drop))?;
    let (schedule_label, schedule) = schedule_of(a.schedule, "example1", det.density.horizon)?;
    let weights = weights_of(a.weights, "example1")?;
    let which = a.mode.unwrap_or(Detector::Dnp);
    let config = json!({
        "command": "detect",
        "model": model.name(),
        "model_description": model.description(),
        "mode": which,
        "schedule": schedule_label,
        "weights": weights.label(),
        "detector": det,
    });

    let run = |d: Detector| matches!(which, Detector::All) || which == d;
    let mut results = Vec::new();
    let mut table = String::new();
    let mut csv = vec![["detector", "t", "m", "R_m", "count", "d_m"].map(String::from).to_vec()];
    let mut line = |name: &str, v: &ConvergenceVerdict| {
        let _ = writeln!(table, "{name:<6} {:<12} tail_max={}", v.verdict.to_string(), v.tail_max);
    };
    if run(Detector::Dnp) {
        let v = st_dnp(&model, &schedule, &weights, &det)?;
        line("dnp", &v);
        trace_rows("dnp", None, &v, &mut csv);
        results.push(summarize("dnp", &v));
    }
    if run(Detector::Dnm) {
        let v = st_dnm(&model, &schedule, &weights, &det)?;
        line("dnm", &v);
        trace_rows("dnm", None, &v, &mut csv);
        results.push(summarize("dnm", &v));
    }
    if run(Detector::Dndc) {
        let d: DistributionVerdict = st_dndc(&model, &schedule, &weights, &det)?;
        let _ = writeln!(table, "{:<6} {:<12} tail_max={}", "dndc", d.verdict.to_string(), d.tail_max());
        let mut points = Vec::new();
        for p in &d.points {
            let _ = writeln!(
                table,
                "  t={:<10} {:<12} tail_max={}",
                p.t,
                p.result.verdict.to_string(),
                p.result.tail_max
            );
            trace_rows("dndc", Some(p.t), &p.result, &mut csv);
            let mut s = summarize("dndc", &p.result);
            s["t"] = json!(p.t);
            points.push(s);
        }
        results.push(json!({
            "detector": "dndc",
            "verdict": d.verdict,
            "tail_max": d.tail_max(),
            "points": points,
        }));
    }
    if let Some(path) = &a.trace {
        write_csv_file(path, &csv)?;
    }
    Ok(Output {
        config,
        result: json!({ "detectors": results }),
        table,
        csv,
    })
}

fn write_csv_file(path: &std::path::Path, rows: &[Vec<String>]) -> Result<(), Failure> {
    let fail = |e: &dyn std::fmt::Display| Failure::Compute(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(|e| fail(&e))?;
    for r in rows {
        w.write_record(r).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

pub fn korovkin(a: KorovkinArgs) -> Result<Output, Failure> {
    let op = a.op.unwrap_or_else(|| "mkz".into());
    if op != "mkz" {
        return Err(Failure::Config(format!("unknown operator {op:?}; only mkz is available")));
    }
    let defaults = KorovkinConfig::default();
    let kc = KorovkinConfig {
        eps: a.eps.unwrap_or(defaults.eps),
        grid_size: a.grid_size.unwrap_or(defaults.grid_size),
        tail_tol: a.tail_tol.unwrap_or(defaults.tail_tol),
        density: DensityConfig {
            horizon: a.horizon.unwrap_or(defaults.density.horizon),
            tolerance: a.tolerance.unwrap_or(defaults.density.tolerance),
            mode: a.normalizer.unwrap_or(defaults.density.mode),
            ..defaults.density
        },
    };
    cfg(kc.validate())?;
    let perturbation = a.perturb.unwrap_or(Perturbation::None);
    let mode = a.mode.unwrap_or(Mode::Dnp);
    let names = a.f.unwrap_or_else(|| vec!["y^3".into()]);
    let fs = names
        .iter()
        .map(|n| cfg(SampledFunction::named(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let (schedule_label, schedule) = schedule_of(a.schedule, "0,5", kc.density.horizon)?;
    let weights = weights_of(a.weights, "ones")?;
    let ops = LiftedMkz::new(perturbation, kc.tail_tol);
    let config = json!({
        "command": "korovkin",
        "op": op,
        "perturb": perturbation,
        "mode": mode,
        "functions": fs.iter().map(|f| f.label()).collect::<Vec<_>>(),
        "schedule": schedule_label,
        "weights": weights.label(),
        "korovkin": kc,
    });

    let report = korovkin_check(&ops, mode, &fs, &schedule, &weights, &kc)?;
    let row = |role: &str, v: &dnstat::korovkin::FunctionVerdict| {
        json!({
            "function": v.function,
            "role": role,
            "verdict": v.result.verdict,
            "tail_max": v.result.tail_max,
        })
    };
    let verdicts: Vec<Value> = report
        .conditions
        .iter()
        .map(|v| row("condition", v))
        .chain(report.conclusions.iter().map(|v| row("conclusion", v)))
        .collect();
    let mut table = format!(
        "operator {}  mode {}  horizon {}  grid {}  normalizer {}\n",
        report.operator,
        to_value(&report.mode).as_str().unwrap_or_default(), report.horizon, report.grid_size, report.normalizer_mode
    );
    let _ = writeln!(table, "{:<10} {:<10} {:<12} tail_max", "role", "function", "verdict");
    for v in &verdicts {
        let _ = writeln!(
            table,
            "{:<10} {:<10} {:<12} {}",
            v["role"].as_str().unwrap_or(""),
            v["function"].as_str().unwrap_or(""),
            v["verdict"].as_str().unwrap_or(""),
            v["tail_max"]
        );
    }
    for n in &report.notes {
        let _ = writeln!(table, "note: {n}");
    }
    let mut csv = vec![std::iter::once("n".to_string()).chain(report.functions.iter().cloned()).collect::<Vec<_>>()];
    csv.extend(
        report
            .sup_norms
            .iter()
            .map(|r| std::iter::once(r.n.to_string()).chain(r.values.iter().map(f64::to_string)).collect()),
    );
    let result = json!({
        "operator": report.operator,
        "mode": report.mode,
        "horizon": report.horizon,
        "grid_size": report.grid_size,
        "normalizer_mode": report.normalizer_mode,
        "verdicts": verdicts,
        "conditions_converge": report.conditions_converge(),
        "conclusions_converge": report.conclusions_converge(),
        "notes": report.notes,
        "functions": report.functions,
        "sup_norms": report.sup_norms,
    });
    Ok(Output { config, result, table, csv })
}

pub fn repro(a: &ReproArgs) -> Result<Output, Failure> {
    let defaults = ReproConfig::default();
    let rc = ReproConfig {
        seed: a.seed.unwrap_or(defaults.seed),
        samples: a.samples.unwrap_or(defaults.samples),
        horizon: a.horizon.unwrap_or(defaults.horizon),
        ..defaults
    };
    if rc.samples == 0 {
        return Err(Failure::Config("samples must be >= 1".into()));
    }
    let config = json!({
        "command": "repro",
        "repro": rc,
        "normalizer_mode": NormalizerMode::default(),
    });
    let report = reproduce(&rc)?;
    let mut csv = vec![["example", "quantity", "observed", "stated"].map(String::from).to_vec()];
    for s in &report.sections {
        for e in &s.entries {
            csv.push(vec![
                s.example.clone(),
                e.quantity.clone(),
                e.observed.to_string(),
                e.stated.as_ref().map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }
    Ok(Output {
        config,
        result: json!({ "sections": report.sections }),
        table: report.to_string(),
        csv,
    })
}
