mod plot;
mod registry;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use critcluster::ball_clusters::{pl_maximality_probe, unlock_direction, FIXED_TOL};
use critcluster::cyl_clusters::{gamma, gamma_cluster};
use critcluster::delta_rotation::{golden_section, sweep_oriented, ExtremumKind, PlatonicKind, PlatonicSolid, REFINE_TOL};
use critcluster::galois_probe::{sigma_conjugation_check, DEFAULT_DEN_BOUND, RECOVERY_TOL};
use critcluster::geom3::cyl_radius_from_distance;
use critcluster::min_morse::{bundle_from_ball_config, bundle_from_line_cluster, CERT_TOL, RANK_TOL, RELATION_TOL};
use critcluster::optimize::{ascend_family, ascend_full, perturbation_probe, random_perturbation, FAMILY_BUDGET,
    FULL_BUDGET, MIN_STEP};
use critcluster::{BallTouchConfig, LineCluster, DEFAULT_SEED};
use num_rational::Rational64;
use serde_json::{json, Map, Value};

use registry::{parse_real, parse_triple, resolve, Kind, Selection, Subject, ENTRIES};

const SCHEMA: &str = "critcluster/1";
const NO_IMPROVEMENT_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<critcluster::Error> for Failure {
    fn from(e: critcluster::Error) -> Self {
        use critcluster::Error::*;
        match e {
            Structure(_) | Numerical(_) => Failure::Numerical(e.to_string()),
            Domain(_) | Chart(_) | UnknownName(_) => Failure::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "critcluster", version, about = "Critical clusters of cylinders and balls around a unit ball")]
struct Cli {
    /// Seed for every sampling step.
    #[arg(long, global = true, env = "CRITCLUSTER_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the named-cluster registry.
    List(ListArgs),
    /// Distance, contact graph, criticality analysis and probes of a named cluster.
    Verify(VerifyArgs),
    /// Tabulate D along the γ curve or a δ-rotation of a Platonic edge system.
    Sweep(SweepArgs),
    /// Local ascent of D in the C6 family or over the full line configuration.
    Optimize(OptimizeArgs),
    /// Galois symmetry probe of the second-order distance table along γ.
    Galois(GaloisArgs),
}

#[derive(Args)]
struct ListArgs {
    #[arg(long)]
    json: bool,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    cluster: String,
    #[command(flatten)]
    selection: Selection,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Pairs within this distance of the minimum count as contacts.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    probe_samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    probe_t: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Curve family; only `gamma` exists.
    #[arg(long, conflicts_with = "solid", required_unless_present = "solid")]
    family: Option<String>,
    #[arg(long)]
    solid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Rotate Platonic edge lines clockwise.
    #[arg(long)]
    mirror: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Three-parameter family; only `c6` exists.
    #[arg(long, conflicts_with = "cluster", required_unless_present = "cluster")]
    family: Option<String>,
    /// Start `phi,delta,kappa` for the family ascent.
    #[arg(long, allow_hyphen_values = true, default_value = "0.1,0.1,-0.05")]
    start: String,
    #[arg(long)]
    cluster: Option<String>,
    #[command(flatten)]
    selection: Selection,
    /// Ascend over all line parameters (required with --cluster).
    #[arg(long)]
    full: bool,
    /// Move the start cluster this far along a seeded random direction first.
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long)]
    budget: Option<usize>,
    /// CSV trace destination.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GaloisArgs {
    /// Curve parameter as `P/Q`.
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = DEFAULT_DEN_BOUND)]
    den_bound: i64,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let result = match cli.command {
        Command::List(a) => list(a, seed),
        Command::Verify(a) => verify(a, seed),
        Command::Sweep(a) => sweep(a),
        Command::Optimize(a) => optimize(a, seed),
        Command::Galois(a) => galois(a, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}

fn envelope(command: &str, seed: u64, tolerances: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("seed".into(), json!(seed));
    m.insert("tolerances".into(), tolerances);
    m
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(path: Option<&Path>, v: Map<String, Value>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&Value::Object(v)).map_err(|e| Failure::Numerical(e.to_string()))?;
    write_out(path, &(text + "\n"))?;
    if let Some(p) = path {
        eprintln!("report: {}", p.display());
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any double.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn list(a: ListArgs, seed: u64) -> Result<(), Failure> {
    let entries: Vec<_> = ENTRIES.iter().filter(|e| a.kind.is_none_or(|k| k == e.kind)).collect();
    if a.json {
        let mut m = envelope("list", seed, json!({}));
        let items: Vec<Value> = entries
            .iter()
            .map(|e| json!({ "name": e.name, "kind": e.kind.as_str(), "parameters": e.params, "description": e.description }))
            .collect();
        m.insert("clusters".into(), Value::Array(items));
        return write_json(None, m);
    }
    for e in entries {
        println!("{:<14} {:<5} {:<26} {}", e.name, e.kind.as_str(), e.params, e.description);
    }
    Ok(())
}

fn line_json(c: &LineCluster) -> Value {
    Value::Array(
        c.lines()
            .iter()
            .map(|l| {
                let (p, d) = (l.point(), l.direction());
                json!({ "point": [p.x, p.y, p.z], "direction": [d.x, d.y, d.z] })
            })
            .collect(),
    )
}

fn verify(a: VerifyArgs, seed: u64) -> Result<(), Failure> {
    if a.tol.is_nan() || a.tol < 0.0 {
        return Err(Failure::Usage("--tol must be non-negative".into()));
    }
    let subject = resolve(&a.cluster, &a.selection)?;
    let tolerances = json!({
        "contact": a.tol, "rank": RANK_TOL, "relation": RELATION_TOL, "certificate": CERT_TOL, "fixed_point": FIXED_TOL,
    });
    let mut m = envelope("verify", seed, tolerances);
    m.insert("cluster".into(), json!(a.cluster));
    match subject {
        Subject::Line { cluster, parameters } => verify_lines(&mut m, &cluster, parameters, &a, seed)?,
        Subject::Ball(p) => verify_balls(&mut m, &p, &a, seed)?,
    }
    write_json(a.report.as_deref(), m)
}

fn insert_analysis(m: &mut Map<String, Value>, analysis: critcluster::Result<critcluster::CriticalityReport>) {
    match analysis {
        Ok(r) => {
            m.insert("critical".into(), json!(r.is_critical));
            m.insert("null_index".into(), json!(r.null_index));
            m.insert("null_index_mod_so3".into(), json!(r.null_index_mod_gauge));
            m.insert("certificate".into(), to_json(&r.certificate));
            m.insert("inconclusive".into(), json!(r.inconclusive));
            m.insert("criticality".into(), to_json(&r));
        }
        Err(e) => {
            m.insert("criticality".into(), Value::Null);
            m.insert("inconclusive".into(), json!(e.to_string()));
        }
    }
}

fn verify_lines(m: &mut Map<String, Value>, c: &LineCluster, parameters: Value, a: &VerifyArgs, seed: u64)
    -> Result<(), Failure> {
    let d = c.min_distance();
    m.insert("kind".into(), json!("line"));
    m.insert("parameters".into(), parameters);
    m.insert("lines".into(), line_json(c));
    m.insert("D".into(), json!(d));
    m.insert("radius".into(), to_json(&cyl_radius_from_distance(d).ok()));
    m.insert("contact_graph".into(), to_json(&c.contact_graph(a.tol)));
    insert_analysis(m, bundle_from_line_cluster(c, a.tol).map(|cb| cb.bundle.analyze(&cb.gauge, seed)));
    let probe = perturbation_probe(c, a.probe_samples, a.probe_t, seed)?;
    m.insert("probe".into(), to_json(&probe));
    Ok(())
}

fn verify_balls(m: &mut Map<String, Value>, p: &BallTouchConfig, a: &VerifyArgs, seed: u64) -> Result<(), Failure> {
    m.insert("kind".into(), json!("ball"));
    let pts: Vec<[f64; 3]> = p.points().iter().map(|v| [v.x, v.y, v.z]).collect();
    m.insert("points".into(), json!(pts));
    m.insert("delta".into(), json!(p.delta()));
    m.insert("radius".into(), to_json(&p.touching_radius().ok()));
    m.insert("contact_pairs".into(), json!(p.contact_pairs(a.tol)));
    let cb = bundle_from_ball_config(p, a.tol);
    let reduced = cb.as_ref().map(|cb| cb.bundle.reduced_null_space(&cb.gauge).ncols()).unwrap_or(0);
    insert_analysis(m, cb.map(|cb| cb.bundle.analyze(&cb.gauge, seed)));
    let unlock = if reduced == 1 { unlock_direction(p).map_err(|e| e.to_string()) } else {
        Err(format!("null space mod rotations has dimension {reduced}, not 1"))
    };
    match unlock {
        Ok(u) => {
            m.insert("unlock".into(), to_json(&u));
        }
        Err(e) => {
            m.insert("unlock".into(), Value::Null);
            m.insert("unlock_note".into(), json!(e));
        }
    }
    m.insert(
        "probe".into(),
        pl_maximality_probe(p, a.probe_samples, a.probe_t, seed).map(|r| to_json(&r)).unwrap_or(Value::Null),
    );
    Ok(())
}

struct Table {
    header: &'static str,
    rows: Vec<Vec<f64>>,
    /// `(kind, parameter, D)`
    extrema: Vec<(ExtremumKind, f64, f64)>,
    title: String,
    x_label: &'static str,
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    if a.samples < 2 {
        return Err(Failure::Usage("--samples must be at least 2".into()));
    }
    let from = a.from.as_deref().map(parse_real).transpose()?;
    let to = a.to.as_deref().map(parse_real).transpose()?;
    let table = match (&a.family, &a.solid) {
        (Some(f), None) if f.eq_ignore_ascii_case("gamma") => gamma_table(from, to, a.samples)?,
        (Some(f), None) => return Err(Failure::Usage(format!("unknown family `{f}`; only `gamma` exists"))),
        (None, Some(s)) => solid_table(s, from, to, a.samples, a.mirror)?,
        _ => return Err(Failure::Usage("give exactly one of --family and --solid".into())),
    };
    let mut csv = String::from(table.header);
    csv.push('\n');
    for r in &table.rows {
        csv.push_str(&r.iter().map(|&v| num(v)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    csv.push_str("# extremum,kind,param,value\n");
    for &(k, x, v) in &table.extrema {
        csv.push_str(&format!("# extremum,{},{},{}\n", kind_str(k), num(x), num(v)));
    }
    write_out(a.out.as_deref(), &csv)?;
    if let Some(p) = &a.out {
        eprintln!("csv: {}", p.display());
    }
    if let Some(p) = &a.svg {
        let pts: Vec<(f64, f64)> = table.rows.iter().map(|r| (r[0], r[r.len() - 2])).collect();
        let markers: Vec<plot::Marker> = table
            .extrema
            .iter()
            .map(|&(k, x, v)| plot::Marker { x, y: v * v, is_max: k == ExtremumKind::Max })
            .collect();
        let svg = plot::line_plot(&table.title, table.x_label, "d²", &pts, &markers);
        fs::write(p, svg).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
        eprintln!("svg: {}", p.display());
    }
    Ok(())
}

fn kind_str(k: ExtremumKind) -> &'static str {
    match k {
        ExtremumKind::Max => "max",
        ExtremumKind::Min => "min",
    }
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { to } else { from + (to - from) * i as f64 / (n - 1) as f64 }).collect()
}

fn gamma_d(x: f64) -> f64 {
    gamma_cluster(x).map(|c| c.min_distance()).unwrap_or(f64::NAN)
}

fn gamma_table(from: Option<f64>, to: Option<f64>, n: usize) -> Result<Table, Failure> {
    let (from, to) = (from.unwrap_or(1.0 / n as f64), to.unwrap_or(1.0));
    if !(from > 0.0 && from < to && to <= 1.0) {
        return Err(Failure::Usage(format!("γ range [{from}, {to}] must satisfy 0 < from < to ≤ 1")));
    }
    let xs = linspace(from, to, n);
    let mut rows = Vec::with_capacity(n);
    for &x in &xs {
        let (phi, delta, kappa) = gamma(x)?;
        let d = gamma_d(x);
        rows.push(vec![x, phi, delta, kappa, d, d * d, cyl_radius_from_distance(d).unwrap_or(f64::NAN)]);
    }
    let ds: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    let mut extrema = Vec::new();
    for i in 1..n - 1 {
        let (l, c, r) = (ds[i - 1], ds[i], ds[i + 1]);
        if c > l && c >= r {
            let x = golden_section(gamma_d, xs[i - 1], xs[i + 1], REFINE_TOL);
            extrema.push((ExtremumKind::Max, x, gamma_d(x)));
        } else if c < l && c <= r {
            let x = golden_section(|x| -gamma_d(x), xs[i - 1], xs[i + 1], REFINE_TOL);
            extrema.push((ExtremumKind::Min, x, gamma_d(x)));
        }
    }
    Ok(Table {
        header: "x,phi,delta,kappa,d,d2,radius",
        rows,
        extrema,
        title: "d² along the unlocking curve γ".into(),
        x_label: "x",
    })
}

fn solid_table(name: &str, from: Option<f64>, to: Option<f64>, n: usize, mirror: bool) -> Result<Table, Failure> {
    let kind = PlatonicKind::from_str(name)?;
    let (from, to) = (from.unwrap_or(0.0), to.unwrap_or(std::f64::consts::FRAC_PI_2));
    let s = sweep_oriented(&PlatonicSolid::new(kind), from, to, n, mirror)?;
    let rows = s
        .samples
        .iter()
        .map(|&(delta, d)| vec![delta, d, d * d, cyl_radius_from_distance(d).unwrap_or(f64::NAN)])
        .collect();
    Ok(Table {
        header: "delta,d,d2,radius",
        rows,
        extrema: s.extrema.iter().map(|e| (e.kind, e.delta, e.value)).collect(),
        title: format!("d² under δ-rotation of the {} edges", kind.as_str()),
        x_label: "δ",
    })
}

fn optimize(a: OptimizeArgs, seed: u64) -> Result<(), Failure> {
    let tolerances = json!({ "min_step": MIN_STEP, "no_improvement": NO_IMPROVEMENT_TOL });
    let mut m = envelope("optimize", seed, tolerances);
    let trace = if let Some(f) = &a.family {
        if !f.eq_ignore_ascii_case("c6") {
            return Err(Failure::Usage(format!("unknown family `{f}`; only `c6` exists")));
        }
        let start = parse_triple(&a.start)?;
        let budget = a.budget.unwrap_or(FAMILY_BUDGET);
        let r = ascend_family(start, budget, seed)?;
        let (phi, delta, kappa) = r.argmax;
        m.insert("mode".into(), json!("family"));
        m.insert("start".into(), json!({ "phi": start.0, "delta": start.1, "kappa": start.2 }));
        m.insert("budget".into(), json!(budget));
        m.insert("argmax".into(), json!({ "phi": phi, "delta": delta, "kappa": kappa }));
        m.insert("value".into(), json!(r.value));
        m.insert("radius".into(), to_json(&cyl_radius_from_distance(r.value).ok()));
        let verdict = if r.trace.converged { "converged" } else { "budget exhausted" };
        m.insert("verdict".into(), json!(verdict));
        r.trace
    } else {
        let name = a.cluster.as_deref().unwrap_or_default();
        if !a.full {
            return Err(Failure::Usage("--cluster needs --full".into()));
        }
        let Subject::Line { cluster, parameters } = resolve(name, &a.selection)? else {
            return Err(Failure::Usage(format!("`{name}` is a ball cluster; the ascent works on line clusters")));
        };
        if a.perturb.is_nan() || a.perturb < 0.0 {
            return Err(Failure::Usage("--perturb must be non-negative".into()));
        }
        let start = if a.perturb > 0.0 { random_perturbation(&cluster, a.perturb, seed)? } else { cluster };
        let start_value = start.min_distance();
        let budget = a.budget.unwrap_or(FULL_BUDGET);
        let r = ascend_full(&start, budget, seed)?;
        let gain = r.value - start_value;
        m.insert("mode".into(), json!("full"));
        m.insert("cluster".into(), json!(name));
        m.insert("parameters".into(), parameters);
        m.insert("perturb".into(), json!(a.perturb));
        m.insert("budget".into(), json!(budget));
        m.insert("start_value".into(), json!(start_value));
        m.insert("value".into(), json!(r.value));
        m.insert("improvement".into(), json!(gain));
        m.insert("radius".into(), to_json(&cyl_radius_from_distance(r.value).ok()));
        m.insert("flat_moves".into(), json!(r.trace.flat_moves));
        m.insert("verdict".into(), json!(if gain <= NO_IMPROVEMENT_TOL { "no improvement" } else { "improved" }));
        m.insert("lines".into(), line_json(&r.cluster));
        r.trace
    };
    m.insert("evaluations".into(), json!(trace.evaluations));
    m.insert("converged".into(), json!(trace.converged));
    m.insert("budget_exhausted".into(), json!(trace.budget_exhausted));
    m.insert("monotone".into(), json!(trace.is_monotone()));
    if let Some(p) = &a.trace {
        fs::write(p, trace.to_csv()).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
        m.insert("trace".into(), json!(p.display().to_string()));
        eprintln!("trace: {}", p.display());
    }
    write_json(a.report.as_deref(), m)
}

fn galois(a: GaloisArgs, seed: u64) -> Result<(), Failure> {
    let x = Rational64::from_str(a.x.trim()).map_err(|_| Failure::Usage(format!("cannot parse `{}` as P/Q", a.x)))?;
    if a.den_bound < 1 {
        return Err(Failure::Usage("--den-bound must be positive".into()));
    }
    let r = sigma_conjugation_check(x, a.den_bound)?;
    let mut m = envelope("galois", seed, json!({ "recovery": RECOVERY_TOL }));
    if let Value::Object(body) = to_json(&r) {
        m.extend(body);
    }
    write_json(a.report.as_deref(), m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn linspace_hits_both_ends() {
        let v = linspace(0.001, 1.0, 1000);
        assert_eq!(v[0], 0.001);
        assert_eq!(v[999], 1.0);
        assert!((v[499] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_extremum_is_the_record() {
        let t = gamma_table(None, None, 200).unwrap();
        let maxima: Vec<_> = t.extrema.iter().filter(|e| e.0 == ExtremumKind::Max).collect();
        assert_eq!(maxima.len(), 1);
        assert!((maxima[0].1 - 0.5).abs() < 1e-6);
        assert!((maxima[0].2 - (12.0f64 / 11.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn library_errors_map_to_exit_classes() {
        assert!(matches!(Failure::from(critcluster::Error::Domain("x".into())), Failure::Usage(_)));
        assert!(matches!(Failure::from(critcluster::Error::Numerical("x".into())), Failure::Numerical(_)));
    }
}
