use std::str::FromStr;

use critcluster::ball_clusters::{named_ball_cluster, BallClusterName};
use critcluster::cyl_clusters::{c4_parallel, c4_saddle, c6_configuration, gamma, gamma_cluster, o6_configuration,
    record_cluster};
use critcluster::delta_rotation::{edge_lines, rotate_edges_oriented, PlatonicKind, PlatonicSolid};
use critcluster::{BallTouchConfig, LineCluster};
use num_rational::Rational64;
use serde_json::{json, Value};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Ball,
    Line,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Ball => "ball",
            Kind::Line => "line",
        }
    }
}

pub struct Entry {
    pub name: &'static str,
    pub kind: Kind,
    pub params: &'static str,
    pub description: &'static str,
}

pub const ENTRIES: &[Entry] = &[
    Entry { name: "I12", kind: Kind::Ball, params: "", description: "icosahedral 12 balls" },
    Entry { name: "A66", kind: Kind::Ball, params: "", description: "6+6 antiprism at the equal-distance latitude" },
    Entry { name: "necklace12", kind: Kind::Ball, params: "", description: "12 balls on a great circle" },
    Entry { name: "FCC", kind: Kind::Ball, params: "", description: "cuboctahedral kissing configuration" },
    Entry { name: "HCP", kind: Kind::Ball, params: "", description: "anticuboctahedral kissing configuration" },
    Entry { name: "T3", kind: Kind::Ball, params: "", description: "three balls equally spaced on a great circle" },
    Entry { name: "flex5", kind: Kind::Ball, params: "", description: "two poles plus an equilateral equatorial triangle" },
    Entry { name: "c6", kind: Kind::Line, params: "", description: "six parallel cylinders C6(0,0,0)" },
    Entry { name: "c6_family", kind: Kind::Line, params: "--params phi,delta,kappa", description: "the family C6(φ,δ,κ)" },
    Entry { name: "gamma", kind: Kind::Line, params: "--x R", description: "unlocking curve γ(x), x ∈ (0,1]" },
    Entry { name: "cm", kind: Kind::Line, params: "", description: "record cluster γ(1/2)" },
    Entry { name: "o6", kind: Kind::Line, params: "", description: "octahedral six-cylinder cluster" },
    Entry { name: "c4_saddle", kind: Kind::Line, params: "", description: "O6 minus its two polar lines" },
    Entry { name: "c4_parallel", kind: Kind::Line, params: "", description: "four parallel lines on the equator" },
    Entry { name: "tetrahedron", kind: Kind::Line, params: "[--delta D] [--mirror]", description: "δ-rotated edge lines" },
    Entry { name: "octahedron", kind: Kind::Line, params: "[--delta D] [--mirror]", description: "δ-rotated edge lines" },
    Entry { name: "cube", kind: Kind::Line, params: "[--delta D] [--mirror]", description: "δ-rotated edge lines" },
    Entry { name: "icosahedron", kind: Kind::Line, params: "[--delta D] [--mirror]", description: "δ-rotated edge lines" },
    Entry { name: "dodecahedron", kind: Kind::Line, params: "[--delta D] [--mirror]", description: "δ-rotated edge lines" },
];

/// Parameters that select a member of a parametrized entry.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Selection {
    /// Curve parameter for `gamma`, as a fraction `P/Q` or a decimal.
    #[arg(long)]
    pub x: Option<String>,
    /// Family parameters `phi,delta,kappa` for `c6_family`.
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    /// Rotation angle for the Platonic edge systems.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    /// Rotate the edge lines clockwise instead.
    #[arg(long)]
    pub mirror: bool,
}

pub enum Subject {
    Line { cluster: LineCluster, parameters: Value },
    Ball(BallTouchConfig),
}

pub fn parse_real(s: &str) -> Result<f64, Failure> {
    let s = s.trim();
    if let Ok(r) = Rational64::from_str(s) {
        return Ok(*r.numer() as f64 / *r.denom() as f64);
    }
    s.parse::<f64>().map_err(|_| Failure::Usage(format!("cannot parse `{s}` as a number")))
}

pub fn parse_triple(s: &str) -> Result<(f64, f64, f64), Failure> {
    let v = s.split(',').map(parse_real).collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Failure::Usage(format!("expected three comma-separated values, got `{s}`"))),
    }
}

pub fn resolve(name: &str, sel: &Selection) -> Result<Subject, Failure> {
    if let Ok(b) = BallClusterName::from_str(name) {
        return Ok(Subject::Ball(named_ball_cluster(b)));
    }
    if let Ok(kind) = PlatonicKind::from_str(name) {
        let base = edge_lines(&PlatonicSolid::new(kind));
        return Ok(Subject::Line {
            cluster: rotate_edges_oriented(&base, sel.delta, sel.mirror),
            parameters: json!({ "delta": sel.delta, "mirror": sel.mirror }),
        });
    }
    let (cluster, parameters) = match name.to_ascii_lowercase().as_str() {
        "c6" => (c6_configuration(0.0, 0.0, 0.0)?, json!({ "phi": 0.0, "delta": 0.0, "kappa": 0.0 })),
        "c6_family" => {
            let p = sel.params.as_deref().ok_or_else(|| Failure::Usage("c6_family needs --params".into()))?;
            let (phi, delta, kappa) = parse_triple(p)?;
            (c6_configuration(phi, delta, kappa)?, json!({ "phi": phi, "delta": delta, "kappa": kappa }))
        }
        "gamma" => {
            let x = parse_real(sel.x.as_deref().ok_or_else(|| Failure::Usage("gamma needs --x".into()))?)?;
            let (phi, delta, kappa) = gamma(x)?;
            (gamma_cluster(x)?, json!({ "x": x, "phi": phi, "delta": delta, "kappa": kappa }))
        }
        "cm" => (record_cluster(), json!({ "x": 0.5 })),
        "o6" => (o6_configuration(), json!({})),
        "c4_saddle" => (c4_saddle(), json!({})),
        "c4_parallel" => (c4_parallel(), json!({})),
        _ => return Err(Failure::Usage(format!("unknown cluster `{name}` (see `critcluster list`)"))),
    };
    Ok(Subject::Line { cluster, parameters })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_resolves() {
        let sel = Selection { x: Some("1/2".into()), params: Some("0.1,0.2,-0.05".into()), ..Default::default() };
        for e in ENTRIES {
            let s = resolve(e.name, &sel).unwrap_or_else(|_| panic!("{}", e.name));
            assert_eq!(matches!(s, Subject::Ball(_)), e.kind == Kind::Ball, "{}", e.name);
        }
    }

    #[test]
    fn reals_parse_as_fractions_or_decimals() {
        assert_eq!(parse_real("1/4").unwrap(), 0.25);
        assert_eq!(parse_real("-0.5").unwrap(), -0.5);
        assert!(parse_real("x").is_err());
        assert_eq!(parse_triple("0.1,0,-1").unwrap(), (0.1, 0.0, -1.0));
        assert!(parse_triple("0.1,0").is_err());
    }

    #[test]
    fn unknown_names_are_usage_errors() {
        assert!(matches!(resolve("nope", &Selection::default()), Err(Failure::Usage(_))));
        assert!(matches!(resolve("gamma", &Selection::default()), Err(Failure::Usage(_))));
    }
}
