use std::fmt::Write as _;

use bgsfuse::geometry::{build_generators, point_of, random_choice_region, union_up_to, zonogon};
use bgsfuse::{Point, Zonogon};

use super::write_output;
use crate::config::{ReferencePoint, RunConfig};
use crate::data;
use crate::error::CliError;
use crate::svg::{color, Svg};

pub const CSV_FILE: &str = "roc.csv";
pub const SVG_FILE: &str = "roc.svg";

const TOL: f64 = 1e-9;

/// Everything drawn on the ROC plot, in drawing order.
pub struct RocReport {
    pub algorithms: Vec<(String, Point)>,
    pub random_choice: Vec<Point>,
    /// Union envelope polygon for selections of at most `k` algorithms.
    pub unions: Vec<(usize, Vec<Point>)>,
    pub all: Vec<Point>,
    pub references: Vec<ReferencePoint>,
}

pub fn build(cfg: &RunConfig, extra_refs: &[ReferencePoint]) -> Result<RocReport, CliError> {
    let mut references = cfg.reference_points.clone();
    references.extend_from_slice(extra_refs);
    for r in &references {
        r.validate()?;
    }
    let loaded = data::load(cfg)?;
    let n = loaded.set.n();
    let k_max = cfg.k_max_for(n)?;
    let gens = build_generators(&loaded.set);
    let all = zonogon(&gens)?;
    check_zonogon(&all)?;
    let algorithms: Vec<(String, Point)> = loaded
        .corpus
        .algorithms()
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), point_of(&gens, |v| f64::from((v >> j) & 1))))
        .collect();
    let individual: Vec<Point> = algorithms.iter().map(|(_, p)| *p).collect();
    let random_choice = random_choice_region(&individual);
    for p in individual.iter().chain(&random_choice) {
        if !all.contains(*p, TOL) {
            return Err(CliError::Invariant(format!("point {p:?} lies outside the zonogon")));
        }
    }
    let mut unions = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let polygon = union_up_to(&gens, n, k, true)?.polygon();
        if let Some(p) = polygon.iter().find(|p| !all.contains(**p, TOL)) {
            return Err(CliError::Invariant(format!(
                "union for k = {k} leaves the zonogon at {p:?}"
            )));
        }
        unions.push((k, polygon));
    }
    Ok(RocReport {
        algorithms,
        random_choice,
        unions,
        all: all.vertices().to_vec(),
        references,
    })
}

fn check_zonogon(z: &Zonogon) -> Result<(), CliError> {
    if !z.is_convex(TOL) {
        return Err(CliError::invariant("zonogon is not convex"));
    }
    if z.top().dist(Point::new(1.0, 1.0)) > TOL {
        return Err(CliError::Invariant(format!(
            "zonogon ends at {:?}, not (1, 1)",
            z.top()
        )));
    }
    for v in z.vertices() {
        let mirror = Point::new(1.0 - v.x, 1.0 - v.y);
        if !z.vertices().iter().any(|w| w.dist(mirror) <= TOL) {
            return Err(CliError::Invariant(format!("zonogon vertex {v:?} has no mirror image")));
        }
    }
    Ok(())
}

pub fn to_csv(r: &RocReport) -> String {
    let mut out = String::from("series,index,fpr,tpr\n");
    let mut rows = |series: &str, points: &[Point]| {
        for (i, p) in points.iter().enumerate() {
            let _ = writeln!(out, "{series},{i},{},{}", p.x, p.y);
        }
    };
    for (name, p) in &r.algorithms {
        rows(&format!("algorithm:{name}"), &[*p]);
    }
    rows("random-choice", &r.random_choice);
    for (k, poly) in &r.unions {
        rows(&format!("union-k{k}"), poly);
    }
    rows("all-combinations", &r.all);
    for reference in &r.references {
        rows(
            &format!("reference:{}", reference.name),
            &[Point::new(reference.fpr, reference.tpr)],
        );
    }
    out
}

const MARGIN: f64 = 60.0;
const SIDE: f64 = 480.0;

fn to_px(p: Point) -> (f64, f64) {
    (MARGIN + p.x * SIDE, MARGIN + (1.0 - p.y) * SIDE)
}

pub fn to_svg(r: &RocReport) -> String {
    let width = MARGIN * 2.0 + SIDE + 160.0;
    let mut s = Svg::new(width, MARGIN * 2.0 + SIDE);
    s.rect(0.0, 0.0, width, MARGIN * 2.0 + SIDE, r#"fill="white""#);
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let (x, _) = to_px(Point::new(t, 0.0));
        let (_, y) = to_px(Point::new(0.0, t));
        let grid = r##"stroke="#dddddd" stroke-width="1""##;
        s.line((x, MARGIN), (x, MARGIN + SIDE), grid);
        s.line((MARGIN, y), (MARGIN + SIDE, y), grid);
        s.text((x, MARGIN + SIDE + 16.0), 11.0, "middle", &format!("{t:.1}"));
        s.text((MARGIN - 6.0, y + 4.0), 11.0, "end", &format!("{t:.1}"));
    }
    s.rect(MARGIN, MARGIN, SIDE, SIDE, r#"fill="none" stroke="black""#);
    s.text(
        (MARGIN + SIDE / 2.0, MARGIN + SIDE + 40.0),
        13.0,
        "middle",
        "weighted FPR",
    );
    s.text((18.0, MARGIN + SIDE / 2.0), 13.0, "middle", "TPR");
    s.text(
        (MARGIN + SIDE / 2.0, MARGIN - 20.0),
        14.0,
        "middle",
        "Achievable weighted ROC regions",
    );

    let px = |pts: &[Point]| pts.iter().map(|p| to_px(*p)).collect::<Vec<_>>();
    let mut legend: Vec<(String, String)> = Vec::new();
    s.polygon(&px(&r.all), r##"fill="#eeeeee" stroke="#555555" stroke-width="1""##);
    legend.push(("all combinations".into(), "#555555".into()));
    for (i, (k, poly)) in r.unions.iter().enumerate() {
        let c = color(i);
        let mut closed = px(poly);
        if let Some(first) = closed.first().copied() {
            closed.push(first);
        }
        s.polyline(&closed, &format!(r#"fill="none" stroke="{c}" stroke-width="1.2""#));
        legend.push((format!("at most {k}"), c.to_string()));
    }
    s.polygon(
        &px(&r.random_choice),
        r#"fill="none" stroke="black" stroke-width="1.2" stroke-dasharray="5,3""#,
    );
    legend.push(("random choice".into(), "black".into()));
    for (_, p) in &r.algorithms {
        s.circle(to_px(*p), 2.5, r#"fill="black""#);
    }
    for reference in &r.references {
        let (x, y) = to_px(Point::new(reference.fpr, reference.tpr));
        s.rect(x - 3.5, y - 3.5, 7.0, 7.0, r##"fill="#d62728""##);
        s.text((x + 6.0, y - 6.0), 10.0, "start", &reference.name);
    }
    let lx = MARGIN + SIDE + 20.0;
    for (i, (label, c)) in legend.iter().enumerate() {
        let y = MARGIN + 10.0 + i as f64 * 18.0;
        s.line((lx, y), (lx + 18.0, y), &format!(r#"stroke="{c}" stroke-width="2""#));
        s.text((lx + 24.0, y + 4.0), 11.0, "start", label);
    }
    s.finish()
}

pub fn run(cfg: &RunConfig, extra_refs: &[ReferencePoint]) -> Result<String, CliError> {
    let report = build(cfg, extra_refs)?;
    write_output(&cfg.out.join(CSV_FILE), to_csv(&report))?;
    write_output(&cfg.out.join(SVG_FILE), to_svg(&report))?;
    Ok(format!(
        "roc: {} algorithms, zonogon with {} vertices, unions up to k = {} ({})\n",
        report.algorithms.len(),
        report.all.len(),
        report.unions.len(),
        cfg.out.display()
    ))
}
