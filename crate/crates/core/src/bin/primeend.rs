use clap::{Args, Parser, Subcommand};
use primeend::acceptance::{self, AcceptanceConfig, CRITERIA};
use primeend::domain::json::DomainJson;
use primeend::domain::{build_gallery, BoundaryPoint, GalleryParams, GridDomain, GALLERY};
use primeend::ends::{enumerate_prime_ends_at, ChainJson, DiscreteChain};
use primeend::geom::Point;
use primeend::io::{domain_svg, read_json, to_json_string, write_atomic, write_csv, write_json, Overlay, RegionSpec};
use primeend::john::{
    build_ball_chain, check_ball_chain, default_samples, hausdorff_content, john_assess, john_curve, JohnOptions,
};
use primeend::mazurkiewicz::{default_tau, maz_boundary, maz_distance};
use primeend::modulus::{capacity, modp_chain_decay, CapacityProblem, DecayOptions};
use primeend::regions::{accessibility, dyadic_ladder, finitely_connected_at, Accessibility, ReportOptions};
use primeend::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser, Serialize)]
#[command(name = "primeend", version, about = "Prime ends and boundary analysis on planar grid domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// List or build gallery domains.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Component reports, accessibility and prime ends at a boundary point.
    Analyze {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_parser = parse_point)]
        point: Point,
        #[arg(long, value_parser = parse_point)]
        side: Option<Point>,
        /// Descending radii, comma separated; defaults to a dyadic ladder.
        #[arg(long, value_delimiter = ',')]
        ladder: Vec<f64>,
        #[arg(long)]
        touch_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Condenser capacity between two plates.
    Modulus {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, num_args = 2, value_names = ["E", "F"])]
        plates: Vec<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decay of the p-modulus along a chain.
    Decay {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        chain: PathBuf,
        #[arg(long = "K")]
        k: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mazurkiewicz distance or boundary atlas.
    Mazurkiewicz {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(subcommand)]
        action: MazAction,
    },
    /// John assessment, ball chains and Hausdorff content.
    John {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(subcommand)]
        action: JohnAction,
    },
    /// Run the acceptance suite.
    Regress {
        #[arg(long, default_value = "gallery")]
        suite: String,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Criterion numbers or module names (ends, modulus, mazurkiewicz, john, domain, cli).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum GalleryAction {
    List,
    Build {
        name: String,
        #[arg(long, default_value_t = 1.0 / 128.0)]
        h: f64,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum MazAction {
    Distance {
        #[arg(value_parser = parse_point)]
        x: Point,
        #[arg(value_parser = parse_point)]
        y: Point,
    },
    Boundary {
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum JohnAction {
    Assess {
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 25.0)]
        cap: f64,
    },
    Chain {
        #[arg(long, value_parser = parse_point)]
        target: Point,
        #[arg(long, value_parser = parse_point)]
        center: Option<Point>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    Content {
        region: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
}

#[derive(Args, Serialize)]
struct DomainArgs {
    /// Gallery name or a domain JSON file.
    domain: String,
    #[arg(long, default_value_t = 1.0 / 128.0)]
    h: f64,
    #[arg(long)]
    depth: Option<usize>,
}

impl DomainArgs {
    fn load(&self) -> Result<Arc<GridDomain>> {
        if self.h <= 0.0 {
            return Err(Error::InvalidArgument("h must be positive".into()));
        }
        let d = if self.domain.ends_with(".json") {
            GridDomain::from_json(&read_json::<DomainJson>(Path::new(&self.domain))?)?
        } else {
            build_gallery(&self.domain, self.h, &GalleryParams { depth: self.depth, ..GalleryParams::default() })?
        };
        Ok(d.into_shared())
    }
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x, y] => {
            let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok(Point::new(x, y))
        }
        _ => Err(format!("expected x,y but got `{s}`")),
    }
}

fn cell_at(d: &GridDomain, p: Point) -> Result<usize> {
    d.spec().cell_at(p).filter(|&c| d.is_open(c)).ok_or(Error::InvalidArgument(format!("({}, {}) is not in the domain", p.x, p.y)))
}

fn deepest(d: &GridDomain) -> usize {
    d.cells().max_by(|&a, &b| d.delta(a).total_cmp(&d.delta(b)).then(b.cmp(&a))).expect("nonempty domain")
}

/// Wraps a result with the tool version and the invocation.
fn envelope(config: &Cli, result: Value) -> Result<Value> {
    Ok(json!({
        "tool": "primeend",
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config)?,
        "result": result,
    }))
}

fn emit(config: &Cli, result: Value, out: Option<&Path>) -> Result<()> {
    let doc = envelope(config, result)?;
    if let Some(dir) = out {
        write_json(&dir.join("report.json"), &doc)?;
    }
    print!("{}", to_json_string(&doc)?);
    Ok(())
}

fn selected_criteria(only: &[String]) -> Result<Vec<u32>> {
    if only.is_empty() {
        return Ok(CRITERIA.iter().map(|c| c.0).collect());
    }
    let mut ids = Vec::new();
    for tok in only {
        let group: &[u32] = match tok.as_str() {
            "domain" => &[14],
            "regions" | "ends" => &[1, 2, 5, 6, 7, 13],
            "modulus" => &[3, 4, 10, 11],
            "mazurkiewicz" => &[8, 9],
            "john" => &[12],
            "cli" => &[15],
            _ => {
                let id: u32 = tok.parse().map_err(|_| Error::InvalidArgument(format!("unknown criterion `{tok}`")))?;
                ids.push(id);
                continue;
            }
        };
        ids.extend_from_slice(group);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Gallery { action: GalleryAction::List } => {
            let list: Vec<Value> = GALLERY.iter().map(|(n, d)| json!({"name": n, "description": d})).collect();
            emit(cli, Value::Array(list), None)?;
        }
        Command::Gallery { action: GalleryAction::Build { name, h, depth, out } } => {
            let d = build_gallery(name, *h, &GalleryParams { depth: *depth, ..GalleryParams::default() })?;
            if let Some(dir) = out {
                write_json(&dir.join(format!("{name}.json")), &d.to_json())?;
                write_atomic(&dir.join(format!("{name}.svg")), domain_svg(&d, &[], &[], 400.0).as_bytes())?;
            }
            let summary = json!({
                "name": d.name(),
                "cells": d.open_count(),
                "blocked_edges": d.blocked_edge_count(),
                "fingerprint": format!("{:016x}", d.fingerprint()),
            });
            emit(cli, summary, None)?;
        }
        Command::Analyze { domain, point, side, ladder, touch_tol, out } => {
            let d = domain.load()?;
            let given = BoundaryPoint { position: *point, side_hint: None };
            let mut x = if d.check_boundary_point(&given).is_ok() { given } else { d.snap_boundary_point(*point)? };
            if let Some(s) = side {
                x = BoundaryPoint { side_hint: None, ..x }.with_side(s.x, s.y);
            }
            let ladder = if ladder.is_empty() { dyadic_ladder(0.25 * d.diameter().min(1.0), d.h()) } else { ladder.clone() };
            let opts = ReportOptions { touch_tol: *touch_tol, ..ReportOptions::default() };
            let conn = finitely_connected_at(&d, &x, &ladder, &opts)?;
            let acc = accessibility(&d, &x, &ladder, &opts)?;
            let en = enumerate_prime_ends_at(&d, &x, &ladder, &opts)?;
            let acc_json = match &acc {
                Accessibility::Accessible(w) => json!({"accessible": true, "path_cells": w.path.len()}),
                Accessibility::Inaccessible { radius } => json!({"accessible": false, "radius": radius}),
            };
            let records: Vec<_> = en.records.iter().map(|r| r.summary()).collect();
            if let Some(dir) = out {
                let colors = ["#f90", "#0a6", "#a0c", "#08c", "#c33", "#990"];
                let lasts: Vec<_> = en.records.iter().map(|r| r.chain.last().region.clone()).collect();
                let overlays: Vec<Overlay> =
                    lasts.iter().enumerate().map(|(i, c)| Overlay { cells: c, color: colors[i % colors.len()] }).collect();
                write_atomic(&dir.join("analyze.svg"), domain_svg(&d, &overlays, &[x.position], 400.0).as_bytes())?;
            }
            let result = json!({
                "point": x.position,
                "connectivity": conn,
                "accessibility": acc_json,
                "prime_ends": {"count": en.count(), "growing": en.growing, "widths": en.widths, "records": records},
            });
            emit(cli, result, out.as_deref())?;
        }
        Command::Modulus { domain, plates, p, tol, out } => {
            let d = domain.load()?;
            let e = read_json::<RegionSpec>(&plates[0])?.resolve(&d)?;
            let f = read_json::<RegionSpec>(&plates[1])?.resolve(&d)?;
            let r = capacity(&CapacityProblem::new(e.clone(), f.clone(), *p), *tol)?;
            if let Some(dir) = out {
                let rows: Vec<Vec<f64>> = d
                    .cells()
                    .map(|c| {
                        let q = d.center(c);
                        vec![q.x, q.y, r.potential[c]]
                    })
                    .collect();
                write_csv(&dir.join("potential.csv"), &["x", "y", "u"], &rows)?;
                let overlays = [Overlay { cells: &e, color: "#c33" }, Overlay { cells: &f, color: "#36c" }];
                write_atomic(&dir.join("plates.svg"), domain_svg(&d, &overlays, &[], 400.0).as_bytes())?;
            }
            emit(cli, serde_json::to_value(r.summary())?, out.as_deref())?;
        }
        Command::Decay { domain, chain, k, p, out } => {
            let d = domain.load()?;
            let chain = DiscreteChain::from_json(d.clone(), &read_json::<ChainJson>(chain)?)?;
            let k = read_json::<RegionSpec>(k)?.resolve(&d)?;
            let rep = modp_chain_decay(&chain, &k, *p, &DecayOptions::default())?;
            if let Some(dir) = out {
                let rows: Vec<Vec<f64>> = rep.series.iter().map(|s| vec![s.level as f64, s.scale, s.value]).collect();
                write_csv(&dir.join("decay.csv"), &["level", "scale", "value"], &rows)?;
            }
            emit(cli, serde_json::to_value(&rep)?, out.as_deref())?;
        }
        Command::Mazurkiewicz { domain, action } => {
            let d = domain.load()?;
            match action {
                MazAction::Distance { x, y } => {
                    let (a, b) = (cell_at(&d, *x)?, cell_at(&d, *y)?);
                    let r = maz_distance(&d, a, b)?;
                    let result = json!({
                        "value": r.value,
                        "lower_bound": r.lower_bound,
                        "euclidean": d.center(a).dist(d.center(b)),
                        "witness_cells": r.witness.len(),
                    });
                    emit(cli, result, None)?;
                }
                MazAction::Boundary { tau, out } => {
                    let atlas = maz_boundary(&d, tau.unwrap_or_else(|| default_tau(&d)))?;
                    emit(cli, serde_json::to_value(atlas.to_json())?, out.as_deref())?;
                }
            }
        }
        Command::John { domain, action } => {
            let d = domain.load()?;
            match action {
                JohnAction::Assess { center, samples, cap } => {
                    let x0 = match center {
                        Some(c) => cell_at(&d, *c)?,
                        None => deepest(&d),
                    };
                    let opts = JohnOptions { cap: *cap, ..JohnOptions::default() };
                    let a = john_assess(&d, x0, &default_samples(&d, x0, *samples), &opts)?;
                    let verdict = if a.is_john() {
                        "john"
                    } else if a.is_not_john() {
                        "not_john"
                    } else {
                        "unresolved"
                    };
                    let result = json!({
                        "verdict": verdict,
                        "center": d.center(x0),
                        "constant_estimate": a.constant_estimate,
                        "worst_sample": d.center(a.worst_sample),
                        "detail": a.verdict,
                    });
                    emit(cli, result, None)?;
                    if !a.is_john() && !a.is_not_john() {
                        return Ok(ExitCode::from(3));
                    }
                }
                JohnAction::Chain { target, center, lambda } => {
                    let x0 = match center {
                        Some(c) => cell_at(&d, *c)?,
                        None => deepest(&d),
                    };
                    let x = cell_at(&d, *target)?;
                    let curve = john_curve(&d, x, x0, &JohnOptions::default())?;
                    let rho0 = d.delta(x0) / (4.0 * lambda);
                    let chain =
                        build_ball_chain(&d, d.center(x0), rho0, d.center(x), &curve.points(&d), curve.ratio.max(1.0), *lambda)?;
                    let checks = check_ball_chain(&d, &chain);
                    emit(cli, json!({"chain": chain, "checks": checks}), None)?;
                }
                JohnAction::Content { region, s } => {
                    let r = read_json::<RegionSpec>(region)?.resolve(&d)?;
                    emit(cli, serde_json::to_value(hausdorff_content(&r, *s))?, None)?;
                }
            }
        }
        Command::Regress { suite, report, only, seed } => {
            if suite != "gallery" {
                return Err(Error::InvalidArgument(format!("unknown suite `{suite}`")));
            }
            let ids = selected_criteria(only)?;
            let cfg = AcceptanceConfig { seed: *seed };
            let mut results = Vec::with_capacity(ids.len());
            for id in ids {
                let r = acceptance::regress(&[id], &cfg)?.criteria.remove(0);
                eprintln!("{}", r.line());
                results.push(r);
            }
            let passed = results.iter().filter(|r| r.pass).count();
            let rep = acceptance::RegressReport { seed: *seed, passed, total: results.len(), criteria: results };
            let doc = envelope(cli, serde_json::to_value(&rep)?)?;
            match report {
                Some(path) => write_json(path, &doc)?,
                None => print!("{}", to_json_string(&doc)?),
            }
            if rep.passed != rep.total {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Unresolved(_) | Error::ResolutionTooCoarse(_) | Error::Inaccessible(..) => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PRIMEEND_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let body = json!({"error": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Error"), "message": e.to_string()});
            println!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
