use crate::checks::{self, alcove_grid, finite_family};
use crate::config::{positive_tol, ConfigError, ExperimentConfig, Grid};
use crate::output::{emit_plot_data, write_atomic, PlotRow};
use crate::report::{self, round, round_vec, CheckRecord, ReportEnvelope};
use clap::{Parser, Subcommand};
use dirac_core::affine::{enumerate_level_weights, k_group_rank, regular_orbits, verlinde_classes, LevelForm};
use dirac_core::clifford::{build_clifford_module, QuadraticSpace};
use dirac_core::diracfam::{kernel_decompose, kernel_scan, verify_relations, ScanSpec};
use dirac_core::liegroup::{build_irrep, structure_constants, GroupSpec, IrrepLabel};
use dirac_core::loopfock::{
    kernel_localization_loop, phi_restriction_map, su2_loop_family, torus_loop_family, torus_window_covers, weitzenbock_loop,
};
use serde_json::{json, Value};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dirac", version, about = "Cubic Dirac families for compact groups and energy-truncated loop groups")]
pub struct Cli {
    /// TOML file with default values; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here (atomically) instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record per-check runtimes (makes reports non-reproducible)
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gamma matrices, grading and volume element of the graded Clifford module (clifford::build_clifford_module)
    Gamma {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        orientation: Option<i8>,
    },
    /// Dimension, weights and action matrices of an irreducible representation (liegroup::build_irrep)
    Irrep {
        #[arg(long)]
        group: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        label: Option<String>,
    },
    /// Scan the finite Dirac family along a ray and decompose the kernel (diracfam::kernel_scan, kernel_decompose)
    KernelScan {
        #[arg(long)]
        group: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        label: Option<String>,
        /// start:stop:step along the ray
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Write (parameter, sigma_min, kernel_dim) CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Conjugacy classes of the level-k su(2) fusion ring (affine::verlinde_classes)
    Verlinde {
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
    },
    /// Regular affine Weyl orbits and the resulting K-group rank (affine::regular_orbits)
    Orbits {
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
        /// Use the rank-one torus form m instead of su(2) at level k
        #[arg(long)]
        m: Option<i64>,
        /// Nontrivial grading on the torus lattice generator
        #[arg(long)]
        odd: bool,
    },
    /// Loop Dirac family: identities and kernel localization over the alcove (loopfock::kernel_localization_loop)
    LoopSpectrum {
        /// SU2 or T1
        #[arg(long)]
        group: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
        /// Lowest-weight label 2j (SU2)
        #[arg(long)]
        label: Option<String>,
        /// Torus form value (T1)
        #[arg(long)]
        m: Option<i64>,
        /// Torus orbit representative (T1)
        #[arg(long, allow_hyphen_values = true)]
        mu0: Option<i64>,
        /// Number of torus fibers in the window (T1)
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Restriction map onto localized kernel supports and its rank (loopfock::phi_restriction_map)
    PhiMap {
        #[arg(long, allow_hyphen_values = true)]
        k: Option<i64>,
    },
    /// Run the invariant suites; "all" or a comma-separated list of criteria 1-11
    Check {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn require<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{name}")))
}

fn parse_group(s: &str) -> Result<GroupSpec, CliError> {
    s.parse().map_err(|e: dirac_core::liegroup::LieError| CliError::Usage(e.to_string()))
}

fn parse_label(g: &GroupSpec, s: &str) -> Result<IrrepLabel, CliError> {
    IrrepLabel::parse(g, s).map_err(|e| CliError::Usage(e.to_string()))
}

fn level(k: i64) -> Result<i64, CliError> {
    if k < 0 {
        Err(CliError::Usage(format!("level must be non-negative, got {k}")))
    } else {
        Ok(k)
    }
}

fn write_csv(path: &Option<PathBuf>, rows: &[PlotRow]) -> Result<(), CliError> {
    if let Some(p) = path {
        write_atomic(p, emit_plot_data(rows).as_bytes()).map_err(|source| CliError::Io { path: p.clone(), source })?;
    }
    Ok(())
}

/// Runs one command and returns the report; the caller emits it and sets the exit code.
pub fn run(cli: &Cli) -> Result<ReportEnvelope, CliError> {
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Gamma { dim, orientation } => {
            let n = require(dim.or(cfg.dim), "dim")?;
            let o = orientation.or(cfg.orientation).unwrap_or(1);
            if o != 1 && o != -1 {
                return Err(CliError::Usage("orientation must be 1 or -1".into()));
            }
            let rep = build_clifford_module(QuadraticSpace::euclidean(n), o);
            let mut r = ReportEnvelope::new("gamma", json!({ "dim": n, "orientation": o }));
            let d = rep.invariant_defect();
            r.checks.push(CheckRecord::new("clifford-invariants", d < 1e-12, d, ""));
            r.payload = json!({
                "module_dim": rep.module_dim,
                "sign": rep.sign(),
                "gammas": rep.gammas.iter().map(report::matrix).collect::<Vec<_>>(),
                "grading": report::matrix(&rep.grading),
                "volume": report::matrix(&rep.volume),
                "odd_generator": rep.odd_generator.as_ref().map(report::matrix),
            });
            Ok(r)
        }
        Command::Irrep { group, label } => {
            let g = parse_group(&require(group.clone().or(cfg.group), "group")?)?;
            let l = parse_label(&g, &require(label.clone().or(cfg.label), "label")?)?;
            let v = build_irrep(&g, &l).map_err(|e| CliError::Usage(e.to_string()))?;
            let alg = structure_constants(&g, 1.0).map_err(|e| CliError::Internal(e.to_string()))?;
            let mut r = ReportEnvelope::new("irrep", json!({ "group": g.to_string(), "label": format!("{l:?}") }));
            let sd = v.structure_defect(&alg);
            r.checks.push(CheckRecord::new("commutators", sd < 1e-12, sd, ""));
            let (_, cd) = dirac_core::linalg::scalar_part(&v.casimir(&alg));
            r.checks.push(CheckRecord::new("casimir-scalar", cd < 1e-10, cd, ""));
            r.checks.push(CheckRecord::new("irreducible", v.irreducible, 0.0, ""));
            r.payload = json!({
                "dim": v.dim,
                "level": v.level,
                "lowest_weight": round_vec(&v.lowest_weight),
                "weights": v.weights.iter().map(|w| json!({ "weight": round_vec(&w.weight), "mult": w.mult })).collect::<Vec<_>>(),
                "actions": v.actions.iter().map(report::matrix).collect::<Vec<_>>(),
            });
            Ok(r)
        }
        Command::KernelScan { group, label, grid, tol, csv } => {
            let g = parse_group(&require(group.clone().or(cfg.group), "group")?)?;
            let l = parse_label(&g, &require(label.clone().or(cfg.label), "label")?)?;
            let tol = positive_tol(tol.or(cfg.tol).unwrap_or(1e-8))?;
            let fam = finite_family(&g, &l).map_err(CliError::Usage)?;
            let grid = match grid.clone().or(cfg.grid) {
                Some(s) => Grid::parse(&s)?,
                None => {
                    let reach = fam.roots.norm(&fam.v.lambda()) + fam.roots.norm(&fam.roots.rho) + 1.5;
                    let start = if fam.roots.positive.is_empty() && fam.roots.component_weyl.is_empty() { -reach } else { 0.0 };
                    Grid { start, stop: reach, step: 0.01 }
                }
            };
            let scan = ScanSpec::default_ray(&fam, grid.samples());
            let res = kernel_scan(&fam, &scan, tol).map_err(|e| CliError::Internal(e.to_string()))?;
            let dec = kernel_decompose(&fam, &res).map_err(|e| CliError::Internal(e.to_string()))?;
            let mut r = ReportEnvelope::new(
                "kernel-scan",
                json!({ "group": g.to_string(), "label": format!("{l:?}"), "grid": grid, "tol": tol }),
            );
            let rel = verify_relations(&fam);
            r.checks.push(CheckRecord::new("relations", rel.max < 1e-11, rel.max, ""));
            r.checks.push(CheckRecord::new("support-found", !res.supports.is_empty(), 0.0, ""));
            r.checks.push(CheckRecord::new("outside-ball", res.outside_ball_ok, 0.0, format!("radius bound {}", round(res.radius_bound))));
            for (sp, d) in res.supports.iter().zip(&dec) {
                r.checks.push(CheckRecord::new(
                    format!("kernel-factors@{}", round(sp.radius)),
                    sp.kernel_dim == d.k_mult * d.s_mult && sp.orbit_verified,
                    d.factor_defect,
                    "",
                ));
            }
            r.payload = json!({
                "direction": round_vec(&res.direction),
                "supports": res.supports.iter().zip(&dec).map(|(s, d)| json!({
                    "radius": round(s.radius),
                    "mu": round_vec(&s.mu),
                    "kernel_dim": s.kernel_dim,
                    "orbit": s.orbit.iter().map(|o| round_vec(o)).collect::<Vec<_>>(),
                    "k_weight": round_vec(&d.k_weight),
                    "s_weight": round_vec(&d.s_weight),
                    "l_character": round_vec(&d.l_character),
                    "component_characters": round_vec(&d.component_characters),
                })).collect::<Vec<_>>(),
            });
            let mut rows: Vec<PlotRow> =
                res.grid.iter().zip(&res.sigma_min).map(|(&p, &s)| PlotRow { parameter: p, sigma_min: s, kernel_dim: 0 }).collect();
            rows.extend(res.supports.iter().map(|s| PlotRow { parameter: s.s, sigma_min: s.sigma_min, kernel_dim: s.kernel_dim }));
            write_csv(&csv.clone().or(cfg.csv), &rows)?;
            Ok(r)
        }
        Command::Verlinde { k } => {
            let k = level(require(k.or(cfg.k), "k")?)?;
            let classes = verlinde_classes(k);
            let mut r = ReportEnvelope::new("verlinde", json!({ "k": k }));
            r.checks.push(CheckRecord::new("class-count", classes.len() as i64 == k + 1, 0.0, ""));
            r.payload = json!({
                "classes": classes.iter().map(|c| json!({
                    "ell": c.ell, "theta": round(c.theta), "a0": c.a0, "j2": c.j2,
                    "eigen_angles": round_vec(&c.eigen_angles),
                })).collect::<Vec<_>>(),
            });
            Ok(r)
        }
        Command::Orbits { k, m, odd } => {
            let (form, cfg_echo, expected) = match (m.or(cfg.m), k.or(cfg.k)) {
                (Some(m), _) => {
                    if m <= 0 {
                        return Err(CliError::Usage("torus form must be positive".into()));
                    }
                    (LevelForm::torus(vec![vec![m]], vec![*odd]), json!({ "m": m, "odd": odd }), None)
                }
                (None, Some(k)) => {
                    let k = level(k)?;
                    (LevelForm::su2_tau(k), json!({ "k": k }), Some(enumerate_level_weights(k).len()))
                }
                (None, None) => return Err(CliError::Usage("give --k or --m".into())),
            };
            let table = regular_orbits(&form).map_err(|e| CliError::Usage(e.to_string()))?;
            let rank = k_group_rank(&form).map_err(|e| CliError::Internal(e.to_string()))?;
            let mut r = ReportEnvelope::new("orbits", cfg_echo);
            if let Some(n) = expected {
                r.checks.push(CheckRecord::new("rank-equals-level-weights", rank == n, 0.0, format!("{n} level weights")));
            }
            r.payload = json!({
                "cosets": table.cosets,
                "regular_count": table.regular_count,
                "rank": rank,
                "orbits": table.orbits.iter().map(|o| json!({
                    "representative": o.representative,
                    "size_mod_lattice": o.size_mod_lattice,
                    "regular": o.regular,
                    "compatible": o.compatible,
                })).collect::<Vec<_>>(),
            });
            Ok(r)
        }
        Command::LoopSpectrum { group, k, label, m, mu0, width, cutoff, points, tol, csv } => {
            let g = group.clone().or(cfg.group).unwrap_or_else(|| "SU2".into());
            let n = cutoff.or(cfg.cutoff).unwrap_or(3);
            let points = points.or(cfg.points).unwrap_or(400);
            let tol = positive_tol(tol.or(cfg.tol).unwrap_or(1e-8))?;
            if n == 0 || points < 3 {
                return Err(CliError::Usage("cutoff must be ≥ 1 and points ≥ 3".into()));
            }
            let (fam, grid, echo) = match g.to_ascii_uppercase().as_str() {
                "SU2" => {
                    let k = level(require(k.or(cfg.k), "k")?)?;
                    let j2: u32 = require(label.clone().or(cfg.label), "label")?
                        .parse()
                        .map_err(|_| CliError::Usage("label is 2j, a non-negative integer".into()))?;
                    let fam = su2_loop_family(k, j2, n).map_err(|e| CliError::Usage(e.to_string()))?;
                    (fam, alcove_grid(points), json!({ "group": "SU2", "k": k, "label": j2, "cutoff": n, "points": points, "tol": tol }))
                }
                "T1" => {
                    let m = require(m.or(cfg.m), "m")?;
                    let mu0 = mu0.or(cfg.mu0).unwrap_or(0);
                    let width = width.or(cfg.width).unwrap_or(5);
                    if m <= 0 {
                        return Err(CliError::Usage("torus form must be positive".into()));
                    }
                    let fam = torus_loop_family(m, mu0, width, n).map_err(|e| CliError::Usage(e.to_string()))?;
                    let grid: Vec<f64> = (0..points).map(|i| 0.999 * i as f64 / (points - 1) as f64).collect();
                    torus_window_covers(&fam, 0.0, 0.999).map_err(|e| CliError::Usage(e.to_string()))?;
                    (fam, grid, json!({ "group": "T1", "m": m, "mu0": mu0, "width": width, "cutoff": n, "points": points, "tol": tol }))
                }
                other => return Err(CliError::Usage(format!("loop-spectrum supports SU2 and T1, not {other}"))),
            };
            let mut r = ReportEnvelope::new("loop-spectrum", echo);
            let samples: Vec<Vec<f64>> = [grid[0], grid[grid.len() / 3], grid[grid.len() - 1]].iter().map(|&a| vec![a]).collect();
            let w = weitzenbock_loop(&fam, &samples).map_err(|e| CliError::Internal(e.to_string()))?;
            r.checks.push(CheckRecord::new("weitzenbock", w.scalar_defect.max(w.spread) < 1e-9, w.scalar_defect.max(w.spread), format!("constant {}", round(w.constant))));
            r.checks.push(CheckRecord::new("q-identity", fam.q.residual < 1e-10, fam.q.residual, ""));
            let rep = kernel_localization_loop(&fam, &grid, tol).map_err(|e| CliError::Internal(e.to_string()))?;
            r.checks.push(CheckRecord::new("support-found", !rep.supports.is_empty(), 0.0, ""));
            r.checks.push(CheckRecord::new("energy-gap", rep.gap_ok, 0.0, ""));
            r.payload = json!({
                "grade_dims": fam.grades.iter().map(|g| g.dim).collect::<Vec<_>>(),
                "weitzenbock_constant": round(w.constant),
                "supports": rep.supports.iter().map(|s| json!({
                    "a0": round(s.a0),
                    "kappa_value": round(s.kappa_value),
                    "angle": round(s.angle),
                    "kernel_dims": s.kernel_dims,
                    "kernel_in_w0": s.kernel_in_w0,
                })).collect::<Vec<_>>(),
            });
            let mut rows: Vec<PlotRow> =
                rep.grid.iter().zip(&rep.sigma_min).map(|(&p, &s)| PlotRow { parameter: p, sigma_min: s, kernel_dim: 0 }).collect();
            rows.extend(rep.supports.iter().map(|s| PlotRow { parameter: s.a0, sigma_min: s.sigma_min, kernel_dim: s.kernel_dims.iter().sum() }));
            write_csv(&csv.clone().or(cfg.csv), &rows)?;
            Ok(r)
        }
        Command::PhiMap { k } => {
            let k = level(require(k.or(cfg.k), "k")?)?;
            let p = phi_restriction_map(k);
            let mut r = ReportEnvelope::new("phi-map", json!({ "k": k }));
            r.checks.push(CheckRecord::new("rank", p.rank as i64 == k + 1, 0.0, format!("rank {}", p.rank)));
            r.payload = serde_json::to_value(&p).map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(r)
        }
        Command::Check { suite, seed } => {
            let suite = suite.clone().or(cfg.suite).unwrap_or_else(|| "all".into());
            let seed = seed.or(cfg.seed).unwrap_or(7);
            let ids = checks::parse_suite(&suite).map_err(CliError::Usage)?;
            let mut r = ReportEnvelope::new("check", json!({ "suite": suite, "seed": seed }));
            r.checks = checks::run_suite(&ids, seed, cli.timings);
            r.payload = Value::Array(ids.iter().map(|&i| json!({ "criterion": i, "name": checks::criterion_name(i) })).collect());
            Ok(r)
        }
    }
}
