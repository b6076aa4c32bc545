use std::path::Path;

use berryfield::berry::{
    build_eigenbundle, electric_curvature, geometric_phase, magnetic_curvature, plaquette_chern,
    potentials_eigenstate, potentials_full_wavefunction, Conventions, EigenBundle, GaugeChoice,
    CONVENTIONS,
};
use berryfield::electro::{
    find_monopoles, run_verification_suite, velocity_field, Region, VerificationReport,
};
use berryfield::grid::{BoxSurface, ParameterGrid, TimeAxis, VectorField};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{
    ensure_dir, float, write_json, write_scalar_csv, write_table, write_vector_csv,
};

/// What a command produced. `pass` decides the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    /// File names relative to the output directory, in write order.
    pub files: Vec<String>,
}

pub fn run(command: Command, config: &RunConfig, output_dir: &Path) -> Result<Outcome, CliError> {
    ensure_dir(output_dir)?;
    match command {
        Command::Fields => cmd_fields(config, output_dir),
        Command::Verify => cmd_verify(config, output_dir),
        Command::Monopole => cmd_monopole(config, output_dir),
        Command::Sweep => cmd_sweep(config, output_dir),
    }
}

/// SHA-256 of the configuration with the command and output directory
/// removed, serialised as JSON.
pub fn config_hash(config: &RunConfig) -> Result<String, CliError> {
    let mut canonical = config.clone();
    canonical.command = None;
    canonical.output_dir = Default::default();
    let bytes = serde_json::to_vec(&canonical)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn bundle(config: &RunConfig, grid: &ParameterGrid) -> Result<EigenBundle, CliError> {
    let family = config.family()?;
    Ok(build_eigenbundle(
        family.as_ref(),
        grid,
        config.band,
        &config.bundle_options(),
    )?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_sha256: String,
    model: &'a str,
    band: usize,
    hbar: f64,
    grid: ParameterGrid,
    gauge: GaugeChoice,
    conventions: Conventions,
    files: &'a [String],
}

pub fn cmd_fields(config: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let grid = config.parameter_grid()?;
    let family = config.family()?;
    let bundle = bundle(config, &grid)?;
    let hbar = config.hbar;
    let eigen = potentials_eigenstate(&bundle);
    let full = potentials_full_wavefunction(&bundle, hbar)?;
    let gamma = geometric_phase(&bundle)?.gamma;
    let velocity = velocity_field(family.as_ref(), &bundle, hbar)?;

    let mut files = Vec::new();
    let mut vector = |name: &str, f: &VectorField| -> Result<(), CliError> {
        let file = format!("{name}.csv");
        write_vector_csv(&dir.join(&file), f)?;
        files.push(file);
        Ok(())
    };
    vector("A_n", &eigen.a)?;
    vector("A_psi", &full.a)?;
    vector("Omega_n", &electric_curvature(&eigen)?)?;
    vector("B_n", &magnetic_curvature(&eigen))?;
    vector("B_psi", &magnetic_curvature(&full))?;
    vector("v_n", &velocity)?;
    for (name, f) in [
        ("Phi_n", &eigen.phi),
        ("Phi_psi", &full.phi),
        ("gamma", &gamma),
    ] {
        let file = format!("{name}.csv");
        write_scalar_csv(&dir.join(&file), f)?;
        files.push(file);
    }
    files.sort();

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: Command::Fields.as_str(),
        config_sha256: config_hash(config)?,
        model: &config.model.name,
        band: config.band,
        hbar,
        grid,
        gauge: bundle.gauge,
        conventions: CONVENTIONS,
        files: &files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    files.push("manifest.json".into());
    Ok(Outcome { pass: true, files })
}

pub fn verification_report(
    config: &RunConfig,
    grid: &ParameterGrid,
    region: Option<Region>,
) -> Result<VerificationReport, CliError> {
    let family = config.family()?;
    let mut options = config.suite_options();
    options.region = region;
    let mut report = run_verification_suite(family.as_ref(), grid, config.band, &options)?;
    report.model.parameters = config.reported_parameters();
    Ok(report)
}

pub fn cmd_verify(config: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let grid = config.parameter_grid()?;
    let report = verification_report(config, &grid, None)?;
    write_json(&dir.join("report.json"), &report)?;
    Ok(Outcome {
        pass: report.pass,
        files: vec!["report.json".into()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonopoleRecord {
    pub center: [f64; 3],
    #[serde(rename = "box")]
    pub bounds: BoxSurface,
    pub nodes: usize,
    /// `None` when no closed box around the cluster avoids every degeneracy.
    pub charge: Option<f64>,
    pub quantization_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernRecord {
    pub normal: usize,
    pub plane: usize,
    pub tau: usize,
    pub chern: Option<f64>,
    pub integer_error: Option<f64>,
}

/// Charges of every degenerate cluster at the configured time sample, and
/// plaquette Chern numbers of each plane whose two axes are periodic.
pub fn monopole_scan(
    config: &RunConfig,
) -> Result<(Vec<MonopoleRecord>, Vec<ChernRecord>), CliError> {
    let grid = config.parameter_grid()?;
    let bundle = bundle(config, &grid)?;
    let m = &config.monopole;
    let sites = find_monopoles(&bundle, m.tau, m.margin)?;
    let monopoles = sites
        .into_iter()
        .map(|s| MonopoleRecord {
            center: s.center,
            bounds: s.bounds,
            nodes: s.nodes,
            charge: s.charge.map(|c| c.charge),
            quantization_error: s.charge.map(|c| c.quantization_error),
        })
        .collect();
    let periodic = grid.periodic();
    let mut cherns = Vec::new();
    for normal in 0..3 {
        if !(periodic[(normal + 1) % 3] && periodic[(normal + 2) % 3]) {
            continue;
        }
        for plane in 0..grid.shape()[normal] {
            let c = plaquette_chern(&bundle, normal, plane, m.tau).ok();
            cherns.push(ChernRecord {
                normal,
                plane,
                tau: m.tau,
                chern: c.as_ref().map(|c| c.chern),
                integer_error: c.as_ref().map(|c| c.integer_error()),
            });
        }
    }
    Ok((monopoles, cherns))
}

pub fn cmd_monopole(config: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let (monopoles, cherns) = monopole_scan(config)?;
    let m = &config.monopole;
    let mut pass = monopoles
        .iter()
        .all(|s| s.quantization_error.is_some_and(|e| e <= m.charge_tol));
    write_json(&dir.join("monopoles.json"), &monopoles)?;
    let mut files = vec!["monopoles.json".to_string()];
    if !cherns.is_empty() {
        pass &= cherns
            .iter()
            .all(|c| c.integer_error.is_some_and(|e| e <= m.chern_tol));
        write_json(&dir.join("chern.json"), &cherns)?;
        files.push("chern.json".into());
    }
    Ok(Outcome { pass, files })
}

/// Grid of refinement level `level`: spacing and time step halved `level`
/// times, keeping the end points (or the period, on periodic axes).
pub fn refine(
    grid: &ParameterGrid,
    level: u32,
    space: bool,
    time: bool,
) -> Result<ParameterGrid, CliError> {
    let factor = 1usize << level;
    let mut shape = grid.shape();
    let mut spacing = grid.spacing();
    if space {
        for a in 0..3 {
            if shape[a] == 1 {
                continue;
            }
            shape[a] = if grid.periodic()[a] {
                shape[a] * factor
            } else {
                (shape[a] - 1) * factor + 1
            };
            spacing[a] /= factor as f64;
        }
    }
    let axis = grid.time_axis().map(|t| {
        if time && t.nt > 1 {
            TimeAxis {
                t0: t.t0,
                dt: t.dt / factor as f64,
                nt: (t.nt - 1) * factor + 1,
            }
        } else {
            t
        }
    });
    Ok(ParameterGrid::new(
        grid.origin(),
        spacing,
        shape,
        grid.periodic(),
        axis,
    )?)
}

/// Least-squares slope of `log(err)` against `log(h)`, with `h` halving at
/// each level. `None` unless every residual is positive and finite.
pub fn fitted_order(errors: &[f64]) -> Option<f64> {
    if errors.len() < 2 || errors.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return None;
    }
    let n = errors.len() as f64;
    let xs: Vec<f64> = (0..errors.len())
        .map(|l| -(l as f64) * std::f64::consts::LN_2)
        .collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Runs the suite at every level on the interior box of the coarsest grid.
pub fn sweep_reports(config: &RunConfig) -> Result<Vec<VerificationReport>, CliError> {
    config.check_sweep()?;
    let coarse = config.parameter_grid()?;
    let region = Region::interior_of(&coarse);
    let s = &config.sweep;
    (0..s.levels as u32)
        .map(|level| {
            let grid = refine(&coarse, level, s.refine_space, s.refine_time)?;
            verification_report(config, &grid, Some(region))
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn cmd_sweep(config: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let reports = sweep_reports(config)?;
    let mut rows = Vec::new();
    for (level, report) in reports.iter().enumerate() {
        let g = report.grid;
        let h = (0..3)
            .filter(|&a| g.shape()[a] > 1)
            .map(|a| g.spacing()[a])
            .fold(f64::INFINITY, f64::min);
        let dt = g.time_axis().filter(|t| t.nt > 1).map(|t| t.dt);
        for r in &report.residuals {
            rows.push(vec![
                level.to_string(),
                opt(h.is_finite().then_some(h)),
                opt(dt),
                r.name.clone(),
                float(r.max_abs),
                float(r.l2),
                float(r.noise_floor),
                opt(r.tolerance),
                r.applicable.to_string(),
                r.pass.to_string(),
            ]);
        }
    }
    write_table(
        &dir.join("sweep.csv"),
        &[
            "level",
            "h_min",
            "dt",
            "identity",
            "max_abs",
            "l2",
            "noise_floor",
            "tolerance",
            "applicable",
            "pass",
        ],
        &rows,
    )?;

    let mut orders = Vec::new();
    for name in VerificationReport::IDENTITIES {
        let stats: Vec<_> = reports.iter().filter_map(|r| r.residual(name)).collect();
        let applicable = stats.len() == reports.len() && stats.iter().all(|s| s.applicable);
        let max: Vec<f64> = stats.iter().map(|s| s.max_abs).collect();
        let l2: Vec<f64> = stats.iter().map(|s| s.l2).collect();
        let fit = |v: &[f64]| {
            if applicable {
                opt(fitted_order(v))
            } else {
                String::new()
            }
        };
        orders.push(vec![name.to_string(), fit(&max), fit(&l2)]);
    }
    write_table(
        &dir.join("sweep_orders.csv"),
        &["identity", "order_max_abs", "order_l2"],
        &orders,
    )?;

    let pass = reports.iter().all(|r| r.pass);
    Ok(Outcome {
        pass,
        files: vec!["sweep.csv".into(), "sweep_orders.csv".into()],
    })
}
