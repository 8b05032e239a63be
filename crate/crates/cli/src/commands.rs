//! The `det`, `converge`, `eigs` and `identity` subcommands.

use std::collections::BTreeMap;

use clap::ValueEnum;
use fredet::determinants::{det_from_eigs, det_p, det_series_at, identity_residuals, Route, IDENTITY_NAMES};
use fredet::discretize::{assemble, DiscreteOperator, Scheme};
use fredet::kernels::{registry, REGISTRY_NAMES};
use fredet::linalg::{eigenvalues, ComplexMatrix};
use fredet::reference::analytic_det;
use fredet::spectra::{fit_order, locate_eigs};
use fredet::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult, Stage};
use crate::output::{complex, emit, root_json, roots_table, Cell, Summary, Table};

/// Residuals above this fail `identity`.
pub const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Lu,
    Series,
    Eig,
    All,
}

impl RouteArg {
    fn routes(self) -> Vec<Route> {
        match self {
            RouteArg::Lu => vec![Route::LuTrace],
            RouteArg::Series => vec![Route::Series],
            RouteArg::Eig => vec![Route::EigProduct],
            RouteArg::All => vec![Route::LuTrace, Route::Series, Route::EigProduct],
        }
    }
}

pub fn operator(cfg: &RunConfig, n: usize) -> CliResult<DiscreteOperator> {
    assemble(&cfg.kernel, cfg.scheme, n, cfg.zero_diag).stage("assemble")
}

/// `d(z) = det_p(I + sign z K)` of the reference kernel.
fn reference_value(cfg: &RunConfig, name: &str, z: Complex64) -> CliResult<Complex64> {
    analytic_det(name, cfg.p, -cfg.internal(z)).stage("reference")
}

fn require_points(cfg: &RunConfig, cmd: &str) -> CliResult<()> {
    if cfg.points.is_empty() {
        return Err(CliError::Config(format!("{cmd} needs --z or --grid")));
    }
    Ok(())
}

pub fn cmd_det(cfg: &RunConfig, route: RouteArg) -> CliResult<(Table, Summary)> {
    require_points(cfg, "det")?;
    let reference = match &cfg.reference {
        crate::config::RefChoice::Named(r) => Some(r.clone()),
        _ => None,
    };
    let routes = route.routes();
    let mut header = vec!["n", "z_re", "z_im", "value_re", "value_im", "route"];
    if reference.is_some() {
        header.extend(["ref_re", "ref_im", "abs_err"]);
    }
    let mut table = Table::new(&header);
    for &n in &cfg.sizes {
        let op = operator(cfg, n)?;
        let eigs = if routes.contains(&Route::EigProduct) {
            Some(eigenvalues(&op.matrix).stage("eigenvalues")?)
        } else {
            None
        };
        let rows: Vec<Vec<Vec<Cell>>> = cfg
            .points
            .par_iter()
            .map(|&z| {
                let w = cfg.internal(z);
                let exact = reference.as_deref().map(|r| reference_value(cfg, r, z)).transpose()?;
                let mut out = Vec::new();
                for &route in &routes {
                    let value = match route {
                        Route::LuTrace => det_p(&op, cfg.p, w).stage("determinant")?.value,
                        Route::Series => det_series_at(&op.matrix, cfg.p, w).stage("series")?.value,
                        Route::EigProduct => det_from_eigs(eigs.as_deref().unwrap_or(&[]), cfg.p, w).value,
                    };
                    let mut row = vec![Cell::from(n)];
                    complex(&mut row, z);
                    complex(&mut row, value);
                    row.push(route.name().into());
                    if let Some(e) = exact {
                        complex(&mut row, e);
                        row.push((value - e).norm().into());
                    }
                    out.push(row);
                }
                Ok(out)
            })
            .collect::<CliResult<_>>()?;
        for r in rows.into_iter().flatten() {
            table.push(r);
        }
    }
    Ok((table, Summary::new("det", cfg.describe())))
}

pub fn cmd_converge(cfg: &RunConfig) -> CliResult<(Table, Summary)> {
    require_points(cfg, "converge")?;
    if cfg.sizes.len() < 2 {
        return Err(CliError::Config(
            "converge needs --n-sweep with at least two sizes".into(),
        ));
    }
    let reference = cfg.require_reference()?;
    let values: Vec<Vec<Complex64>> = cfg
        .sizes
        .par_iter()
        .map(|&n| {
            let op = operator(cfg, n)?;
            cfg.points
                .iter()
                .map(|&z| Ok(det_p(&op, cfg.p, cfg.internal(z)).stage("determinant")?.value))
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let exact: Option<Vec<Complex64>> = reference
        .as_deref()
        .map(|r| cfg.points.iter().map(|&z| reference_value(cfg, r, z)).collect())
        .transpose()?;

    let mut header = vec!["n", "z_re", "z_im", "value_re", "value_im"];
    if exact.is_some() {
        header.extend(["ref_re", "ref_im", "abs_err"]);
    }
    let mut table = Table::new(&header);
    let mut summary = Summary::new("converge", cfg.describe());
    for (k, &z) in cfg.points.iter().enumerate() {
        let mut errs = Vec::new();
        for (i, &n) in cfg.sizes.iter().enumerate() {
            let v = values[i][k];
            let mut row = vec![Cell::from(n)];
            complex(&mut row, z);
            complex(&mut row, v);
            if let Some(ex) = &exact {
                complex(&mut row, ex[k]);
                let err = (v - ex[k]).norm();
                row.push(err.into());
                errs.push(err);
            }
            table.push(row);
        }
        if !errs.is_empty() {
            let ns: Vec<f64> = cfg.sizes.iter().map(|&n| n as f64).collect();
            let fit = fit_order(&ns, &errs).stage("fit")?;
            summary.slopes.insert(point_key(z), json!(fit.slope));
        }
    }
    Ok((table, summary))
}

pub fn point_key(z: Complex64) -> String {
    format!("z={},{}", z.re, z.im)
}

pub fn cmd_eigs(cfg: &RunConfig) -> CliResult<(Table, Summary)> {
    let region = cfg
        .region
        .ok_or_else(|| CliError::Config("eigs needs --region CRE,CIM,RAD".into()))?;
    if cfg.swept {
        return Err(CliError::Config("eigs takes a single --n, not --n-sweep".into()));
    }
    let op = operator(cfg, cfg.sizes[0])?;
    let roots = locate_eigs(&op, cfg.p, region, cfg.sign).stage("locate")?;
    let mut summary = Summary::new("eigs", cfg.describe());
    summary.roots = roots.iter().map(root_json).collect();
    Ok((roots_table(&roots), summary))
}

#[derive(Debug, Clone)]
pub struct IdentityConfig {
    pub trials: usize,
    pub n: usize,
    pub seed: u64,
}

fn disk_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(
        radius * rng.gen::<f64>().sqrt(),
        std::f64::consts::TAU * rng.gen::<f64>(),
    )
}

/// A matrix with entries uniform in the disc of radius `1/sqrt(n)`.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let r = 1.0 / (n as f64).sqrt();
    let data = (0..n * n).map(|_| disk_point(rng, r)).collect();
    ComplexMatrix::new(n, data).expect("square data")
}

fn kernel_operator(name: &str, n: usize) -> fredet::Result<DiscreteOperator> {
    let spec = registry(name, &BTreeMap::new())?;
    match name {
        "abs_pow" => assemble(&spec, Scheme::Singular, n, false),
        "abs_pow_iter2" => assemble(&spec, Scheme::Rect, n, true),
        _ => assemble(&spec, Scheme::Ngl, n, false),
    }
}

/// Maximum residual of each identity on random matrices and on the
/// registry kernels. Fails after writing the report if any exceeds
/// [`IDENTITY_TOL`].
pub fn cmd_identity(ic: &IdentityConfig) -> CliResult<(Table, Summary)> {
    if ic.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    if ic.n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ic.seed);
    let cases: Vec<(ComplexMatrix, Complex64)> = (0..ic.trials)
        .map(|_| {
            let a = random_matrix(&mut rng, ic.n);
            (a, disk_point(&mut rng, 2.0))
        })
        .collect();
    let mut worst: BTreeMap<(String, &'static str), f64> = BTreeMap::new();
    let mut fold = |source: &str, res: BTreeMap<&'static str, f64>| {
        for (name, r) in res {
            let e = worst.entry((source.to_string(), name)).or_insert(0.0);
            *e = e.max(r);
        }
    };
    let random: Vec<BTreeMap<&'static str, f64>> = cases
        .par_iter()
        .map(|(a, z)| identity_residuals(a, *z))
        .collect::<fredet::Result<_>>()
        .stage("identity")?;
    for r in random {
        fold("random", r);
    }
    let kn = ic.n.max(8);
    let zs = [
        Complex64::new(0.5, 0.0),
        Complex64::new(0.3, 0.4),
        Complex64::new(-0.2, 0.9),
    ];
    for name in REGISTRY_NAMES {
        let op = kernel_operator(name, kn).stage("assemble")?;
        for &z in &zs {
            fold(name, identity_residuals(&op.matrix, z).stage("identity")?);
        }
    }

    let mut table = Table::new(&["source", "identity", "max_residual"]);
    let mut summary = Summary::new(
        "identity",
        json!({"trials": ic.trials, "n": ic.n, "kernel_n": kn, "seed": ic.seed, "tolerance": IDENTITY_TOL}),
    );
    let mut failures = Vec::new();
    let mut sources: Vec<&str> = vec!["random"];
    sources.extend(REGISTRY_NAMES);
    for source in sources {
        for id in IDENTITY_NAMES {
            let r = worst[&(source.to_string(), id)];
            table.push(vec![source.into(), id.into(), r.into()]);
            summary.residuals.insert(format!("{source}/{id}"), json!(r));
            if r.is_nan() || r > IDENTITY_TOL {
                failures.push(format!("{source}/{id} = {r:.3e}"));
            }
        }
    }
    summary.residuals.insert("passed".into(), json!(failures.is_empty()));
    Ok((table, summary))
}

/// Writes the output and turns identity failures into an error.
pub fn finish_identity(
    table: &Table,
    summary: &Summary,
    format: Format,
    out: Option<&std::path::Path>,
) -> CliResult<()> {
    emit(table, summary, format, out)?;
    let failed: Vec<String> = summary
        .residuals
        .iter()
        .filter(|(_, v)| v.as_f64().is_some_and(|r| r.is_nan() || r > IDENTITY_TOL))
        .map(|(k, v)| format!("{k} = {v}"))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Identity(format!(
            "residuals above {IDENTITY_TOL:e}: {}",
            failed.join(", ")
        )))
    }
}
