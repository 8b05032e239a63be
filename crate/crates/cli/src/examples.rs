//! Full reproductions of the four worked examples.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::Path;

use fredet::determinants::{det_from_eigs, det_p_matrix};
use fredet::discretize::{assemble, assemble_singular, DiscreteOperator, Scheme};
use fredet::kernels::{registry, KernelSpec};
use fredet::linalg::{eigenvalues, trace_powers};
use fredet::reference::{abs_pow_iter2_det2, bernoulli_det, green_det, sign_det2, sign_det_sq};
use fredet::spectra::{fit_order, locate_eigs, Disc};
use fredet::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, CliResult, Stage};
use crate::output::{complex, io_error, root_json, roots_table, Cell, Summary, Table};

const SWEEP: [usize; 6] = [10, 20, 40, 80, 160, 320];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kernel(name: &str) -> CliResult<KernelSpec> {
    registry(name, &BTreeMap::new()).stage("kernel")
}

fn build(spec: &KernelSpec, scheme: Scheme, n: usize, zero_diag: bool) -> CliResult<DiscreteOperator> {
    assemble(spec, scheme, n, zero_diag).stage("assemble")
}

/// `det_p(I - zK)`.
fn d(op: &DiscreteOperator, p: usize, z: Complex64) -> CliResult<Complex64> {
    det_p_matrix(&op.matrix, p, -z).stage("determinant")
}

fn slope(ns: &[usize], errs: &[f64]) -> CliResult<f64> {
    let ns: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    Ok(fit_order(&ns, errs).stage("fit")?.slope)
}

/// Error sweeps of `det(I - zK_N)` for several schemes and points, written
/// to `convergence.csv`; slopes land in the summary as `scheme@label`.
fn convergence(
    dir: &Path,
    summary: &mut Summary,
    spec: &KernelSpec,
    schemes: &[Scheme],
    points: &[(&str, f64, Complex64)],
) -> CliResult<()> {
    let mut table = Table::new(&[
        "scheme", "n", "z_re", "z_im", "value_re", "value_im", "ref_re", "ref_im", "abs_err",
    ]);
    for &scheme in schemes {
        let values: Vec<Vec<Complex64>> = SWEEP
            .par_iter()
            .map(|&n| {
                let op = build(spec, scheme, n, false)?;
                points.iter().map(|&(_, z, _)| d(&op, 1, c(z, 0.0))).collect()
            })
            .collect::<CliResult<_>>()?;
        for (k, &(label, z, exact)) in points.iter().enumerate() {
            let mut errs = Vec::new();
            for (i, &n) in SWEEP.iter().enumerate() {
                let v = values[i][k];
                let err = (v - exact).norm();
                errs.push(err);
                let mut row = vec![scheme.name().into(), Cell::from(n)];
                complex(&mut row, c(z, 0.0));
                complex(&mut row, v);
                complex(&mut row, exact);
                row.push(err.into());
                table.push(row);
            }
            summary
                .slopes
                .insert(format!("{scheme}@{label}"), json!(slope(&SWEEP, &errs)?));
        }
    }
    table.save(&dir.join("convergence.csv"))
}

fn eigen_table(dir: &Path, summary: &mut Summary, op: &DiscreteOperator, p: usize, region: Disc) -> CliResult<()> {
    let roots = locate_eigs(op, p, region, -1.0).stage("locate")?;
    summary.roots = roots.iter().map(root_json).collect();
    roots_table(&roots).save(&dir.join("eigenvalues.csv"))
}

fn example1(dir: &Path, summary: &mut Summary) -> CliResult<()> {
    let spec = kernel("green")?;
    let z1 = PI * PI;
    let points = [("pi^2", z1, green_det(c(z1, 0.0))), ("1", 1.0, green_det(c(1.0, 0.0)))];
    convergence(dir, summary, &spec, &[Scheme::Ngl, Scheme::Ncc], &points)?;
    let op = build(&spec, Scheme::Ngl, 128, false)?;
    eigen_table(dir, summary, &op, 1, Disc::new(c(50.0, 0.0), 49.0))
}

fn example2(dir: &Path, summary: &mut Summary) -> CliResult<()> {
    let spec = kernel("bernoulli")?;
    let z1 = 4.0 * PI * PI;
    let points = [
        ("4pi^2", z1, bernoulli_det(c(z1, 0.0))),
        ("1", 1.0, bernoulli_det(c(1.0, 0.0))),
    ];
    convergence(dir, summary, &spec, &[Scheme::Ngl, Scheme::Ncc], &points)?;
    let op = build(&spec, Scheme::Ngl, 128, false)?;
    eigen_table(dir, summary, &op, 1, Disc::new(c(z1, 0.0), 10.0))
}

fn example3(dir: &Path, summary: &mut Summary) -> CliResult<()> {
    let spec = kernel("sign")?;
    let ns = [25usize, 50, 100, 200, 400];
    let grid: Vec<Complex64> = (0..9)
        .flat_map(|i| (0..9).map(move |j| c(-1.0 + 0.25 * i as f64, -1.0 + 0.25 * j as f64)))
        .collect();
    let z0 = c(0.0, FRAC_PI_4);
    let one = c(1.0, 0.0);
    let half = c(0.5, 0.0);

    struct Run {
        grid: Vec<Complex64>,
        at_one: Complex64,
        at_z0: Complex64,
        at_half: Complex64,
        tr2: Complex64,
    }
    let runs: Vec<Run> = ns
        .par_iter()
        .map(|&n| {
            let op = build(&spec, Scheme::Rect, n, true)?;
            Ok(Run {
                grid: grid.iter().map(|&z| d(&op, 2, z)).collect::<CliResult<_>>()?,
                at_one: d(&op, 2, one)?,
                at_z0: d(&op, 2, z0)?,
                at_half: d(&op, 2, half)?,
                tr2: trace_powers(&op.matrix, 2)[1],
            })
        })
        .collect::<CliResult<_>>()?;

    let mut gt = Table::new(&[
        "n", "z_re", "z_im", "value_re", "value_im", "ref_re", "ref_im", "abs_err",
    ]);
    let mut ct = Table::new(&[
        "n",
        "grid_max_err",
        "err_at_1",
        "abs_d_at_i_pi_4",
        "square_identity_err_at_0.5",
        "trace_k2",
    ]);
    let (mut g_err, mut e_one, mut e_z0) = (Vec::new(), Vec::new(), Vec::new());
    for (&n, run) in ns.iter().zip(&runs) {
        let mut worst = 0.0f64;
        for (&z, &v) in grid.iter().zip(&run.grid) {
            let exact = sign_det2(z);
            let err = (v - exact).norm();
            worst = worst.max(err);
            let mut row = vec![Cell::from(n)];
            complex(&mut row, z);
            complex(&mut row, v);
            complex(&mut row, exact);
            row.push(err.into());
            gt.push(row);
        }
        let err_one = (run.at_one - sign_det2(one)).norm();
        let sq = (run.at_half * run.at_half - sign_det_sq(half)).norm();
        g_err.push(worst);
        e_one.push(err_one);
        e_z0.push(run.at_z0.norm());
        ct.push(vec![
            Cell::from(n),
            worst.into(),
            err_one.into(),
            run.at_z0.norm().into(),
            sq.into(),
            run.tr2.re.into(),
        ]);
        summary
            .residuals
            .insert(format!("square_identity@0.5/n={n}"), json!(sq));
    }
    summary.slopes.insert("grid_max".into(), json!(slope(&ns, &g_err)?));
    summary.slopes.insert("z=1".into(), json!(slope(&ns, &e_one)?));
    summary.slopes.insert("z=i*pi/4".into(), json!(slope(&ns, &e_z0)?));
    summary
        .residuals
        .insert("trace_k2/n=400".into(), json!(runs.last().map(|r| r.tr2.re)));
    gt.save(&dir.join("grid.csv"))?;
    ct.save(&dir.join("convergence.csv"))?;

    let op = build(&spec, Scheme::Rect, 200, true)?;
    eigen_table(dir, summary, &op, 2, Disc::new(c(0.0, 0.0), 1.0))
}

fn example4(dir: &Path, summary: &mut Summary) -> CliResult<()> {
    let n = 64;
    let sing = assemble_singular(&kernel("abs_pow")?, n).stage("assemble")?;
    let eigs = eigenvalues(&sing.matrix).stage("eigenvalues")?;
    let five = &eigs[..5.min(eigs.len())];
    let iter = kernel("abs_pow_iter2")?;
    let k2 = build(&iter, Scheme::Rect, n, true)?;

    let mut et = Table::new(&["lambda_re", "lambda_im", "z_re", "z_im"]);
    for l in five {
        let mut row = Vec::new();
        complex(&mut row, *l);
        complex(&mut row, l.inv());
        et.push(row);
    }
    et.save(&dir.join("eigenvalues.csv"))?;

    let mut it = Table::new(&[
        "z",
        "d3_pair_re",
        "d3_pair_im",
        "d3_full_pair_re",
        "d3_full_pair_im",
        "det2_iter_re",
        "det2_iter_im",
        "residual",
        "residual_full",
    ]);
    let (mut worst, mut worst_full) = (0.0f64, 0.0f64);
    for k in 0..=11 {
        let z = k as f64 / 11.0;
        let pair = det_from_eigs(five, 3, c(-z, 0.0)).value * det_from_eigs(five, 3, c(z, 0.0)).value;
        let full = d(&sing, 3, c(z, 0.0))? * d(&sing, 3, c(-z, 0.0))?;
        let d2 = d(&k2, 2, c(z * z, 0.0))?;
        let (r, rf) = ((pair - d2).norm(), (full - d2).norm());
        worst = worst.max(r);
        worst_full = worst_full.max(rf);
        let mut row = vec![Cell::from(z)];
        complex(&mut row, pair);
        complex(&mut row, full);
        complex(&mut row, d2);
        row.push(r.into());
        row.push(rf.into());
        it.push(row);
    }
    it.save(&dir.join("identity_grid.csv"))?;
    summary
        .residuals
        .insert("five_eig_pair_vs_iterated".into(), json!(worst));
    summary
        .residuals
        .insert("full_pair_vs_iterated".into(), json!(worst_full));

    let z = 0.1;
    let exact = abs_pow_iter2_det2(c(z * z, 0.0)).stage("reference")?;
    let ns = [32usize, 64, 128, 256];
    let vals: Vec<Complex64> = ns
        .par_iter()
        .map(|&m| d(&build(&iter, Scheme::Rect, m, true)?, 2, c(z * z, 0.0)))
        .collect::<CliResult<_>>()?;
    let mut ct = Table::new(&["n", "value_re", "value_im", "ref_re", "ref_im", "abs_err"]);
    let mut errs = Vec::new();
    for (&m, &v) in ns.iter().zip(&vals) {
        let err = (v - exact).norm();
        errs.push(err);
        let mut row = vec![Cell::from(m)];
        complex(&mut row, v);
        complex(&mut row, exact);
        row.push(err.into());
        ct.push(row);
    }
    ct.save(&dir.join("convergence.csv"))?;
    summary
        .slopes
        .insert("iterated@z=0.1".into(), json!(slope(&ns, &errs)?));
    Ok(())
}

/// Runs example `id` into `dir` and returns the summary, which is also
/// saved as `summary.json`.
pub fn cmd_example(id: u8, dir: &Path) -> CliResult<Summary> {
    if !(1..=4).contains(&id) {
        return Err(CliError::Config(format!("example id must be 1, 2, 3 or 4, got {id}")));
    }
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut summary = Summary::new("example", json!({"id": id, "out": dir.display().to_string()}));
    match id {
        1 => example1(dir, &mut summary)?,
        2 => example2(dir, &mut summary)?,
        3 => example3(dir, &mut summary)?,
        _ => example4(dir, &mut summary)?,
    }
    summary.save(&dir.join("summary.json"))?;
    Ok(summary)
}
