//! Turning command-line flags and kernel files into a validated [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fredet::discretize::Scheme;
use fredet::kernels::{registry, Expr, KernelFn, KernelForm, KernelSpec};
use fredet::reference::{analytic_det, ANALYTIC_NAMES};
use fredet::spectra::Disc;
use fredet::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Built-in kernel: green, bernoulli, sign, abs_pow, abs_pow_iter2.
    #[arg(long, conflicts_with = "kernel_file")]
    pub kernel: Option<String>,
    /// JSON kernel description.
    #[arg(long, value_name = "FILE")]
    pub kernel_file: Option<PathBuf>,
    /// Singularity exponent for abs_pow.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// ngl, rect, ncc or singular (default: singular for weakly singular kernels, ngl otherwise).
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long, conflicts_with = "n_sweep")]
    pub n: Option<usize>,
    /// Sizes A, 2A, 4A, ... up to B.
    #[arg(long, value_name = "A:B:geometric")]
    pub n_sweep: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Orientation of det_p(I + sign z K).
    #[arg(long, default_value = "-", allow_hyphen_values = true)]
    pub sign: String,
    #[arg(long)]
    pub zero_diag: bool,
    /// One point, `RE,IM`; components may use pi, e.g. `pi^2,0`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    pub z: Vec<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "RE0,RE1,IM0,IM1,STEPS")]
    pub grid: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_name = "CRE,CIM,RAD")]
    pub region: Option<String>,
    /// Analytic reference name, or `none`.
    #[arg(long = "ref", value_name = "NAME|none")]
    pub reference: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefChoice {
    Unset,
    Off,
    Named(String),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub scheme: Scheme,
    pub sizes: Vec<usize>,
    pub swept: bool,
    pub p: usize,
    pub sign: f64,
    pub zero_diag: bool,
    pub points: Vec<Complex64>,
    pub region: Option<Disc>,
    pub reference: RefChoice,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> CliResult<Self> {
        let kernel = load_kernel(args)?;
        let scheme = match &args.scheme {
            Some(s) => Scheme::parse(s).map_err(|e| config(format!("--scheme: {e}")))?,
            None if kernel.alpha().is_some() => Scheme::Singular,
            None => Scheme::Ngl,
        };
        let (sizes, swept) = match (&args.n, &args.n_sweep) {
            (_, Some(s)) => (parse_sweep(s)?, true),
            (Some(n), None) => (vec![*n], false),
            (None, None) => (vec![64], false),
        };
        if sizes.iter().any(|&n| n < 2) {
            return Err(config("--n: matrix size must be at least 2"));
        }
        if args.p == 0 {
            return Err(config("--p: determinant order must be at least 1"));
        }
        let sign = parse_sign(&args.sign)?;
        let mut points = Vec::new();
        for z in &args.z {
            points.push(parse_complex(z).map_err(|e| config(format!("--z: {e}")))?);
        }
        if let Some(g) = &args.grid {
            points = parse_grid(g)?;
        }
        let region = args.region.as_deref().map(parse_region).transpose()?;
        let reference = match args.reference.as_deref() {
            None => RefChoice::Unset,
            Some("none") => RefChoice::Off,
            Some(name) => RefChoice::Named(name.to_string()),
        };
        let cfg = RunConfig {
            kernel,
            scheme,
            sizes,
            swept,
            p: args.p,
            sign,
            zero_diag: args.zero_diag,
            points,
            region,
            reference,
            seed: args.seed,
            out: args.out.clone(),
            format: args.format,
        };
        cfg.check_scheme()?;
        if let RefChoice::Named(name) = &cfg.reference {
            check_reference(name, cfg.p)?;
        }
        Ok(cfg)
    }

    fn check_scheme(&self) -> CliResult<()> {
        let singular = self.kernel.alpha().is_some();
        match self.scheme {
            Scheme::Singular if !singular => {
                return Err(config(format!(
                    "--scheme singular needs a weakly singular kernel; `{}` has none",
                    self.kernel.name
                )))
            }
            Scheme::Ngl | Scheme::Rect | Scheme::Ncc if singular => {
                return Err(config(format!(
                    "kernel `{}` is weakly singular; use --scheme singular",
                    self.kernel.name
                )))
            }
            _ => {}
        }
        if self.zero_diag && !matches!(self.scheme, Scheme::Ngl | Scheme::Rect) {
            return Err(config(format!(
                "--zero-diag applies to ngl and rect, not {}",
                self.scheme
            )));
        }
        if self.scheme == Scheme::Rect && self.p >= 2 && self.kernel.is_split() && !self.zero_diag {
            return Err(config(format!(
                "rect with p >= 2 on the diagonal-discontinuous kernel `{}` needs --zero-diag \
                 (Hilbert's trick: the diagonal of K_N is dropped, as the regularized determinant does for tr K)",
                self.kernel.name
            )));
        }
        Ok(())
    }

    /// The reference to compare against: the explicit `--ref`, else the
    /// kernel's own analytic entry, else an error pointing at `--ref none`.
    pub fn require_reference(&self) -> CliResult<Option<String>> {
        match &self.reference {
            RefChoice::Named(r) => return Ok(Some(r.clone())),
            RefChoice::Off => return Ok(None),
            RefChoice::Unset => {}
        }
        let name = &self.kernel.name;
        if ANALYTIC_NAMES.contains(&name.as_str()) && check_reference(name, self.p).is_ok() {
            return Ok(Some(name.clone()));
        }
        Err(config(format!(
            "no analytic reference for kernel `{name}` at p = {}; pass --ref NAME or --ref none to omit the error columns",
            self.p
        )))
    }

    /// `z -> sign * z`, the argument of the internal `det_p(I + wK)`.
    pub fn internal(&self, z: Complex64) -> Complex64 {
        self.sign * z
    }

    pub fn describe(&self) -> Value {
        json!({
            "kernel": self.kernel.name,
            "domain": [self.kernel.domain.0, self.kernel.domain.1],
            "alpha": self.kernel.alpha(),
            "scheme": self.scheme.name(),
            "n": self.sizes,
            "p": self.p,
            "sign": if self.sign > 0.0 { "+" } else { "-" },
            "zero_diag": self.zero_diag,
            "z": self.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "region": self.region.map(|d| json!({"center": [d.center.re, d.center.im], "radius": d.radius})),
            "reference": match &self.reference {
                RefChoice::Named(r) => Some(r.as_str()),
                _ => None,
            },
            "seed": self.seed,
        })
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_reference(name: &str, p: usize) -> CliResult<()> {
    if !ANALYTIC_NAMES.contains(&name) {
        return Err(config(format!(
            "--ref: unknown reference `{name}` (known: {}, none)",
            ANALYTIC_NAMES.join(", ")
        )));
    }
    analytic_det(name, p, Complex64::new(0.0, 0.0))
        .map(|_| ())
        .map_err(|e| config(format!("--ref: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelFile {
    name: Option<String>,
    expr: Option<ExprBlock>,
    domain: Option<[f64; 2]>,
    alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExprBlock {
    k: Option<String>,
    k1: Option<String>,
    k2: Option<String>,
    h: Option<String>,
}

fn load_kernel(args: &RunArgs) -> CliResult<KernelSpec> {
    match (&args.kernel, &args.kernel_file) {
        (Some(name), None) => registry_kernel(name, args.alpha),
        (None, Some(path)) => {
            if args.alpha.is_some() {
                return Err(config("--alpha: give alpha inside the kernel file"));
            }
            kernel_from_file(path)
        }
        _ => Err(config("one of --kernel or --kernel-file is required")),
    }
}

fn registry_kernel(name: &str, alpha: Option<f64>) -> CliResult<KernelSpec> {
    let mut params = BTreeMap::new();
    if let Some(a) = alpha {
        if name != "abs_pow" {
            return Err(config(format!("--alpha only applies to abs_pow, not `{name}`")));
        }
        params.insert("alpha".to_string(), a);
    }
    registry(name, &params).map_err(|e| config(format!("--kernel: {e}")))
}

pub fn kernel_from_file(path: &Path) -> CliResult<KernelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("--kernel-file {}: {e}", path.display())))?;
    let file: KernelFile =
        serde_json::from_str(&text).map_err(|e| config(format!("--kernel-file {}: {e}", path.display())))?;
    kernel_from_block(file).map_err(|e| match e {
        CliError::Config(m) => config(format!("--kernel-file {}: {m}", path.display())),
        other => other,
    })
}

fn kernel_from_block(file: KernelFile) -> CliResult<KernelSpec> {
    let parse = |src: &str| KernelFn::from_expr(src).map_err(|e| config(format!("expression `{src}`: {e}")));
    match (file.name, file.expr) {
        (Some(name), None) => {
            let spec = registry_kernel(&name, file.alpha)?;
            if let Some([a, b]) = file.domain {
                if (a, b) != spec.domain {
                    return Err(config(format!(
                        "kernel `{name}` lives on [{}, {}], not [{a}, {b}]",
                        spec.domain.0, spec.domain.1
                    )));
                }
            }
            Ok(spec)
        }
        (None, Some(block)) => {
            let [a, b] = file.domain.ok_or_else(|| config("`domain` is required with `expr`"))?;
            let form = match (block.k, block.k1, block.k2, block.h, file.alpha) {
                (Some(k), None, None, None, None) => KernelForm::Smooth(parse(&k)?),
                (None, Some(k1), Some(k2), None, None) => KernelForm::Split {
                    lower: parse(&k1)?,
                    upper: parse(&k2)?,
                },
                (Some(h), None, None, None, Some(alpha)) | (None, None, None, Some(h), Some(alpha)) => {
                    KernelForm::SingularFactored { alpha, h: parse(&h)? }
                }
                (None, None, None, Some(_), None) => return Err(config("`h` needs `alpha`")),
                _ => return Err(config("`expr` takes `k`, or `k1` and `k2`, or `h` with `alpha`")),
            };
            KernelSpec::new("custom", (a, b), form).map_err(|e| config(e.to_string()))
        }
        _ => Err(config("exactly one of `name` and `expr` is required")),
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let e = Expr::parse(t).map_err(|e| format!("`{t}`: {e}"))?;
    let v = e.eval(0.0, 0.0);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{t}` is not a finite number"))
    }
}

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse_real(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse_real(re)?, parse_real(im)?)),
        _ => Err(format!("expected RE,IM, got `{s}`")),
    }
}

pub fn parse_grid(s: &str) -> CliResult<Vec<Complex64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 5 {
        return Err(config(format!("--grid: expected RE0,RE1,IM0,IM1,STEPS, got `{s}`")));
    }
    let mut b = [0.0; 4];
    for (slot, p) in b.iter_mut().zip(&parts) {
        *slot = parse_real(p).map_err(|e| config(format!("--grid: {e}")))?;
    }
    let steps: usize = parts[4]
        .trim()
        .parse()
        .map_err(|_| config(format!("--grid: STEPS must be a positive integer, got `{}`", parts[4])))?;
    if steps == 0 || steps > 10_000 {
        return Err(config("--grid: STEPS must lie in 1..=10000"));
    }
    let at = |lo: f64, hi: f64, k: usize| {
        if steps == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (steps - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            out.push(Complex64::new(at(b[0], b[1], i), at(b[2], b[3], j)));
        }
    }
    Ok(out)
}

pub fn parse_region(s: &str) -> CliResult<Disc> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(config(format!("--region: expected CRE,CIM,RAD, got `{s}`")));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| parse_real(p))
        .collect::<Result<_, _>>()
        .map_err(|e| config(format!("--region: {e}")))?;
    if v[2].is_nan() || v[2] <= 0.0 {
        return Err(config("--region: radius must be positive"));
    }
    Ok(Disc::new(Complex64::new(v[0], v[1]), v[2]))
}

pub fn parse_sweep(s: &str) -> CliResult<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || config(format!("--n-sweep: expected A:B:geometric with 2 <= A <= B, got `{s}`"));
    if parts.len() != 3 || parts[2] != "geometric" {
        return Err(bad());
    }
    let a: usize = parts[0].parse().map_err(|_| bad())?;
    let b: usize = parts[1].parse().map_err(|_| bad())?;
    if a < 2 || b < a {
        return Err(bad());
    }
    let mut out = vec![a];
    while out.last().unwrap() * 2 <= b {
        out.push(out.last().unwrap() * 2);
    }
    Ok(out)
}

pub fn parse_sign(s: &str) -> CliResult<f64> {
    match s.trim() {
        "+" | "+1" | "1" => Ok(1.0),
        "-" | "-1" => Ok(-1.0),
        other => Err(config(format!("--sign: expected + or -, got `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_double() {
        assert_eq!(parse_sweep("10:320:geometric").unwrap(), vec![10, 20, 40, 80, 160, 320]);
        assert_eq!(parse_sweep("8:20:geometric").unwrap(), vec![8, 16]);
        assert!(parse_sweep("1:8:geometric").is_err());
        assert!(parse_sweep("8:4:geometric").is_err());
        assert!(parse_sweep("8:16:linear").is_err());
    }

    #[test]
    fn complex_and_grid() {
        let z = parse_complex("pi^2,-1").unwrap();
        assert!((z.re - std::f64::consts::PI.powi(2)).abs() < 1e-14 && z.im == -1.0);
        assert_eq!(parse_complex("0.5").unwrap(), Complex64::new(0.5, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        let g = parse_grid("-1,1,-1,1,3").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], Complex64::new(-1.0, -1.0));
        assert_eq!(g[8], Complex64::new(1.0, 1.0));
        assert!(parse_grid("0,1,0,1,0").is_err());
        assert!(parse_region("0,0,-1").is_err());
    }

    #[test]
    fn kernel_blocks() {
        let split: KernelFile =
            serde_json::from_str(r#"{"expr": {"k1": "y*(1-x)", "k2": "x*(1-y)"}, "domain": [0, 1]}"#).unwrap();
        let spec = kernel_from_block(split).unwrap();
        assert!(spec.is_split());
        assert!((spec.eval(0.7, 0.3).unwrap() - 0.09).abs() < 1e-15);

        let sing: KernelFile =
            serde_json::from_str(r#"{"expr": {"h": "1"}, "domain": [-1, 1], "alpha": 0.5}"#).unwrap();
        assert_eq!(kernel_from_block(sing).unwrap().alpha(), Some(0.5));

        let named: KernelFile = serde_json::from_str(r#"{"name": "green"}"#).unwrap();
        assert_eq!(kernel_from_block(named).unwrap().name, "green");

        let both: KernelFile = serde_json::from_str(r#"{"name": "green", "expr": {"k": "1"}}"#).unwrap();
        assert!(kernel_from_block(both).is_err());
        let no_domain: KernelFile = serde_json::from_str(r#"{"expr": {"k": "1"}}"#).unwrap();
        assert!(kernel_from_block(no_domain).is_err());
        assert!(serde_json::from_str::<KernelFile>(r#"{"nme": "green"}"#).is_err());
    }
}
