//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain error, 2 tolerance breach (failed identity,
//! unmet convergence order, unconverged quadrature), 64 malformed flags.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use charpoly::asymptotics::{convergence_study, ArgScaling, ScalingPoint, StudyTarget};
use charpoly::cauchy::eval_cauchy;
use charpoly::correlators::{moment_negative, moment_positive, upsilon_plus, CorrelatorKind, CorrelatorSpec};
use charpoly::ensemble::{EnsembleConfig, Potential, QuadratureSpec};
use charpoly::equilibrium::{equilibrium_monomial, EquilibriumMeasure};
use charpoly::format::{
    fmt_complex, fmt_complex_list, fmt_f64, parse_complex, parse_complex_list, parse_pair, parse_usize_list,
};
use charpoly::identities::{run_suite, Suite};
use charpoly::kernels::{kernel_kn, kernel_w1, kernel_w2, kernel_w3, limit_kernel, KernelKind};
use charpoly::montecarlo::{estimate_correlator, SamplerSpec};
use charpoly::orthopoly::{build_recurrence, RecurrenceTable};
use charpoly::{Complex64, Error, ScaledComplex};

const DEFAULT_SEED: u64 = 20_240_601;

const FORMATS: &str = "\
Complex literals: a+bi, a-bi, a, bi, i (exponents allowed, e.g. 1e-3-2.5e-1i).
Lists are comma-separated: --mu 0.1+0.5i,-0.3+0.5i.
Potentials: --v-coeffs c1,c2,...,cd means V(x) = c1 x + c2 x^2 + ... + cd x^d.
Correlator specs for `mc --corr`: KIND;KEY=LIST;... with KIND in f1..f5,gen and
KEY in lambda, mu, eps, omega, e.g. \"f2;eps=0.1+0.5i;mu=0.2+0.5i\".
CSV output starts with a `# config: {...}` line, then a header row; floats carry
17 significant digits.";

#[derive(Parser, Debug)]
#[command(name = "charpoly", version, about = "Correlation functions of characteristic polynomials of random Hermitian matrices", after_help = FORMATS)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct Global {
    /// Potential coefficients c1,...,cd
    #[arg(long, global = true, default_value = "0,0.5", allow_hyphen_values = true)]
    v_coeffs: String,
    /// Matrix size N (also the kernel index for `kernel`)
    #[arg(long, global = true, default_value_t = 10)]
    n: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Quadrature tolerance
    #[arg(long, global = true, default_value_t = 1e-13)]
    tol: f64,
    /// Output format (each subcommand has its own default)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output file (standard output if absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
enum Command {
    /// Recurrence coefficients a_k, b_k and log c_k^2
    Ortho {
        /// Table depth (default N + 10)
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Cauchy transform h_k(eps)
    Cauchy {
        #[arg(long)]
        k: usize,
        /// Point as re,im (or a complex literal)
        #[arg(long, allow_hyphen_values = true)]
        eps: String,
    },
    /// Finite-N or limiting kernel at two arguments
    Kernel {
        #[arg(long, value_enum)]
        kind: KernelArg,
        /// Two complex literals
        #[arg(long, allow_hyphen_values = true)]
        args: String,
    },
    /// Exact correlation function
    Corr {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        mu: String,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        eps: String,
        /// Extra numerator arguments (f1)
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        lambda: String,
        /// Second denominator group (f3)
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        omega: String,
    },
    /// Monte-Carlo estimate of a correlator
    Mc {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
        /// KIND;KEY=LIST;...
        #[arg(long, allow_hyphen_values = true)]
        corr: String,
    },
    /// Equilibrium density of V = x^(2m) (or of --v-coeffs if --m is absent)
    Equilibrium {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Convergence of exact values to the scaling-limit prediction
    Scaling {
        #[arg(long, value_enum)]
        kind: ScalingArg,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value = "0.3+0.5i", allow_hyphen_values = true)]
        zeta: String,
        #[arg(long, default_value = "-0.2+0i", allow_hyphen_values = true)]
        eta: String,
        #[arg(long, default_value = "20,40,80,160")]
        n_list: String,
        /// Density used to place the arguments
        #[arg(long, value_enum, default_value_t = DensityArg::Finite)]
        density: DensityArg,
        /// Exit 2 if the fitted order falls below this
        #[arg(long)]
        min_order: Option<f64>,
    },
    /// Positive moments, or negative moments when --delta is given
    Moments {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Comma-separated δ values
        #[arg(long)]
        delta: Option<String>,
    },
    /// Brute-force identity checks
    Identities {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum KernelArg {
    W1,
    W2,
    W3,
    Kn,
    S1,
    S2,
    S3,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    F1,
    F2,
    F3,
    F4,
    F5,
    Gen,
}

impl From<KindArg> for CorrelatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::F1 => CorrelatorKind::F1,
            KindArg::F2 => CorrelatorKind::F2,
            KindArg::F3 => CorrelatorKind::F3,
            KindArg::F4 => CorrelatorKind::F4,
            KindArg::F5 => CorrelatorKind::F5,
            KindArg::Gen => CorrelatorKind::General,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScalingArg {
    F1,
    F2,
    F3,
    F4,
    F5,
    W1,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Direct,
    Metropolis,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum DensityArg {
    Finite,
    Limit,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum SuiteArg {
    Lagrange,
    Partition,
    Schur,
    Appendix,
    All,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Lib(Error::Parse(_)) | CliError::Usage(_) => 64,
            CliError::Lib(Error::NonConvergedQuadrature { .. }) => 2,
            CliError::Lib(_) | CliError::Io(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Rows plus scalar fields; rendered as CSV or JSON.
struct Report {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    fields: Map<String, Value>,
    default_format: Format,
    breach: bool,
}

impl Report {
    fn table(columns: Vec<&'static str>, rows: Vec<Vec<Value>>) -> Self {
        Self {
            columns,
            rows,
            fields: Map::new(),
            default_format: Format::Csv,
            breach: false,
        }
    }

    fn object(fields: Map<String, Value>) -> Self {
        Self {
            columns: Vec::new(),
            rows: Vec::new(),
            fields,
            default_format: Format::Json,
            breach: false,
        }
    }

    fn field(mut self, key: &str, v: Value) -> Self {
        self.fields.insert(key.into(), v);
        self
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => "nan".into(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    json!(x)
}

fn render(report: &Report, config: &Value, format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("config".into(), config.clone());
            obj.extend(report.fields.clone());
            if !report.columns.is_empty() {
                let rows: Vec<Value> = report
                    .rows
                    .iter()
                    .map(|r| Value::Object(report.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                obj.insert("rows".into(), Value::Array(rows));
            }
            let mut out = serde_json::to_vec_pretty(&Value::Object(obj)).map_err(std::io::Error::other)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = format!("# config: {config}\n").into_bytes();
            let mut w = csv::Writer::from_writer(&mut out);
            let map_err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
            if report.columns.is_empty() {
                let scalars: Vec<(&String, &Value)> =
                    report.fields.iter().filter(|(_, v)| !v.is_array() && !v.is_object()).collect();
                w.write_record(scalars.iter().map(|(k, _)| k.as_str())).map_err(map_err)?;
                w.write_record(scalars.iter().map(|(_, v)| cell(v))).map_err(map_err)?;
            } else {
                w.write_record(&report.columns).map_err(map_err)?;
                for r in &report.rows {
                    w.write_record(r.iter().map(cell)).map_err(map_err)?;
                }
            }
            w.flush()?;
            drop(w);
            Ok(out)
        }
    }
}

struct Ctx {
    v: Potential,
    cfg: EnsembleConfig,
    q: QuadratureSpec,
    seed: u64,
}

impl Ctx {
    fn table(&self, depth: usize) -> CliResult<RecurrenceTable> {
        Ok(build_recurrence(&self.cfg, depth, &self.q)?)
    }
}

fn scaled_fields(v: &ScaledComplex) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("value_log_mag".into(), num(v.log_mag));
    m.insert("value_phase".into(), json!({"re": v.phase.re, "im": v.phase.im}));
    let z = v.to_complex();
    m.insert("value".into(), if z.is_finite() { json!(fmt_complex(z)) } else { Value::Null });
    m
}

fn two_args(s: &str) -> CliResult<(Complex64, Complex64)> {
    match parse_complex_list(s)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(CliError::Usage(format!("--args needs two complex values, got {s:?}"))),
    }
}

fn ortho(ctx: &Ctx, k_max: Option<usize>) -> CliResult<Report> {
    let t = ctx.table(k_max.unwrap_or(ctx.cfg.n + 10))?;
    let rows = (0..t.k_max)
        .map(|k| vec![json!(k), num(t.a[k]), num(t.b[k]), num(t.log_c2[k])])
        .collect();
    Ok(Report::table(vec!["k", "a", "b", "log_c2"], rows))
}

fn cauchy(ctx: &Ctx, k: usize, eps: &str) -> CliResult<Report> {
    let e = if eps.contains(',') { parse_pair(eps)? } else { parse_complex(eps)? };
    let t = ctx.table(k + 2)?;
    let h = eval_cauchy(&t, &ctx.cfg, k, e, &ctx.q)?;
    Ok(Report::table(
        vec!["log_mag", "phase_re", "phase_im"],
        vec![vec![num(h.log_mag), num(h.phase.re), num(h.phase.im)]],
    ))
}

fn kernel(ctx: &Ctx, kind: KernelArg, args: &str) -> CliResult<Report> {
    let (a, b) = two_args(args)?;
    let n = ctx.cfg.n;
    let value = match kind {
        KernelArg::S1 | KernelArg::S2 | KernelArg::S3 => {
            let k = match kind {
                KernelArg::S1 => KernelKind::I,
                KernelArg::S2 => KernelKind::II,
                _ => KernelKind::III,
            };
            ScaledComplex::from(limit_kernel(k, a, b)?)
        }
        _ => {
            let t = ctx.table(n + 2)?;
            match kind {
                KernelArg::W1 => kernel_w1(&t, n, a, b)?,
                KernelArg::W2 => kernel_w2(&t, &ctx.cfg, n, a, b, &ctx.q)?,
                KernelArg::W3 => kernel_w3(&t, &ctx.cfg, n, a, b, &ctx.q)?,
                _ => {
                    if a.im != 0.0 || b.im != 0.0 {
                        return Err(Error::DomainViolation("kn takes real arguments".into()).into());
                    }
                    ScaledComplex::from_real(kernel_kn(&t, &ctx.cfg, n, a.re, b.re)?)
                }
            }
        }
    };
    let z = value.to_complex();
    let kind_name = serde_json::to_value(kind).unwrap_or(Value::Null);
    Ok(Report::table(
        vec!["kind", "n", "arg1", "arg2", "log_mag", "phase_re", "phase_im", "value_re", "value_im"],
        vec![vec![
            kind_name,
            json!(n),
            json!(fmt_complex(a)),
            json!(fmt_complex(b)),
            num(value.log_mag),
            num(value.phase.re),
            num(value.phase.im),
            num(z.re),
            num(z.im),
        ]],
    ))
}

fn build_spec(kind: CorrelatorKind, lambda: Vec<Complex64>, mu: Vec<Complex64>, eps: Vec<Complex64>, omega: Vec<Complex64>) -> CorrelatorSpec {
    CorrelatorSpec { kind, mu, eps, lambda, omega }
}

fn spec_args(spec: &CorrelatorSpec) -> Value {
    json!({
        "lambda": fmt_complex_list(&spec.lambda),
        "mu": fmt_complex_list(&spec.mu),
        "eps": fmt_complex_list(&spec.eps),
        "omega": fmt_complex_list(&spec.omega),
    })
}

fn depth_for(ctx: &Ctx, spec: &CorrelatorSpec) -> usize {
    ctx.cfg.n + spec.numerator().len() + spec.denominator().len() + 2
}

fn corr(ctx: &Ctx, kind: KindArg, lambda: &str, mu: &str, eps: &str, omega: &str) -> CliResult<Report> {
    let spec = build_spec(
        kind.into(),
        parse_complex_list(lambda)?,
        parse_complex_list(mu)?,
        parse_complex_list(eps)?,
        parse_complex_list(omega)?,
    );
    spec.validate()?;
    let t = ctx.table(depth_for(ctx, &spec))?;
    let v = spec.evaluate(&t, &ctx.cfg, &ctx.q)?;
    let mut fields = scaled_fields(&v);
    fields.insert("kind".into(), serde_json::to_value(kind).unwrap_or(Value::Null));
    fields.insert("args".into(), spec_args(&spec));
    Ok(Report::object(fields))
}

/// `KIND;KEY=LIST;...`
fn parse_corr_spec(s: &str) -> CliResult<CorrelatorSpec> {
    let mut parts = s.split(';');
    let kind = match parts.next().map(str::trim) {
        Some("f1") => CorrelatorKind::F1,
        Some("f2") => CorrelatorKind::F2,
        Some("f3") => CorrelatorKind::F3,
        Some("f4") => CorrelatorKind::F4,
        Some("f5") => CorrelatorKind::F5,
        Some("gen") => CorrelatorKind::General,
        other => return Err(CliError::Usage(format!("unknown correlator kind {other:?}"))),
    };
    let mut spec = build_spec(kind, vec![], vec![], vec![], vec![]);
    for p in parts.filter(|p| !p.trim().is_empty()) {
        let (key, list) = p
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected KEY=LIST, got {p:?}")))?;
        let vals = parse_complex_list(list)?;
        match key.trim() {
            "lambda" => spec.lambda = vals,
            "mu" => spec.mu = vals,
            "eps" => spec.eps = vals,
            "omega" => spec.omega = vals,
            k => return Err(CliError::Usage(format!("unknown key {k:?}"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn mc(ctx: &Ctx, samples: usize, method: MethodArg, corr: &str) -> CliResult<Report> {
    let spec = parse_corr_spec(corr)?;
    let sampler = match method {
        MethodArg::Direct => SamplerSpec::direct(ctx.seed),
        MethodArg::Metropolis => SamplerSpec::metropolis(ctx.seed),
    };
    let est = estimate_correlator(&ctx.cfg, &sampler, &spec, samples)?;
    let t = ctx.table(depth_for(ctx, &spec))?;
    let exact = spec.evaluate(&t, &ctx.cfg, &ctx.q)?.to_complex();
    let mut f = Map::new();
    f.insert("mean_re".into(), num(est.mean.re));
    f.insert("mean_im".into(), num(est.mean.im));
    f.insert("stderr".into(), num(est.stderr));
    f.insert("n".into(), json!(est.n_samples));
    f.insert("seed".into(), json!(est.seed));
    f.insert("acceptance".into(), num(est.acceptance_rate));
    f.insert("exact_re".into(), num(exact.re));
    f.insert("exact_im".into(), num(exact.im));
    f.insert("args".into(), spec_args(&spec));
    Ok(Report::object(f))
}

fn equilibrium(ctx: &Ctx, m: Option<usize>, grid: usize) -> CliResult<Report> {
    if grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    let meas = match m {
        Some(m) => equilibrium_monomial(m)?,
        None => EquilibriumMeasure::from_potential(&ctx.v)?,
    };
    let lim = 0.95 * meas.a;
    let mut rows = Vec::with_capacity(grid);
    for i in 0..grid {
        let x = -lim + 2.0 * lim * i as f64 / (grid - 1) as f64;
        let psi = meas.psi(x);
        let dv = meas.potential(x).1;
        let residual = (meas.hilbert(x)? - dv / (2.0 * std::f64::consts::PI)).abs();
        rows.push(vec![num(x), num(psi), num(dv / (2.0 * psi)), num(residual)]);
    }
    Ok(Report::table(vec!["x", "psi", "alpha", "residual"], rows)
        .field("m", json!(meas.m))
        .field("c", num(meas.c))
        .field("a", num(meas.a))
        .field("total_mass", num(meas.total_mass())))
}

#[allow(clippy::too_many_arguments)]
fn scaling(
    ctx: &Ctx,
    kind: ScalingArg,
    x: f64,
    zeta: &str,
    eta: &str,
    n_list: &str,
    density: DensityArg,
    min_order: Option<f64>,
) -> CliResult<Report> {
    let target = match kind {
        ScalingArg::F1 => StudyTarget::Correlator(CorrelatorKind::F1),
        ScalingArg::F2 => StudyTarget::Correlator(CorrelatorKind::F2),
        ScalingArg::F3 => StudyTarget::Correlator(CorrelatorKind::F3),
        ScalingArg::F4 => StudyTarget::Correlator(CorrelatorKind::F4),
        ScalingArg::F5 => StudyTarget::Correlator(CorrelatorKind::F5),
        ScalingArg::W1 => StudyTarget::KernelW1,
    };
    let ns = parse_usize_list(n_list)?;
    let pt = ScalingPoint::new(x, parse_complex_list(zeta)?, parse_complex_list(eta)?, ns[0]);
    let scaling = match density {
        DensityArg::Finite => ArgScaling::FiniteN,
        DensityArg::Limit => ArgScaling::Limit,
    };
    let study = convergence_study(&ctx.v, target, &pt, &ns, scaling, &ctx.q)?;
    let rows = study
        .rows
        .iter()
        .map(|r| vec![json!(r.n), num(r.abs_err), num(r.rel_err)])
        .collect();
    let mut rep = Report::table(vec!["N", "abs_err", "rel_err"], rows).field("fitted_order", num(study.fitted_order));
    rep.breach = min_order.is_some_and(|m| !(study.fitted_order >= m));
    Ok(rep)
}

fn moments(ctx: &Ctx, x: f64, k: usize, delta: Option<&str>) -> CliResult<Report> {
    let t = ctx.table(ctx.cfg.n + 2 * k + 2)?;
    match delta {
        None => {
            let m = moment_positive(&t, &ctx.cfg, x, k)?;
            Ok(Report::table(
                vec!["k", "log_exact", "log_asymptotic", "universal_ratio", "upsilon"],
                vec![vec![
                    json!(k),
                    num(m.exact.log_mag),
                    num(m.asymptotic.log_mag),
                    num(m.universal_ratio),
                    num(upsilon_plus(k)),
                ]],
            ))
        }
        Some(list) => {
            let ds = charpoly::format::parse_real_list(list)?;
            let mut rows = Vec::new();
            let mut logs = Vec::new();
            for &d in &ds {
                let m = moment_negative(&t, &ctx.cfg, x, d, k, &ctx.q)?;
                logs.push(m.exact.log_mag);
                rows.push(vec![
                    num(d),
                    num(m.exact.log_mag),
                    num(m.asymptotic.log_mag),
                    num((m.exact / m.asymptotic).to_complex().re),
                ]);
            }
            let mut rep = Report::table(vec!["delta", "log_exact", "log_asymptotic", "ratio"], rows);
            if ds.len() >= 2 {
                rep = rep.field("fitted_slope", num(log_slope(&ds, &logs)));
            }
            Ok(rep)
        }
    }
}

/// Least-squares slope of `y` against `log x`.
fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn identities(ctx: &Ctx, suite: SuiteArg) -> CliResult<Report> {
    let s = match suite {
        SuiteArg::Lagrange => Suite::Lagrange,
        SuiteArg::Partition => Suite::Partition,
        SuiteArg::Schur => Suite::Schur,
        SuiteArg::Appendix => Suite::Appendix,
        SuiteArg::All => Suite::All,
    };
    let reports = run_suite(s, ctx.seed)?;
    let all_pass = reports.iter().all(|r| r.passed());
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                json!(r.name),
                num(r.residual),
                num(r.tolerance()),
                json!(r.n_terms),
                num(r.max_term),
                num(r.tail_bound),
                json!(r.passed()),
            ]
        })
        .collect();
    let mut rep = Report::table(
        vec!["name", "residual", "tolerance", "n_terms", "max_term", "tail_bound", "passed"],
        rows,
    )
    .field("all_passed", json!(all_pass));
    rep.default_format = Format::Json;
    rep.breach = !all_pass;
    Ok(rep)
}

fn run(cli: &Cli) -> CliResult<bool> {
    let g = &cli.global;
    if g.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let v: Potential = g.v_coeffs.parse()?;
    let ctx = Ctx {
        cfg: EnsembleConfig::new(v.clone(), g.n)?,
        v,
        q: QuadratureSpec::with_tol(g.tol)?,
        seed: g.seed,
    };
    let report = match &cli.command {
        Command::Ortho { k_max } => ortho(&ctx, *k_max)?,
        Command::Cauchy { k, eps } => cauchy(&ctx, *k, eps)?,
        Command::Kernel { kind, args } => kernel(&ctx, *kind, args)?,
        Command::Corr { kind, mu, eps, lambda, omega } => corr(&ctx, *kind, lambda, mu, eps, omega)?,
        Command::Mc { samples, method, corr } => mc(&ctx, *samples, *method, corr)?,
        Command::Equilibrium { m, grid } => equilibrium(&ctx, *m, *grid)?,
        Command::Scaling { kind, x, zeta, eta, n_list, density, min_order } => {
            scaling(&ctx, *kind, *x, zeta, eta, n_list, *density, *min_order)?
        }
        Command::Moments { x, k, delta } => moments(&ctx, *x, *k, delta.as_deref())?,
        Command::Identities { suite } => identities(&ctx, *suite)?,
    };
    // `out` and `threads` do not affect results and stay out of the record
    let mut config = json!({
        "v_coeffs": ctx.v.to_string(),
        "n": g.n,
        "seed": g.seed,
        "tol": g.tol,
    });
    if let (Value::Object(c), Ok(Value::Object(sub))) = (&mut config, serde_json::to_value(&cli.command)) {
        c.extend(sub);
    }
    let bytes = render(&report, &config, g.format.unwrap_or(report.default_format))?;
    match &g.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(!report.breach)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("tolerance breach");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
