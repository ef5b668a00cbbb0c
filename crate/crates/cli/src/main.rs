use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use feynprop::config::{OutputFormat, RunConfig};
use feynprop::dyson::{self, Potential, PropagatorQuery, QuadratureSpec, SeriesResult};
use feynprop::freeprop;
use feynprop::heat::{self, HeatQuery};
use feynprop::morse::{self, GreenQuery, MorseEigenstate, MorseParams, MorseSeriesQuery};
use feynprop::{Complex64, Error};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "feynprop", version, about = "Perturbative propagators for exponential-class potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct FormatFlags {
    /// Emit JSON.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV with a header row.
    #[arg(long)]
    csv: bool,
}

impl FormatFlags {
    fn resolve(self, fallback: OutputFormat) -> OutputFormat {
        if self.json {
            OutputFormat::Json
        } else if self.csv {
            OutputFormat::Csv
        } else {
            fallback
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Series propagator K(x,t|x0,t0) for the configured query.
    Propagate {
        #[arg(long)]
        config: PathBuf,
        /// Target bound on the relative truncation error.
        #[arg(long, default_value_t = 1e-8, allow_hyphen_values = true)]
        tol: f64,
        /// Use this order instead of choosing one from the tail bound.
        #[arg(long)]
        order: Option<usize>,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Free kernel, with and without the configured field.
    Free {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Morse potential utilities.
    Morse {
        #[command(subcommand)]
        what: MorseCommand,
    },
    /// Heat-continuation terms against the closed-form lower bound.
    HeatDivergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Atom location used by the lower bound; defaults to the smallest positive one.
        #[arg(long, allow_hyphen_values = true)]
        a0: Option<f64>,
        #[arg(long, default_value_t = 200)]
        check_to: usize,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Finite-difference Schrödinger residual of the truncated series.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 1e-4, allow_hyphen_values = true)]
        dt: f64,
        /// Pass threshold on defect / |K|.
        #[arg(long, default_value_t = 5e-4, allow_hyphen_values = true)]
        rel_tol: f64,
    },
    /// Propagator over a parameter range, one CSV row per point.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1e-8, allow_hyphen_values = true)]
        tol: f64,
        #[command(flatten)]
        fmt: FormatFlags,
    },
}

#[derive(Args, Clone, Copy)]
struct MorseArgs {
    #[arg(long, allow_hyphen_values = true)]
    g: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
}

impl MorseArgs {
    fn params(self) -> feynprop::Result<MorseParams> {
        MorseParams::new(self.g, self.gamma, self.a)
    }
}

#[derive(Subcommand)]
enum MorseCommand {
    /// Bound-state energies.
    Spectrum {
        #[command(flatten)]
        p: MorseArgs,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Normalized eigenfunction sampled on a uniform grid.
    Eigen {
        #[command(flatten)]
        p: MorseArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Green function G(x', x; E) in both closed forms.
    Green {
        #[command(flatten)]
        p: MorseArgs,
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        energy_im: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        xp: f64,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Series-factor terms from the two-atom expansion (natural units).
    Series {
        #[command(flatten)]
        p: MorseArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 32)]
        points: usize,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// |f(ω) − f(−ω)|/|f(ω)| for small ω.
    Nonanalytic {
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        nu_im: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001,0.0001")]
        omegas: Vec<f64>,
        #[command(flatten)]
        fmt: FormatFlags,
    },
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum SweepParam {
    G,
    T,
    X,
    X0,
    Hbar,
    Mass,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::G => "g",
            SweepParam::T => "t",
            SweepParam::X => "x",
            SweepParam::X0 => "x0",
            SweepParam::Hbar => "hbar",
            SweepParam::Mass => "mass",
        }
    }
}

/// What a command produced; the exit code follows from the error, if any.
struct Output {
    text: String,
    path: Option<String>,
    error: Option<Error>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, path: None, error: None }
    }
}

fn cplx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn load(path: &PathBuf) -> feynprop::Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
    RunConfig::parse(&text)
}

fn series_json(r: &SeriesResult) -> Value {
    json!({
        "schema": SCHEMA,
        "value": cplx(r.value),
        "terms": r.terms.iter().map(|&t| cplx(t)).collect::<Vec<_>>(),
        "order_used": r.order_used,
        "tail_bound": r.tail_bound,
        "quad_error": r.quad_error_estimate,
    })
}

fn series_csv(r: &SeriesResult) -> String {
    let mut s = String::from("n,re,im\n");
    for (n, t) in r.terms.iter().enumerate() {
        s.push_str(&format!("{n},{:?},{:?}\n", t.re, t.im));
    }
    s.push_str(&format!("total,{:?},{:?}\n", r.value.re, r.value.im));
    s
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn evaluate(
    q: &PropagatorQuery,
    tol: f64,
    order: Option<usize>,
    quad: &QuadratureSpec,
) -> feynprop::Result<SeriesResult> {
    match order {
        Some(n) => dyson::propagator_fixed_order(q, n, quad),
        None => dyson::propagator(q, tol, quad),
    }
}

fn propagate(config: &PathBuf, tol: f64, order: Option<usize>, fmt: FormatFlags) -> feynprop::Result<Output> {
    let cfg = load(config)?;
    let q = cfg.propagator_query()?;
    let (res, err) = match evaluate(&q, tol, order, &cfg.quadrature) {
        Ok(r) => (r, None),
        Err(Error::ConvergenceBudgetExceeded { order, tail_bound, tol, partial }) => {
            let r = (*partial).clone();
            (r, Some(Error::ConvergenceBudgetExceeded { order, tail_bound, tol, partial }))
        }
        Err(e) => return Err(e),
    };
    let text = match fmt.resolve(cfg.output.format) {
        OutputFormat::Json => pretty(&series_json(&res)),
        OutputFormat::Csv => series_csv(&res),
    };
    Ok(Output { text, path: cfg.output.path.clone(), error: err })
}

fn free(config: &PathBuf, fmt: FormatFlags) -> feynprop::Result<Output> {
    let cfg = load(config)?;
    let pair = cfg.pair()?;
    let theta = cfg.theta()?;
    let k0 = freeprop::free_kernel(&pair)?;
    let tt = freeprop::t_transform_free(&theta, &pair)?;
    let corr = freeprop::field_correction(&theta, &pair)?;
    let kf = freeprop::free_kernel_with_field(&theta, &pair)?;
    let text = match fmt.resolve(cfg.output.format) {
        OutputFormat::Json => pretty(&json!({
            "schema": SCHEMA,
            "free_kernel": cplx(k0),
            "t_transform": cplx(tt),
            "field_correction": cplx(corr),
            "kernel_with_field": cplx(kf),
        })),
        OutputFormat::Csv => {
            let mut s = String::from("quantity,re,im\n");
            for (name, z) in
                [("free_kernel", k0), ("t_transform", tt), ("field_correction", corr), ("kernel_with_field", kf)]
            {
                s.push_str(&format!("{name},{:?},{:?}\n", z.re, z.im));
            }
            s
        }
    };
    Ok(Output { text, path: cfg.output.path.clone(), error: None })
}

fn morse_cmd(what: &MorseCommand) -> feynprop::Result<Output> {
    match *what {
        MorseCommand::Spectrum { p, fmt } => {
            let e = morse::morse_spectrum(&p.params()?)?;
            Ok(Output::ok(match fmt.resolve(OutputFormat::Csv) {
                OutputFormat::Csv => {
                    let mut s = String::from("n,energy\n");
                    for (n, v) in e.iter().enumerate() {
                        s.push_str(&format!("{n},{v:?}\n"));
                    }
                    s
                }
                OutputFormat::Json => pretty(&json!({ "schema": SCHEMA, "energies": e })),
            }))
        }
        MorseCommand::Eigen { p, n, from, to, steps, fmt } => {
            let st = MorseEigenstate::new(n, &p.params()?)?;
            let xs = grid(from, to, steps)?;
            let vals: Vec<f64> = xs.iter().map(|&x| st.value(x)).collect();
            Ok(Output::ok(match fmt.resolve(OutputFormat::Csv) {
                OutputFormat::Csv => {
                    let mut s = String::from("x,psi\n");
                    for (x, v) in xs.iter().zip(&vals) {
                        s.push_str(&format!("{x:?},{v:?}\n"));
                    }
                    s
                }
                OutputFormat::Json => pretty(&json!({
                    "schema": SCHEMA,
                    "n": n,
                    "energy": st.energy,
                    "norm_correction": st.norm_correction,
                    "x": xs,
                    "psi": vals,
                })),
            }))
        }
        MorseCommand::Green { p, energy, energy_im, x, xp, fmt } => {
            let q = GreenQuery::new(p.params()?, Complex64::new(energy, energy_im))?;
            let w = morse::green_whittaker(xp, x, &q)?;
            let k = morse::green_kummer(xp, x, &q)?;
            Ok(Output::ok(match fmt.resolve(OutputFormat::Json) {
                OutputFormat::Json => pretty(&json!({ "schema": SCHEMA, "whittaker": cplx(w), "kummer": cplx(k) })),
                OutputFormat::Csv => {
                    format!("form,re,im\nwhittaker,{:?},{:?}\nkummer,{:?},{:?}\n", w.re, w.im, k.re, k.im)
                }
            }))
        }
        MorseCommand::Series { p, x, x0, t, t0, order, points, fmt } => {
            let q = MorseSeriesQuery::new(p.params()?, x, x0, t, t0)?;
            let quad = QuadratureSpec { points, ..QuadratureSpec::default() };
            let mut rows = Vec::new();
            for n in 0..=order {
                rows.push((n, morse::morse_series_term(n, &q, &quad)?, morse::morse_coefficient_bound(n, &q)));
            }
            Ok(Output::ok(match fmt.resolve(OutputFormat::Csv) {
                OutputFormat::Csv => {
                    let mut s = String::from("n,re,im,bound\n");
                    for (n, z, b) in &rows {
                        s.push_str(&format!("{n},{:?},{:?},{b:?}\n", z.re, z.im));
                    }
                    s
                }
                OutputFormat::Json => pretty(&json!({
                    "schema": SCHEMA,
                    "terms": rows.iter().map(|r| cplx(r.1)).collect::<Vec<_>>(),
                    "bounds": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
                })),
            }))
        }
        MorseCommand::Nonanalytic { gamma, nu, nu_im, ref omegas, fmt } => {
            let rows = morse::nonanalyticity_ratio(Complex64::new(nu, nu_im), gamma, omegas)?;
            Ok(Output::ok(match fmt.resolve(OutputFormat::Csv) {
                OutputFormat::Csv => {
                    let mut s = String::from("omega,ratio\n");
                    for (w, r) in &rows {
                        s.push_str(&format!("{w:?},{r:?}\n"));
                    }
                    s
                }
                OutputFormat::Json => pretty(&json!({
                    "schema": SCHEMA,
                    "omega": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                    "ratio": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
                })),
            }))
        }
    }
}

fn grid(from: f64, to: f64, steps: usize) -> feynprop::Result<Vec<f64>> {
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidArgument("grid needs steps >= 1 and finite end points".into()));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps).map(|i| from + (to - from) * i as f64 / (steps - 1) as f64).collect())
}

fn heat_divergence(
    config: &PathBuf,
    n_max: usize,
    a0: Option<f64>,
    check_to: usize,
    fmt: FormatFlags,
) -> feynprop::Result<Output> {
    let cfg = load(config)?;
    let measure = match cfg.potential()? {
        Potential::Static(m) => m,
        Potential::TimeDependent(_) => {
            return Err(Error::Unsupported("heat continuation needs a static measure".into()))
        }
    };
    let q = &cfg.query;
    if q.x.len() != 1 {
        return Err(Error::InvalidArgument("heat continuation is one-dimensional".into()));
    }
    let hq = HeatQuery::new(q.x[0], q.x0[0], q.t, q.t0, cfg.coupling(), q.hbar, q.mass, measure)?;
    let a0 = match a0 {
        Some(v) => v,
        None => hq
            .default_a0()
            .or_else(|| hq.reflected().default_a0())
            .ok_or_else(|| Error::InvalidArgument("no atom with nonzero location".into()))?,
    };
    let ln10 = std::f64::consts::LN_10;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let term = heat::heat_term(n, &hq, &cfg.quadrature)?;
        let lb = heat::ln_divergence_lower_bound(n, &hq, a0)? / ln10;
        rows.push((n, term.log10_abs(), term.rel_error, lb));
    }
    let cert = heat::divergence_threshold(&hq, a0, check_to)?;
    let text = match fmt.resolve(cfg.output.format) {
        OutputFormat::Csv => {
            let mut s = String::from("n,log10_abs_term,rel_error,log10_lower_bound\n");
            for (n, t, e, l) in &rows {
                s.push_str(&format!("{n},{t:?},{e:?},{l:?}\n"));
            }
            s
        }
        OutputFormat::Json => pretty(&json!({
            "schema": SCHEMA,
            "a0": a0,
            "n": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            "log10_abs_term": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            "rel_error": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
            "log10_lower_bound": rows.iter().map(|r| r.3).collect::<Vec<_>>(),
            "threshold": cert.threshold,
            "checked_up_to": cert.checked_up_to,
        })),
    };
    Ok(Output { text, path: cfg.output.path.clone(), error: None })
}

fn verify(config: &PathBuf, order: usize, h: f64, dt: f64, rel_tol: f64) -> feynprop::Result<Output> {
    let cfg = load(config)?;
    let q = cfg.propagator_query()?;
    let r = dyson::schrodinger_residual(&q, order, h, dt, &cfg.quadrature)?;
    let rel = r.defect / r.kernel_modulus;
    let text = pretty(&json!({
        "schema": SCHEMA,
        "order": order,
        "residual": cplx(r.residual),
        "predicted": cplx(r.predicted),
        "defect": r.defect,
        "kernel_modulus": r.kernel_modulus,
        "relative_defect": rel,
        "pass": rel <= rel_tol,
    }));
    Ok(Output { text, path: cfg.output.path.clone(), error: None })
}

fn apply(cfg: &mut RunConfig, param: SweepParam, v: f64) {
    let q = &mut cfg.query;
    match param {
        SweepParam::G => q.g = Some(Complex64::new(v, 0.0)),
        SweepParam::T => q.t = v,
        SweepParam::X => q.x[0] = v,
        SweepParam::X0 => q.x0[0] = v,
        SweepParam::Hbar => q.hbar = v,
        SweepParam::Mass => q.mass = v,
    }
}

fn sweep(
    config: &PathBuf,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
    tol: f64,
    fmt: FormatFlags,
) -> feynprop::Result<Output> {
    let base = load(config)?;
    let values = grid(from, to, steps)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut first_err = None;
    for &v in &values {
        let mut cfg = base.clone();
        apply(&mut cfg, param, v);
        let q = cfg.propagator_query()?;
        let r = match dyson::propagator(&q, tol, &cfg.quadrature) {
            Ok(r) => r,
            Err(Error::ConvergenceBudgetExceeded { order, tail_bound, tol, partial }) => {
                let r = (*partial).clone();
                first_err.get_or_insert(Error::ConvergenceBudgetExceeded { order, tail_bound, tol, partial });
                r
            }
            Err(e) => return Err(e),
        };
        rows.push((v, r));
    }
    let name = param.name();
    let text = match fmt.resolve(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let mut s = format!("{name},re,im,abs,order_used,tail_bound,quad_error\n");
            for (v, r) in &rows {
                s.push_str(&format!(
                    "{v:?},{:?},{:?},{:?},{},{:?},{:?}\n",
                    r.value.re,
                    r.value.im,
                    r.value.norm(),
                    r.order_used,
                    r.tail_bound,
                    r.quad_error_estimate
                ));
            }
            s
        }
        OutputFormat::Json => pretty(&json!({
            "schema": SCHEMA,
            "param": name,
            "points": rows.iter().map(|(v, r)| json!({ "param": v, "result": series_json(r) })).collect::<Vec<_>>(),
        })),
    };
    Ok(Output { text, path: base.output.path.clone(), error: first_err })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) => 1,
        Error::ConvergenceBudgetExceeded { .. } => 3,
        _ => 2,
    }
}

fn emit(out: &Output) -> std::io::Result<()> {
    match &out.path {
        Some(p) => fs::write(p, &out.text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::Config { line: 0, message } => format!("config error: {message}"),
        Error::Config { line, message } => format!("config error at line {line}: {message}"),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Propagate { config, tol, order, fmt } => propagate(config, *tol, *order, *fmt),
        Command::Free { config, fmt } => free(config, *fmt),
        Command::Morse { what } => morse_cmd(what),
        Command::HeatDivergence { config, n_max, a0, check_to, fmt } => {
            heat_divergence(config, *n_max, *a0, *check_to, *fmt)
        }
        Command::Verify { config, order, h, dt, rel_tol } => verify(config, *order, *h, *dt, *rel_tol),
        Command::Sweep { config, param, from, to, steps, tol, fmt } => {
            sweep(config, *param, *from, *to, *steps, *tol, *fmt)
        }
    };
    match result {
        Ok(out) => {
            if let Err(e) = emit(&out) {
                eprintln!("feynprop: cannot write output: {e}");
                return ExitCode::from(1);
            }
            match &out.error {
                Some(e) => {
                    eprintln!("feynprop: {}", describe(e));
                    ExitCode::from(exit_code(e))
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("feynprop: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
