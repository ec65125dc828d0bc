use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pvmra::algnum::{pvnorm_sequence, AlgebraicElement, MinPolyContext};
use pvmra::linalg::Rational;
use pvmra::qlat::{self, fmt17, WindowVector};
use pvmra::refine::{self, MaskSpec, RefinementMask};
use pvmra::{mra, subst, Error, ErrorClass, Tolerances};
use serde::Serialize;
use serde_json::json;

mod output;

use output::{to_json, Output};

#[derive(Parser, Debug)]
#[command(name = "pvmra", version, about = "Pisot quasilattices, substitutions and refinable distributions")]
struct Cli {
    /// Directory that receives output files in addition to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled estimators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tolerance override KEY=VALUE; also accepted as --tol-KEY=VALUE.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pisot numbers and their powers
    #[command(subcommand)]
    Pv(PvCmd),
    /// Cut-and-project quasilattices
    #[command(subcommand)]
    Qlat(QlatCmd),
    /// Substitution rules on gap intervals
    #[command(subcommand)]
    Subst(SubstCmd),
    /// Refinement masks and their Fourier products
    #[command(subcommand)]
    Refine(RefineCmd),
    /// Multiresolution nesting and projections
    #[command(subcommand)]
    Mra(MraCmd),
}

#[derive(Args, Debug, Clone)]
struct PolyArg {
    /// Coefficients c_0,...,c_{n-1} of the monic minimal polynomial.
    #[arg(long, allow_hyphen_values = true)]
    poly: String,
}

#[derive(Args, Debug, Clone)]
struct LatticeArgs {
    #[command(flatten)]
    poly: PolyArg,
    /// Window σ as a comma list, first entry 0.
    #[arg(long, allow_hyphen_values = true)]
    sigma: String,
    /// Half width L.
    #[arg(long = "L", visible_alias = "half-width")]
    half_width: f64,
}

#[derive(Subcommand, Debug)]
enum PvCmd {
    /// Roots, dominant root and PV / Salem classification
    Classify(PolyArg),
    /// Distances |λ^k α - Tr(λ^k α)|
    Pvnorm {
        #[command(flatten)]
        poly: PolyArg,
        /// Coordinates of α in the power basis (rationals allowed).
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        alpha: String,
        #[arg(long, default_value_t = 40)]
        k_max: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Lemma {
    GroupLaws,
    Inflation,
    Meyer,
    Delone,
}

#[derive(Subcommand, Debug)]
enum QlatCmd {
    /// Points of 𝔏(σ) ∩ [-L, L] as CSV
    Generate {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Also write points.svg to the output directory.
        #[arg(long)]
        svg: bool,
    },
    /// Gap alphabet of the generated points
    Gaps {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Only use points with |x| <= L - margin.
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
    /// Empirical check of a lattice property
    Check {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_enum)]
        lemma: Lemma,
        /// Second window for group-laws (defaults to σ).
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
    },
}

#[derive(Args, Debug)]
struct RuleSource {
    /// Rule JSON written by `subst derive`.
    #[arg(long)]
    rule: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long = "L")]
    half_width: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum SubstCmd {
    /// Derive the substitution rule from a generated point set
    Derive {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = subst::DEFAULT_MAX_COLLAR)]
        max_collar: usize,
    },
    /// Left endpoints of the tiles of λ^k [0, c_1)
    Expand {
        #[command(flatten)]
        source: RuleSource,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = subst::DEFAULT_EXPAND_BUDGET)]
        budget: usize,
    },
    /// 0/1 matrices of the vector refinement equation
    Mask {
        #[command(flatten)]
        source: RuleSource,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct MaskArg {
    /// Mask JSON file, or builtin:haar | builtin:cantor | builtin:golden-mean | builtin:bernoulli.
    #[arg(long)]
    mask: String,
    /// Minimal polynomial for builtin:bernoulli.
    #[arg(long, allow_hyphen_values = true)]
    poly: Option<String>,
}

#[derive(Subcommand, Debug)]
enum RefineCmd {
    /// Mahler measure of a mask, or of a polynomial given by --coeffs
    Mahler {
        #[arg(long)]
        mask: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        poly: Option<String>,
        /// Real polynomial coefficients, constant term first.
        #[arg(long, allow_hyphen_values = true)]
        coeffs: Option<String>,
    },
    /// ρ(f) = -ln M(A) / ln|λ|
    Rho(MaskArg),
    /// f̂(y) at one point, or a CSV over --range a,b,n
    Hat {
        #[command(flatten)]
        mask: MaskArg,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long, default_value_t = refine::DEFAULT_TAIL_TOL)]
        tail_tol: f64,
    },
    /// Mean of ln|A| (or of ln|f̂| with --hat) over [-L, L]
    Meanlog {
        #[command(flatten)]
        mask: MaskArg,
        #[arg(long = "L")]
        half_width: f64,
        #[arg(long, default_value_t = 16)]
        samples_per_unit: usize,
        #[arg(long)]
        hat: bool,
    },
    /// Sublevel set measures of |A|
    Sublevel {
        #[command(flatten)]
        mask: MaskArg,
        /// Comma list of levels v.
        #[arg(long)]
        v: String,
        #[arg(long = "L")]
        half_width: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// f̂(αλ^k), k = 0..k_max
    Erdos {
        #[command(flatten)]
        mask: MaskArg,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        alpha: String,
        #[arg(long, default_value_t = 40)]
        k_max: usize,
    },
    /// Mean of ln|P_trig| over the orbit of x ↦ Cx mod 1
    Orbit {
        #[command(flatten)]
        mask: MaskArg,
        /// Starting point on the torus (rationals).
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        /// Use q_i = Tr(λ^i α) for this α instead.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, default_value_t = refine::DEFAULT_ORBIT_BUDGET)]
        budget: usize,
    },
}

#[derive(Subcommand, Debug)]
enum MraCmd {
    /// ξ = [0, (1 - |λ_j|) σ_j]
    Xi {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
    },
    /// Check λτ + τ_j ∈ 𝔏(σ)
    Nesting {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Translations as preimages separated by ';', e.g. "0,0;1,-1".
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// Skip the requirement τ_j ∈ 𝔏(ξ).
        #[arg(long)]
        unchecked: bool,
    },
    /// Piecewise-constant projection of CSV samples (x,value) onto λ^{-k}𝔏(σ)
    Project {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| bad(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn parse_rationals(s: &str) -> Result<Vec<Rational>, Error> {
    parse_list::<Rational>(s, "rational")
}

fn tolerances(cli: &Cli) -> Result<Tolerances, Error> {
    let mut tol = Tolerances::default();
    for kv in &cli.tol {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("tolerance {kv:?} is not KEY=VALUE")))?;
        let v: f64 = v.parse().map_err(|_| bad(format!("tolerance value {v:?}")))?;
        tol.set(k, v)?;
    }
    Ok(tol)
}

fn context(poly: &str, tol: Tolerances) -> Result<Arc<MinPolyContext>, Error> {
    MinPolyContext::with_options(&parse_list::<i64>(poly, "coefficient")?, 64, tol)
}

fn window(s: &str) -> Result<WindowVector, Error> {
    Ok(WindowVector::new(parse_list::<f64>(s, "window")?))
}

fn load_mask(m: &MaskArg, tol: Tolerances) -> Result<RefinementMask, Error> {
    let mut mask = match m.mask.as_str() {
        "builtin:bernoulli" => {
            let poly = m.poly.as_deref().ok_or_else(|| bad("builtin:bernoulli needs --poly"))?;
            refine::bernoulli(&context(poly, tol)?)
        }
        "builtin:haar" => refine::haar(),
        "builtin:cantor" => refine::cantor(),
        "builtin:golden-mean" => refine::golden_mean_mask(),
        path => {
            let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {path}: {e}")))?;
            return MaskSpec::from_json(&text)?.build(tol);
        }
    };
    mask.set_tolerances(tol);
    Ok(mask)
}

fn load_rule(src: &RuleSource, tol: Tolerances) -> Result<subst::SubstitutionRule, Error> {
    if let Some(path) = &src.rule {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        return subst::SubstitutionRule::from_json(&text);
    }
    match (&src.poly, &src.sigma, src.half_width) {
        (Some(p), Some(s), Some(l)) => subst::derive_rule(&context(p, tol)?, &window(s)?, l),
        _ => Err(bad("give --rule FILE or all of --poly, --sigma, --L")),
    }
}

fn alpha_element(ctx: &Arc<MinPolyContext>, s: &str) -> Result<AlgebraicElement, Error> {
    let mut coords = parse_rationals(s)?;
    if coords.len() > ctx.degree() {
        return Err(bad("too many coordinates for alpha"));
    }
    coords.resize(ctx.degree(), Rational::from_integer(0.into()));
    AlgebraicElement::new(ctx, coords)
}

fn preimage_csv(values: impl Iterator<Item = (f64, Vec<i64>)>, n: usize) -> String {
    let mut out = String::from("value");
    for i in 0..n {
        out.push_str(&format!(",l_{i}"));
    }
    out.push('\n');
    for (v, p) in values {
        out.push_str(&fmt17(v));
        for c in p {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct ErdosRow {
    k: usize,
    re: f64,
    im: f64,
    modulus: f64,
}

fn run(cli: &Cli, out: &mut Output) -> Result<(), Error> {
    let tol = tolerances(cli)?;
    match &cli.command {
        Command::Pv(PvCmd::Classify(p)) => {
            let ctx = context(&p.poly, tol)?;
            let roots: Vec<serde_json::Value> = ctx
                .roots()
                .iter()
                .map(|z| if z.im == 0.0 { json!(z.re) } else { json!([z.re, z.im]) })
                .collect();
            out.emit(
                "classify.json",
                &to_json(&json!({
                    "classification": ctx.classification(),
                    "lambda": ctx.lambda(),
                    "roots": roots,
                    "pv_margin": ctx.pv_margin(),
                    "unit_constant": ctx.unit_constant(),
                    "warnings": ctx.warnings(),
                })),
            )
        }
        Command::Pv(PvCmd::Pvnorm { poly, alpha, k_max }) => {
            let ctx = context(&poly.poly, tol)?;
            let a = alpha_element(&ctx, alpha)?;
            let mut csv = String::from("k,nearest,distance\n");
            for t in pvnorm_sequence(&a, *k_max)? {
                csv.push_str(&format!("{},{},{}\n", t.k, t.nearest, fmt17(t.distance)));
            }
            out.emit("pvnorm.csv", &csv)
        }
        Command::Qlat(cmd) => run_qlat(cmd, tol, out),
        Command::Subst(cmd) => run_subst(cmd, tol, cli.seed, out),
        Command::Refine(cmd) => run_refine(cmd, tol, out),
        Command::Mra(cmd) => run_mra(cmd, tol, out),
    }
}

fn run_qlat(cmd: &QlatCmd, tol: Tolerances, out: &mut Output) -> Result<(), Error> {
    let build = |l: &LatticeArgs| -> Result<qlat::Quasilattice, Error> {
        let ctx = context(&l.poly.poly, tol)?;
        qlat::generate(&ctx, &window(&l.sigma)?, l.half_width)
    };
    match cmd {
        QlatCmd::Generate { lattice, svg } => {
            let q = build(lattice)?;
            if *svg {
                out.write_file("points.svg", &q.to_svg())?;
            }
            out.note(json!({ "points": q.len(), "boundary_skipped": q.boundary_skipped() }));
            out.emit("points.csv", &q.to_csv())
        }
        QlatCmd::Gaps { lattice, margin } => {
            let q = build(lattice)?;
            out.emit("gaps.json", &to_json(&qlat::gap_alphabet(&q, *margin)?))
        }
        QlatCmd::Check { lattice, lemma, xi } => {
            let ctx = context(&lattice.poly.poly, tol)?;
            let sigma = window(&lattice.sigma)?;
            let report = match lemma {
                Lemma::GroupLaws => {
                    let xi = match xi {
                        Some(s) => window(s)?,
                        None => sigma.clone(),
                    };
                    qlat::check_group_laws(&ctx, &sigma, &xi, lattice.half_width)?.report()
                }
                Lemma::Inflation => qlat::check_inflation(&qlat::generate(&ctx, &sigma, lattice.half_width)?)?.report(),
                Lemma::Meyer => qlat::check_meyer(&qlat::generate(&ctx, &sigma, lattice.half_width)?)?.report(),
                Lemma::Delone => qlat::delone_constants(&qlat::generate(&ctx, &sigma, lattice.half_width)?)?.report(),
            };
            out.emit("check.json", &to_json(&report))
        }
    }
}

fn run_subst(cmd: &SubstCmd, tol: Tolerances, seed: u64, out: &mut Output) -> Result<(), Error> {
    match cmd {
        SubstCmd::Derive { lattice, max_collar } => {
            let ctx = context(&lattice.poly.poly, tol)?;
            let opts = subst::DeriveOptions { max_collar: *max_collar, ..Default::default() };
            let rule = subst::derive_rule_with(&ctx, &window(&lattice.sigma)?, lattice.half_width, opts)?;
            out.note(json!({
                "types": rule.type_count(),
                "collar_radius": rule.collar_radius,
                "perron_root": rule.perron_root()?,
            }));
            out.emit("rule.json", &to_json(&rule))
        }
        SubstCmd::Expand { source, k, budget } => {
            let rule = load_rule(source, tol)?;
            let n = rule.poly.len();
            let pts = subst::expand_with_budget(&rule, *k, *budget)?;
            out.emit("expand.csv", &preimage_csv(pts.into_iter().map(|p| (p.value, p.preimage)), n))
        }
        SubstCmd::Mask { source, samples } => {
            let rule = load_rule(source, tol)?;
            let mask = subst::vector_mask(&rule)?;
            let check = subst::check_reconstruction(&rule, *samples, seed)?;
            out.emit("vector_mask.json", &to_json(&json!({ "matrices": mask, "reconstruction": check })))
        }
    }
}

fn run_refine(cmd: &RefineCmd, tol: Tolerances, out: &mut Output) -> Result<(), Error> {
    match cmd {
        RefineCmd::Mahler { mask, poly, coeffs } => {
            let r = match (mask, coeffs) {
                (Some(m), None) => {
                    let arg = MaskArg { mask: m.clone(), poly: poly.clone() };
                    refine::mahler_mask(&load_mask(&arg, tol)?)?
                }
                (None, Some(c)) => {
                    let c: Vec<Complex64> =
                        parse_list::<f64>(c, "coefficient")?.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
                    refine::mahler_univariate(&c)?
                }
                _ => return Err(bad("give exactly one of --mask, --coeffs")),
            };
            out.emit("mahler.json", &to_json(&r))
        }
        RefineCmd::Rho(m) => {
            let mask = load_mask(m, tol)?;
            let mahler = refine::mahler_mask(&mask)?;
            let rho = refine::rho_from(&mask, &mahler);
            out.emit("rho.json", &to_json(&json!({ "rho": rho, "mahler": mahler })))
        }
        RefineCmd::Hat { mask, y, range, tail_tol } => {
            let mask = load_mask(mask, tol)?;
            match (y, range) {
                (Some(y), None) => {
                    let v = refine::fourier_hat(&mask, *y, *tail_tol);
                    out.emit("hat.json", &to_json(&json!({ "y": y, "re": v.re, "im": v.im, "modulus": v.norm() })))
                }
                (None, Some(r)) => {
                    let p = parse_list::<f64>(r, "range")?;
                    if p.len() != 3 || p[2] < 1.0 {
                        return Err(bad("range is a,b,n with n >= 1"));
                    }
                    let n = p[2] as usize;
                    let mut csv = String::from("y,re,im,modulus\n");
                    for i in 0..=n {
                        let y = p[0] + (p[1] - p[0]) * i as f64 / n as f64;
                        let v = refine::fourier_hat(&mask, y, *tail_tol);
                        csv.push_str(&format!("{},{},{},{}\n", fmt17(y), fmt17(v.re), fmt17(v.im), fmt17(v.norm())));
                    }
                    out.emit("hat.csv", &csv)
                }
                _ => Err(bad("give exactly one of --y, --range")),
            }
        }
        RefineCmd::Meanlog { mask, half_width, samples_per_unit, hat } => {
            let mask = load_mask(mask, tol)?;
            let r = if *hat {
                refine::mean_log_hat(&mask, *half_width, *samples_per_unit)?
            } else {
                refine::mean_log_mask(&mask, *half_width, *samples_per_unit)?
            };
            out.emit("meanlog.json", &to_json(&r))
        }
        RefineCmd::Sublevel { mask, v, half_width, samples } => {
            let mask = load_mask(mask, tol)?;
            let grid = parse_list::<f64>(v, "level")?;
            out.emit("sublevel.json", &to_json(&refine::sublevel_measure(&mask, &grid, *half_width, *samples)?))
        }
        RefineCmd::Erdos { mask, alpha, k_max } => {
            let mask = load_mask(mask, tol)?;
            let seq = match mask.dilation().context() {
                Some(ctx) => refine::erdos_sequence(&mask, &alpha_element(ctx, alpha)?, *k_max)?,
                None => {
                    let a = parse_rationals(alpha)?;
                    if a.len() != 1 {
                        return Err(bad("alpha for a real dilation is a single number"));
                    }
                    refine::erdos_sequence_float(&mask, pvmra::algnum::rational_to_f64(&a[0]), *k_max)?
                }
            };
            let rows: Vec<ErdosRow> = seq
                .terms
                .iter()
                .map(|t| ErdosRow { k: t.k, re: t.value.re, im: t.value.im, modulus: t.modulus })
                .collect();
            let mut csv = String::from("k,re,im,modulus\n");
            for r in &rows {
                csv.push_str(&format!("{},{},{},{}\n", r.k, fmt17(r.re), fmt17(r.im), fmt17(r.modulus)));
            }
            out.write_file("erdos.csv", &csv)?;
            out.emit("erdos.json", &to_json(&json!({ "plateau": seq.plateau, "terms": rows })))
        }
        RefineCmd::Orbit { mask, q, alpha, budget } => {
            let mask = load_mask(mask, tol)?;
            let ctx = mask.dilation().context().ok_or(Error::NotPv)?.clone();
            let seed = match (q, alpha) {
                (Some(q), None) => parse_rationals(q)?,
                (None, Some(a)) => refine::orbit_seed(&alpha_element(&ctx, a)?),
                _ => return Err(bad("give exactly one of --q, --alpha")),
            };
            out.emit("orbit.json", &to_json(&refine::orbit_mean(&mask, &seed, *budget)?))
        }
    }
}

fn run_mra(cmd: &MraCmd, tol: Tolerances, out: &mut Output) -> Result<(), Error> {
    match cmd {
        MraCmd::Xi { poly, sigma } => {
            let ctx = context(&poly.poly, tol)?;
            let sigma = window(sigma)?;
            let xi = mra::derive_xi(&ctx, &sigma)?;
            let residual = mra::window_identity_residual(&ctx, &sigma, &xi);
            out.emit("xi.json", &to_json(&json!({ "xi": xi, "identity_residual": residual })))
        }
        MraCmd::Nesting { lattice, tau, unchecked } => {
            let ctx = context(&lattice.poly.poly, tol)?;
            let sigma = window(&lattice.sigma)?;
            let taus = tau
                .split(';')
                .map(|t| parse_list::<i64>(t, "translation"))
                .collect::<Result<Vec<_>, _>>()?;
            let cfg = if *unchecked {
                mra::MraConfig::unchecked(&ctx, sigma, taus)?
            } else {
                mra::MraConfig::new(&ctx, sigma, taus)?
            };
            out.emit("nesting.json", &to_json(&mra::check_nesting(&cfg, lattice.half_width)?))
        }
        MraCmd::Project { lattice, samples, k } => {
            let ctx = context(&lattice.poly.poly, tol)?;
            let q = qlat::generate(&ctx, &window(&lattice.sigma)?, lattice.half_width)?;
            let text = fs::read_to_string(samples)
                .map_err(|e| bad(format!("cannot read {}: {e}", samples.display())))?;
            let mut pts = Vec::new();
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
                let f: Vec<&str> = line.split(',').collect();
                match (f.first().map(|s| s.trim().parse::<f64>()), f.get(1).map(|s| s.trim().parse::<f64>())) {
                    (Some(Ok(x)), Some(Ok(v))) => pts.push((x, v)),
                    _ if pts.is_empty() => continue, // header
                    _ => return Err(bad(format!("bad sample line {line:?}"))),
                }
            }
            let pc = mra::project_pc(&q, &pts, *k)?;
            for w in pc.warnings() {
                out.note(json!({ "warning": w }));
            }
            out.emit("projection.csv", &pc.to_csv())
        }
    }
}

/// Rewrite `--tol-KEY=VALUE` and `--tol-KEY VALUE` into `--tol KEY=VALUE`.
fn normalize_args(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.peekable();
    while let Some(a) = it.next() {
        match a.strip_prefix("--tol-") {
            Some(rest) => {
                out.push("--tol".into());
                if rest.contains('=') {
                    out.push(rest.into());
                } else {
                    out.push(format!("{rest}={}", it.next().unwrap_or_default()));
                }
            }
            None => out.push(a),
        }
    }
    out
}

fn fail(code: &str, class: &str, message: &str, exit: u8) -> ExitCode {
    let _ = writeln!(
        io::stderr(),
        "{}",
        json!({ "error": code, "class": class, "message": message })
    );
    ExitCode::from(exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    fail("unknown_command", "validation", &e.to_string(), 2)
                }
                _ => fail("bad_config", "validation", &e.to_string(), 2),
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("bad_config", "validation", &e.to_string(), 2);
        }
    }
    let mut out = Output::new(cli.out.clone());
    match run(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (class, exit) = match e.class() {
                ErrorClass::Validation => ("validation", 2),
                ErrorClass::Numerical => ("numerical", 3),
                ErrorClass::Budget => ("budget", 4),
            };
            fail(e.code(), class, &e.to_string(), exit)
        }
    }
}
