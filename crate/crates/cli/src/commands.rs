use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use boundnoise::adaptive::{MechanismChoice, Planner};
use boundnoise::empirical::{falsifier_check, FalsifierReport, FalsifierRule, FalsifierVerdict};
use boundnoise::gaussian::gaussian_sigma_opt;
use boundnoise::mechanism::{max_error_quantile, NoiseLaw};
use boundnoise::sampler;
use boundnoise::theory::{
    delta_star_k, heavy_tail_bound, moment_constant_m, rate_registry, t_star, PolyRate, RateArgs,
};
use boundnoise::{CertConfig, Certificate, Certifier, NoiseFamily, PrivacyParams, RngState, ScaledNoise, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    AdaptiveArgs, CompareArgs, FalsifyArgs, FamilyArgs, Format, GlobalArgs, PrivacyArgs, RuleArg, SampleArgs,
    TheoryArgs, VerifyArgs,
};
use crate::output::{num, write_csv, write_json};
use crate::CliError;

/// Quantile levels of the comparison table.
pub const QUANTILES: [(f64, &str); 4] = [(0.5, "0.5"), (0.95, "0.95"), (0.999, "0.999"), (1.0 - 1e-6, "0.999999")];

pub struct Context {
    pub seed: u64,
    pub format: Option<Format>,
    pub output: Option<std::path::PathBuf>,
    pub config: CertConfig,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> Result<Self, CliError> {
        let config = match &g.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<CertConfig>(&text)
                    .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))?
            }
            None => CertConfig::default(),
        };
        config.validate()?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(j) = g.jobs {
            if j == 0 {
                return Err(CliError::usage("--jobs must be at least 1"));
            }
            pool = pool.num_threads(j);
        }
        Ok(Self {
            seed: g.seed,
            format: g.format,
            output: g.output.clone(),
            config,
            pool: pool.build().map_err(|e| CliError::numeric(format!("thread pool: {e}")))?,
        })
    }

    fn out(&self) -> Option<&Path> {
        self.output.as_deref()
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn family(args: &FamilyArgs) -> Result<NoiseFamily, CliError> {
    let p = (args.family.eq_ignore_ascii_case("poly")).then_some(args.p);
    Ok(NoiseFamily::from_name(&args.family, p)?)
}

fn params(args: &PrivacyArgs) -> Result<PrivacyParams, CliError> {
    Ok(PrivacyParams::new(args.eps, args.delta, args.k, args.sensitivity)?)
}

const CERT_COLUMNS: [&str; 12] =
    ["family", "p", "R", "L", "delta1", "delta2", "epsilon", "delta", "k", "Delta", "verdict", "configHash"];

fn emit_certificate(ctx: &Context, cert: &Certificate) -> Result<i32, CliError> {
    match ctx.format_or(Format::Json) {
        Format::Json => write_json(ctx.out(), cert)?,
        Format::Csv => {
            let row = vec![
                cert.family.clone(),
                cert.p.map(num).unwrap_or_default(),
                num(cert.r),
                num(cert.l),
                num(cert.delta1),
                num(cert.delta2),
                num(cert.epsilon),
                num(cert.delta),
                cert.k.to_string(),
                num(cert.sensitivity),
                if cert.is_certified() { "certified" } else { "rejected" }.into(),
                cert.config_hash.clone(),
            ];
            write_csv(ctx.out(), &CERT_COLUMNS.map(String::from), &[row])?;
        }
    }
    if let Some(reason) = &cert.reject_reason {
        eprintln!("rejected: {reason}");
    }
    Ok(if cert.is_certified() { 0 } else { 2 })
}

pub fn calibrate(ctx: &Context, args: &PrivacyArgs) -> Result<i32, CliError> {
    let certifier = Certifier::new(family(&args.family)?, ctx.config)?;
    let cert = certifier.noise_upper_bound(&params(args)?)?;
    eprintln!("R* = {}", cert.r);
    emit_certificate(ctx, &cert)
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> Result<i32, CliError> {
    let certifier = Certifier::new(family(&args.privacy.family)?, ctx.config)?;
    let cert = certifier.test_privacy(args.r, &params(&args.privacy)?)?;
    emit_certificate(ctx, &cert)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CompareRow {
    k: u64,
    epsilon: f64,
    delta: f64,
    #[serde(rename = "Delta")]
    sensitivity: f64,
    #[serde(rename = "R")]
    r: f64,
    bounded_quantiles: Vec<f64>,
    sigma: f64,
    gaussian_quantiles: Vec<f64>,
    /// `sqrt(k ln(1/delta)) / eps`.
    normalizer: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CompareDoc<'a> {
    schema_version: u32,
    family: String,
    sweep: &'a str,
    quantiles: Vec<f64>,
    rows: &'a [CompareRow],
}

pub fn compare(ctx: &Context, args: &CompareArgs) -> Result<i32, CliError> {
    let base = PrivacyParams::new(args.eps, args.delta, args.k, args.sensitivity)?;
    let (sweep, points): (&str, Vec<PrivacyParams>) = match (&args.k_sweep, &args.eps_sweep, &args.delta_sweep) {
        (Some(ks), None, None) => ("k", ks.iter().map(|&k| PrivacyParams { k, ..base }).collect()),
        (None, Some(es), None) => ("eps", es.iter().map(|&epsilon| PrivacyParams { epsilon, ..base }).collect()),
        (None, None, Some(ds)) => ("delta", ds.iter().map(|&delta| PrivacyParams { delta, ..base }).collect()),
        _ => return Err(CliError::usage("give exactly one of --k-sweep, --eps-sweep, --delta-sweep")),
    };
    if points.is_empty() {
        return Err(CliError::usage(format!("the {sweep} sweep is empty")));
    }
    for p in &points {
        p.validate()?;
    }
    let fam = family(&args.family)?;
    let certifier = Certifier::new(fam.clone(), ctx.config)?;
    let done = AtomicUsize::new(0);
    let total = points.len();
    let rows: Vec<CompareRow> = ctx.pool.install(|| {
        points
            .par_iter()
            .map(|p| -> Result<CompareRow, CliError> {
                let cert = certifier.noise_upper_bound(p)?;
                let noise = ScaledNoise::from_unit(certifier.unit().clone(), cert.r)?;
                let sigma = gaussian_sigma_opt(p)?;
                let b = NoiseLaw::Bounded(noise);
                let g = NoiseLaw::Gaussian { sigma };
                let bq = QUANTILES.iter().map(|(q, _)| max_error_quantile(&b, p.k, *q)).collect::<Result<_, _>>()?;
                let gq = QUANTILES.iter().map(|(q, _)| max_error_quantile(&g, p.k, *q)).collect::<Result<_, _>>()?;
                let i = done.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!("[{i}/{total}] k={} eps={} delta={:e}: R*={} sigma={}", p.k, p.epsilon, p.delta, cert.r, sigma);
                Ok(CompareRow {
                    k: p.k,
                    epsilon: p.epsilon,
                    delta: p.delta,
                    sensitivity: p.sensitivity,
                    r: cert.r,
                    bounded_quantiles: bq,
                    sigma,
                    gaussian_quantiles: gq,
                    normalizer: (p.k as f64 * (1.0 / p.delta).ln()).sqrt() / p.epsilon,
                })
            })
            .collect::<Result<_, _>>()
    })?;
    match ctx.format_or(Format::Csv) {
        Format::Json => write_json(
            ctx.out(),
            &CompareDoc {
                schema_version: SCHEMA_VERSION,
                family: fam.to_string(),
                sweep,
                quantiles: QUANTILES.iter().map(|q| q.0).collect(),
                rows: &rows,
            },
        )?,
        Format::Csv => {
            let (header, table) = compare_table(sweep, &rows);
            write_csv(ctx.out(), &header, &table)?;
        }
    }
    Ok(0)
}

fn compare_table(sweep: &str, rows: &[CompareRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut raw = vec!["R".to_string()];
    raw.extend(QUANTILES.iter().map(|(_, s)| format!("bounded_q{s}")));
    raw.push("sigma".into());
    raw.extend(QUANTILES.iter().map(|(_, s)| format!("gaussian_q{s}")));
    let mut header: Vec<String> = ["sweep", "k", "eps", "delta", "Delta"].map(String::from).to_vec();
    header.extend(raw.iter().cloned());
    header.push("normalizer".into());
    header.extend(raw.iter().map(|c| format!("{c}_normalized")));
    let table = rows
        .iter()
        .map(|r| {
            let mut values = vec![r.r];
            values.extend(&r.bounded_quantiles);
            values.push(r.sigma);
            values.extend(&r.gaussian_quantiles);
            let mut row = vec![sweep.to_string(), r.k.to_string(), num(r.epsilon), num(r.delta), num(r.sensitivity)];
            row.extend(values.iter().map(|&v| num(v)));
            row.push(num(r.normalizer));
            row.extend(values.iter().map(|&v| num(v / r.normalizer)));
            row
        })
        .collect();
    (header, table)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AdaptiveRow {
    n: u64,
    k_bounded_p1: u64,
    k_bounded_p2: u64,
    k_gaussian: u64,
}

pub fn adaptive(ctx: &Context, args: &AdaptiveArgs) -> Result<i32, CliError> {
    if args.n.is_empty() {
        return Err(CliError::usage("the --n sweep is empty"));
    }
    if let Some(bad) = args.n.iter().find(|&&n| n == 0) {
        return Err(CliError::usage(format!("sample sizes must be positive, got {bad}")));
    }
    let planners = [
        Planner::new(MechanismChoice::Bounded(NoiseFamily::poly(1.0)?), args.alpha, args.beta, ctx.config)?,
        Planner::new(MechanismChoice::Bounded(NoiseFamily::poly(2.0)?), args.alpha, args.beta, ctx.config)?,
        Planner::new(MechanismChoice::Gaussian, args.alpha, args.beta, ctx.config)?,
    ];
    let split = planners[2].sample_size_for_queries(1)?.split;
    let done = AtomicUsize::new(0);
    let total = args.n.len();
    let rows: Vec<AdaptiveRow> = ctx.pool.install(|| {
        args.n
            .par_iter()
            .map(|&n| -> Result<AdaptiveRow, CliError> {
                let ks = planners
                    .par_iter()
                    .map(|p| p.max_queries_for_sample_size(n))
                    .collect::<Result<Vec<_>, _>>()?;
                let i = done.fetch_add(1, Ordering::Relaxed) + 1;
                eprintln!("[{i}/{total}] n={n}: k = {ks:?}");
                Ok(AdaptiveRow {
                    n,
                    k_bounded_p1: ks[0],
                    k_bounded_p2: ks[1],
                    k_gaussian: ks[2],
                })
            })
            .collect::<Result<_, _>>()
    })?;
    match ctx.format_or(Format::Csv) {
        Format::Json => write_json(
            ctx.out(),
            &serde_json::json!({
                "schemaVersion": SCHEMA_VERSION,
                "alpha": args.alpha,
                "beta": args.beta,
                "gaussianSplit": split,
                "rows": rows,
            }),
        )?,
        Format::Csv => {
            let header = ["n", "k_bounded_p1", "k_bounded_p2", "k_gaussian"].map(String::from);
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| [r.n, r.k_bounded_p1, r.k_bounded_p2, r.k_gaussian].map(|v| v.to_string()).to_vec())
                .collect();
            write_csv(ctx.out(), &header, &table)?;
        }
    }
    Ok(0)
}

pub fn sample(ctx: &Context, args: &SampleArgs) -> Result<i32, CliError> {
    let noise = ScaledNoise::new(family(&args.family)?, args.r)?;
    let rng = RngState::new(ctx.seed, args.stream);
    let draws = sampler::sample(&noise, rng, args.count as usize);
    match ctx.format_or(Format::Csv) {
        Format::Json => write_json(
            ctx.out(),
            &serde_json::json!({
                "schemaVersion": SCHEMA_VERSION,
                "family": noise.family().spec(),
                "R": args.r,
                "rng": rng,
                "values": draws,
            }),
        )?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = draws.iter().enumerate().map(|(i, &x)| vec![i.to_string(), num(x)]).collect();
            write_csv(ctx.out(), &["index".to_string(), "value".to_string()], &rows)?;
        }
    }
    Ok(0)
}

pub fn falsify(ctx: &Context, args: &FalsifyArgs) -> Result<i32, CliError> {
    let p = params(&args.privacy)?;
    let noise = ScaledNoise::new(family(&args.privacy.family)?, args.r)?;
    let rule = match args.rule {
        RuleArg::Generalized => FalsifierRule::Generalized,
        RuleArg::Verbatim => FalsifierRule::Verbatim,
    };
    eprintln!("sampling {} privacy losses of {} queries", args.samples, p.k);
    let report: FalsifierReport = ctx.pool.install(|| {
        falsifier_check(
            &noise,
            p.k,
            p.sensitivity,
            p.epsilon,
            p.delta,
            args.samples as usize,
            RngState::new(ctx.seed, 0),
            rule,
        )
    })?;
    match ctx.format_or(Format::Json) {
        Format::Json => write_json(ctx.out(), &report)?,
        Format::Csv => {
            let header = ["verdict", "rule", "lossThreshold", "exceedances", "n", "rhoHat", "rhoLower", "probabilityThreshold"]
                .map(String::from);
            let row = vec![
                format!("{:?}", report.verdict),
                format!("{:?}", report.rule),
                num(report.loss_threshold),
                report.exceedances.to_string(),
                report.n.to_string(),
                num(report.rho_hat),
                num(report.rho_lower),
                num(report.probability_threshold),
            ];
            write_csv(ctx.out(), &header, &[row])?;
        }
    }
    Ok(if report.verdict == FalsifierVerdict::Refuted { 2 } else { 0 })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct TailPoint {
    t: f64,
    bound: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct TheoryDoc {
    schema_version: u32,
    rate: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    k: u64,
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "Cf")]
    c_f: f64,
    t_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_star_closed_form: Option<f64>,
    delta_star_k: f64,
    #[serde(rename = "M")]
    m: f64,
    heavy_tail: Vec<TailPoint>,
}

pub fn theory(ctx: &Context, args: &TheoryArgs) -> Result<i32, CliError> {
    let p = (args.rate.eq_ignore_ascii_case("poly")).then_some(args.p);
    let rate = rate_registry().build(&args.rate, &RateArgs { p })?;
    let ts = t_star(rate.as_ref(), args.k)?;
    let closed = match p {
        Some(p) => Some(PolyRate::new(p)?.t_star_closed_form(args.k as f64)),
        None => None,
    };
    let dstar = delta_star_k(rate.as_ref(), args.k, args.c_f)?;
    let m = moment_constant_m(rate.as_ref(), args.c)?;
    let grid = match &args.t {
        Some(t) => t.clone(),
        None => (0..=16).map(|i| ts * 2f64.powf((i as f64 - 8.0) / 2.0)).collect(),
    };
    let table = grid
        .iter()
        .map(|&t| Ok(TailPoint { t, bound: heavy_tail_bound(rate.as_ref(), args.c, m, args.k, t)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    match ctx.format_or(Format::Json) {
        Format::Json => write_json(
            ctx.out(),
            &TheoryDoc {
                schema_version: SCHEMA_VERSION,
                rate: rate.name(),
                p: rate.parameter(),
                k: args.k,
                c: args.c,
                c_f: args.c_f,
                t_star: ts,
                t_star_closed_form: closed,
                delta_star_k: dstar,
                m,
                heavy_tail: table,
            },
        )?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = table.iter().map(|r| vec![num(r.t), num(r.bound)]).collect();
            write_csv(ctx.out(), &["t".to_string(), "bound".to_string()], &rows)?;
        }
    }
    Ok(0)
}
