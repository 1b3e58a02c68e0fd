//! One function per subcommand; each returns the full report text.

use gibbslab_core::bitshift::{
    bad_config_table, capacity_search, cylinder_prob, default_entropy_cap, entropy_profile, is_admissible,
    smb_estimate, BitShiftMeasure,
};
use gibbslab_core::oracle::{brute_block_entropy, brute_channel_distribution, brute_mu_conditional};
use gibbslab_core::probe::{regularity_probe, Verdict};
use gibbslab_core::provider::words;
use gibbslab_core::relent::{follmer_probe, relent_density_sequence, tv_identity_check, window_relative_entropy};
use gibbslab_core::weak_gibbs::{
    bad_tail_fraction, bk_frequencies, correlation_length_histogram, finite_volume_mu, glued_gamma_convergence,
    GluedRow, WGParams,
};
use gibbslab_core::bitshift::block_entropy;
use gibbslab_core::{conditional_prob, Alphabet, Configuration, NumMode, ProbValue, Result, StreamRng, Window};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{json as json_doc, word, Csv, Fmt, Meta};
use crate::spec::*;

pub struct Ctx {
    pub meta: Meta,
    pub mode: NumMode,
    pub seed: u64,
    pub fmt: Fmt,
}

fn window(lohi: (i64, i64)) -> Result<Window> {
    Window::new(lohi.0, lohi.1)
}

fn random_bits(seed: u64, stream: u64, length: usize) -> Result<Configuration> {
    let mut r = StreamRng::new(seed, stream).rng();
    let v = (0..length).map(|_| r.gen_range(0..=1)).collect();
    Configuration::binary_zero_tail(1, v)
}

fn glued_rows(ctx: &Ctx, label: String, rows: &[GluedRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![label.clone(), r.n.to_string(), ctx.fmt.f(r.diff), ctx.fmt.f(r.radius)])
        .collect()
}

pub fn wg_converge(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: WgConverge = parse_params(params)?;
    let wg = WgSpec { rho: p.rho.clone(), m: p.m }.build(ctx.mode)?;
    let mu = finite_volume_mu(&wg)?;
    let target = Configuration::word(Alphabet::binary(), 0, vec![1])?;
    let omega = p.omega.build()?;
    let report = regularity_probe(&mu, &target, &omega, &p.n_range, p.tol, p.stability)?;
    let mut csv = Csv::new(&ctx.meta);
    match &report.verdict {
        Verdict::Converged { from_n, value } => {
            csv.note("verdict", format!("converged from n={from_n} to {}", ctx.fmt.f(*value)))
        }
        Verdict::NotConverged { last_gap } => csv.note("verdict", format!("not converged, last gap {}", ctx.fmt.f(*last_gap))),
    }
    if let Some((n, why)) = &report.truncated_at {
        csv.note("truncated_at", format!("n={n}: {why}"));
    }
    let mut prev: Option<f64> = None;
    let rows: Vec<Vec<String>> = report
        .values
        .iter()
        .map(|(n, v)| {
            let x = v.to_f64();
            let gap = prev.map(|q| ctx.fmt.f((x - q).abs())).unwrap_or_default();
            prev = Some(x);
            vec![n.to_string(), ctx.fmt.pv(v), gap]
        })
        .collect();
    csv.table("regularity", &["n", "value", "gap"], rows);

    if let Some(g) = &p.glued {
        let gp: WGParams = wg.with_m(g.m)?;
        let pairs: Vec<Vec<Vec<String>>> = (0..g.pairs)
            .into_par_iter()
            .map(|i| {
                let omega = random_bits(ctx.seed, 2 * i as u64, g.length)?;
                let eta = random_bits(ctx.seed, 2 * i as u64 + 1, g.length)?;
                let rows = glued_gamma_convergence(&gp, &omega, &eta, &g.n_list)?;
                Ok(glued_rows(ctx, i.to_string(), &rows))
            })
            .collect::<Result<_>>()?;
        csv.table("glued", &["pair", "n", "diff", "radius"], pairs.into_iter().flatten());
        if g.bad_omega.is_some() || g.bad_eta.is_some() {
            let omega = g.bad_omega.clone().unwrap_or(ConfigSpec::Zeros).build()?;
            let eta = g.bad_eta.clone().unwrap_or(ConfigSpec::Zeros).build()?;
            let rows = glued_gamma_convergence(&gp, &omega, &eta, &g.n_list)?;
            csv.table("glued_bad", &["pair", "n", "diff", "radius"], glued_rows(ctx, "bad".into(), &rows));
        }
    }
    Ok(csv.finish())
}

pub fn wg_badsets(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: WgBadsets = parse_params(params)?;
    let mut csv = Csv::new(&ctx.meta);
    let freqs = bk_frequencies(&p.ks, p.samples, StreamRng::new(ctx.seed, 0))?;
    csv.table(
        "bk_frequency",
        &["k", "frequency", "stderr", "bound"],
        freqs.iter().map(|(k, e)| {
            vec![
                k.to_string(),
                ctx.fmt.f(e.mean),
                ctx.fmt.f(e.stderr),
                ctx.fmt.f(2f64.powf(-(*k as f64) / 2.0)),
            ]
        }),
    );
    if let Some(c) = &p.correlation {
        let hist = correlation_length_histogram(c.length, c.samples, StreamRng::new(ctx.seed, 1))?;
        csv.table(
            "correlation_length",
            &["K", "count"],
            hist.iter().map(|(k, n)| vec![k.to_string(), n.to_string()]),
        );
    }
    if let Some(b) = &p.bad_tail {
        let wg = WgSpec { rho: b.rho.clone(), m: b.m }.build(ctx.mode)?;
        let omega = b.omega.build()?;
        let rows: Vec<Vec<String>> = b
            .eps
            .iter()
            .map(|&eps| {
                let e = bad_tail_fraction(&wg, &omega, eps, b.n, b.samples, StreamRng::new(ctx.seed, 2))?;
                Ok(vec![ctx.fmt.f(eps), ctx.fmt.f(e.mean), ctx.fmt.f(e.stderr)])
            })
            .collect::<Result<_>>()?;
        csv.note("bad_tail_n", b.n);
        csv.table("bad_tail", &["eps", "fraction", "stderr"], rows);
    }
    Ok(csv.finish())
}

pub fn bs_cylinder(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: BsCylinder = parse_params(params)?;
    let channel = p.channel.build(ctx.mode)?;
    let alphabet = channel.output_alphabet();
    let mut cylinders = Vec::new();
    for w in &p.words {
        let y = Configuration::word(alphabet.clone(), 0, w.clone())?;
        let prob = cylinder_prob(&channel, &y)?;
        let adm = is_admissible(&channel, &y);
        cylinders.push(json!({
            "word": w,
            "prob": prob,
            "admissible": adm.admissible,
            "witness": adm.witness.map(|(x, omega)| json!({"x": x, "omega": omega})),
        }));
    }
    let measure = BitShiftMeasure::new(channel);
    let mut conditionals = Vec::new();
    for c in &p.conditionals {
        let target = Configuration::word(alphabet.clone(), 0, c.target.clone())?;
        let given = Configuration::word(alphabet.clone(), c.target.len() as i64, c.given.clone())?;
        let prob = conditional_prob(&measure, &target, &given)?;
        conditionals.push(json!({"target": c.target, "given": c.given, "prob": prob}));
    }
    Ok(json_doc(&ctx.meta, json!({"cylinders": cylinders, "conditionals": conditionals})))
}

pub fn bs_badconfig(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: BsBadconfig = parse_params(params)?;
    let channel = p.channel.build(ctx.mode)?;
    let rows = bad_config_table(&channel, p.n_max)?;
    let mut csv = Csv::new(&ctx.meta);
    if let Some(max) = rows.iter().map(|r| &r.n_times_cond).max_by(|a, b| a.partial_cmp(b).expect("finite")) {
        csv.note("max_n_times_cond", ctx.fmt.pv(max));
    }
    csv.table(
        "bad_config",
        &["n", "nu_0_2n", "nu_2n", "cond", "n_times_cond"],
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                ctx.fmt.pv(&r.nu_0_2n),
                ctx.fmt.pv(&r.nu_2n),
                ctx.fmt.pv(&r.cond),
                ctx.fmt.pv(&r.n_times_cond),
            ]
        }),
    );
    Ok(csv.finish())
}

pub fn bs_entropy(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: BsEntropy = parse_params(params)?;
    let channel = p.channel.build(ctx.mode)?;
    let cap = p.cap.unwrap_or_else(|| default_entropy_cap(&channel));
    let prof = entropy_profile(&channel, p.n_max, cap)?;
    let mut csv = Csv::new(&ctx.meta);
    csv.note("log_base", "e (bits columns divide by ln 2)");
    let ln2 = std::f64::consts::LN_2;
    csv.table(
        "entropy",
        &["n", "block_entropy", "lower", "upper", "gap", "lower_bits", "upper_bits"],
        (1..=p.n_max).map(|n| {
            let (lo, hi) = prof.bounds(n);
            vec![
                n.to_string(),
                ctx.fmt.f(prof.block_entropy(n)),
                ctx.fmt.f(lo),
                ctx.fmt.f(hi),
                ctx.fmt.f(hi - lo),
                ctx.fmt.f(lo / ln2),
                ctx.fmt.f(hi / ln2),
            ]
        }),
    );
    if let Some(s) = &p.smb {
        let e = smb_estimate(&channel, s.n, s.samples, StreamRng::new(ctx.seed, 0))?;
        csv.table(
            "smb",
            &["n", "samples", "mean", "stderr"],
            [vec![s.n.to_string(), s.samples.to_string(), ctx.fmt.f(e.mean), ctx.fmt.f(e.stderr)]],
        );
    }
    Ok(csv.finish())
}

pub fn bs_capacity(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: BsCapacity = parse_params(params)?;
    let r = capacity_search(p.d, p.k, &p.eps, p.grid, p.refine, p.n)?;
    Ok(json_doc(
        &ctx.meta,
        json!({
            "status": "exploratory: maximises the midpoint of entropy-rate bounds at a fixed block length",
            "report": r,
        }),
    ))
}

pub fn relent(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: Relent = parse_params(params)?;
    let nu = p.nu.build(ctx.mode)?;
    let mu = p.mu.build(ctx.mode)?;
    let mut csv = Csv::new(&ctx.meta);
    csv.note("nu", nu.label());
    csv.note("mu", mu.label());
    if let Some(w) = p.window {
        let r = window_relative_entropy(nu.as_ref(), mu.as_ref(), window(w)?)?;
        csv.table(
            "relative_entropy",
            &["lo", "hi", "value", "identical"],
            [vec![w.0.to_string(), w.1.to_string(), rel(ctx, r.value), r.identical.to_string()]],
        );
    }
    if let Some(n_max) = p.density_n_max {
        let seq = relent_density_sequence(nu.as_ref(), mu.as_ref(), n_max)?;
        csv.table("density", &["n", "value"], seq.into_iter().map(|(n, v)| vec![n.to_string(), rel(ctx, v)]));
    }
    if let Some(t) = &p.tv {
        let r = tv_identity_check(nu.as_ref(), mu.as_ref(), window(t.lam)?, window(t.delta)?)?;
        csv.table(
            "tv_identity",
            &["lhs", "rhs", "equal"],
            [vec![ctx.fmt.pv(&r.lhs), ctx.fmt.pv(&r.rhs), r.equal.to_string()]],
        );
    }
    if let Some(f) = &p.follmer {
        let r = follmer_probe(nu.as_ref(), mu.as_ref(), window(f.lam)?, f.n_max)?;
        csv.table(
            "follmer",
            &["n", "weighted_gap", "max_gap", "conditions", "undefined"],
            r.rows.iter().map(|row| {
                vec![
                    row.n.to_string(),
                    ctx.fmt.f(row.weighted_gap),
                    ctx.fmt.f(row.max_gap),
                    row.conditions.to_string(),
                    row.undefined.to_string(),
                ]
            }),
        );
        csv.table(
            "follmer_gaps",
            &["n", "omega", "weight", "gap"],
            r.gaps
                .iter()
                .map(|g| vec![g.n.to_string(), word(&g.omega), ctx.fmt.f(g.weight), ctx.fmt.f(g.gap)]),
        );
    }
    Ok(csv.finish())
}

fn rel(ctx: &Ctx, v: gibbslab_core::relent::RelEntValue) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        ctx.fmt.f(v.to_f64())
    }
}

pub fn oracle(ctx: &Ctx, params: &Value) -> Result<String> {
    let p: Oracle = parse_params(params)?;
    let mut csv = Csv::new(&ctx.meta);
    if let Some(c) = &p.channel {
        let channel = c.channel.build(ctx.mode)?;
        let alphabet = channel.output_alphabet();
        let mut rows = Vec::new();
        let mut mismatches = 0usize;
        for &len in &c.lengths {
            let dist = brute_channel_distribution(&channel, len)?;
            let zero = ProbValue::zero(channel.mode());
            for w in words(&alphabet, len) {
                let brute = dist.get(&w).cloned().unwrap_or_else(|| zero.clone());
                let fast = cylinder_prob(&channel, &Configuration::word(alphabet.clone(), 0, w.clone())?)?;
                let equal = agree(&brute, &fast);
                mismatches += usize::from(!equal);
                rows.push(vec![word(&w), ctx.fmt.pv(&brute), ctx.fmt.pv(&fast), equal.to_string()]);
            }
        }
        csv.note("channel_mismatches", mismatches);
        csv.table("oracle_channel", &["word", "brute", "fast", "equal"], rows);
    }
    if let Some(m) = &p.mu {
        let wg = WgSpec { rho: m.rho.clone(), m: m.m }.build(ctx.mode)?;
        let mu = finite_volume_mu(&wg)?;
        let target = Configuration::word(Alphabet::binary(), 0, vec![m.xi])?;
        let rows: Vec<Vec<String>> = m
            .prefixes
            .iter()
            .map(|prefix| {
                let given = Configuration::word(Alphabet::binary(), 1, prefix.clone())?;
                let brute = brute_mu_conditional(&wg, m.xi, &given)?;
                let fast = conditional_prob(&mu, &target, &given)?;
                Ok(vec![word(prefix), ctx.fmt.pv(&brute), ctx.fmt.pv(&fast), agree(&brute, &fast).to_string()])
            })
            .collect::<Result<_>>()?;
        csv.table("oracle_mu", &["prefix", "brute", "fast", "equal"], rows);
    }
    if let Some(e) = &p.entropy {
        let channel = e.channel.build(ctx.mode)?;
        let rows: Vec<Vec<String>> = (1..=e.n_max)
            .map(|n| {
                let brute = brute_block_entropy(&channel, n)?;
                let fast = block_entropy(&channel, n)?;
                Ok(vec![n.to_string(), ctx.fmt.f(brute), ctx.fmt.f(fast), ctx.fmt.f((brute - fast).abs())])
            })
            .collect::<Result<_>>()?;
        csv.table("oracle_entropy", &["n", "brute", "fast", "abs_diff"], rows);
    }
    Ok(csv.finish())
}

/// Exact equality for rationals, `1e-12` agreement for floats.
fn agree(a: &ProbValue, b: &ProbValue) -> bool {
    match (a.mode(), b.mode()) {
        (NumMode::Rational, NumMode::Rational) => a.exactly_equals(b),
        _ => (a.to_f64() - b.to_f64()).abs() <= 1e-12,
    }
}
