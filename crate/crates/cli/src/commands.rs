use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use eda_lab::drift::{
    biased_walk_check, binomial_thinning_check, empirical_drift, sqrt_jump_check, variable_bound,
    ChainCheck, DriftShape,
};
use eda_lab::experiments::{
    self, BudgetRule, CompareEntry, MarginRule, MuRule, Replicate, ScalingReport, SweepProtocol,
    NOISE_HEADER, SCALING_HEADER, SWEEP_HEADER,
};
use eda_lab::runner::{self, Problem};
use eda_lab::stats::z_value;
use eda_lab::{Algorithm, EdaConfig, FitnessSpec, NoiseKind, RngStream, StopCondition};

use crate::config::{int_grid, list, parse_u64, real_list, ConfigFile, Section};
use crate::output::{write_csv, Metadata, Table};
use crate::rules::{AlgoRule, MarginSpec};
use crate::{plot as svg, BatchArgs, DriftArgs, PlotArgs, RunArgs, Status};

fn status_of<'a>(reps: impl IntoIterator<Item = &'a Replicate>) -> Status {
    if reps.into_iter().all(|r| r.hit) {
        Status::Done
    } else {
        Status::BudgetExhausted
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn algo_config(a: &RunArgs) -> Result<EdaConfig> {
    let algorithm: Algorithm = a.algo.parse()?;
    let given = [
        ("--lambda", a.lambda.is_some()),
        ("--mu", a.mu.is_some()),
        ("--rho", a.rho.is_some()),
        ("--K", a.k.is_some()),
        ("--epsilon", a.epsilon.is_some()),
    ];
    let needed: &[&str] = match algorithm {
        Algorithm::Umda => &["--lambda", "--mu"],
        Algorithm::Pbil => &["--lambda", "--mu", "--rho"],
        Algorithm::MmasIb => &["--lambda", "--rho"],
        Algorithm::Cga => &["--K"],
        Algorithm::SigCga => &["--epsilon"],
    };
    for (flag, present) in given {
        match (needed.contains(&flag), present) {
            (true, false) => bail!("{} needs {flag}", algorithm.name()),
            (false, true) => bail!("{flag} is not a parameter of {}", algorithm.name()),
            _ => {}
        }
    }
    let n = a.n;
    let cfg = match algorithm {
        Algorithm::Umda => EdaConfig::umda(n, a.lambda.unwrap(), a.mu.unwrap()),
        Algorithm::Pbil => EdaConfig::pbil(n, a.lambda.unwrap(), a.mu.unwrap(), a.rho.unwrap()),
        Algorithm::MmasIb => EdaConfig::mmas_ib(n, a.lambda.unwrap(), a.rho.unwrap()),
        Algorithm::Cga => EdaConfig::cga(n, a.k.unwrap()),
        Algorithm::SigCga => EdaConfig::sig_cga(n, a.epsilon.unwrap()),
    };
    let cfg = MarginSpec::parse(Some(&a.margin))?.apply(cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn describe_config(meta: &mut Metadata, cfg: &EdaConfig) {
    meta.set("algorithm", cfg.algorithm().name())
        .set("n", cfg.n);
    if matches!(
        cfg.algorithm(),
        Algorithm::Umda | Algorithm::Pbil | Algorithm::MmasIb
    ) {
        meta.set("lambda", cfg.lambda());
    }
    if matches!(cfg.algorithm(), Algorithm::Umda | Algorithm::Pbil) {
        meta.set("mu", cfg.mu());
    }
    for (k, v) in [
        ("rho", cfg.rho()),
        ("K", cfg.k()),
        ("epsilon", cfg.epsilon()),
    ] {
        if let Some(v) = v {
            meta.set(k, v);
        }
    }
    meta.set(
        "margin",
        cfg.margin
            .map_or("borderless".to_string(), |m| m.value().to_string()),
    );
}

const RUN_HEADER: [&str; 6] = [
    "hit",
    "evaluations",
    "evaluations_to_hit",
    "generations",
    "lower_border_hits",
    "seed",
];

pub fn run(a: &RunArgs) -> Result<Status> {
    let cfg = algo_config(a)?;
    let spec: FitnessSpec = a.fitness.parse()?;
    let stop = a.max_evals.map_or_else(
        || StopCondition::default_for(&cfg),
        StopCondition::evaluations,
    );
    stop.validate(&cfg)?;
    let function = spec.instantiate(cfg.n, &mut RngStream::derive(a.seed, &[2]))?;
    let problem = Problem::new(function, spec.noise);
    let res = match &a.trace_out {
        Some(_) => runner::trace(&cfg, &problem, &stop, a.seed, a.probe_every)?,
        None => runner::run(&cfg, &problem, &stop, a.seed)?,
    };

    let mut meta = Metadata::new("run", a.seed);
    describe_config(&mut meta, &cfg);
    meta.set("fitness", &spec)
        .set("max_evaluations", stop.max_evaluations);

    println!("{}", &meta.line()[2..]);
    println!("hit={}", res.hit);
    println!("evaluations={}", res.evaluations);
    println!("evaluations_to_hit={}", opt(res.evaluations_to_hit));
    println!("generations={}", res.generations);
    println!("lower_border_hits={}", res.lower_border_hits);

    if let Some(path) = &a.csv {
        let row = vec![
            res.hit.to_string(),
            res.evaluations.to_string(),
            opt(res.evaluations_to_hit),
            res.generations.to_string(),
            res.lower_border_hits.to_string(),
            a.seed.to_string(),
        ];
        write_csv(path, &meta, &RUN_HEADER, &[row])?;
    }
    if let Some(path) = &a.trace_out {
        let mut tm = meta.clone();
        tm.set("probe_every", a.probe_every);
        let rows: Vec<Vec<String>> = res
            .potential_trace
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|(t, p)| vec![t.to_string(), p.to_string()])
            .collect();
        write_csv(path, &tm, &["t", "potential"], &rows)?;
    }
    Ok(if res.hit {
        Status::Done
    } else {
        Status::BudgetExhausted
    })
}

fn budget_rule(value: Option<&str>) -> Result<BudgetRule> {
    match value.map(str::trim) {
        None | Some("default") => Ok(BudgetRule::Default),
        Some(v) => {
            if let Some(c) = v.strip_prefix("factor:") {
                let c: f64 = c
                    .parse()
                    .map_err(|_| anyhow!("'budget': '{c}' is not a number"))?;
                if !(c > 0.0 && c.is_finite()) {
                    bail!("'budget': the factor must be positive");
                }
                Ok(BudgetRule::Factor(c))
            } else {
                let b = parse_u64("budget", v)
                    .context("'budget' is default, factor:<c> or an evaluation count")?;
                Ok(BudgetRule::Fixed(b))
            }
        }
    }
}

fn describe_budget(b: BudgetRule) -> String {
    match b {
        BudgetRule::Default => "default".into(),
        BudgetRule::Factor(c) => format!("factor:{c}"),
        BudgetRule::Fixed(v) => v.to_string(),
    }
}

/// `mu = 10`, `mu = lambda/2` or `mu = 0.25*lambda`.
fn mu_rule(value: &str) -> Result<MuRule> {
    let v: String = value.chars().filter(|c| !c.is_whitespace()).collect();
    let bad =
        || anyhow!("'mu': expected an integer, lambda/<integer> or <f>*lambda, got '{value}'");
    if let Some(d) = v.strip_prefix("lambda/") {
        let d: usize = d.parse().map_err(|_| bad())?;
        if d == 0 {
            bail!("'mu': the divisor must be at least 1");
        }
        return Ok(MuRule::Divisor(d));
    }
    if let Some(f) = v.strip_suffix("*lambda") {
        let f: f64 = f.parse().map_err(|_| bad())?;
        if !(f > 0.0 && f <= 1.0) {
            bail!("'mu': the fraction must lie in (0, 1]");
        }
        return Ok(MuRule::Fraction(f));
    }
    v.parse::<usize>().map(MuRule::Fixed).map_err(|_| bad())
}

fn describe_mu(m: MuRule) -> String {
    match m {
        MuRule::Fixed(v) => v.to_string(),
        MuRule::Fraction(f) => format!("{f}*lambda"),
        MuRule::Divisor(d) => format!("lambda/{d}"),
    }
}

fn margin_rule(s: &MarginSpec) -> MarginRule {
    match s {
        MarginSpec::OneOverN => MarginRule::OneOverN,
        MarginSpec::Borderless => MarginRule::Borderless,
        MarginSpec::Fixed(m) => MarginRule::Fixed(*m),
    }
}

fn replicates(s: &Section) -> Result<usize> {
    let r = parse_u64("replicates", s.require("replicates")?)? as usize;
    if r == 0 {
        bail!("'replicates' must be at least 1");
    }
    Ok(r)
}

fn master_seed(s: &Section) -> Result<u64> {
    s.get("master_seed")
        .map_or(Ok(0), |v| parse_u64("master_seed", v))
}

fn ns(s: &Section) -> Result<Vec<usize>> {
    let v = int_grid("n", s.require("n")?)?;
    if v.contains(&0) {
        bail!("'n' must be positive");
    }
    Ok(v)
}

pub fn sweep(a: &BatchArgs) -> Result<Status> {
    let file = ConfigFile::load(&a.config)?;
    file.allow_only(&["sweep"], &[])?;
    let s = file.section("sweep")?;
    let algorithm: Algorithm = s.require("algorithm")?.parse()?;
    let floats = |key: &str| s.get(key).map_or(Ok(vec![]), |v| real_list(key, v));
    let protocol = SweepProtocol {
        algorithm,
        n: ns(s)?,
        lambda: s
            .get("lambda")
            .map_or(Ok(vec![]), |v| int_grid("lambda", v))?,
        mu: match s.get("mu") {
            Some(v) => {
                if !matches!(algorithm, Algorithm::Umda | Algorithm::Pbil) {
                    bail!("mu is not a parameter of {}", algorithm.name());
                }
                mu_rule(v)?
            }
            None if matches!(algorithm, Algorithm::Umda | Algorithm::Pbil) => {
                bail!("{} needs 'mu'", algorithm.name())
            }
            None => MuRule::Fixed(1),
        },
        rho: floats("rho")?,
        k: floats("K")?,
        epsilon: floats("epsilon")?,
        margin: margin_rule(&MarginSpec::parse(s.get("margin"))?),
        fitness: s.get("fitness").unwrap_or("onemax").parse()?,
        replicates: replicates(s)?,
        master_seed: master_seed(s)?,
        budget: budget_rule(s.get("budget"))?,
    };
    s.finish()?;
    let rows = experiments::sweep(&protocol, a.threads.threads)?;

    let mut meta = Metadata::new("sweep", protocol.master_seed);
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    let join_u = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    meta.set("algorithm", algorithm.name())
        .set("n", join_u(&protocol.n))
        .set("lambda", join_u(&protocol.lambda));
    if matches!(algorithm, Algorithm::Umda | Algorithm::Pbil) {
        meta.set("mu", describe_mu(protocol.mu));
    }
    for (k, v) in [
        ("rho", &protocol.rho),
        ("K", &protocol.k),
        ("epsilon", &protocol.epsilon),
    ] {
        if !v.is_empty() {
            meta.set(k, join(v));
        }
    }
    meta.set("margin", MarginSpec::parse(s.get("margin"))?.describe())
        .set("fitness", &protocol.fitness)
        .set("replicates", protocol.replicates)
        .set("budget", describe_budget(protocol.budget));
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.fields(protocol.master_seed))
        .collect();
    write_csv(&a.out, &meta, &SWEEP_HEADER, &table)?;
    Ok(status_of(rows.iter().flat_map(|r| &r.replicates)))
}

struct ScalingCommon {
    fitness: Vec<FitnessSpec>,
    n: Vec<usize>,
    replicates: usize,
    master_seed: u64,
    budget: BudgetRule,
}

fn scaling_common(s: &Section) -> Result<ScalingCommon> {
    let fitness = list(s.get("fitness").unwrap_or("onemax"))
        .into_iter()
        .map(|f| f.parse::<FitnessSpec>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if fitness.is_empty() {
        bail!("'fitness' is empty");
    }
    Ok(ScalingCommon {
        fitness,
        n: ns(s)?,
        replicates: replicates(s)?,
        master_seed: master_seed(s)?,
        budget: budget_rule(s.get("budget"))?,
    })
}

fn common_meta(command: &str, c: &ScalingCommon) -> Metadata {
    let mut meta = Metadata::new(command, c.master_seed);
    let fit: Vec<String> = c.fitness.iter().map(ToString::to_string).collect();
    let n: Vec<String> = c.n.iter().map(ToString::to_string).collect();
    meta.set("fitness", fit.join(","))
        .set("n", n.join(","))
        .set("replicates", c.replicates)
        .set("budget", describe_budget(c.budget));
    meta
}

fn report_rows(reports: &[ScalingReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(ScalingReport::rows_fields)
        .collect()
}

fn report_status(reports: &[ScalingReport]) -> Status {
    status_of(
        reports
            .iter()
            .flat_map(|r| r.rows.iter().flat_map(|row| &row.replicates)),
    )
}

pub fn scaling(a: &BatchArgs) -> Result<Status> {
    let file = ConfigFile::load(&a.config)?;
    file.allow_only(&["scaling"], &[])?;
    let s = file.section("scaling")?;
    let common = scaling_common(s)?;
    if common.fitness.len() != 1 {
        bail!("[scaling] takes one fitness function; use compare for several");
    }
    let rule = AlgoRule::from_section(s)?;
    s.finish()?;
    let label = rule.algorithm.name().to_string();
    let resolve = |n: usize| rule.resolve(n, NoiseKind::None).map_err(to_core);
    let report = experiments::scaling_fit(
        &label,
        &resolve,
        &common.fitness[0],
        &common.n,
        common.replicates,
        common.budget,
        common.master_seed,
        a.threads.threads,
    )?;
    let mut meta = common_meta("scaling", &common);
    meta.set("rule", rule.describe());
    let reports = [report];
    write_csv(&a.out, &meta, &SCALING_HEADER, &report_rows(&reports))?;
    Ok(report_status(&reports))
}

fn to_core(e: anyhow::Error) -> eda_lab::Error {
    match e.downcast::<eda_lab::Error>() {
        Ok(e) => e,
        Err(e) => eda_lab::Error::Config(format!("{e:#}")),
    }
}

pub fn compare(a: &BatchArgs) -> Result<Status> {
    let file = ConfigFile::load(&a.config)?;
    file.allow_only(&["compare"], &["algo "])?;
    let s = file.section("compare")?;
    let common = scaling_common(s)?;
    s.finish()?;
    let mut rules = Vec::new();
    for sec in file.sections.iter().filter(|x| x.name.starts_with("algo ")) {
        let label = sec.name["algo ".len()..].trim().to_string();
        if label.is_empty() || label.contains(',') {
            bail!(
                "[{}]: labels must be non-empty and free of commas",
                sec.name
            );
        }
        let rule = AlgoRule::from_section(sec).with_context(|| format!("in [{}]", sec.name))?;
        sec.finish()?;
        rules.push((label, rule));
    }
    if rules.is_empty() {
        bail!("no [algo <label>] sections");
    }
    let entries: Vec<CompareEntry<'_>> = rules
        .iter()
        .map(|(label, rule)| CompareEntry {
            label: label.clone(),
            rule: Box::new(move |n: usize| rule.resolve(n, NoiseKind::None).map_err(to_core)),
        })
        .collect();
    let reports = experiments::compare(
        &entries,
        &common.fitness,
        &common.n,
        common.replicates,
        common.budget,
        common.master_seed,
        a.threads.threads,
    )?;
    let mut meta = common_meta("compare", &common);
    for (label, rule) in &rules {
        meta.set(&format!("algo[{label}]"), rule.describe());
    }
    write_csv(&a.out, &meta, &SCALING_HEADER, &report_rows(&reports))?;
    Ok(report_status(&reports))
}

pub fn noise(a: &BatchArgs) -> Result<Status> {
    let file = ConfigFile::load(&a.config)?;
    file.allow_only(&["noise"], &[])?;
    let s = file.section("noise")?;
    let fitness: FitnessSpec = s.get("fitness").unwrap_or("onemax").parse()?;
    let n = parse_u64("n", s.require("n")?)? as usize;
    let levels = list(s.require("levels")?)
        .into_iter()
        .map(|l| l.parse::<NoiseKind>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let reps = replicates(s)?;
    let seed = master_seed(s)?;
    let budget = parse_u64("budget", s.require("budget")?)?;
    let ea_c = s
        .get("ea_c")
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| anyhow!("'ea_c': '{v}' is not a number"))
        })
        .transpose()?;
    let rule = AlgoRule::from_section(s)?;
    s.finish()?;
    let resolve = |n: usize, noise: NoiseKind| rule.resolve(n, noise).map_err(to_core);
    let rows = experiments::noise_study(
        &resolve,
        &fitness,
        &levels,
        n,
        reps,
        budget,
        ea_c,
        seed,
        a.threads.threads,
    )?;
    let mut meta = Metadata::new("noise", seed);
    let lv: Vec<String> = levels.iter().map(ToString::to_string).collect();
    meta.set("fitness", &fitness)
        .set("n", n)
        .set("levels", lv.join(","))
        .set("replicates", reps)
        .set("budget", budget)
        .set("ea_c", opt(ea_c))
        .set("rule", rule.describe());
    let table: Vec<Vec<String>> = rows.iter().map(|r| r.fields(budget)).collect();
    write_csv(&a.out, &meta, &NOISE_HEADER, &table)?;
    Ok(status_of(
        rows.iter()
            .flat_map(|r| r.eda.iter().chain(r.ea.iter().flatten())),
    ))
}

fn print_check(c: &ChainCheck) -> Result<()> {
    let z = z_value(2.0 * c.confidence - 1.0)?;
    println!("{c}");
    println!(
        "  bound {} ; empirical mean {} ; {}% two-sided CI [{}, {}]",
        c.bound,
        c.mean,
        (2.0 * c.confidence - 1.0) * 100.0,
        c.mean - z * c.std_error,
        c.mean + z * c.std_error
    );
    Ok(())
}

fn read_traces(path: &std::path::Path, column: &str) -> Result<Vec<Vec<(u64, f64)>>> {
    let table = Table::read(path)?;
    let it = table.column("t")?;
    let iv = table.column(column)?;
    let ir = table.header.iter().position(|h| h == "run");
    let mut runs: BTreeMap<String, Vec<(u64, f64)>> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let t: u64 = row[it].trim().parse().map_err(|_| {
            anyhow!(
                "{}: row {}: t = '{}' is not an integer",
                path.display(),
                i + 1,
                row[it]
            )
        })?;
        let v: f64 = match row[iv].trim().parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => bail!(
                "{}: row {}: {column} = '{}' is not a finite number",
                path.display(),
                i + 1,
                row[iv]
            ),
        };
        let key = ir.map(|k| row[k].clone()).unwrap_or_default();
        let trace = runs.entry(key).or_default();
        if trace.last().is_some_and(|&(prev, _)| prev >= t) {
            bail!(
                "{}: row {}: t must increase within a run",
                path.display(),
                i + 1
            );
        }
        trace.push((t, v));
    }
    if runs.values().all(|r| r.len() < 2) {
        bail!(
            "{}: need at least two time points in some run",
            path.display()
        );
    }
    Ok(runs.into_values().collect())
}

pub fn drift_check(a: &DriftArgs) -> Result<Status> {
    if !(a.confidence > 0.5 && a.confidence < 1.0) {
        bail!("--confidence must lie in (0.5, 1)");
    }
    if let Some(path) = &a.trace {
        if a.bins == 0 {
            bail!("--bins must be at least 1");
        }
        let traces = read_traces(path, &a.column)?;
        let all = traces.iter().flatten().map(|p| p.1);
        let lo = all.clone().fold(f64::INFINITY, f64::min);
        let hi = all.fold(f64::NEG_INFINITY, f64::max);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        let edges: Vec<f64> = (0..=a.bins)
            .map(|k| lo + (hi - lo) * k as f64 / a.bins as f64)
            .collect();
        let est = empirical_drift(&traces, &edges, a.min_count)?;
        println!("bin_lo,bin_hi,count,mean_drift,std_error");
        for b in &est.bins {
            println!(
                "{},{},{},{},{}",
                b.lo,
                b.hi,
                b.count,
                opt(b.mean),
                opt(b.std_error)
            );
        }
        return Ok(Status::Done);
    }
    if let Some(h) = &a.h {
        let shape: DriftShape = h.parse()?;
        let x0 = a.x0.ok_or_else(|| anyhow!("--h needs --x0"))?;
        let b = variable_bound(x0, |x| shape.eval(x, a.c), a.tol)?;
        println!(
            "variable drift bound for h = {shape} (c = {}) from x0 = {x0}: {} (quadrature error estimate {})",
            a.c, b.value, b.error_estimate
        );
        return Ok(Status::Done);
    }
    let chain = a.chain.as_deref().unwrap_or("all");
    if a.runs < 2 {
        bail!("--runs must be at least 2");
    }
    let checks = experiments::with_threads(a.threads.threads, || -> Result<Vec<ChainCheck>> {
        let walk = || biased_walk_check(a.seed, a.runs, a.confidence);
        let thin = || binomial_thinning_check(a.seed, a.runs, a.confidence);
        let sqrt = || sqrt_jump_check(a.seed, a.runs, a.confidence);
        Ok(match chain {
            "walk" => vec![walk()?],
            "thinning" => vec![thin()?],
            "sqrt" => vec![sqrt()?],
            "all" => vec![walk()?, thin()?, sqrt()?],
            other => bail!("unknown chain '{other}' (expected walk, thinning, sqrt or all)"),
        })
    })??;
    for c in &checks {
        print_check(c)?;
    }
    Ok(if checks.iter().all(|c| c.pass) {
        Status::Done
    } else {
        Status::CheckFailed
    })
}

pub fn plot(a: &PlotArgs) -> Result<Status> {
    let table = Table::read(&a.input)?;
    let pts = svg::points(&table, &a.x, &a.y)?;
    let doc = svg::render(&pts, &a.x, &a.y);
    std::fs::write(&a.out, doc).with_context(|| format!("cannot write {}", a.out.display()))?;
    Ok(Status::Done)
}
