use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use pcn_core::bounds::{cn_lower_bound, CriterionOptions, Evaluator};
use pcn_core::number_theory::cyclotomic_split;
use pcn_core::number_theory::factor::DEFAULT_WORK_BUDGET;
use pcn_core::oracle::{find_pcn_witness, survey_counts, verify_character_bound};
use pcn_core::pipeline::Pipeline;
use pcn_core::sieve::{search_sieving_set, validate_sieving_set};
use pcn_core::{
    BigUint, BoundVariant, CriterionLevel, Error, FactorCache, FactoredInteger, Factorizer, OracleConfig, PairContext,
    Parity, PipelineConfig, PipelineReport, PrimePowerQ, Resolution,
};

#[derive(Parser)]
#[command(name = "pcn", version, about = "Existence checks for primitive completely normal elements")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Factorization cache file.
    #[arg(long, global = true, env = "PCN_CACHE")]
    cache: Option<PathBuf>,
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Work budget per composite cofactor, in modular multiplications.
    #[arg(long, global = true, default_value_t = DEFAULT_WORK_BUDGET)]
    work_budget: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the staged elimination for one parity of n.
    Pipeline {
        #[arg(long)]
        parity: Option<Parity>,
        #[arg(long)]
        include_q_minus_1_divides_n: bool,
        /// JSON pipeline configuration; flags given here override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        allow_unresolved: bool,
        /// Also print the stage table to stderr.
        #[arg(long)]
        table: bool,
    },
    /// Evaluate one criterion level, or classify the pair when no level is given.
    CheckPair {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        level: Option<CriterionLevel>,
        /// Apply the bound formula even where its hypotheses fail.
        #[arg(long)]
        no_hypotheses: bool,
    },
    /// Lower bound on the number of completely normal elements.
    Bounds {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        variant: BoundVariant,
    },
    /// Validate the given sieving primes, or search for a set.
    Sieve {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<BigUint>>,
        #[arg(long, default_value_t = 64)]
        max_primes: usize,
    },
    /// Exhaustive computations in F_{q^n}.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
        #[arg(long, global = true, default_value_t = OracleConfig::default().count_cap)]
        count_cap: u64,
        #[arg(long, global = true, default_value_t = OracleConfig::default().witness_cap)]
        witness_cap: u64,
    },
    /// Cyclotomic split and complete factorization of q^n - 1.
    Factor {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
    },
    /// Re-check every stage and resolution of a saved pipeline report.
    VerifyReport { report: PathBuf },
}

#[derive(Subcommand)]
enum OracleOp {
    /// Count completely normal elements, primitive ones, and r-free ones for each --r.
    Count {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        r: Vec<BigUint>,
    },
    /// First primitive completely normal element in enumeration order.
    Find {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
    },
    /// Check the character sum bound for one square-free r.
    VerifyBound {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        r: BigUint,
    },
}

/// Result of a command: JSON payload and whether it counts as success.
struct Outcome {
    body: serde_json::Value,
    ok: bool,
}

impl Outcome {
    fn new(body: impl Serialize, ok: bool) -> Result<Self> {
        Ok(Outcome { body: serde_json::to_value(body)?, ok })
    }
}

fn factors_json(f: &FactoredInteger) -> serde_json::Value {
    json!(f.factors().iter().map(|(p, e)| json!([p.to_string(), e])).collect::<Vec<_>>())
}

fn open_cache(path: &Option<PathBuf>) -> Result<FactorCache> {
    Ok(match path {
        Some(p) => FactorCache::open(p).with_context(|| format!("opening cache {}", p.display()))?,
        None => FactorCache::in_memory(),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cache = open_cache(&cli.cache)?;
    let factorizer = Factorizer::new(cache, cli.work_budget);
    let outcome = match &cli.command {
        Command::Pipeline { parity, include_q_minus_1_divides_n, config, allow_unresolved, table } => {
            let mut cfg: PipelineConfig = match config {
                Some(path) => read_json(path)?,
                None => PipelineConfig::default(),
            };
            match (parity, config) {
                (Some(p), _) => cfg.parity = *p,
                (None, None) => bail!("--parity is required without --config"),
                (None, Some(_)) => {}
            }
            cfg.include_q_minus_1_divides_n |= include_q_minus_1_divides_n;
            cfg.allow_unresolved |= allow_unresolved;
            if cli.work_budget != DEFAULT_WORK_BUDGET {
                cfg.work_budget = cli.work_budget;
            }
            let pipeline = Pipeline::with_cache(cfg, factorizer.cache);
            let report = pipeline.run()?;
            if *table {
                eprint!("{}", report.render_table());
            }
            pipeline.factorizer().cache.save()?;
            return Outcome::new(&report, report.unresolved == 0);
        }
        Command::CheckPair { q, n, level, no_hypotheses } => match level {
            Some(level) => {
                let options = CriterionOptions { check_hypotheses: !no_hypotheses, ..Default::default() };
                let ev = Evaluator::new(factorizer, options);
                let res = ev.pcn_criterion(&PairContext::new(*q, *n)?, *level)?;
                ev.factorizer.cache.save()?;
                Outcome::new(&res, res.holds)?
            }
            None => {
                let pipeline = Pipeline::with_cache(
                    PipelineConfig { work_budget: cli.work_budget, ..Default::default() },
                    factorizer.cache,
                );
                let res = pipeline.classify(*q, *n)?;
                pipeline.factorizer().cache.save()?;
                let ok = res != Resolution::Unresolved;
                Outcome::new(json!({ "q": q, "n": n, "resolution": res }), ok)?
            }
        },
        Command::Bounds { q, n, variant } => Outcome::new(cn_lower_bound(&PairContext::new(*q, *n)?, *variant)?, true)?,
        Command::Sieve { q, n, primes, max_primes } => {
            let ev = Evaluator::new(factorizer, CriterionOptions { check_hypotheses: false, ..Default::default() });
            let pair = PairContext::new(*q, *n)?;
            let res = match primes {
                Some(p) => Some(validate_sieving_set(&ev, &pair, p)?),
                None => match search_sieving_set(&ev, &pair, *max_primes) {
                    Ok(c) => Some(c),
                    Err(Error::NotFound(_)) => None,
                    Err(e) => return Err(e.into()),
                },
            };
            ev.factorizer.cache.save()?;
            match res {
                Some(c) => {
                    let ok = c.holds;
                    Outcome::new(c, ok)?
                }
                None => Outcome::new(json!({ "q": q, "n": n, "found": false }), false)?,
            }
        }
        Command::Oracle { op, count_cap, witness_cap } => {
            let cfg = OracleConfig { count_cap: *count_cap, witness_cap: *witness_cap };
            let factor_r = |r: &BigUint| factorizer.factor_integer(r);
            match op {
                OracleOp::Count { q, n, r } => {
                    let rs = r.iter().map(factor_r).collect::<pcn_core::Result<Vec<_>>>()?;
                    Outcome::new(survey_counts(&PrimePowerQ::new(*q)?, *n, &rs, &cfg)?, true)?
                }
                OracleOp::Find { q, n } => match find_pcn_witness(&PrimePowerQ::new(*q)?, *n, &cfg) {
                    Ok(w) => Outcome::new(w, true)?,
                    Err(Error::NotFound(msg)) => Outcome::new(json!({ "q": q, "n": n, "found": false, "detail": msg }), false)?,
                    Err(e) => return Err(e.into()),
                },
                OracleOp::VerifyBound { q, n, r } => {
                    let rep = verify_character_bound(&PrimePowerQ::new(*q)?, *n, &factor_r(r)?, &cfg)?;
                    let ok = rep.holds;
                    Outcome::new(rep, ok)?
                }
            }
        }
        Command::Factor { q, n } => {
            let parts = cyclotomic_split(*q, *n)
                .into_iter()
                .map(|(d, v)| {
                    let f = factorizer.factor_integer(&v)?;
                    Ok(json!({ "d": d, "value": v.to_string(), "factors": factors_json(&f) }))
                })
                .collect::<pcn_core::Result<Vec<_>>>()?;
            let all = factorizer.factor_q_n_minus_1(*q, *n)?;
            factorizer.cache.save()?;
            Outcome::new(
                json!({
                    "q": q,
                    "n": n,
                    "value": all.value().to_string(),
                    "cyclotomic_parts": parts,
                    "factors": factors_json(&all),
                    "distinct_primes": all.distinct_prime_count(),
                }),
                true,
            )?
        }
        Command::VerifyReport { report } => {
            let report: PipelineReport = read_json(report)?;
            let pipeline = Pipeline::with_cache(report.config.clone(), factorizer.cache);
            let problems = pipeline.verify(&report)?;
            pipeline.factorizer().cache.save()?;
            let ok = problems.is_empty();
            Outcome::new(json!({ "checked": report.resolutions.len(), "problems": problems }), ok)?
        }
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let text = serde_json::to_string_pretty(&outcome.body).expect("json value") + "\n";
    let written = match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
