//! Staged elimination of the pairs `(q, n)` for which the existence criterion
//! cannot be applied directly, followed by sieving and brute force for the
//! stubborn remainder.

use std::fmt::Write as _;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{worst_case_criterion, CriterionLevel, CriterionOptions, Evaluator};
use crate::error::{Error, Result};
use crate::extension_profile::{is_completely_basic, ProfileProduct};
use crate::number_theory::factor::{FactorCache, Factorizer, DEFAULT_WORK_BUDGET};
use crate::number_theory::{floor_rational_root, prime_powers_between, PairContext, PrimePowerQ};
use crate::oracle::{find_pcn_witness, verify_witness, OracleConfig, PcnWitness};
use crate::rational::upow;
use crate::sieve::{search_sieving_set, validate_sieving_set, SievingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[default]
    Odd,
    Even,
}

impl Parity {
    pub fn of(n: u64) -> Self {
        if n % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    fn first(self) -> u64 {
        match self {
            Parity::Odd => 1,
            Parity::Even => 2,
        }
    }

    /// Exponent `a/b` of the lower end `n^{a/b}` of the `q` range.
    fn range_exponent(self) -> (u32, u32) {
        match self {
            Parity::Odd => (3, 4),
            Parity::Even => (4, 5),
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(Parity::Odd),
            "even" => Ok(Parity::Even),
            _ => Err(Error::Domain(format!("parity must be odd or even, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub parity: Parity,
    /// Keep even-`n` pairs with `q - 1 | n` in the expansion.
    pub include_q_minus_1_divides_n: bool,
    pub oracle: OracleConfig,
    pub work_budget: u64,
    pub profile_product: ProfileProduct,
    /// Largest sieving set tried per pair.
    pub max_sieve_primes: usize,
    /// Exhaustive scan bound for the threshold stage; beyond it the
    /// criterion is sampled geometrically up to `threshold_sample_limit`.
    pub threshold_scan_limit: u64,
    pub threshold_sample_limit: u64,
    /// Accept pairs left without any resolution.
    pub allow_unresolved: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            parity: Parity::Odd,
            include_q_minus_1_divides_n: false,
            oracle: OracleConfig::default(),
            work_budget: DEFAULT_WORK_BUDGET,
            profile_product: ProfileProduct::WithTrivialTop,
            max_sieve_primes: 64,
            threshold_scan_limit: 100_000,
            threshold_sample_limit: 1_000_000_000_000,
            allow_unresolved: false,
        }
    }
}

impl PipelineConfig {
    pub fn for_parity(parity: Parity) -> Self {
        PipelineConfig { parity, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageId {
    S1,
    S2,
    #[serde(rename = "S2_pairs")]
    S2Pairs,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: StageId,
    pub description: String,
    pub count: usize,
    /// Surviving exponents (stages working per `n`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<u64>>,
    /// Surviving pairs `[q, n]`, sorted by `n` then `q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(u64, u64)>>,
    /// Smallest `N` such that the criterion holds for every `n >= N` of the
    /// parity (threshold stage only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u64>,
}

impl StageRecord {
    fn exponents(stage: StageId, description: &str, ns: Vec<u64>) -> Self {
        StageRecord { stage, description: description.into(), count: ns.len(), exponents: Some(ns), pairs: None, threshold: None }
    }

    fn pairs(stage: StageId, description: &str, mut pairs: Vec<(u64, u64)>) -> Self {
        pairs.sort_by_key(|&(q, n)| (n, q));
        StageRecord { stage, description: description.into(), count: pairs.len(), exponents: None, pairs: Some(pairs), threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resolution {
    ExactCriterion { level: CriterionLevel },
    CompletelyBasic,
    Sieved { certificate: SievingSet },
    BruteForceWitness { witness: PcnWitness },
    KnownExample,
    Unresolved,
}

impl Resolution {
    pub fn kind(&self) -> &'static str {
        match self {
            Resolution::ExactCriterion { .. } => "exact_criterion",
            Resolution::CompletelyBasic => "completely_basic",
            Resolution::Sieved { .. } => "sieved",
            Resolution::BruteForceWitness { .. } => "brute_force_witness",
            Resolution::KnownExample => "known_example",
            Resolution::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResolution {
    pub q: u64,
    pub n: u64,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub parity: Parity,
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
    /// One entry per expanded pair, sorted by `n` then `q`.
    pub resolutions: Vec<PairResolution>,
    pub unresolved: usize,
}

impl PipelineReport {
    pub fn stage(&self, id: StageId) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == id)
    }

    pub fn resolution(&self, q: u64, n: u64) -> Option<&Resolution> {
        self.resolutions.iter().find(|r| r.q == q && r.n == n).map(|r| &r.resolution)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text summary: one line per stage, then resolution tallies.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "parity: {:?}", self.parity);
        let _ = writeln!(out, "{:<9} {:>7}  description", "stage", "count");
        for s in &self.stages {
            let count = match s.threshold {
                Some(t) => format!("N*={t}"),
                None => s.count.to_string(),
            };
            let _ = writeln!(out, "{:<9} {:>7}  {}", format!("{:?}", s.stage), count, s.description);
        }
        let mut tally: std::collections::BTreeMap<&str, usize> = Default::default();
        for r in &self.resolutions {
            *tally.entry(r.resolution.kind()).or_default() += 1;
        }
        let _ = writeln!(out, "resolutions:");
        for (k, v) in tally {
            let _ = writeln!(out, "  {k:<20} {v}");
        }
        let last: Vec<String> = self
            .resolutions
            .iter()
            .filter(|r| matches!(r.resolution, Resolution::Sieved { .. } | Resolution::BruteForceWitness { .. } | Resolution::KnownExample | Resolution::Unresolved))
            .map(|r| format!("({},{}) {}", r.q, r.n, r.resolution.kind()))
            .collect();
        for line in last {
            let _ = writeln!(out, "  {line}");
        }
        out
    }
}

/// Size bound under which the literature already lists explicit examples.
pub fn has_known_example(q: u64, n: u64) -> bool {
    q <= 97 && upow(q, n) < BigUint::from(10u32).pow(50)
}

pub struct Pipeline {
    config: PipelineConfig,
    ev: Evaluator,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Self::with_cache(config, FactorCache::in_memory())
    }

    pub fn with_cache(config: PipelineConfig, cache: FactorCache) -> Self {
        let options = CriterionOptions { check_hypotheses: false, product: config.profile_product };
        let ev = Evaluator::new(Factorizer::new(cache, config.work_budget), options);
        Pipeline { config, ev }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.ev
    }

    pub fn factorizer(&self) -> &Factorizer {
        &self.ev.factorizer
    }

    /// `(threshold, sampled_ok)`: the last failing `n` below the scan limit
    /// plus one, and whether every geometric sample above it holds.
    pub fn threshold(&self) -> Result<(u64, bool)> {
        let parity = self.config.parity;
        let start = match parity {
            Parity::Odd => 3,
            Parity::Even => 4,
        };
        let limit = self.config.threshold_scan_limit;
        let mut last_fail = None;
        let mut n = start;
        while n < limit {
            if !worst_case_criterion(n, CriterionLevel::RobinA12)?.holds {
                last_fail = Some(n);
            }
            n += 2;
        }
        let threshold = last_fail.map_or(start, |n| n + 1);
        let mut sampled_ok = true;
        let mut x = limit as f64;
        while x < self.config.threshold_sample_limit as f64 {
            let mut n = x as u64;
            if Parity::of(n) != parity {
                n += 1;
            }
            sampled_ok &= worst_case_criterion(n, CriterionLevel::RobinA12)?.holds;
            x *= 1.05;
        }
        Ok((threshold, sampled_ok))
    }

    /// Prime powers `q` with `floor(n^{a/b}) <= q < n`.
    pub fn expand(&self, n: u64) -> Vec<(u64, u64)> {
        let (a, b) = self.config.parity.range_exponent();
        let lo = floor_rational_root(n, a, b);
        prime_powers_between(lo - 1, n)
            .into_iter()
            .filter(|q| self.config.parity == Parity::Odd || self.config.include_q_minus_1_divides_n || n % (q.q - 1) != 0)
            .map(|q| (q.q, n))
            .collect()
    }

    fn holds(&self, pair: (u64, u64), level: CriterionLevel) -> Result<bool> {
        let ctx = PairContext::new(pair.0, pair.1)?;
        self.ev.pcn_criterion(&ctx, level).map(|o| o.holds).map_err(|e| match e {
            Error::FactorizationTimeout { cofactor } => Error::FactorizationTimeout {
                cofactor: format!("{cofactor} (pair q={}, n={})", pair.0, pair.1),
            },
            other => other,
        })
    }

    /// Pairs failing `level`, order preserved.
    fn failing(&self, pairs: &[(u64, u64)], level: CriterionLevel) -> Result<Vec<(u64, u64)>> {
        let verdicts: Vec<Result<bool>> = pairs.par_iter().map(|&p| self.holds(p, level)).collect();
        let mut out = Vec::new();
        for (&p, v) in pairs.iter().zip(verdicts) {
            if !v? {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<PipelineReport> {
        let parity = self.config.parity;
        let mut stages = Vec::new();
        let mut resolved: Vec<PairResolution> = Vec::new();
        let settle = |pairs: &[(u64, u64)], survivors: &[(u64, u64)], r: Resolution, out: &mut Vec<PairResolution>| {
            for &(q, n) in pairs {
                if !survivors.contains(&(q, n)) {
                    out.push(PairResolution { q, n, resolution: r.clone() });
                }
            }
        };

        let (threshold, sampled_ok) = self.threshold()?;
        if !sampled_ok {
            return Err(Error::Internal("criterion fails above the scanned threshold range".into()));
        }
        let below: Vec<u64> = (parity.first()..threshold).step_by(2).collect();
        let mut s1 = StageRecord::exponents(StageId::S1, "worst-case q, Robin bound for t(n), c = 1.06e24", below.clone());
        s1.threshold = Some(threshold);
        stages.push(s1);

        let verdicts: Vec<Result<bool>> = below
            .par_iter()
            .map(|&n| worst_case_criterion(n, CriterionLevel::ExactTA12).map(|o| o.holds))
            .collect();
        let mut exps = Vec::new();
        for (&n, v) in below.iter().zip(verdicts) {
            if !v? {
                exps.push(n);
            }
        }
        stages.push(StageRecord::exponents(StageId::S2, "worst-case q, exact t(n)", exps.clone()));

        let pairs: Vec<(u64, u64)> = exps.iter().flat_map(|&n| self.expand(n)).collect();
        stages.push(StageRecord::pairs(StageId::S2Pairs, "prime powers floor(n^(a/b)) <= q < n", pairs.clone()));

        let s3 = self.failing(&pairs, CriterionLevel::ExactCA12)?;
        settle(&pairs, &s3, Resolution::ExactCriterion { level: CriterionLevel::ExactCA12 }, &mut resolved);
        stages.push(StageRecord::pairs(StageId::S3, "exact c_{q',12} and t(n)", s3.clone()));

        let s4: Vec<(u64, u64)> = s3
            .iter()
            .copied()
            .filter(|&(q, n)| !is_completely_basic(&PrimePowerQ::new(q).expect("expanded q"), n))
            .collect();
        settle(&s3, &s4, Resolution::CompletelyBasic, &mut resolved);
        stages.push(StageRecord::pairs(StageId::S4, "drop completely basic extensions", s4.clone()));

        let s5 = if parity == Parity::Even {
            let s5 = self.failing(&s4, CriterionLevel::ExactW1Theta1)?;
            settle(&s4, &s5, Resolution::ExactCriterion { level: CriterionLevel::ExactW1Theta1 }, &mut resolved);
            stages.push(StageRecord::pairs(StageId::S5, "exact W_1 theta_1, remainder 2^(t(n)-n-1)", s5.clone()));
            s5
        } else {
            s4
        };

        let s6 = self.failing(&s5, CriterionLevel::ExactAllProfiles)?;
        settle(&s5, &s6, Resolution::ExactCriterion { level: CriterionLevel::ExactAllProfiles }, &mut resolved);
        stages.push(StageRecord::pairs(StageId::S6, "exact product of W_l theta_l", s6.clone()));

        let s7 = self.failing(&s6, CriterionLevel::ExactWq)?;
        settle(&s6, &s7, Resolution::ExactCriterion { level: CriterionLevel::ExactWq }, &mut resolved);
        stages.push(StageRecord::pairs(StageId::S7, "exact W(q') from the factorization of q^n - 1", s7.clone()));

        let sieved: Vec<Result<Option<SievingSet>>> = s7
            .par_iter()
            .map(|&(q, n)| {
                let pair = PairContext::new(q, n)?;
                match search_sieving_set(&self.ev, &pair, self.config.max_sieve_primes) {
                    Ok(check) => Ok(Some(check.certificate)),
                    Err(Error::NotFound(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect();
        let mut s8 = Vec::new();
        for (&(q, n), s) in s7.iter().zip(sieved) {
            match s? {
                Some(certificate) => resolved.push(PairResolution { q, n, resolution: Resolution::Sieved { certificate } }),
                None => s8.push((q, n)),
            }
        }
        stages.push(StageRecord::pairs(StageId::S8, "greedy prime sieve, largest primes first", s8.clone()));

        let mut s9 = Vec::new();
        for &(q, n) in &s8 {
            let resolution = self.residual(q, n)?;
            if resolution == Resolution::Unresolved {
                s9.push((q, n));
            }
            resolved.push(PairResolution { q, n, resolution });
        }
        stages.push(StageRecord::pairs(StageId::S9, "brute-force witness or known example", s9.clone()));

        if !s9.is_empty() && !self.config.allow_unresolved {
            return Err(Error::NotFound(format!("{} pairs left unresolved: {:?}", s9.len(), s9)));
        }
        resolved.sort_by_key(|r| (r.n, r.q));
        Ok(PipelineReport { parity, config: self.config.clone(), stages, resolutions: resolved, unresolved: s9.len() })
    }

    fn residual(&self, q: u64, n: u64) -> Result<Resolution> {
        let qq = PrimePowerQ::new(q)?;
        if upow(q, n) <= BigUint::from(self.config.oracle.witness_cap) {
            match find_pcn_witness(&qq, n, &self.config.oracle) {
                Ok(witness) => return Ok(Resolution::BruteForceWitness { witness }),
                Err(Error::NotFound(_)) => return Ok(Resolution::Unresolved),
                Err(Error::SizeLimit { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if has_known_example(q, n) {
            Ok(Resolution::KnownExample)
        } else {
            Ok(Resolution::Unresolved)
        }
    }

    /// Cheapest resolution for one pair, trying the stages in order.
    pub fn classify(&self, q: u64, n: u64) -> Result<Resolution> {
        if n < 2 {
            return Err(Error::Domain("classification needs n >= 2".into()));
        }
        let qq = PrimePowerQ::new(q)?;
        for level in [CriterionLevel::ExactTA12, CriterionLevel::ExactCA12] {
            if self.holds((q, n), level)? {
                return Ok(Resolution::ExactCriterion { level });
            }
        }
        if is_completely_basic(&qq, n) {
            return Ok(Resolution::CompletelyBasic);
        }
        for level in [CriterionLevel::ExactW1Theta1, CriterionLevel::ExactAllProfiles, CriterionLevel::ExactWq] {
            if self.holds((q, n), level)? {
                return Ok(Resolution::ExactCriterion { level });
            }
        }
        let pair = PairContext::new(q, n)?;
        match search_sieving_set(&self.ev, &pair, self.config.max_sieve_primes) {
            Ok(check) => return Ok(Resolution::Sieved { certificate: check.certificate }),
            Err(Error::NotFound(_)) => {}
            Err(e) => return Err(e),
        }
        self.residual(q, n)
    }

    /// Re-checks a report: stage bookkeeping, monotone survivor sets, and
    /// every resolution independently. Returns the list of problems found.
    pub fn verify(&self, report: &PipelineReport) -> Result<Vec<String>> {
        let mut problems = Vec::new();
        let mut previous: Option<&Vec<(u64, u64)>> = None;
        for s in &report.stages {
            let len = s.pairs.as_ref().map(Vec::len).or(s.exponents.as_ref().map(Vec::len)).unwrap_or(0);
            if len != s.count {
                problems.push(format!("{:?}: count {} but {} survivors listed", s.stage, s.count, len));
            }
            if let Some(pairs) = &s.pairs {
                if let Some(prev) = previous {
                    if let Some(p) = pairs.iter().find(|p| !prev.contains(p)) {
                        problems.push(format!("{:?}: ({}, {}) was not a survivor of the previous stage", s.stage, p.0, p.1));
                    }
                }
                previous = Some(pairs);
            }
        }
        let checks: Vec<Result<Option<String>>> = report
            .resolutions
            .par_iter()
            .map(|r| {
                let ok = self.recheck(r)?;
                Ok((!ok).then(|| format!("({}, {}): {} does not re-verify", r.q, r.n, r.resolution.kind())))
            })
            .collect();
        for c in checks {
            if let Some(p) = c? {
                problems.push(p);
            }
        }
        Ok(problems)
    }

    fn recheck(&self, r: &PairResolution) -> Result<bool> {
        Ok(match &r.resolution {
            Resolution::ExactCriterion { level } => self.holds((r.q, r.n), *level)?,
            Resolution::CompletelyBasic => is_completely_basic(&PrimePowerQ::new(r.q)?, r.n),
            Resolution::Sieved { certificate } => {
                certificate.pair == PairContext::new(r.q, r.n)?
                    && validate_sieving_set(&self.ev, &certificate.pair, &certificate.primes)?.holds
            }
            Resolution::BruteForceWitness { witness } => {
                witness.q == r.q && witness.n == r.n && verify_witness(witness, &self.config.oracle)?
            }
            Resolution::KnownExample => has_known_example(r.q, r.n),
            Resolution::Unresolved => self.config.allow_unresolved,
        })
    }
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport> {
    Pipeline::new(config.clone()).run()
}

pub fn classify_pair(q: u64, n: u64, config: &PipelineConfig) -> Result<Resolution> {
    Pipeline::new(config.clone()).classify(q, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let ok: PipelineConfig = serde_json::from_str(r#"{"parity":"even","include_q_minus_1_divides_n":true}"#).unwrap();
        assert_eq!(ok.parity, Parity::Even);
        assert!(ok.include_q_minus_1_divides_n);
        assert_eq!(ok.oracle, OracleConfig::default());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"parity":"odd","bogus":1}"#).is_err());
    }

    #[test]
    fn expansion_uses_floor_of_lower_end() {
        let p = Pipeline::new(PipelineConfig::for_parity(Parity::Odd));
        // floor(21^{3/4}) = 9
        let qs: Vec<u64> = p.expand(21).into_iter().map(|x| x.0).collect();
        assert_eq!(qs, vec![9, 11, 13, 16, 17, 19]);
        assert!(p.expand(1).is_empty());
        let even = Pipeline::new(PipelineConfig::for_parity(Parity::Even));
        assert!(!even.expand(12).contains(&(7, 12)));
        let incl = Pipeline::new(PipelineConfig { include_q_minus_1_divides_n: true, ..PipelineConfig::for_parity(Parity::Even) });
        assert!(incl.expand(12).contains(&(7, 12)));
    }

    #[test]
    fn known_example_bound() {
        assert!(has_known_example(97, 25));
        assert!(!has_known_example(97, 26));
        assert!(!has_known_example(101, 2));
    }

    #[test]
    fn classification_examples() {
        let p = Pipeline::new(PipelineConfig::for_parity(Parity::Odd));
        assert!(matches!(p.classify(9, 21).unwrap(), Resolution::ExactCriterion { .. }));
        assert!(matches!(p.classify(8, 12).unwrap(), Resolution::Sieved { .. }));
        let w = p.classify(5, 6).unwrap();
        assert!(matches!(w, Resolution::BruteForceWitness { .. }));
        assert!(p.classify(5, 1).is_err());
    }

    #[test]
    fn resolution_json_roundtrip() {
        let r = Resolution::ExactCriterion { level: CriterionLevel::ExactWq };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"kind":"exact_criterion","level":"exact_Wq"}"#);
        assert_eq!(serde_json::from_str::<Resolution>(&s).unwrap(), r);
    }
}
