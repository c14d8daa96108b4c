use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pcn_bench::{field, spread, PAIRS};
use pcn_core::bounds::{CriterionOptions, Evaluator};
use pcn_core::finite_field::NormalityTester;
use pcn_core::number_theory::factor::DEFAULT_WORK_BUDGET;
use pcn_core::sieve::validate_sieving_set;
use pcn_core::{BigUint, CriterionLevel, FactorCache, Factorizer, PairContext};

fn normality(c: &mut Criterion) {
    let mut group = c.benchmark_group("normality");
    for (q, n) in [(5, 6), (2, 20), (7, 8)] {
        let (qq, ctx) = field(q, n);
        let tester = NormalityTester::new(&ctx, &qq, n, 1).unwrap();
        let xs = spread(&ctx, 1024);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{q}^{n}")), &xs, |b, xs| {
            let mut scratch = tester.scratch();
            b.iter(|| xs.iter().filter(|x| tester.is_normal(&x.coeffs, &mut scratch)).count())
        });
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("factor_q_n_minus_1");
    group.sample_size(10);
    for (q, n) in [(8, 12), (23, 24), (29, 60)] {
        group.bench_function(format!("{q}^{n}"), |b| {
            b.iter(|| {
                let fz = Factorizer::new(FactorCache::in_memory(), DEFAULT_WORK_BUDGET);
                fz.factor_q_n_minus_1(black_box(q), n).unwrap().distinct_prime_count()
            })
        });
    }
    group.finish();
}

fn criterion_levels(c: &mut Criterion) {
    let ev = Evaluator::new(Factorizer::default(), CriterionOptions { check_hypotheses: false, ..Default::default() });
    let mut group = c.benchmark_group("pcn_criterion");
    for (q, n) in PAIRS {
        let pair = PairContext::new(q, n).unwrap();
        for level in [CriterionLevel::ExactCA12, CriterionLevel::ExactAllProfiles, CriterionLevel::ExactWq] {
            ev.pcn_criterion(&pair, level).unwrap();
            group.bench_function(format!("{level}/{q}^{n}"), |b| b.iter(|| ev.pcn_criterion(black_box(&pair), level).unwrap().holds));
        }
    }
    group.finish();
}

fn sieve(c: &mut Criterion) {
    let ev = Evaluator::new(Factorizer::default(), CriterionOptions { check_hypotheses: false, ..Default::default() });
    let pair = PairContext::new(8, 12).unwrap();
    let primes: Vec<BigUint> = [109u32, 73, 37, 19, 13].into_iter().map(BigUint::from).collect();
    c.bench_function("validate_sieving_set/8^12", |b| {
        b.iter(|| validate_sieving_set(&ev, black_box(&pair), &primes).unwrap().holds)
    });
}

criterion_group!(benches, normality, factorization, criterion_levels, sieve);
criterion_main!(benches);
