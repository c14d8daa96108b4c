//! Shared inputs for the benchmarks.

use pcn_core::finite_field::FieldContext;
use pcn_core::{FieldElement, PrimePowerQ};

/// Pairs spanning the exceptional lists, small to large.
pub const PAIRS: [(u64, u64); 4] = [(9, 21), (8, 12), (23, 24), (41, 60)];

pub fn field(q: u64, n: u64) -> (PrimePowerQ, FieldContext) {
    let q = PrimePowerQ::new(q).expect("prime power");
    let ctx = FieldContext::for_pair(&q, n, u64::MAX).expect("field fits");
    (q, ctx)
}

/// `count` elements spread evenly over the field, zero excluded.
pub fn spread(ctx: &FieldContext, count: u64) -> Vec<FieldElement> {
    let step = (ctx.size() / count).max(1);
    (1..=count).map(|i| ctx.element((i * step) % ctx.size())).filter(|x| !ctx.is_zero(x)).collect()
}
