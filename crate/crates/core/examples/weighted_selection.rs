//! Shows how the target unit is drawn: candidates are ranked by ascending
//! coverage and the i-th of n gets weight n - i + 1.
//!
//! ```text
//! cargo run --example weighted_selection
//! ```

use std::collections::BTreeMap;

use covquest::generate::{rank_candidates, select_target_unit};
use covquest::model::{CoverageFraction, SourceUnit};
use covquest::rng::DrawStream;

fn main() {
    let mut candidates = vec![
        (SourceUnit::from_path("src/main/java/shop/Order.java"), CoverageFraction::new(9, 10)),
        (SourceUnit::from_path("src/main/java/shop/Invoice.java"), CoverageFraction::new(1, 10)),
        (SourceUnit::from_path("src/main/java/shop/Discount.java"), CoverageFraction::new(5, 10)),
        (SourceUnit::from_path("src/main/java/shop/Cart.java"), CoverageFraction::new(3, 10)),
    ];
    rank_candidates(&mut candidates);
    let n = candidates.len();
    let total = n * (n + 1) / 2;

    let draws = 50_000;
    let mut stream = DrawStream::from_seed(2024);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..draws {
        let unit = select_target_unit(&candidates, &mut stream).expect("non-empty");
        *counts.entry(unit.unit_name).or_default() += 1;
    }

    println!("{:<28} {:>9} {:>9} {:>9}", "unit", "coverage", "expected", "observed");
    for (i, (unit, cov)) in candidates.iter().enumerate() {
        let expected = (n - i) as f64 / total as f64;
        let observed = counts.get(&unit.unit_name).copied().unwrap_or(0) as f64 / draws as f64;
        println!("{:<28} {:>8.0}% {expected:>9.3} {observed:>9.3}", unit.unit_name, cov.as_f64() * 100.0);
    }
}
