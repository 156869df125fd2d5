//! Runs the learner and the baseline once on a 1-D instance and prints the
//! per-epoch trace and timings.

use std::time::Instant;

use wsal::engine::{run_dbal_baseline, run_main, AlgoConfig};
use wsal::hypotheses::Line;
use wsal::world::instances::build_world;
use wsal::world::{Family, InstanceSpec, WeakModeKind};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let mode: WeakModeKind = args.next().map_or(WeakModeKind::BoundaryDisagree, |s| s.parse().expect("weak mode"));
    let spec = InstanceSpec {
        family: Family::Threshold1d,
        nu: 0.1,
        weak_mode: mode,
        g: 0.05,
        p: 0.0,
        beta: 0.0,
        seed,
    };
    let config = AlgoConfig { max_unlabeled: 2_000_000_000, ..AlgoConfig::default() };
    for baseline in [false, true] {
        let mut world = build_world::<Line>(&spec, seed).expect("world");
        let start = Instant::now();
        let out = if baseline { run_dbal_baseline(&mut world, &config) } else { run_main(&mut world, &config) };
        let out = out.expect("run");
        println!(
            "baseline={baseline} time={:.2}s excess={:.5} strong={} weak={} unlabeled={}",
            start.elapsed().as_secs_f64(),
            world.exact_error(&out.classifier) - world.nu(),
            out.ledger.strong_queries,
            out.ledger.weak_queries,
            out.ledger.unlabeled_draws,
        );
        for e in &out.epochs {
            println!("  {}", serde_json::to_string(&e.trace_record()).expect("json"));
        }
    }
}
