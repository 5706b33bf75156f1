//! Acceptance table. Runs without the libtest harness so every criterion
//! prints its pass/fail line even when all of them pass.

use std::process::ExitCode;
use std::time::Instant;

use repcli::checks::{self, CheckOptions, Criterion};

type Check = Box<dyn Fn() -> Criterion>;

fn main() -> ExitCode {
    let opts = CheckOptions::default();
    let criteria: Vec<(&str, Check)> = vec![
        ("instant", Box::new(checks::headline_rates)),
        ("instant", Box::new(checks::limits)),
        ("instant", Box::new(checks::zhao)),
        ("< 1 s", Box::new(move || checks::protocol_algebra(opts.seed))),
        ("instant", Box::new(checks::bell_analyzer)),
        ("< 5 s", Box::new(move || checks::phase_matching(opts.seed))),
        ("< 60 s", Box::new(move || checks::monte_carlo(opts))),
        ("< 30 s", Box::new(move || checks::nested_swap_factor(opts))),
        ("instant", Box::new(checks::multi_node_figures)),
        ("instant", Box::new(checks::od_efficiency)),
    ];
    let mut failed = 0;
    for (budget, run) in criteria {
        let t = Instant::now();
        let c = run();
        let secs = t.elapsed().as_secs_f64();
        println!("{c} [{secs:.2} s, budget {budget}]");
        if !c.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    }
}
