//! One PASS/FAIL line per acceptance criterion. Exits nonzero when a criterion
//! fails that is not listed in `KNOWN_UNATTAINABLE`.

use geochaos_cli::acceptance::{Acceptance, TITLES};

fn main() {
    let ids: Vec<usize> = (1..=TITLES.len()).collect();
    let outcomes = Acceptance::new().run_all(&ids, |o| println!("{}", o.line()));
    let mut unexpected = 0;
    for o in outcomes.iter().filter(|o| !o.passed) {
        match o.known_unattainable() {
            Some(why) => println!("note: criterion {} is a known failure: {why}", o.id),
            None => unexpected += 1,
        }
    }
    for o in outcomes.iter().filter(|o| o.passed && o.known_unattainable().is_some()) {
        println!("note: criterion {} passed although listed as unattainable", o.id);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} passed, {unexpected} unexpected failures", outcomes.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
