//! Every property check with its verdicts and wall time.

use std::time::Instant;

use bubblelab::experiments::suite::all_checks;

fn main() {
    for (name, check) in all_checks() {
        let start = Instant::now();
        match check() {
            Ok(criteria) => {
                for c in criteria {
                    println!("{name}: {}", c.line());
                }
            }
            Err(e) => println!("{name}: aborted: {e}"),
        }
        println!("{name}: {:.2?}", start.elapsed());
    }
}
