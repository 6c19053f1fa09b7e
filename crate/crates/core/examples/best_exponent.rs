//! Bisects for the best exponent of an annotation (default `1100100`) and
//! prints the certified derivation at the bracket's feasible end.

use altproof::annotation::Annotation;
use altproof::derivation::pretty_print;
use altproof::search::best_c;

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| "1100100".into());
    let a: Annotation = text.parse().expect("valid annotation");
    let r = best_c(&a, 1e-6).expect("search succeeds");
    println!("best_c {:.6}  bracket [{}, {}]", r.best_c, r.bracket.feasible, r.bracket.infeasible);
    println!("{} LP solves, {} pivots, {} exact", r.stats.lp_solves, r.stats.pivots, r.stats.exact_solves);
    print!("{}", pretty_print(&r.certificate));
}
