//! Best exponents along the two parameterised families: `1^k 0^(k+1)`
//! approaching the golden ratio, and the nested family approaching 2cos(π/7).

use altproof::search::{family_sweep, FamilyParams, SearchConfig};

fn main() {
    let mut params: Vec<FamilyParams> = (1..=8).map(FamilyParams::Fvm).collect();
    params.extend((1..=4).map(|k| FamilyParams::W { outer: k, inner: k }));
    let points = family_sweep(&params, &SearchConfig::default(), 2).expect("sweep");
    for p in points {
        println!("{:<20} {:.6}  {}", p.params.label(), p.result.best_c, p.result.annotation);
    }
    println!("phi = {:.6}, 2cos(pi/7) = {:.6}", (1.0 + 5f64.sqrt()) / 2.0, 2.0 * (std::f64::consts::PI / 7.0).cos());
}
