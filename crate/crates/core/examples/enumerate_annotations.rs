//! Lists the valid annotations of small lengths and compares the counts with
//! the Catalan numbers.

use altproof::annotation::{count, enumerate};

fn main() {
    for len in [3, 5, 7] {
        let all: Vec<String> = enumerate(len).expect("odd length").map(|a| a.to_string()).collect();
        println!("length {len}: {}", all.join(" "));
    }
    for k in 1..=12 {
        println!("count({}) = {}", 2 * k + 1, count(2 * k + 1).expect("odd length"));
    }
}
