// Scratch probe for area-fraction calibration; not part of the test suite.
use statebench::curves::{region_fraction, GridConfig};
use statebench::states;
use std::time::Instant;

fn main() {
    let cfg = GridConfig::default();
    let example = states::nonmax_mixed_example();

    let t0 = Instant::now();
    let f = region_fraction(&example, 0.9, &cfg).unwrap();
    println!("example @0.9  -> {f:.4}   ({:.2?})", t0.elapsed());

    let bell = states::phi_plus();
    let t0 = Instant::now();
    let fb = region_fraction(&bell, 0.99, &cfg).unwrap();
    println!("bell    @0.99 -> {fb:.4}  ({:.2?})", t0.elapsed());

    for r in [0.3, 0.5, 0.8] {
        let m = states::mems(r).unwrap();
        let t0 = Instant::now();
        let fm = region_fraction(&m, 0.99, &cfg).unwrap();
        println!("mems{r} @0.99 -> {fm:.4}  ({:.2?})", t0.elapsed());
    }

    let t0 = Instant::now();
    let fe = region_fraction(&example, 0.99, &cfg).unwrap();
    println!("example @0.99 -> {fe:.4}  ({:.2?})", t0.elapsed());
}
