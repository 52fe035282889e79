//! MMD estimates with the median-trick bandwidth.

use obsrl::approx::{median_bandwidth, mmd2, Bandwidth};
use obsrl::rng::stream;
use rand_distr::{Distribution, Normal};

fn main() -> obsrl::Result<()> {
    let mut rng = stream(0, "samples", 0);
    let mut draw = |mean: f64, n: usize| -> Vec<Vec<f64>> {
        let d = Normal::new(mean, 1.0).expect("valid normal");
        (0..n).map(|_| vec![d.sample(&mut rng), d.sample(&mut rng)]).collect()
    };
    let p = draw(0.0, 300);
    let q = draw(0.0, 300);
    let r = draw(1.0, 300);
    let pooled: Vec<&Vec<f64>> = p.iter().chain(&r).collect();
    println!("median bandwidth {:.3}", median_bandwidth(&pooled));
    println!("MMD^2 same distribution    {:.5}", mmd2(&p, &q, Bandwidth::Median, None)?);
    println!("MMD^2 shifted distribution {:.5}", mmd2(&p, &r, Bandwidth::Median, None)?);
    let states = [0usize, 0, 1, 2];
    let other = [2usize, 2, 2, 1];
    println!("MMD^2 on latent states     {:.5}", mmd2(&states, &other, Bandwidth::Fixed(1.0), None)?);
    Ok(())
}
