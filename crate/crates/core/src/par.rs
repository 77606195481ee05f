//! Data-parallel angle sweeps with a sequential fallback.
//!
//! All hot loops in this crate map an independent closure over a batch of
//! angles. With the `parallel` feature (default) the batch runs on rayon;
//! without it, on the sequential path below. `map_seq` is always available so
//! benchmarks can compare the two directly.

/// Sequential reference path.
pub fn map_seq<T: Send>(items: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    items.iter().map(|&x| f(x)).collect()
}

/// Maps `f` over the batch, in parallel when the `parallel` feature is on.
/// Output order matches input order either way.
#[cfg(feature = "parallel")]
pub fn map<T: Send>(items: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    items.par_iter().map(|&x| f(x)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Send>(items: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    map_seq(items, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let xs: Vec<f64> = (0..257).map(|k| k as f64 * 0.01).collect();
        let f = |x: f64| (x.sin() * 1e6).round() as i64;
        assert_eq!(map(&xs, f), map_seq(&xs, f));
    }
}
