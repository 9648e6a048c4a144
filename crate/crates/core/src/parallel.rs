//! Data-parallel map with a sequential fallback when the `parallel` feature is off.

/// Maps `f` over `items`, preserving order. Runs on the rayon pool when `parallel` is
/// set and the feature is enabled.
pub fn par_map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Whether the crate was built with the rayon backend.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u32> = (0..100).collect();
        assert_eq!(par_map(&xs, true, |x| x * 2), par_map(&xs, false, |x| x * 2));
        assert_eq!(par_map(&xs, true, |x| x * 2)[99], 198);
        assert!(par_map::<u32, u32, _>(&[], true, |x| *x).is_empty());
    }
}
