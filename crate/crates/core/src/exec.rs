//! Sequential/parallel execution switch.
//!
//! Work that is embarrassingly parallel (per-batch evaluation, per-coordinate
//! finite differences, independent training runs) goes through [`ExecMode`].
//! Results are always collected in input order, so reductions performed by
//! the caller are identical in both modes. Without the `parallel` feature,
//! [`ExecMode::Parallel`] silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// Whether this mode actually fans out in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == ExecMode::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`ExecMode::map`] with per-worker scratch state built by `init`.
    pub fn map_init<T, S, R, I, F>(self, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == ExecMode::Parallel {
            return items.par_iter().map_init(&init, |s, t| f(s, t)).collect();
        }
        let mut state = init();
        items.iter().map(|t| f(&mut state, t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = ExecMode::Sequential.map(&xs, |x| x * x);
        let b = ExecMode::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
        let c = ExecMode::Parallel.map_init(
            &xs,
            || 0u64,
            |acc, x| {
                *acc += 1;
                x + 1
            },
        );
        assert_eq!(c, (1..1001).collect::<Vec<_>>());
    }
}
