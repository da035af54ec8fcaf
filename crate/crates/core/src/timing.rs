//! Wall-clock timing with warmup and median.

use std::time::{Duration, Instant};

/// Median of `runs` timed calls to `f`, after one discarded warmup call.
/// `runs` is raised to at least 3. Returns the median and the last output.
pub fn time_median<T>(runs: usize, mut f: impl FnMut() -> T) -> (Duration, T) {
    let runs = runs.max(3);
    let mut out = f();
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        out = std::hint::black_box(f());
        times.push(start.elapsed());
    }
    (median(&mut times), out)
}

pub fn median(times: &mut [Duration]) -> Duration {
    assert!(!times.is_empty());
    times.sort_unstable();
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    }
}
