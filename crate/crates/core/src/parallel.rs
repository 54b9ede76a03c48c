//! Tiny deterministic worker pool: results are collected by input index, so
//! the output is identical for any thread count.

/// Map `f` over `items` on up to `threads` scoped threads, preserving order.
pub fn parallel_map<T, R, F>(items: Vec<T>, threads: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let threads = threads.max(1);
    if threads == 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    let work: Vec<(usize, T)> = items.into_iter().enumerate().collect();
    let queue = std::sync::Mutex::new(work);
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let item = queue.lock().unwrap().pop();
                match item {
                    Some((idx, value)) => {
                        let r = f(value);
                        results.lock().unwrap()[idx] = Some(r);
                    }
                    None => break,
                }
            });
        }
    });
    slots.into_iter().map(|r| r.expect("worker completed")).collect()
}

/// Worker pool size: `EPL_THREADS` when set, else available parallelism.
pub fn default_threads() -> usize {
    if let Ok(v) = std::env::var("EPL_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
