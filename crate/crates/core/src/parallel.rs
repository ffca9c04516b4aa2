//! Order-preserving parallel map over a slice.
//!
//! Work is handed out through an atomic cursor and results land in their
//! input slot, so the output order never depends on the worker count. The
//! closure must itself be deterministic in `(index, item)` for outputs to be
//! byte-identical across runs — which is exactly the seeding contract the
//! augmenters follow.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

pub fn ordered_map<I, T, F>(items: &[I], workers: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(usize, &I) -> T + Sync,
{
    let n = items.len();
    if n == 0 || workers <= 1 {
        return items.iter().enumerate().map(|(i, item)| f(i, item)).collect();
    }

    let slots = Mutex::new({
        let mut v: Vec<Option<T>> = Vec::with_capacity(n);
        v.resize_with(n, || None);
        v
    });
    let cursor = AtomicUsize::new(0);
    // Chunked claims keep lock traffic low on large corpora.
    let chunk = (n / (workers * 8)).clamp(1, 1024);

    thread::scope(|scope| {
        for _ in 0..workers.min(n) {
            scope.spawn(|| loop {
                let start = cursor.fetch_add(chunk, Ordering::Relaxed);
                if start >= n {
                    break;
                }
                let end = (start + chunk).min(n);
                let mut produced = Vec::with_capacity(end - start);
                for (offset, item) in items[start..end].iter().enumerate() {
                    produced.push(f(start + offset, item));
                }
                let mut slots = slots.lock().expect("ordered_map slots poisoned");
                for (offset, value) in produced.into_iter().enumerate() {
                    slots[start + offset] = Some(value);
                }
            });
        }
    });

    slots
        .into_inner()
        .expect("ordered_map slots poisoned")
        .into_iter()
        .map(|slot| slot.expect("every index visited"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_for_any_worker_count() {
        let items: Vec<u64> = (0..5000).collect();
        let serial = ordered_map(&items, 1, |i, x| (i as u64) * 31 + x);
        for workers in [2, 4, 8] {
            let parallel = ordered_map(&items, workers, |i, x| (i as u64) * 31 + x);
            assert_eq!(parallel, serial);
        }
    }

    #[test]
    fn empty_input() {
        let out: Vec<u32> = ordered_map(&[] as &[u32], 4, |_, x| *x);
        assert!(out.is_empty());
    }
}
