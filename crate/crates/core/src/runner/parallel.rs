use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "WEGNERLAB_WORKERS";

/// Worker count from [`WORKERS_ENV`], falling back to the available
/// parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

fn run_one<T, F>(f: &F, index: usize) -> Result<T>
where
    F: Fn(usize) -> Result<T>,
{
    match catch_unwind(AssertUnwindSafe(|| f(index))) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(Error::Worker {
            index,
            reason: e.to_string(),
        }),
        Err(payload) => Err(Error::Worker {
            index,
            reason: format!("panicked: {}", panic_message(payload.as_ref())),
        }),
    }
}

/// Applies `f` to `0..count` with at most `workers` concurrent threads and
/// returns the results in index order, independent of completion order.
///
/// On the first failure no new indices are started; in-flight work drains
/// and the lowest failing index is reported.
pub fn parallel_map<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if workers == 0 {
        return Err(Error::param("workers", "worker budget must be at least 1"));
    }
    let mut slots: Vec<Option<Result<T>>> = (0..count).map(|_| None).collect();
    if workers == 1 || count <= 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            let r = run_one(&f, i);
            let failed = r.is_err();
            *slot = Some(r);
            if failed {
                break;
            }
        }
    } else {
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let done = Mutex::new(Vec::with_capacity(count));
        std::thread::scope(|scope| {
            for _ in 0..workers.min(count) {
                scope.spawn(|| loop {
                    if abort.load(Ordering::SeqCst) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= count {
                        break;
                    }
                    let r = run_one(&f, i);
                    if r.is_err() {
                        abort.store(true, Ordering::SeqCst);
                    }
                    done.lock().expect("result lock").push((i, r));
                });
            }
        });
        for (i, r) in done.into_inner().expect("result lock") {
            slots[i] = Some(r);
        }
    }

    if let Some(err_index) = slots.iter().position(|s| matches!(s, Some(Err(_)))) {
        return Err(slots.swap_remove(err_index).unwrap().err().unwrap());
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| Error::Worker {
                index: i,
                reason: "not executed".into(),
            })?
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn work(i: usize) -> Result<f64> {
        // uneven runtimes so completion order differs from index order
        let mut acc = 0.0f64;
        for k in 0..(1000 * ((i * 7919) % 13 + 1)) {
            acc += ((k + i) as f64).sqrt().sin();
        }
        Ok(acc)
    }

    #[test]
    fn ordering_is_independent_of_workers() {
        let one = parallel_map(40, 1, work).unwrap();
        let eight = parallel_map(40, 8, work).unwrap();
        assert_eq!(one.len(), 40);
        assert!(one.iter().zip(&eight).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn panics_are_reported_by_index() {
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let r = parallel_map(10, 4, |i| {
            if i == 3 {
                panic!("boom");
            }
            Ok(i)
        });
        std::panic::set_hook(prev);
        match r {
            Err(Error::Worker { index, reason }) => {
                assert_eq!(index, 3);
                assert!(reason.contains("boom"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_abort() {
        let r = parallel_map(10, 1, |i| if i >= 5 { Err(Error::param("x", "bad")) } else { Ok(i) });
        assert!(matches!(r, Err(Error::Worker { index: 5, .. })));
        assert!(parallel_map(3, 0, |i| Ok(i)).is_err());
        assert!(parallel_map(0, 3, |i| Ok(i)).unwrap().is_empty());
    }
}
