//! Helpers for the acceptance target in `tests/acceptance.rs`.

use std::sync::{Arc, Mutex};

use scriptrate_core::analyzer::{CompletionBackend, CompletionRequest, MockBackend};

/// Coefficient of determination of the least-squares line through
/// `(xs, ys)`.
pub fn linear_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Mock backend that records how many requests each batch call carried.
pub struct Recording {
    inner: MockBackend,
    sizes: Arc<Mutex<Vec<usize>>>,
}

impl Recording {
    pub fn new(inner: MockBackend) -> (Self, Arc<Mutex<Vec<usize>>>) {
        let sizes = Arc::new(Mutex::new(Vec::new()));
        (
            Recording {
                inner,
                sizes: sizes.clone(),
            },
            sizes,
        )
    }
}

impl CompletionBackend for Recording {
    fn complete_batch(&self, requests: &[CompletionRequest]) -> scriptrate_core::Result<Vec<String>> {
        self.sizes.lock().expect("sizes lock").push(requests.len());
        self.inner.complete_batch(requests)
    }
}
