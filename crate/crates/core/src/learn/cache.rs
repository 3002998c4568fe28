use std::collections::HashMap;
use std::rc::Rc;

use super::KernelSpec;

const FULL_GRAM_LIMIT: usize = 4096;
const LRU_ROWS: usize = 256;

/// Kernel rows for the training set: the whole Gram matrix for small
/// problems, otherwise an LRU cache of rows.
pub(crate) struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    kernel: KernelSpec,
    diag: Vec<f64>,
    store: Store,
}

enum Store {
    Full(Vec<Rc<[f64]>>),
    Lru { capacity: usize, rows: HashMap<usize, (Rc<[f64]>, u64)>, clock: u64 },
}

impl<'a> KernelRows<'a> {
    pub(crate) fn new(x: &'a [Vec<f64>], kernel: KernelSpec) -> Self {
        Self::with_limits(x, kernel, FULL_GRAM_LIMIT, LRU_ROWS)
    }

    pub(crate) fn with_limits(x: &'a [Vec<f64>], kernel: KernelSpec, full_limit: usize, lru_rows: usize) -> Self {
        let diag = x.iter().map(|r| kernel.eval(r, r)).collect();
        let store = if x.len() <= full_limit {
            let n = x.len();
            let mut gram = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(&x[i], &x[j]);
                    gram[i * n + j] = v;
                    gram[j * n + i] = v;
                }
            }
            Store::Full(gram.chunks_exact(n.max(1)).map(Rc::from).collect())
        } else {
            Store::Lru { capacity: lru_rows.max(2), rows: HashMap::new(), clock: 0 }
        };
        Self { x, kernel, diag, store }
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub(crate) fn row(&mut self, i: usize) -> Rc<[f64]> {
        match &mut self.store {
            Store::Full(rows) => rows[i].clone(),
            Store::Lru { capacity, rows, clock } => {
                *clock += 1;
                let now = *clock;
                if let Some(entry) = rows.get_mut(&i) {
                    entry.1 = now;
                    return entry.0.clone();
                }
                if rows.len() >= *capacity {
                    let oldest = *rows.iter().min_by_key(|(_, (_, stamp))| *stamp).expect("non-empty").0;
                    rows.remove(&oldest);
                }
                let row: Rc<[f64]> = self.x.iter().map(|xj| self.kernel.eval(&self.x[i], xj)).collect();
                rows.insert(i, (row.clone(), now));
                row
            }
        }
    }
}
