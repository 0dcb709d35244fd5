use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            step_size: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates, one buffer per parameter slice.
#[derive(Clone, Debug)]
pub struct Adam {
    params: AdamParams,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: i32,
}

impl Adam {
    pub fn new(params: AdamParams, sizes: impl IntoIterator<Item = usize>) -> Self {
        let (first, second) = sizes.into_iter().map(|n| (vec![0.0; n], vec![0.0; n])).unzip();
        Adam {
            params,
            first,
            second,
            steps: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    /// One bias-corrected Adam update of every slice.
    pub fn step(&mut self, params: [&mut [f64]; 6], grads: [&[f64]; 6]) {
        self.steps += 1;
        let AdamParams {
            step_size,
            beta1,
            beta2,
            epsilon,
        } = self.params;
        let c1 = 1.0 - beta1.powi(self.steps);
        let c2 = 1.0 - beta2.powi(self.steps);
        // (m/c1) / (sqrt(v/c2) + eps) rewritten with one division per element.
        let rate = step_size * c2.sqrt() / c1;
        let eps = epsilon * c2.sqrt();
        for (slot, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.first[slot];
            let v = &mut self.second[slot];
            debug_assert_eq!(p.len(), g.len());
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                // Subnormal moments linger for thousands of steps once a
                // parameter's gradient vanishes, and every operation on them
                // is slow. Flush them, as FTZ hardware modes do.
                if m.abs() < f64::MIN_POSITIVE {
                    *m = 0.0;
                }
                if *v < f64::MIN_POSITIVE {
                    *v = 0.0;
                }
                *p -= rate * *m / (v.sqrt() + eps);
            }
        }
    }
}
