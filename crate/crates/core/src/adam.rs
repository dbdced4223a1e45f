//! Minimal Adam over flat f64 slices, shared by the filter and splat trainers.

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// First/second moment buffers for one parameter vector. The step counter is
/// owned by the caller so several buffers can share one schedule.
#[derive(Debug, Clone)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Moments {
    pub fn zeros(n: usize) -> Self {
        Moments {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Rebuilds moment state after the owning parameter vector was reindexed.
    /// `map[i] = Some(j)` carries slot j's state to slot i; `None` starts the
    /// slot fresh. `width` is the number of consecutive scalars per slot.
    pub fn gather(&self, map: &[Option<usize>], width: usize) -> Moments {
        let mut out = Moments::zeros(map.len() * width);
        for (i, src) in map.iter().enumerate() {
            if let Some(j) = src {
                for k in 0..width {
                    out.m[i * width + k] = self.m[j * width + k];
                    out.v[i * width + k] = self.v[j * width + k];
                }
            }
        }
        out
    }

    /// One bias-corrected Adam update, `t` counting from 1.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, t: u64) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        let bc1 = 1.0 - BETA1.powi(t as i32);
        let bc2 = 1.0 - BETA2.powi(t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (vh.sqrt() + EPS);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_about_lr() {
        let mut p = vec![0.0];
        let mut mo = Moments::zeros(1);
        mo.step(&mut p, &[2.0], 1e-3, 1);
        // Bias correction makes the first update lr * g/|g| up to eps.
        assert!((p[0] + 1e-3).abs() < 1e-8);
    }

    #[test]
    fn quadratic_descent_converges() {
        // L = (x - 3)^2, monotone approach under Adam from a cold start.
        let mut p = vec![0.0];
        let mut mo = Moments::zeros(1);
        let mut last = 3.0f64;
        for t in 1..=8000 {
            let g = 2.0 * (p[0] - 3.0);
            mo.step(&mut p, &[g], 1e-2, t);
            let d = (p[0] - 3.0f64).abs();
            assert!(d <= last + 1e-12);
            last = d;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = vec![0.7];
        let mut mo = Moments::zeros(1);
        for t in 1..=10 {
            mo.step(&mut p, &[0.0], 1e-2, t);
        }
        assert_eq!(p[0], 0.7);
    }
}
