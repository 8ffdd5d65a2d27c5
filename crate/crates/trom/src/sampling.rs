//! Uniform tensor sampling of the parameter domain `Z = D x P` and lookup of
//! the parameter element (with its four vertex samples) containing a target
//! parameter.

use crate::error::{Error, Result};

/// Tensor grid of `(t, mu)` samples, endpoints included, uniformly spaced per
/// axis. Samples are flattened with the time axis fastest:
/// `sample index = i_mu * n_t + i_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamGrid {
    t_range: (f64, f64),
    mu_range: (f64, f64),
    n_t: usize,
    n_mu: usize,
}

/// One cell of the parameter mesh with its four vertex samples ordered
/// counter-clockwise: `(t1, mu1), (t2, mu1), (t2, mu2), (t1, mu2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamElement {
    pub index: (usize, usize),
    pub vertices: [(f64, f64); 4],
    pub vertex_samples: [usize; 4],
}

impl ParamGrid {
    pub fn new(t_range: (f64, f64), mu_range: (f64, f64), n_t: usize, n_mu: usize) -> Result<Self> {
        if n_t < 2 || n_mu < 2 {
            return Err(Error::config(format!(
                "parameter grid needs at least 2 samples per axis, got {n_t} x {n_mu}"
            )));
        }
        if !(t_range.1 > t_range.0) || !(mu_range.1 > mu_range.0) {
            return Err(Error::config("parameter ranges must be non-degenerate".to_string()));
        }
        Ok(ParamGrid { t_range, mu_range, n_t, n_mu })
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    pub fn mu_range(&self) -> (f64, f64) {
        self.mu_range
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_mu(&self) -> usize {
        self.n_mu
    }

    /// Total number of samples `n_t * n_mu`.
    pub fn n_samples(&self) -> usize {
        self.n_t * self.n_mu
    }

    /// Number of parameter elements `(n_t - 1) * (n_mu - 1)`.
    pub fn n_elements(&self) -> usize {
        (self.n_t - 1) * (self.n_mu - 1)
    }

    pub fn t_sample(&self, i_t: usize) -> f64 {
        debug_assert!(i_t < self.n_t);
        let (lo, hi) = self.t_range;
        lo + (hi - lo) * i_t as f64 / (self.n_t - 1) as f64
    }

    pub fn mu_sample(&self, i_mu: usize) -> f64 {
        debug_assert!(i_mu < self.n_mu);
        let (lo, hi) = self.mu_range;
        lo + (hi - lo) * i_mu as f64 / (self.n_mu - 1) as f64
    }

    pub fn sample_index(&self, i_t: usize, i_mu: usize) -> usize {
        i_mu * self.n_t + i_t
    }

    pub fn sample(&self, index: usize) -> (f64, f64) {
        debug_assert!(index < self.n_samples());
        let i_t = index % self.n_t;
        let i_mu = index / self.n_t;
        (self.t_sample(i_t), self.mu_sample(i_mu))
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        (0..self.n_samples()).map(|i| self.sample(i)).collect()
    }

    fn contains(&self, z: (f64, f64)) -> bool {
        let tol_t = 1e-12 * (self.t_range.1 - self.t_range.0).abs();
        let tol_mu = 1e-12 * (self.mu_range.1 - self.mu_range.0).abs();
        z.0 >= self.t_range.0 - tol_t
            && z.0 <= self.t_range.1 + tol_t
            && z.1 >= self.mu_range.0 - tol_mu
            && z.1 <= self.mu_range.1 + tol_mu
    }

    fn axis_element(&self, value: f64, lo: f64, hi: f64, n: usize) -> usize {
        let h = (hi - lo) / (n - 1) as f64;
        let i = ((value - lo) / h).floor() as i64;
        i.clamp(0, n as i64 - 2) as usize
    }

    /// Element by its `(i_t, i_mu)` index.
    pub fn element(&self, i_t: usize, i_mu: usize) -> ParamElement {
        debug_assert!(i_t + 1 < self.n_t && i_mu + 1 < self.n_mu);
        let (t1, t2) = (self.t_sample(i_t), self.t_sample(i_t + 1));
        let (m1, m2) = (self.mu_sample(i_mu), self.mu_sample(i_mu + 1));
        ParamElement {
            index: (i_t, i_mu),
            vertices: [(t1, m1), (t2, m1), (t2, m2), (t1, m2)],
            vertex_samples: [
                self.sample_index(i_t, i_mu),
                self.sample_index(i_t + 1, i_mu),
                self.sample_index(i_t + 1, i_mu + 1),
                self.sample_index(i_t, i_mu + 1),
            ],
        }
    }

    /// The element whose half-open box contains `z` (closed on the lower-left
    /// edges, so a sample vertex belongs to the element having it as its first
    /// vertex); points on the far boundary are clamped into the last element.
    /// O(1) arithmetic, no search.
    pub fn containing_element(&self, z: (f64, f64)) -> Result<ParamElement> {
        if !self.contains(z) {
            return Err(Error::OutsideParamDomain(z.0, z.1));
        }
        let i_t = self.axis_element(z.0, self.t_range.0, self.t_range.1, self.n_t);
        let i_mu = self.axis_element(z.1, self.mu_range.0, self.mu_range.1, self.n_mu);
        Ok(self.element(i_t, i_mu))
    }

    /// Sample nearest the centroid of `Z` in axis-normalized coordinates;
    /// ties resolve to the smallest sample index. Used as the default
    /// reference parameter for residual shifting.
    pub fn central_sample(&self) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for idx in 0..self.n_samples() {
            let i_t = (idx % self.n_t) as f64 / (self.n_t - 1) as f64;
            let i_mu = (idx / self.n_t) as f64 / (self.n_mu - 1) as f64;
            let d = (i_t - 0.5).powi(2) + (i_mu - 0.5).powi(2);
            if d + 1e-15 < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    }

    /// Checks that every time sample lands on the FOM step grid `{k * dt}`.
    pub fn validate_time_samples(&self, dt: f64) -> Result<()> {
        for i_t in 0..self.n_t {
            let t = self.t_sample(i_t);
            let k = (t / dt).round();
            if (t - k * dt).abs() > 1e-9 * dt.max(1e-300) {
                return Err(Error::config(format!(
                    "time sample {t} is not a multiple of the time step {dt}"
                )));
            }
        }
        Ok(())
    }
}
