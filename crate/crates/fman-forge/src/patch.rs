//! Coordinate charts and deterministic point sampling.
//!
//! A chart is a named coordinate box. Real charts sample uniformly inside
//! the box; complex charts carry a second box for the imaginary parts and
//! sample both. Sampling is seeded and deterministic: a fixed seed, count,
//! and chart produce the same points in the same order on every run.

use crate::error::{Error, Result};
use crate::expr::jet::Scalar;
use crate::expr::Flavor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Coordinate names `u1..un`, the convention used by every builtin.
pub fn default_coords(n: usize) -> Arc<Vec<String>> {
    Arc::new((1..=n).map(|i| format!("u{i}")).collect())
}

#[derive(Clone, Debug)]
pub struct Chart {
    name: String,
    coords: Arc<Vec<String>>,
    flavor: Flavor,
    re_box: Vec<(f64, f64)>,
    /// Imaginary-part box; present exactly on complex charts.
    im_box: Option<Vec<(f64, f64)>>,
}

impl Chart {
    pub fn new_real(name: impl Into<String>, coords: Arc<Vec<String>>, re_box: Vec<(f64, f64)>) -> Arc<Chart> {
        assert_eq!(coords.len(), re_box.len());
        Arc::new(Chart {
            name: name.into(),
            coords,
            flavor: Flavor::Real,
            re_box,
            im_box: None,
        })
    }

    pub fn new_complex(
        name: impl Into<String>,
        coords: Arc<Vec<String>>,
        re_box: Vec<(f64, f64)>,
        im_box: Vec<(f64, f64)>,
    ) -> Arc<Chart> {
        assert_eq!(coords.len(), re_box.len());
        assert_eq!(coords.len(), im_box.len());
        Arc::new(Chart {
            name: name.into(),
            coords,
            flavor: Flavor::Complex,
            re_box,
            im_box: Some(im_box),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &Arc<Vec<String>> {
        &self.coords
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn re_box(&self) -> &[(f64, f64)] {
        &self.re_box
    }

    pub fn im_box(&self) -> Option<&[(f64, f64)]> {
        self.im_box.as_deref()
    }

    /// Derivative slots of jets on this chart.
    pub fn slots(&self) -> usize {
        match self.flavor {
            Flavor::Real => self.dim(),
            Flavor::Complex => 2 * self.dim(),
        }
    }

    fn check_scalar<S: Scalar>(&self) -> Result<()> {
        if S::IS_COMPLEX != (self.flavor == Flavor::Complex) {
            return Err(Error::invalid(format!(
                "chart `{}` expects {} scalars",
                self.name,
                if self.flavor == Flavor::Complex { "complex" } else { "real" }
            )));
        }
        Ok(())
    }

    fn draw<S: Scalar>(&self, rng: &mut ChaCha8Rng) -> Vec<S> {
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = self.re_box[i];
                let re = lo + (hi - lo) * rng.gen::<f64>();
                let im = match &self.im_box {
                    Some(b) => {
                        let (lo, hi) = b[i];
                        lo + (hi - lo) * rng.gen::<f64>()
                    }
                    None => 0.0,
                };
                S::from_re_im(re, im)
            })
            .collect()
    }

    /// `count` deterministic uniform draws from the box.
    pub fn sample<S: Scalar>(&self, seed: u64, count: usize) -> Result<Vec<Vec<S>>> {
        self.check_scalar::<S>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| self.draw(&mut rng)).collect())
    }

    /// Deterministic draws filtered by an admissibility guard. A draw the
    /// guard rejects with a singularity or domain error is discarded and
    /// redrawn; the total attempt budget is twice the requested count, so
    /// exceeding it means more than half the box was rejected.
    pub fn sample_admissible<S: Scalar>(
        &self,
        seed: u64,
        count: usize,
        mut guard: impl FnMut(&[S]) -> Result<()>,
    ) -> Result<Vec<Vec<S>>> {
        self.check_scalar::<S>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut valid = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let budget = 2 * count;
        while valid.len() < count && attempts < budget {
            attempts += 1;
            let p = self.draw::<S>(&mut rng);
            match guard(&p) {
                Ok(()) => valid.push(p),
                Err(Error::SingularSystem { .. }) | Err(Error::Domain { .. }) => continue,
                Err(other) => return Err(other),
            }
        }
        if valid.len() < count {
            return Err(Error::DomainMostlySingular {
                rejected: attempts - valid.len(),
                attempts,
            });
        }
        Ok(valid)
    }
}
