//! Synthetic regression data for the benchmark experiments.
//!
//! Two scalar targets are built in: a smooth mixture of sinc waves and a
//! cosine (`F1`) and a discontinuous piecewise curve (`F2`).  Training sets
//! draw inputs uniformly from the open unit interval and add independent
//! Gaussian noise to the target values; test sets are noise-free.  All
//! randomness flows through a counter-based ChaCha stream keyed by the
//! caller's seed, so a `(target, n, sigma, seed)` tuple always reproduces the
//! same dataset byte for byte.

use crate::error::{Error, Result};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::{self, Write};
use std::sync::Arc;

/// Normalized sinc: `sin(t)/t` with `sinc(0) = 1`.
fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

/// A scalar regression target on `[0, 1]`.
#[derive(Clone)]
pub enum TargetFunction {
    /// `sinc(40x - 10) + sinc(60x - 30) + sinc(20x - 1) + cos(10x)`.
    F1,
    /// Piecewise: `1/3 - x` on `[0, 1/3)`, `x^2` on `[1/3, 2/3]`, `-1` after.
    F2,
    /// Caller-supplied target.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl TargetFunction {
    /// Evaluate the target at `x`.
    ///
    /// The built-in targets are defined on `[0, 1]` and report
    /// [`Error::DomainError`] outside it; custom targets set their own rules.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            TargetFunction::F1 => {
                check_unit_interval(x)?;
                Ok(sinc(40.0 * x - 10.0)
                    + sinc(60.0 * x - 30.0)
                    + sinc(20.0 * x - 1.0)
                    + (10.0 * x).cos())
            }
            TargetFunction::F2 => {
                check_unit_interval(x)?;
                Ok(if x < 1.0 / 3.0 {
                    1.0 / 3.0 - x
                } else if x <= 2.0 / 3.0 {
                    x * x
                } else {
                    -1.0
                })
            }
            TargetFunction::Custom(f) => Ok(f(x)),
        }
    }
}

impl std::fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetFunction::F1 => write!(f, "F1"),
            TargetFunction::F2 => write!(f, "F2"),
            TargetFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::DomainError { value: x })
    }
}

/// Evaluate `target` at every point, failing on the first domain violation.
pub fn eval_target(target: &TargetFunction, points: &Array1<f64>) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(points.len());
    for (o, &x) in out.iter_mut().zip(points.iter()) {
        *o = target.eval(x)?;
    }
    Ok(out)
}

/// A sampled dataset: inputs, observed responses, and how it was generated.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Array1<f64>,
    pub targets: Array1<f64>,
    /// Standard deviation of the additive noise (0 for test sets).
    pub noise_sigma: f64,
    pub seed: u64,
    pub is_test: bool,
}

impl Dataset {
    /// Number of samples.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Wrap existing input/response vectors as a dataset (no noise metadata).
    pub fn from_parts(inputs: Array1<f64>, targets: Array1<f64>) -> Result<Dataset> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        Ok(Dataset {
            inputs,
            targets,
            noise_sigma: 0.0,
            seed: 0,
            is_test: false,
        })
    }

    /// Slice out samples `[lo, hi)` as a new dataset.
    pub fn slice(&self, lo: usize, hi: usize) -> Dataset {
        Dataset {
            inputs: self.inputs.slice(ndarray::s![lo..hi]).to_owned(),
            targets: self.targets.slice(ndarray::s![lo..hi]).to_owned(),
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            is_test: self.is_test,
        }
    }

    /// Write the dataset as two-column CSV `x,y` with full-precision floats.
    pub fn write_xy_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y")?;
        for (x, y) in self.inputs.iter().zip(self.targets.iter()) {
            writeln!(w, "{x:.16e},{y:.16e}")?;
        }
        Ok(())
    }
}

/// Draw a uniform sample from the open interval `(0, 1)`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draw `n` training samples: `x_i ~ U(0, 1)`, `y_i = f(x_i) + eps_i` with
/// `eps_i ~ N(0, noise_sigma^2)`.
///
/// All inputs are drawn before any noise, so the input sequence for a given
/// seed is identical across noise levels.
pub fn sample_train(
    target: &TargetFunction,
    n: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = Array1::from_shape_fn(n, |_| open_unit(&mut rng));
    let clean = eval_target(target, &inputs)?;
    let noise = Array1::from_shape_fn(n, |_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        noise_sigma * z
    });
    Ok(Dataset {
        inputs,
        targets: clean + noise,
        noise_sigma,
        seed,
        is_test: false,
    })
}

/// Draw `n` noise-free test samples: `x_i ~ U(0, 1)`, `y_i = f(x_i)`.
pub fn sample_test(target: &TargetFunction, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = Array1::from_shape_fn(n, |_| open_unit(&mut rng));
    let targets = eval_target(target, &inputs)?;
    Ok(Dataset {
        inputs,
        targets,
        noise_sigma: 0.0,
        seed,
        is_test: true,
    })
}
