//! Linear and Gaussian kernels.

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Linear,
    Gaussian,
}

/// Kernel family plus the Gaussian width. `sigma` is ignored for
/// [`KernelFamily::Linear`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: f64,
}

impl KernelSpec {
    pub const fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            sigma: 1.0,
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Gaussian,
            sigma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_linear(&self) -> bool {
        self.family == KernelFamily::Linear
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == KernelFamily::Gaussian && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
            });
        }
        Ok(())
    }

    /// `K(x, c)` for a single pair.
    pub fn eval(&self, x: &[f64], c: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => dot(x, c),
            KernelFamily::Gaussian => {
                let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                libm::exp(-d2 / (2.0 * self.sigma))
            }
        }
    }
}

/// `K(X, C^T)`: entry `(i, j)` is `K(x_i, c_j)`.
///
/// The Gaussian kernel is `exp(-||x - c||^2 / (2 sigma))`. Squared distances
/// use `||x||^2 + ||c||^2 - 2 x.c`, clamped at zero.
pub fn gram(x: &Matrix, c: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    let mut k = x.matmul_t(c)?;
    if spec.family == KernelFamily::Gaussian {
        let xn: alloc::vec::Vec<f64> = x.iter_rows().map(|r| dot(r, r)).collect();
        let cn: alloc::vec::Vec<f64> = c.iter_rows().map(|r| dot(r, r)).collect();
        let denom = 2.0 * spec.sigma;
        for (i, &xi) in xn.iter().enumerate() {
            for (j, &cj) in cn.iter().enumerate() {
                // identical rows give exactly 1 regardless of cancellation
                let d2 = if x.row(i) == c.row(j) {
                    0.0
                } else {
                    (xi + cj - 2.0 * k[(i, j)]).max(0.0)
                };
                k[(i, j)] = libm::exp(-d2 / denom);
            }
        }
    }
    Ok(k)
}

/// `K(X, X^T)`.
pub fn gram_self(x: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    gram(x, x, spec)
}
