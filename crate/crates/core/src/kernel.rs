use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `s * x . x'`
    Linear,
    /// `s * exp(-|x - x'|^2 / (2 l^2))`
    SquaredExponential,
}

/// Covariance function of the GP prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub signal_variance: f64,
    /// Ignored by [`KernelKind::Linear`].
    pub length_scale: f64,
}

impl KernelSpec {
    pub fn squared_exponential(signal_variance: f64, length_scale: f64) -> Self {
        Self {
            kind: KernelKind::SquaredExponential,
            signal_variance,
            length_scale,
        }
    }

    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            signal_variance: 1.0,
            length_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance >= 0.0) || !self.signal_variance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "signal variance must be finite and >= 0, got {}",
                self.signal_variance
            )));
        }
        if self.kind == KernelKind::SquaredExponential
            && (!(self.length_scale > 0.0) || !self.length_scale.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "length scale must be finite and > 0, got {}",
                self.length_scale
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch: {} vs {}",
                x.len(),
                x2.len()
            )));
        }
        Ok(self.eval_unchecked(x, x2))
    }

    /// Same as [`eval`](Self::eval) without the dimension check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => {
                self.signal_variance * x.iter().zip(x2).map(|(a, b)| a * b).sum::<f64>()
            }
            KernelKind::SquaredExponential => {
                let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
                self.signal_variance * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
            }
        }
    }
}
