use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, squared_distance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
    Chi2,
}

impl KernelKind {
    pub(crate) fn tag(self) -> u8 {
        match self {
            KernelKind::Linear => 0,
            KernelKind::Polynomial => 1,
            KernelKind::Rbf => 2,
            KernelKind::Sigmoid => 3,
            KernelKind::Chi2 => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => KernelKind::Linear,
            1 => KernelKind::Polynomial,
            2 => KernelKind::Rbf,
            3 => KernelKind::Sigmoid,
            4 => KernelKind::Chi2,
            _ => return Err(Error::Parse(format!("unknown kernel tag {tag}"))),
        })
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Polynomial),
            "rbf" => Ok(KernelKind::Rbf),
            "sigmoid" => Ok(KernelKind::Sigmoid),
            "chi2" => Ok(KernelKind::Chi2),
            _ => Err(Error::Config(format!("unknown kernel `{s}`"))),
        }
    }
}

/// A kernel with its parameters. `gamma` is used by polynomial, rbf and
/// sigmoid kernels, `coef0` by polynomial and sigmoid, `degree` by
/// polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub coef0: f64,
    pub degree: u32,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: 1.0,
            coef0: 0.0,
            degree: 1,
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
            ..Self::linear()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let uses_gamma = matches!(
            self.kind,
            KernelKind::Polynomial | KernelKind::Rbf | KernelKind::Sigmoid
        );
        if uses_gamma && !(self.gamma > 0.0) {
            return Err(Error::Param(format!("kernel gamma={} must be positive", self.gamma)));
        }
        if self.kind == KernelKind::Polynomial && self.degree < 1 {
            return Err(Error::Param("polynomial degree must be >= 1".into()));
        }
        Ok(())
    }

    /// Checks that `x` is a valid kernel argument (chi2 needs `x >= 0`).
    pub fn check_input(&self, x: &[f64]) -> Result<()> {
        if self.kind == KernelKind::Chi2 {
            if let Some(v) = x.iter().find(|v| **v < 0.0) {
                return Err(Error::Param(format!("chi2 kernel on negative input {v}")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Polynomial => (self.gamma * dot(x, y) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => (-self.gamma * squared_distance(x, y)).exp(),
            KernelKind::Sigmoid => (self.gamma * dot(x, y) + self.coef0).tanh(),
            KernelKind::Chi2 => {
                let s: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let den = a + b;
                        if den == 0.0 {
                            0.0
                        } else {
                            (a - b) * (a - b) / den
                        }
                    })
                    .sum();
                1.0 - 2.0 * s
            }
        }
    }
}

/// Evaluates `spec` on `x` and `y` after validating both inputs.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Data(format!("kernel inputs of dims {} and {}", x.len(), y.len())));
    }
    spec.validate()?;
    spec.check_input(x)?;
    spec.check_input(y)?;
    Ok(spec.eval(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [f64; 3] = [0.5, 1.0, 2.0];
    const Y: [f64; 3] = [1.5, 0.0, 1.0];

    #[test]
    fn self_similarities() {
        assert_eq!(kernel_eval(&KernelSpec::rbf(0.3), &X, &X).unwrap(), 1.0);
        assert_eq!(kernel_eval(&KernelSpec::linear(), &X, &X).unwrap(), 5.25);
        let chi = KernelSpec { kind: KernelKind::Chi2, ..KernelSpec::linear() };
        assert_eq!(kernel_eval(&chi, &X, &X).unwrap(), 1.0);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(kernel_eval(&KernelSpec::linear(), &X, &Y).unwrap(), 2.75);
        let poly = KernelSpec { kind: KernelKind::Polynomial, gamma: 2.0, coef0: 1.0, degree: 3 };
        assert!((kernel_eval(&poly, &X, &Y).unwrap() - 6.5f64.powi(3)).abs() < 1e-12);
        let sig = KernelSpec { kind: KernelKind::Sigmoid, gamma: 0.1, coef0: -0.2, degree: 1 };
        assert!((kernel_eval(&sig, &X, &Y).unwrap() - 0.075f64.tanh()).abs() < 1e-15);
        assert!((kernel_eval(&KernelSpec::rbf(0.5), &X, &Y).unwrap() - (-0.5f64 * 3.0).exp()).abs() < 1e-15);
        let chi = KernelSpec { kind: KernelKind::Chi2, ..KernelSpec::linear() };
        // terms: 1/2, 1/1, 1/3
        let expect = 1.0 - 2.0 * (0.5 + 1.0 + 1.0 / 3.0);
        assert!((kernel_eval(&chi, &X, &Y).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn chi2_zero_denominators_and_negatives() {
        let chi = KernelSpec { kind: KernelKind::Chi2, ..KernelSpec::linear() };
        assert_eq!(kernel_eval(&chi, &[0.0, 1.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(kernel_eval(&chi, &[-0.1, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(kernel_eval(&KernelSpec::rbf(0.0), &X, &Y).is_err());
        let poly = KernelSpec { kind: KernelKind::Polynomial, gamma: 1.0, coef0: 0.0, degree: 0 };
        assert!(poly.validate().is_err());
        assert!(kernel_eval(&KernelSpec::linear(), &X, &[1.0]).is_err());
    }
}
