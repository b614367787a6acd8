//! Smooth test functions with analytic Laplacians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `A exp(-|u - c|^2 / (2 s^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump<T> {
    pub amplitude: T,
    pub width: T,
    pub center: Vec<T>,
}

impl<T: Scalar> GaussianBump<T> {
    pub fn new(amplitude: T, width: T, center: Vec<T>) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::param(format!("gaussian amplitude must be finite, got {amplitude}")));
        }
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::param(format!("gaussian width must be positive, got {width}")));
        }
        Ok(GaussianBump {
            amplitude,
            width,
            center,
        })
    }

    /// Centered at the origin of `R^dim`.
    pub fn centered(amplitude: T, width: T, dim: usize) -> Result<Self> {
        Self::new(amplitude, width, vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    fn r2(&self, u: &[T]) -> T {
        u.iter().zip(&self.center).map(|(&x, &c)| (x - c) * (x - c)).sum()
    }

    #[inline]
    pub fn value(&self, u: &[T]) -> T {
        let s2 = self.width * self.width;
        self.amplitude * (-self.r2(u) / (s2 + s2)).exp()
    }

    #[inline]
    pub fn laplacian(&self, u: &[T]) -> T {
        let s2 = self.width * self.width;
        let r2 = self.r2(u);
        let n = T::from_count(u.len());
        self.amplitude * (-r2 / (s2 + s2)).exp() * (r2 / (s2 * s2) - n / s2)
    }

    /// `∫ value` over `R^n`: `A (2π s²)^{n/2}`.
    pub fn integral(&self) -> T {
        let s2 = self.width * self.width;
        self.amplitude * (T::TAU() * s2).powf(T::from_count(self.dim()) * T::of(0.5))
    }

    /// `∫ self · other` over `R^n`, in closed form.
    pub fn overlap(&self, other: &GaussianBump<T>) -> T {
        let (a2, b2) = (self.width * self.width, other.width * other.width);
        let d2: T = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum();
        let n = T::from_count(self.dim());
        self.amplitude
            * other.amplitude
            * (T::TAU() * a2 * b2 / (a2 + b2)).powf(n * T::of(0.5))
            * (-d2 / (T::of(2.0) * (a2 + b2))).exp()
    }
}

/// Test function `G` together with its Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction<T> {
    Gaussian(GaussianBump<T>),
    /// `A exp(1 - 1/(1 - |u-c|²/R²))` inside the ball of radius `R`, zero outside.
    Bump {
        amplitude: T,
        radius: T,
        center: Vec<T>,
    },
    /// `G ≡ A` (useful for counting; not compactly supported).
    Constant { amplitude: T, dim: usize },
}

/// Gaussians are treated as supported in the ball of this many widths.
pub const GAUSSIAN_SUPPORT_WIDTHS: f64 = 3.0;

impl<T: Scalar> TestFunction<T> {
    pub fn gaussian(amplitude: T, width: T, center: Vec<T>) -> Result<Self> {
        GaussianBump::new(amplitude, width, center).map(TestFunction::Gaussian)
    }

    pub fn bump(amplitude: T, radius: T, center: Vec<T>) -> Result<Self> {
        if !(radius > T::zero()) || !amplitude.is_finite() {
            return Err(Error::param("bump needs a positive radius and finite amplitude"));
        }
        Ok(TestFunction::Bump {
            amplitude,
            radius,
            center,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Gaussian(g) => g.dim(),
            TestFunction::Bump { center, .. } => center.len(),
            TestFunction::Constant { dim, .. } => *dim,
        }
    }

    pub fn value(&self, u: &[T]) -> T {
        match self {
            TestFunction::Gaussian(g) => g.value(u),
            TestFunction::Bump {
                amplitude,
                radius,
                center,
            } => {
                let q = scaled_r2(u, center, *radius);
                if q < T::one() {
                    *amplitude * (T::one() - T::one() / (T::one() - q)).exp()
                } else {
                    T::zero()
                }
            }
            TestFunction::Constant { amplitude, .. } => *amplitude,
        }
    }

    pub fn laplacian(&self, u: &[T]) -> T {
        match self {
            TestFunction::Gaussian(g) => g.laplacian(u),
            TestFunction::Bump {
                amplitude,
                radius,
                center,
            } => {
                let q = scaled_r2(u, center, *radius);
                if q >= T::one() {
                    return T::zero();
                }
                let one = T::one();
                let m = one - q;
                let phi = (one - one / m).exp();
                let d1 = -phi / (m * m);
                let d2 = phi / (m * m * m * m) - T::of(2.0) * phi / (m * m * m);
                let r2 = *radius * *radius;
                let n = T::from_count(u.len());
                *amplitude * (d2 * T::of(4.0) * q / r2 + d1 * T::of(2.0) * n / r2)
            }
            TestFunction::Constant { .. } => T::zero(),
        }
    }

    /// Radius of the ball outside which `G` is treated as zero, and its center.
    pub fn support(&self) -> Option<(Vec<T>, T)> {
        match self {
            TestFunction::Gaussian(g) => Some((g.center.clone(), g.width * T::of(GAUSSIAN_SUPPORT_WIDTHS))),
            TestFunction::Bump { radius, center, .. } => Some((center.clone(), *radius)),
            TestFunction::Constant { .. } => None,
        }
    }

    /// Parses `gauss:A,s[,c1,...,cn]`, `bump:A,R[,c1,...]` or `const:A`.
    ///
    /// A missing center means the origin of `R^dim`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::param(format!("test function spec `{spec}` lacks `kind:`")))?;
        let nums: Vec<T> = rest
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|_| Error::param(format!("`{s}` is not a number in `{spec}`")))
            })
            .collect::<Result<_>>()?;
        let center = |from: usize| -> Result<Vec<T>> {
            match nums.len() - from {
                0 => Ok(vec![T::zero(); dim]),
                k if k == dim => Ok(nums[from..].to_vec()),
                1 => Ok(vec![nums[from]; dim]),
                k => Err(Error::param(format!("center has {k} components, expected {dim}"))),
            }
        };
        match kind {
            "gauss" | "gaussian" if nums.len() >= 2 => Self::gaussian(nums[0], nums[1], center(2)?),
            "bump" if nums.len() >= 2 => Self::bump(nums[0], nums[1], center(2)?),
            "const" if nums.len() == 1 => Ok(TestFunction::Constant {
                amplitude: nums[0],
                dim,
            }),
            _ => Err(Error::param(format!("cannot parse test function `{spec}`"))),
        }
    }
}

fn scaled_r2<T: Scalar>(u: &[T], c: &[T], radius: T) -> T {
    let r2: T = u.iter().zip(c).map(|(&x, &y)| (x - y) * (x - y)).sum();
    r2 / (radius * radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central second differences summed over coordinates.
    fn fd_laplacian(g: &TestFunction<f64>, u: &[f64], h: f64) -> f64 {
        let mut acc = 0.0;
        let mut p = u.to_vec();
        for k in 0..u.len() {
            p[k] = u[k] + h;
            let plus = g.value(&p);
            p[k] = u[k] - h;
            let minus = g.value(&p);
            p[k] = u[k];
            acc += (plus - 2.0 * g.value(u) + minus) / (h * h);
        }
        acc
    }

    #[test]
    fn laplacians_match_finite_differences() {
        let fns = [
            TestFunction::gaussian(1.3, 0.7, vec![0.2, -0.1]).unwrap(),
            TestFunction::gaussian(2.0, 1.0, vec![0.0, 0.0, 0.5]).unwrap(),
            TestFunction::bump(1.0, 1.5, vec![0.1, 0.3]).unwrap(),
        ];
        let points = [[0.3, 0.4, 0.0], [-0.5, 0.2, 0.1], [0.9, -0.2, -0.3]];
        for g in &fns {
            for p in &points {
                let u = &p[..g.dim()];
                let exact = g.laplacian(u);
                let e1 = (fd_laplacian(g, u, 1e-3) - exact).abs();
                let e2 = (fd_laplacian(g, u, 5e-4) - exact).abs();
                // Second order: halving h quarters the error, until rounding takes over.
                assert!(e1 < 1e-5 * (1.0 + exact.abs()), "{g:?} {u:?} e1={e1}");
                assert!(e2 <= e1 * 0.3 || e2 < 1e-7, "{g:?} {u:?} e1={e1} e2={e2}");
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let g = TestFunction::bump(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(g.value(&[1.0, 0.0]), 0.0);
        assert_eq!(g.laplacian(&[0.8, 0.8]), 0.0);
        assert_eq!(g.value(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn gaussian_integrals() {
        let a = GaussianBump::new(2.0_f64, 1.0, vec![0.0, 0.0]).unwrap();
        assert!((a.integral() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let b = GaussianBump::new(1.0_f64, 1.0, vec![0.0, 0.0]).unwrap();
        // 2 exp(-r²/2) · exp(-r²/2) integrates to 2π.
        assert!((a.overlap(&b) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn parsing() {
        let g = TestFunction::<f64>::parse("gauss:1,0.5", 2).unwrap();
        assert_eq!(g, TestFunction::gaussian(1.0, 0.5, vec![0.0, 0.0]).unwrap());
        let g = TestFunction::<f64>::parse("bump:2,1,0.5,-0.5", 2).unwrap();
        assert_eq!(g.support().unwrap(), (vec![0.5, -0.5], 1.0));
        assert!(TestFunction::<f64>::parse("gauss:1", 2).is_err());
        assert!(TestFunction::<f64>::parse("gauss:1,0", 2).is_err());
        assert!(TestFunction::<f64>::parse("wave:1,2", 2).is_err());
    }
}
