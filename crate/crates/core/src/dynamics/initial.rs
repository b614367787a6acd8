use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::testfn::GaussianBump;

/// Law of the initial occupation numbers.
///
/// Every variant is dominated by a translated Poisson product with
/// parameters [`InitialCondition::domination`].
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition<T> {
    /// `η(x) = M` at every site.
    Constant(u32),
    /// `η(x)` i.i.d. Poisson(ρ).
    Poisson(T),
    /// `η(x)` independent Poisson(ρ₀(x/N)) for a bounded profile `ρ₀`.
    Profile(GaussianBump<T>),
}

impl<T: Scalar> InitialCondition<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialCondition::Constant(_) => Ok(()),
            InitialCondition::Poisson(rho) if *rho >= T::zero() && rho.is_finite() => Ok(()),
            InitialCondition::Poisson(rho) => Err(Error::param(format!("poisson mean must be finite and >= 0, got {rho}"))),
            InitialCondition::Profile(p) => {
                if p.amplitude.is_finite() && p.amplitude >= T::zero() && p.width > T::zero() && p.width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param(format!(
                        "initial profile must be bounded and non-negative (amplitude {}, width {})",
                        p.amplitude, p.width
                    )))
                }
            }
        }
    }

    /// `(M, ρ)` such that the law is dominated by `M + Poisson(ρ)` site-wise.
    pub fn domination(&self) -> (u32, T) {
        match self {
            InitialCondition::Constant(m) => (*m, T::zero()),
            InitialCondition::Poisson(rho) => (0, *rho),
            InitialCondition::Profile(p) => (0, p.amplitude),
        }
    }

    /// Mean occupation at macroscopic position `u`.
    pub fn mean_at(&self, u: &[T]) -> T {
        match self {
            InitialCondition::Constant(m) => T::of(*m as f64),
            InitialCondition::Poisson(rho) => *rho,
            InitialCondition::Profile(p) => p.value(u),
        }
    }

    /// Parses `const:M`, `poisson:RHO` or `profile:gauss:A,s[,c...]`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let bad = || Error::param(format!("cannot parse initial condition `{spec}`"));
        let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
        let ic = match kind {
            "const" => InitialCondition::Constant(rest.trim().parse().map_err(|_| bad())?),
            "poisson" => InitialCondition::Poisson(T::of(rest.trim().parse::<f64>().map_err(|_| bad())?)),
            "profile" => match crate::testfn::TestFunction::parse(rest, dim)? {
                crate::testfn::TestFunction::Gaussian(g) => InitialCondition::Profile(g),
                _ => return Err(Error::param("initial profiles must be `gauss:A,s[,c...]`")),
            },
            _ => return Err(bad()),
        };
        ic.validate()?;
        Ok(ic)
    }

    pub(crate) fn sample_site<R: Rng + ?Sized>(&self, u: &[T], rng: &mut R) -> u32 {
        match self {
            InitialCondition::Constant(m) => *m,
            _ => {
                let mean = self.mean_at(u).as_f64();
                if mean > 0.0 {
                    Poisson::new(mean).map(|p| p.sample(rng) as u32).unwrap_or(0)
                } else {
                    0
                }
            }
        }
    }
}
