//! The limiting equation `∂_t ρ = σ² Δρ + (b - d) ρ`.
//!
//! Gaussian initial data evolve in closed form ([`GaussianBump::evolve`]);
//! anything else goes through the explicit finite-difference solver
//! [`fd_solve`] on a regular grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::testfn::{GaussianBump, TestFunction};

/// Number of evolved standard deviations kept around a Gaussian when choosing a grid.
pub const PADDING_WIDTHS: f64 = 6.0;

impl<T: Scalar> GaussianBump<T> {
    /// The solution at time `t`, which is again a Gaussian bump:
    /// `s'² = s² + 2σ²t`, `A' = e^{rt} A (s²/s'²)^{n/2}`.
    pub fn evolve(&self, sigma2: T, growth: T, t: T) -> GaussianBump<T> {
        let s2 = self.width * self.width;
        let s2t = s2 + T::of(2.0) * sigma2 * t;
        let n = T::from_count(self.dim());
        GaussianBump {
            amplitude: (growth * t).exp() * self.amplitude * (s2 / s2t).powf(n * T::of(0.5)),
            width: s2t.sqrt(),
            center: self.center.clone(),
        }
    }
}

/// `ρ(t, x)` for Gaussian initial data.
pub fn gaussian_solution<T: Scalar>(initial: &GaussianBump<T>, sigma2: T, growth: T, t: T, x: &[T]) -> T {
    initial.evolve(sigma2, growth, t).value(x)
}

/// Regular grid `lower + h·k`, `k ∈ [0, shape)`, stored with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid<T> {
    pub lower: Vec<T>,
    pub spacing: T,
    pub shape: Vec<usize>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(lower: Vec<T>, spacing: T, shape: Vec<usize>) -> Result<Self> {
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::param(format!("grid spacing must be positive, got {spacing}")));
        }
        if lower.len() != shape.len() || shape.is_empty() || shape.contains(&0) {
            return Err(Error::param("grid needs one positive extent per dimension"));
        }
        Ok(Grid { lower, spacing, shape })
    }

    /// Cube of half-width `half_width` around `center`, with nodes on both faces.
    pub fn centered(center: &[T], half_width: T, spacing: T) -> Result<Self> {
        if !(half_width > T::zero()) {
            return Err(Error::param(format!("grid half-width must be positive, got {half_width}")));
        }
        let per = (T::of(2.0) * half_width / spacing).ceil().to_usize().unwrap_or(0) + 1;
        let lower = center.iter().map(|&c| c - half_width).collect();
        Self::new(lower, spacing, vec![per; center.len()])
    }

    /// Grid large enough that an evolved Gaussian is negligible at the boundary.
    pub fn for_gaussian(initial: &GaussianBump<T>, sigma2: T, horizon: T, spacing: T) -> Result<Self> {
        let evolved = initial.evolve(sigma2, T::zero(), horizon);
        Self::centered(&initial.center, T::of(PADDING_WIDTHS) * evolved.width, spacing)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `hⁿ`.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim() as i32)
    }

    pub fn node_into(&self, mut index: usize, out: &mut [T]) {
        for k in (0..self.dim()).rev() {
            let i = index % self.shape[k];
            index /= self.shape[k];
            out[k] = self.lower[k] + self.spacing * T::from_count(i);
        }
    }

    pub fn node(&self, index: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.node_into(index, &mut out);
        out
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for k in (0..self.dim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }
}

/// Values of `ρ(t, ·)` on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct DensityField<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
    pub time: T,
}

impl<T: Scalar> DensityField<T> {
    pub fn sample(grid: Grid<T>, time: T, f: impl Fn(&[T]) -> T) -> Self {
        let mut x = vec![T::zero(); grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        DensityField { grid, values, time }
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Riemann sum `hⁿ Σ ρ`.
    pub fn mass(&self) -> T {
        self.grid.cell_volume() * T::of(self.values.iter().map(|v| v.as_f64()).sum())
    }

    /// Riemann sum of `∫ f ρ`.
    pub fn integrate_against(&self, f: impl Fn(&[T]) -> T) -> T {
        let mut x = vec![T::zero(); self.grid.dim()];
        let mut acc = 0.0f64;
        for (i, &v) in self.values.iter().enumerate() {
            if v != T::zero() {
                self.grid.node_into(i, &mut x);
                acc += (f(&x) * v).as_f64();
            }
        }
        self.grid.cell_volume() * T::of(acc)
    }

    /// `max_i |ρ_i - f(x_i)|`.
    pub fn sup_distance(&self, f: impl Fn(&[T]) -> T) -> T {
        let mut x = vec![T::zero(); self.grid.dim()];
        let mut worst = T::zero();
        for (i, &v) in self.values.iter().enumerate() {
            self.grid.node_into(i, &mut x);
            worst = worst.max((v - f(&x)).abs());
        }
        worst
    }

    /// Largest value on the outer faces of the grid.
    pub fn boundary_max(&self) -> T {
        let strides = self.grid.strides();
        let mut worst = T::zero();
        for (i, &v) in self.values.iter().enumerate() {
            let on_face = (0..self.grid.dim()).any(|k| {
                let j = (i / strides[k]) % self.grid.shape[k];
                j == 0 || j + 1 == self.grid.shape[k]
            });
            if on_face {
                worst = worst.max(v.abs());
            }
        }
        worst
    }
}

/// Initial density of a [`PdeProblem`].
#[derive(Debug, Clone)]
pub enum InitialDensity<T> {
    Gaussian(GaussianBump<T>),
    Grid(DensityField<T>),
}

/// `∂_t ρ = σ² Δρ + r ρ` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct PdeProblem<T> {
    pub sigma2: T,
    pub growth: T,
    pub initial: InitialDensity<T>,
    pub horizon: T,
}

impl<T: Scalar> PdeProblem<T> {
    pub fn new(sigma2: T, growth: T, initial: InitialDensity<T>, horizon: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::param(format!("diffusivity must be positive, got {sigma2}")));
        }
        if !growth.is_finite() {
            return Err(Error::param("growth rate must be finite"));
        }
        if !(horizon >= T::zero()) || !horizon.is_finite() {
            return Err(Error::param(format!("time horizon must be >= 0, got {horizon}")));
        }
        let bounded = match &initial {
            InitialDensity::Gaussian(g) => g.amplitude >= T::zero() && g.amplitude.is_finite(),
            InitialDensity::Grid(f) => f.values.iter().all(|v| *v >= T::zero() && v.is_finite()),
        };
        if !bounded {
            return Err(Error::param("initial density must be bounded and non-negative"));
        }
        Ok(PdeProblem {
            sigma2,
            growth,
            initial,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.initial {
            InitialDensity::Gaussian(g) => g.dim(),
            InitialDensity::Grid(f) => f.grid.dim(),
        }
    }

    /// Largest explicit time step, `h² / (4 σ² n)`.
    pub fn max_time_step(&self, spacing: T) -> T {
        spacing * spacing / (T::of(4.0) * self.sigma2 * T::from_count(self.dim()))
    }

    /// `∫ G ρ(T)`: closed form when both are Gaussian, otherwise quadrature on a padded grid.
    pub fn pairing(&self, g: &TestFunction<T>, spacing: T) -> Result<T> {
        match (&self.initial, g) {
            (InitialDensity::Gaussian(rho0), TestFunction::Gaussian(gb)) => {
                Ok(gb.overlap(&rho0.evolve(self.sigma2, self.growth, self.horizon)))
            }
            (InitialDensity::Gaussian(rho0), _) => {
                let rho = rho0.evolve(self.sigma2, self.growth, self.horizon);
                let grid = Grid::for_gaussian(rho0, self.sigma2, self.horizon, spacing)?;
                Ok(DensityField::sample(grid, self.horizon, |x| rho.value(x)).integrate_against(|x| g.value(x)))
            }
            (InitialDensity::Grid(_), _) => {
                let dt = self.max_time_step(spacing) * T::of(0.5);
                Ok(fd_solve(self, spacing, dt, Boundary::ZeroFlux)?.integrate_against(|x| g.value(x)))
            }
        }
    }
}

/// Boundary condition of the finite-difference box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// No flux through the faces; mass changes only through the reaction term.
    ZeroFlux,
    /// `ρ = 0` just outside the box.
    Dirichlet,
}

/// Explicit central differences up to the horizon.
///
/// Gaussian initial data are sampled on [`Grid::for_gaussian`] with spacing
/// `spacing`; grid data keep their own grid and must have that spacing. The
/// step is shortened so that a whole number of steps lands on the horizon.
pub fn fd_solve<T: Scalar>(problem: &PdeProblem<T>, spacing: T, dt: T, boundary: Boundary) -> Result<DensityField<T>> {
    let max_dt = problem.max_time_step(spacing);
    if !(dt > T::zero()) || dt > max_dt * (T::one() + T::of(1e-12)) {
        return Err(Error::param(format!(
            "time step {dt} violates the stability bound; the largest admissible step is {max_dt}"
        )));
    }
    let mut field = match &problem.initial {
        InitialDensity::Gaussian(g) => {
            let grid = Grid::for_gaussian(g, problem.sigma2, problem.horizon, spacing)?;
            DensityField::sample(grid, T::zero(), |x| g.value(x))
        }
        InitialDensity::Grid(f) => {
            if (f.grid.spacing - spacing).abs() > spacing * T::of(1e-12) {
                return Err(Error::param(format!(
                    "grid data has spacing {}, solver asked for {spacing}",
                    f.grid.spacing
                )));
            }
            f.clone()
        }
    };
    let steps = (problem.horizon / dt).ceil().to_usize().unwrap_or(0);
    if steps == 0 {
        return Ok(field);
    }
    let dt = problem.horizon / T::from_count(steps);
    let strides = field.grid.strides();
    let shape = field.grid.shape.clone();
    let dim = shape.len();
    let diff = problem.sigma2 * dt / (spacing * spacing);
    let react = problem.growth * dt;
    let mut next = vec![T::zero(); field.values.len()];
    let mut index = vec![0usize; dim];
    for _ in 0..steps {
        index.iter_mut().for_each(|v| *v = 0);
        let cur = &field.values;
        for (i, out) in next.iter_mut().enumerate() {
            let v = cur[i];
            let mut flux = T::zero();
            for k in 0..dim {
                let s = strides[k];
                let j = index[k];
                if j > 0 {
                    flux += cur[i - s] - v;
                } else if boundary == Boundary::Dirichlet {
                    flux -= v;
                }
                if j + 1 < shape[k] {
                    flux += cur[i + s] - v;
                } else if boundary == Boundary::Dirichlet {
                    flux -= v;
                }
            }
            *out = v + diff * flux + react * v;
            for k in (0..dim).rev() {
                index[k] += 1;
                if index[k] < shape[k] {
                    break;
                }
                index[k] = 0;
            }
        }
        std::mem::swap(&mut field.values, &mut next);
    }
    field.time = problem.horizon;
    Ok(field)
}
