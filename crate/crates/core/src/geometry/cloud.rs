use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Boundary handling of the sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Points interact only through in-box Euclidean distances.
    Free,
    /// Flat torus with minimal-image distances.
    Periodic,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Free => "free",
            Topology::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Topology::Free),
            "periodic" | "torus" => Ok(Topology::Periodic),
            other => Err(Error::param(format!("unknown topology `{other}`"))),
        }
    }
}

/// Points in the box `[0, L)^n`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    dim: usize,
    side: T,
    intensity: T,
    coords: Vec<T>,
    topology: Topology,
    seed: u64,
    /// Index of the inserted Palm point, if any.
    palm: Option<usize>,
}

impl<T: Scalar> PointCloud<T> {
    /// Cloud with explicit coordinates (row-major, `dim` per point).
    ///
    /// Periodic coordinates are wrapped into the box; free ones must already lie in it.
    pub fn from_coords(
        dim: usize,
        side: T,
        intensity: T,
        topology: Topology,
        mut coords: Vec<T>,
    ) -> Result<Self> {
        check_dim_side(dim, side)?;
        if coords.len() % dim != 0 {
            return Err(Error::param(format!(
                "coordinate buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        for c in coords.iter_mut() {
            if !c.is_finite() {
                return Err(Error::param("non-finite coordinate"));
            }
            if topology == Topology::Periodic {
                *c = wrap_into(*c, side);
            } else if *c < T::zero() || *c >= side {
                return Err(Error::param(format!(
                    "coordinate {c} outside the box [0, {side})"
                )));
            }
        }
        Ok(PointCloud {
            dim,
            side,
            intensity,
            coords,
            topology,
            seed: 0,
            palm: None,
        })
    }

    /// Integer lattice `{0, 1, ..., L-1}^n` on the torus of side `L`.
    pub fn unit_grid(dim: usize, side: usize) -> Result<Self> {
        let count = side.checked_pow(dim as u32).ok_or_else(|| Error::param("grid too large"))?;
        let mut coords = Vec::with_capacity(count * dim);
        for k in 0..count {
            let mut rem = k;
            for _ in 0..dim {
                coords.push(T::from_count(rem % side));
                rem /= side;
            }
        }
        Self::from_coords(dim, T::from_count(side), T::one(), Topology::Periodic, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn intensity(&self) -> T {
        self.intensity
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn palm_index(&self) -> Option<usize> {
        self.palm
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Geometric center of the box; the macroscopic origin.
    pub fn center(&self) -> Vec<T> {
        vec![self.side * T::of(0.5); self.dim]
    }

    /// Volume `L^n`.
    pub fn volume(&self) -> T {
        self.side.powi(self.dim as i32)
    }

    /// Writes `y - x` (minimal image on the torus) into `out`.
    #[inline]
    pub fn displacement_into(&self, from: usize, to: usize, out: &mut [T]) {
        let (a, b) = (self.point(from), self.point(to));
        for k in 0..self.dim {
            out[k] = b[k] - a[k];
        }
        if self.topology == Topology::Periodic {
            for v in out.iter_mut().take(self.dim) {
                *v = minimal_image(*v, self.side);
            }
        }
    }

    pub fn displacement(&self, from: usize, to: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.displacement_into(from, to, &mut out);
        out
    }

    pub fn distance(&self, a: usize, b: usize) -> T {
        let mut d2 = T::zero();
        let (p, q) = (self.point(a), self.point(b));
        for k in 0..self.dim {
            let mut v = q[k] - p[k];
            if self.topology == Topology::Periodic {
                v = minimal_image(v, self.side);
            }
            d2 += v * v;
        }
        d2.sqrt()
    }

    /// Macroscopic position `(x - center) / N` of site `i`.
    #[inline]
    pub fn macroscopic_into(&self, i: usize, scale: T, out: &mut [T]) {
        let half = self.side * T::of(0.5);
        for (o, &x) in out.iter_mut().zip(self.point(i)) {
            *o = (x - half) / scale;
        }
    }

    /// Sets seed and Palm provenance, e.g. after reading a cloud from disk.
    pub fn with_provenance(mut self, seed: u64, palm: Option<usize>) -> Result<Self> {
        if let Some(p) = palm {
            if p >= self.len() {
                return Err(Error::param(format!("palm index {p} out of range")));
            }
        }
        self.seed = seed;
        self.palm = palm;
        Ok(self)
    }

    /// Indices of points inside the axis-aligned box `[lo, hi)` (microscopic units).
    pub fn indices_in_box(&self, lo: &[T], hi: &[T]) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                self.point(i)
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(&x, (&l, &h))| x >= l && x < h)
            })
            .collect()
    }

    /// Sub-cloud of points inside the centered box of side `new_side`, re-centered.
    ///
    /// The result has free topology and side `new_side`.
    pub fn restrict_centered(&self, new_side: T) -> Result<Self> {
        if !(new_side > T::zero()) || new_side > self.side {
            return Err(Error::param(format!(
                "restriction side {new_side} must lie in (0, {}]",
                self.side
            )));
        }
        let offset = (self.side - new_side) * T::of(0.5);
        let mut coords = Vec::new();
        for i in 0..self.len() {
            let p = self.point(i);
            if p.iter().all(|&x| x >= offset && x - offset < new_side) {
                coords.extend(p.iter().map(|&x| x - offset));
            }
        }
        let mut out = Self::from_coords(self.dim, new_side, self.intensity, Topology::Free, coords)?;
        out.seed = self.seed;
        Ok(out)
    }
}

/// Samples a homogeneous Poisson cloud of intensity `gamma` in `[0, side)^dim`.
///
/// The count is a Poisson(γ Lⁿ) draw and positions are i.i.d. uniform; the
/// result depends only on the arguments.
pub fn sample_poisson_cloud<T: Scalar>(
    gamma: T,
    side: T,
    dim: usize,
    topology: Topology,
    seed: u64,
) -> Result<PointCloud<T>> {
    check_dim_side(dim, side)?;
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(Error::param(format!("intensity must be finite and >= 0, got {gamma}")));
    }
    let mut rng = rng::stream(seed, &[rng::TAG_CLOUD]);
    let mean = gamma.as_f64() * side.as_f64().powi(dim as i32);
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::param(format!("poisson mean {mean}: {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let l = side.as_f64();
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count * dim {
        let mut x = T::of(rng.random::<f64>() * l);
        // Narrowing can round up onto the boundary.
        if x >= side {
            x = T::zero();
        }
        coords.push(x);
    }
    Ok(PointCloud {
        dim,
        side,
        intensity: gamma,
        coords,
        topology,
        seed,
        palm: None,
    })
}

/// Adds one point at the box center and flags the cloud as Palm-conditioned.
pub fn palm_condition<T: Scalar>(mut cloud: PointCloud<T>) -> Result<PointCloud<T>> {
    if cloud.palm.is_some() {
        return Err(Error::Usage("cloud is already Palm-conditioned".into()));
    }
    let center = cloud.center();
    cloud.palm = Some(cloud.len());
    cloud.coords.extend(center);
    Ok(cloud)
}

fn check_dim_side<T: Scalar>(dim: usize, side: T) -> Result<()> {
    if dim < 2 {
        return Err(Error::param(format!("dimension must be >= 2, got {dim}")));
    }
    if !(side > T::zero()) || !side.is_finite() {
        return Err(Error::param(format!("box side must be positive, got {side}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn minimal_image<T: Scalar>(v: T, side: T) -> T {
    v - side * (v / side).round()
}

fn wrap_into<T: Scalar>(x: T, side: T) -> T {
    let w = x - side * (x / side).floor();
    if w >= side {
        T::zero()
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_gives_empty_cloud() {
        let c = sample_poisson_cloud(0.0_f64, 10.0, 2, Topology::Free, 3).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            sample_poisson_cloud(1.0_f64, 10.0, 1, Topology::Free, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            sample_poisson_cloud(-1.0_f64, 10.0, 2, Topology::Free, 0),
            Err(Error::Parameter(_))
        ));
        assert!(sample_poisson_cloud(1.0_f64, 0.0, 2, Topology::Free, 0).is_err());
    }

    #[test]
    fn coordinates_inside_box_and_deterministic() {
        let a = sample_poisson_cloud(2.0_f64, 7.5, 3, Topology::Periodic, 11).unwrap();
        let b = sample_poisson_cloud(2.0_f64, 7.5, 3, Topology::Periodic, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.coords().iter().all(|&x| (0.0..7.5).contains(&x)));
        let f = sample_poisson_cloud(2.0_f32, 7.5, 2, Topology::Free, 11).unwrap();
        assert!(f.coords().iter().all(|&x| (0.0..7.5).contains(&x)));
    }

    #[test]
    fn palm_insertion() {
        let empty = sample_poisson_cloud(0.0_f64, 10.0, 2, Topology::Free, 0).unwrap();
        let p = palm_condition(empty).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.point(0), &[5.0, 5.0]);
        assert_eq!(p.palm_index(), Some(0));

        let c = sample_poisson_cloud(1.0_f64, 10.0, 2, Topology::Free, 4).unwrap();
        let k = c.len();
        let p = palm_condition(c.clone()).unwrap();
        assert_eq!(p.len(), k + 1);
        assert_eq!(&p.coords()[..2 * k], c.coords());
        assert!(matches!(palm_condition(p), Err(Error::Usage(_))));
    }

    #[test]
    fn torus_displacements() {
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Periodic, vec![0.5, 0.5, 9.5, 1.0])
            .unwrap();
        assert_eq!(c.displacement(0, 1), vec![-1.0, 0.5]);
        assert_eq!(c.displacement(1, 0), vec![1.0, -0.5]);
        assert!((c.distance(0, 1) - 1.25_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_layout() {
        let g = PointCloud::<f64>::unit_grid(2, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(4), &[1.0, 1.0]);
    }

    #[test]
    fn restriction_recenters() {
        let c = PointCloud::from_coords(2, 10.0_f64, 1.0, Topology::Free, vec![1.0, 1.0, 5.0, 6.0])
            .unwrap();
        let r = c.restrict_centered(4.0).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.point(0), &[2.0, 3.0]);
    }
}
