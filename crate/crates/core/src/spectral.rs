//! Eigenstructure of the Dirichlet Laplacian on the unit interval / unit
//! square, plus the Gaussian movement-kernel helper.
//!
//! On [0,1] the eigenfunctions are h_k(x) = sqrt(2) sin(k pi x) with
//! lambda_k = k pi (so -Laplace h_k = lambda_k^2 h_k). On the unit square the
//! basis is the tensor product, lambda_{j,k} = pi sqrt(j^2 + k^2), ordered by
//! eigenvalue with lexicographic tie-breaking on (j, k).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of the domain: the unit interval or the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    One,
    Two,
}

impl Dimension {
    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dimension::One),
            2 => Ok(Dimension::Two),
            other => Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
        }
    }
}

/// One eigenmode. `multi_index` is `[k, 0]` in d=1 and `[j, k]` in d=2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// 1-based position in eigenvalue order.
    pub index: usize,
    pub multi_index: [usize; 2],
    /// lambda = sqrt(-nu), so the Laplacian eigenvalue is nu = -lambda^2.
    pub lambda: f64,
}

/// The first N eigenpairs of the Dirichlet Laplacian, sorted by eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    dimension: Dimension,
    modes: Vec<Mode>,
}

impl SpectralBasis {
    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Eigenvalue square roots lambda_1 <= ... <= lambda_N.
    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.lambda)
    }

    pub fn mode(&self, index: usize) -> Result<&Mode> {
        if index == 0 || index > self.modes.len() {
            return Err(Error::InvalidParameter(format!(
                "mode index {index} out of range 1..={}",
                self.modes.len()
            )));
        }
        Ok(&self.modes[index - 1])
    }
}

/// PDE coefficients induced by a Gaussian movement kernel with mean `mu`,
/// variance `sigma_sq` and decision time `tau`: F = mu/tau is the mean drift
/// velocity, G = sigma^2/tau^2 its variance, and sigma^2/(2 tau) the
/// diffusion coefficient of the resulting advection-diffusion equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficients {
    pub advection: f64,
    pub diffusion_variance: f64,
    pub pde_diffusion: f64,
}

pub fn kernel_to_coefficients(mu: f64, sigma_sq: f64, tau: f64) -> Result<KernelCoefficients> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma_sq must be > 0, got {sigma_sq}"
        )));
    }
    Ok(KernelCoefficients {
        advection: mu / tau,
        diffusion_variance: sigma_sq / (tau * tau),
        pde_diffusion: sigma_sq / (2.0 * tau),
    })
}

/// Build the N smallest-eigenvalue Dirichlet modes on the unit domain.
pub fn build_basis(dimension: usize, n: usize) -> Result<SpectralBasis> {
    let dimension = Dimension::from_usize(dimension)?;
    if n == 0 {
        return Err(Error::InvalidParameter("basis size N must be >= 1".into()));
    }
    let modes = match dimension {
        Dimension::One => (1..=n)
            .map(|k| Mode {
                index: k,
                multi_index: [k, 0],
                lambda: k as f64 * PI,
            })
            .collect(),
        Dimension::Two => build_square_modes(n),
    };
    Ok(SpectralBasis { dimension, modes })
}

fn build_square_modes(n: usize) -> Vec<Mode> {
    // Enumerate j,k <= m and keep pairs with j^2 + k^2 <= m^2; those are the
    // complete set inside radius m, so once that set reaches n entries the n
    // smallest eigenvalues are all present. Weyl: ~pi m^2 / 4 pairs inside.
    let mut m = ((4.0 * n as f64 / PI).sqrt().ceil() as usize).max(2) + 2;
    loop {
        let m2 = m * m;
        let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
        for j in 1..=m {
            for k in 1..=m {
                let s = j * j + k * k;
                if s <= m2 {
                    pairs.push((s, j, k));
                }
            }
        }
        if pairs.len() >= n {
            // integer sort key gives exact eigenvalue ordering and
            // lexicographic tie-breaking for degenerate pairs
            pairs.sort_unstable();
            pairs.truncate(n);
            return pairs
                .into_iter()
                .enumerate()
                .map(|(i, (s, j, k))| Mode {
                    index: i + 1,
                    multi_index: [j, k],
                    lambda: PI * (s as f64).sqrt(),
                })
                .collect();
        }
        m *= 2;
    }
}

/// Value of the `mode_index`-th eigenfunction at `xi` (length d, inside the
/// closed unit domain).
pub fn eigenfunction_value(basis: &SpectralBasis, mode_index: usize, xi: &[f64]) -> Result<f64> {
    let mode = basis.mode(mode_index)?;
    check_point(basis.dimension(), xi)?;
    match basis.dimension() {
        Dimension::One => {
            let k = mode.multi_index[0] as f64;
            Ok(2f64.sqrt() * (k * PI * xi[0]).sin())
        }
        Dimension::Two => {
            let j = mode.multi_index[0] as f64;
            let k = mode.multi_index[1] as f64;
            Ok(2.0 * (j * PI * xi[0]).sin() * (k * PI * xi[1]).sin())
        }
    }
}

pub(crate) fn check_point(dimension: Dimension, xi: &[f64]) -> Result<()> {
    let d = dimension.as_usize();
    if xi.len() != d {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, domain dimension is {d}",
            xi.len()
        )));
    }
    for &x in xi {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "point coordinate {x} outside the closed unit domain"
            )));
        }
    }
    Ok(())
}

/// Finite-N approximant of the Weyl constant: |nu_N| N^(-2/d) = lambda_N^2 N^(-2/d).
/// Equals pi^2 exactly for every N in d=1; tends to 4 pi in d=2.
pub fn weyl_ratio(basis: &SpectralBasis) -> f64 {
    let n = basis.len() as f64;
    let lambda_n = basis.modes[basis.len() - 1].lambda;
    lambda_n * lambda_n * n.powf(-2.0 / basis.dimension().as_usize() as f64)
}
