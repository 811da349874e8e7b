use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{Dyson, Quaternion};
use crate::numerics::normal_quantile;
use crate::{invalid, Error, Result};

use super::System;

/// Map from the unit cube to off-diagonal Bloore variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Every real component uniform in [-1, 1].
    Cube,
    /// Every entry uniform in the unit beta-ball.
    Ball,
    /// Every entry in hyperspherical coordinates with radius and angles each
    /// uniform on their ranges (not volume-uniform).
    Hyperspherical,
    /// Uniform on the set of PSD unit-diagonal W, built column by column
    /// ("onion" construction). Always feasible; not available for beta = 3.
    Onion,
}

impl std::str::FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Sampler::Cube),
            "ball" => Ok(Sampler::Ball),
            "hyperspherical" => Ok(Sampler::Hyperspherical),
            "onion" => Ok(Sampler::Onion),
            _ => Err(invalid(format!("unknown sampler '{s}'"))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::Cube => "cube",
            Sampler::Ball => "ball",
            Sampler::Hyperspherical => "hyperspherical",
            Sampler::Onion => "onion",
        })
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl Sampler {
    /// Default choice: onion where it exists, ball for truncated quaternions.
    pub fn default_for(dyson: Dyson) -> Self {
        if dyson == Dyson::Truncated {
            Sampler::Ball
        } else {
            Sampler::Onion
        }
    }

    /// Number of unit-cube coordinates consumed per sample.
    pub fn dimension(self, system: System, dyson: Dyson) -> Result<usize> {
        let e = system.n_offdiag();
        let b = dyson.beta() as usize;
        let n = system.dim();
        Ok(match self {
            Sampler::Cube | Sampler::Hyperspherical => e * b,
            Sampler::Ball => {
                if b == 1 {
                    e
                } else {
                    e * (b + 1)
                }
            }
            Sampler::Onion => {
                if dyson == Dyson::Truncated {
                    return Err(invalid("onion sampling is not defined for beta = 3"));
                }
                (n - 1) * (b * (n - 1) + 2)
            }
        })
    }

    /// Whether every draw is feasible by construction.
    pub fn always_feasible(self) -> bool {
        self == Sampler::Onion
    }

    /// Maps the cube point `u` to off-diagonal entries (row-major i < j).
    pub fn draw(self, system: System, dyson: Dyson, u: &[f64], out: &mut [Quaternion]) -> Result<()> {
        let need = self.dimension(system, dyson)?;
        if u.len() < need || out.len() != system.n_offdiag() {
            return Err(Error::Structural("sampler buffers have the wrong size".into()));
        }
        let b = dyson.beta() as usize;
        match self {
            Sampler::Cube => {
                for (q, c) in out.iter_mut().zip(u.chunks_exact(b)) {
                    let v: Vec<f64> = c.iter().map(|x| 2.0 * x - 1.0).collect();
                    *q = Quaternion::from_slice(&v);
                }
            }
            Sampler::Hyperspherical => {
                for (q, c) in out.iter_mut().zip(u.chunks_exact(b)) {
                    *q = hyperspherical(c);
                }
            }
            Sampler::Ball => {
                if b == 1 {
                    for (q, &x) in out.iter_mut().zip(u) {
                        *q = Quaternion::real(2.0 * x - 1.0);
                    }
                } else {
                    for (q, c) in out.iter_mut().zip(u.chunks_exact(b + 1)) {
                        let g: Vec<f64> = c[..b].iter().map(|&x| normal_quantile(x)).collect();
                        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                        let r = c[b].powf(1.0 / b as f64);
                        let v: Vec<f64> = g.iter().map(|x| x / norm * r).collect();
                        *q = Quaternion::from_slice(&v);
                    }
                }
            }
            Sampler::Onion => onion(system.dim(), b, u, out),
        }
        Ok(())
    }
}

fn hyperspherical(c: &[f64]) -> Quaternion {
    match c.len() {
        1 => Quaternion::real(2.0 * c[0] - 1.0),
        2 => {
            let (r, p) = (c[0], 2.0 * PI * c[1]);
            Quaternion::new(r * p.cos(), r * p.sin(), 0.0, 0.0)
        }
        3 => {
            let (r, t, p) = (c[0], PI * c[1], 2.0 * PI * c[2]);
            Quaternion::new(r * t.cos(), r * t.sin() * p.cos(), r * t.sin() * p.sin(), 0.0)
        }
        _ => {
            let (r, t1, t2, p) = (c[0], PI * c[1], PI * c[2], 2.0 * PI * c[3]);
            let s = r * t1.sin() * t2.sin();
            Quaternion::new(r * t1.cos(), r * t1.sin() * t2.cos(), s * p.cos(), s * p.sin())
        }
    }
}

/// Onion construction of a uniformly distributed unit-diagonal PSD matrix.
///
/// Column k is w = L y with L the Cholesky factor of the leading k x k block
/// and y = g / sqrt(|g|^2 + |h|^2), where g has beta*k and h has
/// beta*(n-k-1)+2 standard normal components. Then |y|^2 follows
/// Beta(beta k/2, beta(n-k-1)/2 + 1) with uniform direction, which is the
/// conditional law of the new column under the flat measure.
fn onion(n: usize, beta: usize, u: &[f64], out: &mut [Quaternion]) {
    let mut l = vec![Quaternion::ZERO; n * n];
    l[0] = Quaternion::ONE;
    let mut pos = 0;
    let mut y = vec![Quaternion::ZERO; n];
    for k in 1..n {
        let mut norm2 = 0.0;
        for yj in y.iter_mut().take(k) {
            let mut c = [0.0; 4];
            for ci in c.iter_mut().take(beta) {
                *ci = normal_quantile(u[pos]);
                pos += 1;
            }
            *yj = Quaternion::new(c[0], c[1], c[2], c[3]);
            norm2 += yj.norm_sqr();
        }
        let extra = beta * (n - k - 1) + 2;
        let mut h2 = 0.0;
        for _ in 0..extra {
            let z = normal_quantile(u[pos]);
            pos += 1;
            h2 += z * z;
        }
        let s = 1.0 / (norm2 + h2).sqrt();
        for yj in y.iter_mut().take(k) {
            *yj = yj.scale(s);
        }
        let r2 = norm2 * s * s;
        for i in 0..k {
            let mut w = Quaternion::ZERO;
            for j in 0..=i {
                w += l[i * n + j] * y[j];
            }
            out[pair_index(n, i, k)] = w;
        }
        for j in 0..k {
            l[k * n + j] = y[j].conj();
        }
        l[k * n + k] = Quaternion::real((1.0 - r2).max(0.0).sqrt());
    }
}
