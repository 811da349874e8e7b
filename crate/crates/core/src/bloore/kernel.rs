use crate::algebra::{ldl_positive, pt_source, Matrix, Scalar};
use crate::Result;

use super::{canonical_diag_unchecked, RatioPoint, System};

/// Precomputed PPT test over a fixed list of ratio points.
///
/// For canonical diagonal d, entry (a, b) of the partial transpose of
/// D^{1/2} W D^{1/2} is sqrt(d_i d_j) w_ij with (i, j) the source position
/// of (a, b). Only the scale factors depend on the ratio point, so they are
/// tabulated once and each test is a scaled gather followed by LDL*.
#[derive(Clone, Debug)]
pub struct PptKernel {
    system: System,
    points: Vec<RatioPoint>,
    src: Vec<usize>,
    scales: Vec<f64>,
    shift: f64,
}

impl PptKernel {
    /// Zero ratios are allowed; they give degenerate diagonals.
    pub fn new(system: System, points: &[RatioPoint], tol: f64) -> Result<Self> {
        let n = system.dim();
        let bd = system.block_dim();
        for p in points {
            p.check(system, true)?;
        }
        let mut src = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let (i, j) = pt_source(r, c, bd);
                src.push(i * n + j);
            }
        }
        let mut scales = Vec::with_capacity(points.len() * n * n);
        for p in points {
            let d = canonical_diag_unchecked(*p);
            for &s in &src {
                let (i, j) = (s / n, s % n);
                scales.push((d[i] * d[j]).sqrt());
            }
        }
        Ok(PptKernel {
            system,
            points: points.to_vec(),
            src,
            scales,
            shift: tol / n as f64,
        })
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn points(&self) -> &[RatioPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// PPT verdict of W at ratio point `g`; `buf` is scratch space.
    pub fn separable<T: Scalar>(&self, w: &Matrix<T>, g: usize, buf: &mut Vec<T>) -> bool {
        let n = self.system.dim();
        let nn = n * n;
        let sc = &self.scales[g * nn..(g + 1) * nn];
        let wd = w.as_slice();
        buf.clear();
        buf.extend(self.src.iter().zip(sc).map(|(&s, &f)| wd[s].scale(f)));
        ldl_positive(buf, n, self.shift)
    }

    /// Adds one to `counts[g]` for every separable ratio point.
    pub fn count_into<T: Scalar>(&self, w: &Matrix<T>, counts: &mut [u64], buf: &mut Vec<T>) {
        for (g, c) in counts.iter_mut().enumerate().take(self.points.len()) {
            if self.separable(w, g, buf) {
                *c += 1;
            }
        }
    }
}
