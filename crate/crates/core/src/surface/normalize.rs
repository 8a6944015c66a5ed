use serde::{Deserialize, Serialize};

use super::SurfacePoint;
use crate::stats::{mean, std_pop};
use crate::{Error, Result};

/// Standardises `(log10 N, log10 D)` per column and centres the loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: [f64; 2],
    pub scale: [f64; 2],
    pub y_mean: f64,
}

impl Normalizer {
    pub fn fit(points: &[SurfacePoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("cannot normalise an empty table"));
        }
        let ln: Vec<f64> = points.iter().map(|p| p.n.log10()).collect();
        let ld: Vec<f64> = points.iter().map(|p| p.d.log10()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.loss).collect();
        // a constant column is only centred
        let scale = |v: &[f64]| {
            let s = std_pop(v);
            if s > 0.0 {
                s
            } else {
                1.0
            }
        };
        Ok(Normalizer {
            mean: [mean(&ln), mean(&ld)],
            scale: [scale(&ln), scale(&ld)],
            y_mean: mean(&ys),
        })
    }

    pub fn normalize(&self, n: f64, d: f64) -> [f64; 2] {
        [
            (n.log10() - self.mean[0]) / self.scale[0],
            (d.log10() - self.mean[1]) / self.scale[1],
        ]
    }

    /// Inverse of [`Normalizer::normalize`], returning raw `(N, D)`.
    pub fn denormalize(&self, x: [f64; 2]) -> (f64, f64) {
        (
            10f64.powf(x[0] * self.scale[0] + self.mean[0]),
            10f64.powf(x[1] * self.scale[1] + self.mean[1]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let pts = [
            SurfacePoint {
                n: 1e6,
                d: 2e9,
                loss: 3.0,
            },
            SurfacePoint {
                n: 4e8,
                d: 1e11,
                loss: 2.0,
            },
        ];
        let norm = Normalizer::fit(&pts).unwrap();
        for p in &pts {
            let (n, d) = norm.denormalize(norm.normalize(p.n, p.d));
            assert!((n.log10() - p.n.log10()).abs() < 1e-12);
            assert!((d.log10() - p.d.log10()).abs() < 1e-12);
        }
        assert_eq!(norm.y_mean, 2.5);
    }
}
