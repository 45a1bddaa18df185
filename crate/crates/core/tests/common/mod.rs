#![allow(dead_code)]

use std::f64::consts::PI;

use glam::DVec3;
use nimbus::field::CloudLayer;
use nimbus::march::Medium;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// 2 pi * integral over mu in [-1, 1]. Composite Gauss-Legendre with panels
/// shrinking geometrically toward both poles so lobes with g close to 1 are
/// resolved.
pub fn sphere_integral(f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(64);
    let mut breaks = vec![0.0];
    for k in 0..=14 {
        breaks.push(1.0 - 10f64.powi(-k) * 0.5);
    }
    breaks.push(1.0);
    let mut total = 0.0;
    for sign in [-1.0, 1.0] {
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for &(x, wt) in &rule {
                total += wt * half * f(sign * (mid + half * x));
            }
        }
    }
    2.0 * PI * total
}

/// Constant extinction between two altitudes of a planar layer, zero elsewhere.
pub struct SubSlab {
    pub layer: CloudLayer,
    pub lo: f64,
    pub hi: f64,
    pub sigma: f64,
}

impl Medium for SubSlab {
    fn layer(&self) -> &CloudLayer {
        &self.layer
    }
    fn extinction(&self, pos: DVec3) -> f64 {
        if pos.z > self.lo && pos.z < self.hi {
            self.sigma
        } else {
            0.0
        }
    }
}

/// Mean over pixels of |a - b| / b on luminance.
pub fn mean_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-9))
        .sum::<f64>()
        / a.len() as f64
}

/// Prints one verdict line and fails the test on `false`. Goes straight to
/// stderr so the line shows up without `--nocapture`.
pub fn verdict(criterion: &str, ok: bool, detail: String) {
    let line = format!("[{}] {criterion}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::Write::write_all(&mut std::io::stderr(), line.as_bytes());
    assert!(ok, "{criterion}: {detail}");
}
