//! Scattering and attenuation kernels.
//!
//! Phase functions take the cosine of the scattering angle and return a
//! density per steradian normalized over the sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

fn check_g(name: &'static str, g: f64) -> Result<()> {
    if g.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("anisotropy must satisfy |g| < 1, got {g}")))
    }
}

#[inline]
fn hg_unchecked(cos_theta: f64, g: f64) -> f64 {
    let g2 = g * g;
    let denom = 1.0 + g2 - 2.0 * g * cos_theta;
    (1.0 - g2) * INV_4PI / (denom * denom.sqrt())
}

#[inline]
fn draine_unchecked(cos_theta: f64, g: f64, alpha: f64) -> f64 {
    let g2 = g * g;
    let denom = 1.0 + g2 - 2.0 * g * cos_theta;
    (1.0 - g2) * INV_4PI / (1.0 + alpha * (1.0 + 2.0 * g2) / 3.0)
        * (1.0 + alpha * cos_theta * cos_theta)
        / (denom * denom.sqrt())
}

/// Henyey-Greenstein.
pub fn hg_phase(cos_theta: f64, g: f64) -> Result<f64> {
    check_g("g", g)?;
    Ok(hg_unchecked(cos_theta, g))
}

/// Two-term Henyey-Greenstein: `w * HG(g1) + (1 - w) * HG(g2)`.
pub fn tthg_phase(cos_theta: f64, g1: f64, g2: f64, w: f64) -> Result<f64> {
    check_g("g1", g1)?;
    check_g("g2", g2)?;
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::param("w", format!("blend weight must lie in [0, 1], got {w}")));
    }
    Ok(w * hg_unchecked(cos_theta, g1) + (1.0 - w) * hg_unchecked(cos_theta, g2))
}

/// Draine's phase function; `alpha = 0` is HG, `alpha = 1, g = 0` is
/// Cornette-Shanks-like Rayleigh.
pub fn draine_phase(cos_theta: f64, g: f64, alpha: f64) -> Result<f64> {
    check_g("g", g)?;
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be >= 0, got {alpha}")));
    }
    Ok(draine_unchecked(cos_theta, g, alpha))
}

// ---------------------------------------------------------------------------
// HG + Draine droplet fit

pub const DROPLET_MIN_UM: f64 = 0.01;
pub const DROPLET_MAX_UM: f64 = 50.0;

/// HG + Draine lobe parameters for one droplet diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HgdFit {
    pub g_hg: f64,
    pub g_d: f64,
    pub alpha: f64,
    pub w_d: f64,
}

/// Piecewise fit of the HG + Draine blend to Mie scattering by water droplets
/// of diameter `d` (micrometres). Constants from Jendersie and d'Eon,
/// "An Approximate Mie Scattering Function for Fog and Cloud Rendering"
/// (SIGGRAPH 2023 Talks), kept together here so they can be audited.
///
/// The published regimes meet with small jumps at 0.1, 1.5 and 5 um; `alpha`
/// in particular drops from 250 to about 9.3 at 1.5 um.
pub fn hgd_fit(d: f64) -> Result<HgdFit> {
    if !(DROPLET_MIN_UM..=DROPLET_MAX_UM).contains(&d) {
        return Err(Error::param(
            "d",
            format!("droplet diameter must lie in [{DROPLET_MIN_UM}, {DROPLET_MAX_UM}] um, got {d}"),
        ));
    }
    let fit = if d <= 0.1 {
        HgdFit {
            g_hg: 13.8 * d * d,
            g_d: 1.1456 * d * (9.29044 * d).sin(),
            alpha: 250.0,
            w_d: 0.252977 - 312.983 * d.powf(4.3),
        }
    } else if d < 1.5 {
        let ld = d.ln();
        HgdFit {
            g_hg: 0.862 - 0.143 * ld * ld,
            g_d: 0.379685
                * (1.19692 * ((ld - 0.238604) * (ld + 1.00667) / (0.507522 - 0.15677 * ld)).cos()
                    + 1.37932 * ld
                    + 0.0625835)
                    .cos()
                + 0.344213,
            alpha: 250.0,
            w_d: 0.146209 * (3.38707 * ld + 2.11193).cos() + 0.316072 + 0.0778917 * ld,
        }
    } else if d < 5.0 {
        let ld = d.ln();
        let lld = ld.ln();
        HgdFit {
            g_hg: 0.0604931 * lld + 0.940256,
            g_d: 0.500411 - 0.081287 / (-2.0 * ld + ld.tan() + 1.27551),
            alpha: 7.30354 * ld + 6.31675,
            w_d: 0.026914 * (ld - (5.68947 * (lld - 0.0292149)).cos()) + 0.376475,
        }
    } else {
        HgdFit {
            g_hg: (-0.0990567 / (d - 1.67154)).exp(),
            g_d: (-2.20679 / (d + 3.91029) - 0.428934).exp(),
            alpha: (3.62489 - 8.29288 / (d + 5.52825)).exp(),
            w_d: (-0.599085 / (d - 0.641583) - 0.665888).exp(),
        }
    };
    Ok(fit)
}

impl HgdFit {
    #[inline]
    pub fn eval(&self, cos_theta: f64) -> f64 {
        (1.0 - self.w_d) * hg_unchecked(cos_theta, self.g_hg)
            + self.w_d * draine_unchecked(cos_theta, self.g_d, self.alpha)
    }
}

/// `(1 - w_d) * HG(g_hg) + w_d * Draine(g_d, alpha)` with the fit for `d`.
pub fn hgd_phase(cos_theta: f64, d: f64) -> Result<f64> {
    Ok(hgd_fit(d)?.eval(cos_theta))
}

// ---------------------------------------------------------------------------
// phase model

/// Scattering-lobe choice, serialized as `{"tthg": {...}}` or `{"hgd": {"d": ..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PhaseModel {
    Tthg { g1: f64, g2: f64, w: f64 },
    Hgd { d: f64 },
}

impl PhaseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseModel::Tthg { g1, g2, w } => tthg_phase(1.0, g1, g2, w).map(|_| ()),
            PhaseModel::Hgd { d } => hgd_fit(d).map(|_| ()),
        }
    }

    /// Resolves the model once so the inner loop does no validation.
    pub fn evaluator(&self) -> Result<PhaseEvaluator> {
        self.validate()?;
        Ok(match *self {
            PhaseModel::Tthg { g1, g2, w } => PhaseEvaluator::Tthg { g1, g2, w },
            PhaseModel::Hgd { d } => PhaseEvaluator::Hgd(hgd_fit(d)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseEvaluator {
    Isotropic,
    Tthg { g1: f64, g2: f64, w: f64 },
    Hgd(HgdFit),
}

impl PhaseEvaluator {
    #[inline]
    pub fn eval(&self, cos_theta: f64) -> f64 {
        match *self {
            PhaseEvaluator::Isotropic => INV_4PI,
            PhaseEvaluator::Tthg { g1, g2, w } => {
                w * hg_unchecked(cos_theta, g1) + (1.0 - w) * hg_unchecked(cos_theta, g2)
            }
            PhaseEvaluator::Hgd(fit) => fit.eval(cos_theta),
        }
    }

    /// Largest value over all directions, sampled densely.
    pub fn max_value(&self) -> f64 {
        (0..=4096)
            .map(|i| self.eval(-1.0 + 2.0 * i as f64 / 4096.0))
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// attenuation

/// Beer-Lambert: fraction of light surviving `optical_depth`.
pub fn transmittance(optical_depth: f64) -> Result<f64> {
    if !(optical_depth >= 0.0) {
        return Err(Error::param(
            "optical_depth",
            format!("must be >= 0, got {optical_depth}"),
        ));
    }
    Ok((-optical_depth).exp())
}

/// Beer's-powder darkening factor `1 - exp(-2 tau)`.
#[inline]
pub fn powder(local_optical_depth: f64) -> f64 {
    1.0 - (-2.0 * local_optical_depth.max(0.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson over mu in [-1, 1], times 2 pi. Independent of the
    /// Gauss-Legendre oracle used by the acceptance suite.
    /// 2 pi * integral of f over [-1, 1], trapezoid rule after a tanh-sinh
    /// substitution so sharply peaked lobes near the poles are resolved.
    fn sphere_integral(f: impl Fn(f64) -> f64) -> f64 {
        let (n, t_max) = (20_000, 3.5);
        let h = 2.0 * t_max / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let t = -t_max + i as f64 * h;
            let u = 0.5 * PI * t.sinh();
            let mu = u.tanh();
            let w = 0.5 * PI * t.cosh() / (u.cosh() * u.cosh());
            let edge = if i == 0 || i == n { 0.5 } else { 1.0 };
            if w > 0.0 {
                s += edge * w * f(mu);
            }
        }
        2.0 * PI * s * h
    }

    #[test]
    fn hg_closed_forms() {
        assert!((hg_phase(0.3, 0.0).unwrap() - 0.0795775).abs() < 1e-7);
        // 0.75 / (4 pi * 0.125)
        assert!((hg_phase(1.0, 0.5).unwrap() - 0.477465).abs() < 1e-6);
        assert!(hg_phase(0.0, 1.0).is_err());
        assert!(hg_phase(0.0, -1.2).is_err());
    }

    #[test]
    fn phase_functions_normalize() {
        for g in [-0.9, 0.0, 0.5, 0.85] {
            let i = sphere_integral(|mu| hg_phase(mu, g).unwrap());
            assert!((i - 1.0).abs() < 1e-4, "g={g}: {i}");
        }
        let i = sphere_integral(|mu| tthg_phase(mu, 0.85, -0.3, 0.7).unwrap());
        assert!((i - 1.0).abs() < 1e-4);
        let i = sphere_integral(|mu| draine_phase(mu, 0.0, 1.0).unwrap());
        assert!((i - 1.0).abs() < 1e-4);
    }

    #[test]
    fn degenerate_blends() {
        for mu in [-1.0, -0.2, 0.4, 1.0] {
            let hg = hg_phase(mu, 0.6).unwrap();
            assert!((tthg_phase(mu, 0.6, -0.4, 1.0).unwrap() - hg).abs() < 1e-15);
            assert!((tthg_phase(mu, 0.6, 0.6, 0.3).unwrap() - hg).abs() < 1e-15);
            assert_eq!(draine_phase(mu, 0.6, 0.0).unwrap(), hg);
        }
        for mu in [0.1, 0.5, 0.9] {
            let a = draine_phase(mu, 0.0, 1.0).unwrap();
            let b = draine_phase(-mu, 0.0, 1.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fit_values_are_valid_for_figure_and_preset_sizes() {
        for d in [0.8, 1.0, 4.0, 4.5, 4.7, 25.0] {
            let f = hgd_fit(d).unwrap();
            assert!((0.0..=1.0).contains(&f.w_d), "d={d}: {f:?}");
            assert!(f.g_hg.abs() < 1.0 && f.g_d.abs() < 1.0);
            assert!(f.alpha >= 0.0);
        }
        assert!(hgd_fit(0.001).is_err());
        let err = hgd_fit(60.0).unwrap_err().to_string();
        assert!(err.contains("[0.01, 50]"), "{err}");
    }

    #[test]
    fn fit_is_valid_across_whole_domain() {
        let n = 5000;
        for i in 0..=n {
            let d = DROPLET_MIN_UM * (DROPLET_MAX_UM / DROPLET_MIN_UM).powf(i as f64 / n as f64);
            let f = hgd_fit(d.min(DROPLET_MAX_UM)).unwrap();
            assert!((0.0..=1.0).contains(&f.w_d), "d={d}: {f:?}");
            assert!(f.g_hg.abs() < 1.0 && f.g_d.abs() < 1.0, "d={d}: {f:?}");
        }
    }

    #[test]
    fn hgd_normalizes_and_is_nonnegative() {
        for d in [0.8, 1.0, 4.0, 4.5, 25.0] {
            let i = sphere_integral(|mu| hgd_phase(mu, d).unwrap());
            assert!((i - 1.0).abs() < 1e-3, "d={d}: {i}");
            for k in 0..=10_000 {
                let mu = -1.0 + 2.0 * k as f64 / 10_000.0;
                assert!(hgd_phase(mu, d).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn zero_draine_weight_is_pure_hg() {
        let fit = HgdFit { g_hg: 0.7, g_d: 0.3, alpha: 50.0, w_d: 0.0 };
        for mu in [-0.5, 0.0, 0.99] {
            assert_eq!(fit.eval(mu), hg_phase(mu, 0.7).unwrap());
        }
    }

    #[test]
    fn beer_lambert() {
        assert_eq!(transmittance(0.0).unwrap(), 1.0);
        assert!((transmittance(1.0).unwrap() - 0.367879).abs() < 1e-6);
        let (a, b) = (0.37, 2.9);
        let prod = transmittance(a).unwrap() * transmittance(b).unwrap();
        assert!((prod - transmittance(a + b).unwrap()).abs() < 1e-12);
        assert!(transmittance(-0.1).is_err());
    }

    #[test]
    fn powder_shape() {
        assert_eq!(powder(0.0), 0.0);
        assert!(powder(4.0) >= 0.999);
        let mut prev = 0.0;
        for i in 0..1000 {
            let v = powder(i as f64 * 0.01);
            assert!(v >= prev);
            prev = v;
        }
    }

    // The published regimes do not join up. These are the measured jumps
    // across each boundary (|fit(b - 1e-4) - fit(b + 1e-4)|), pinned so an
    // accidental change to a constant shows up here.
    #[test]
    fn regime_boundary_jumps() {
        let jump = |b: f64| {
            let (lo, hi) = (hgd_fit(b - 1e-4).unwrap(), hgd_fit(b + 1e-4).unwrap());
            [
                (lo.g_hg - hi.g_hg).abs(),
                (lo.g_d - hi.g_d).abs(),
                (lo.alpha - hi.alpha).abs(),
                (lo.w_d - hi.w_d).abs(),
            ]
        };
        let expected = [
            (0.1, [0.0332, 0.0243, 0.0, 0.0202]),
            (1.5, [0.0472, 0.0969, 240.7214, 0.1625]),
            (5.0, [0.0016, 0.0050, 1.0030, 0.0058]),
        ];
        for (b, want) in expected {
            let got = jump(b);
            for k in 0..4 {
                assert!((got[k] - want[k]).abs() < 1e-3, "boundary {b}, field {k}: {got:?}");
            }
        }
    }
}
