//! Classical effective-medium physics for two-phase rocks.
//!
//! Moduli are in GPa throughout. Stiffness matrices use Voigt notation with
//! engineering shear strains, so an isotropic medium has `C44 = mu`.

pub mod ode;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::r2;
use crate::error::{invalid, Error, Result};
pub use ode::StepControl;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticModuli {
    pub k: f64,
    pub mu: f64,
}

impl ElasticModuli {
    pub fn new(k: f64, mu: f64) -> Result<Self> {
        if !(k.is_finite() && mu.is_finite() && k >= 0.0 && mu >= 0.0) {
            return Err(invalid(format!("moduli must be finite and non-negative, got K={k}, mu={mu}")));
        }
        Ok(Self { k, mu })
    }

    pub const VACUUM: ElasticModuli = ElasticModuli { k: 0.0, mu: 0.0 };

    pub fn as_array(self) -> [f64; 2] {
        [self.k, self.mu]
    }

    pub fn clamped(self) -> Self {
        Self { k: self.k.max(0.0), mu: self.mu.max(0.0) }
    }
}

/// 6x6 Voigt stiffness matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiffnessMatrix(pub [[f64; 6]; 6]);

impl StiffnessMatrix {
    pub fn zeros() -> Self {
        Self([[0.0; 6]; 6])
    }

    /// Entry with 1-based Voigt indices, `c(1, 2)` = C12.
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.0[i - 1][j - 1]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..6).all(|i| (0..6).all(|j| (self.0[i][j] - self.0[j][i]).abs() <= tol))
    }
}

pub fn isotropic_stiffness(m: ElasticModuli) -> StiffnessMatrix {
    let mut c = StiffnessMatrix::zeros();
    let diag = m.k + 4.0 * m.mu / 3.0;
    let off = m.k - 2.0 * m.mu / 3.0;
    for i in 0..3 {
        for j in 0..3 {
            c.0[i][j] = if i == j { diag } else { off };
        }
        c.0[i + 3][i + 3] = m.mu;
    }
    c
}

/// Voigt-average bulk and shear moduli of a (possibly anisotropic) stiffness.
pub fn voigt_average(c: &StiffnessMatrix) -> ElasticModuli {
    let diag = c.c(1, 1) + c.c(2, 2) + c.c(3, 3);
    let off = c.c(1, 2) + c.c(1, 3) + c.c(2, 3);
    let shear = c.c(4, 4) + c.c(5, 5) + c.c(6, 6);
    ElasticModuli { k: (diag + 2.0 * off) / 9.0, mu: (diag - off + 3.0 * shear) / 15.0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub upper: ElasticModuli,
    pub lower: ElasticModuli,
}

fn check_fraction(phi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(invalid(format!("porosity {phi} outside [0, 1]")));
    }
    Ok(())
}

/// Arithmetic (Voigt) and harmonic (Reuss) volume averages. A zero-modulus
/// phase present at non-zero fraction drives the harmonic mean to zero.
pub fn voigt_reuss_bounds(mineral: ElasticModuli, pore: ElasticModuli, phi: f64) -> Result<Bounds> {
    check_fraction(phi)?;
    let arith = |m: f64, p: f64| (1.0 - phi) * m + phi * p;
    let harm = |m: f64, p: f64| {
        if phi == 0.0 {
            m
        } else if phi == 1.0 {
            p
        } else if m == 0.0 || p == 0.0 {
            0.0
        } else {
            1.0 / ((1.0 - phi) / m + phi / p)
        }
    };
    Ok(Bounds {
        upper: ElasticModuli { k: arith(mineral.k, pore.k), mu: arith(mineral.mu, pore.mu) },
        lower: ElasticModuli { k: harm(mineral.k, pore.k), mu: harm(mineral.mu, pore.mu) },
    })
}

/// Hashin-Shtrikman bounds for a stiff mineral with pore inclusions.
///
/// Singular terms of the lower bounds for a pore phase without shear
/// stiffness are replaced by their analytic limits: with `mu_pore = 0` the
/// shear lower bound is 0, and with vacuum pores both lower bounds are 0
/// whenever `phi > 0`.
pub fn hashin_shtrikman(mineral: ElasticModuli, pore: ElasticModuli, phi: f64) -> Result<Bounds> {
    check_fraction(phi)?;
    if phi == 0.0 {
        return Ok(Bounds { upper: mineral, lower: mineral });
    }
    if phi == 1.0 {
        return Ok(Bounds { upper: pore, lower: pore });
    }
    let (km, mm, kp, mp) = (mineral.k, mineral.mu, pore.k, pore.mu);
    let inv = |x: f64| 1.0 / x;

    let k_upper = if kp == km {
        km
    } else {
        km + phi / (inv(kp - km) + (1.0 - phi) * inv(km + 4.0 * mm / 3.0))
    };
    let mu_upper = if mp == mm {
        mm
    } else {
        mm + phi / (inv(mp - mm) + 2.0 * (1.0 - phi) * (km + 2.0 * mm) * inv(5.0 * mm * (km + 4.0 * mm / 3.0)))
    };
    let k_lower = if kp + 4.0 * mp / 3.0 == 0.0 || kp == km {
        kp
    } else {
        kp + (1.0 - phi) / (inv(km - kp) + phi * inv(kp + 4.0 * mp / 3.0))
    };
    let mu_lower = if mp == 0.0 || mp == mm {
        mp
    } else {
        mp + (1.0 - phi) / (inv(mm - mp) + 2.0 * phi * (kp + 2.0 * mp) * inv(5.0 * mp * (kp + 4.0 * mp / 3.0)))
    };
    Ok(Bounds {
        upper: ElasticModuli { k: k_upper, mu: mu_upper },
        lower: ElasticModuli { k: k_lower, mu: mu_lower },
    })
}

/// Differential effective medium configuration: a mineral background into
/// which penny-crack inclusions of aspect ratio `aspect_ratio` are added.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemParams {
    pub mineral: ElasticModuli,
    pub inclusion: ElasticModuli,
    pub aspect_ratio: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

fn default_rtol() -> f64 {
    1e-8
}

fn default_max_step() -> f64 {
    0.05
}

/// Default penny-crack aspect ratio.
pub const DEFAULT_ASPECT_RATIO: f64 = 0.25;

impl DemParams {
    /// Vacuum inclusions in `mineral` with the default step control.
    pub fn new(mineral: ElasticModuli, aspect_ratio: f64) -> Result<Self> {
        let p = Self {
            mineral,
            inclusion: ElasticModuli::VACUUM,
            aspect_ratio,
            rtol: default_rtol(),
            max_step: default_max_step(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_inclusion(mut self, inclusion: ElasticModuli) -> Self {
        self.inclusion = inclusion;
        self
    }

    pub fn with_aspect_ratio(mut self, aspect_ratio: f64) -> Self {
        self.aspect_ratio = aspect_ratio;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aspect_ratio > 0.0 && self.aspect_ratio <= 1.0) {
            return Err(invalid(format!("aspect ratio {} outside (0, 1]", self.aspect_ratio)));
        }
        if !(self.mineral.k > 0.0 && self.mineral.mu > 0.0) {
            return Err(invalid("mineral moduli must be positive"));
        }
        ElasticModuli::new(self.mineral.k, self.mineral.mu)?;
        ElasticModuli::new(self.inclusion.k, self.inclusion.mu)?;
        if !(self.rtol > 0.0 && self.max_step > 0.0) {
            return Err(invalid("step control must be positive"));
        }
        Ok(())
    }
}

/// Penny-crack geometric factors `(P, Q)` of an inclusion in a background
/// medium, with `beta = mu (3K + mu) / (3K + 4 mu)` of the background.
pub fn penny_crack_factors(background: ElasticModuli, inclusion: ElasticModuli, alpha: f64) -> (f64, f64) {
    let (km, mm) = (background.k, background.mu);
    let (ki, mi) = (inclusion.k, inclusion.mu);
    let denom_beta = 3.0 * km + 4.0 * mm;
    let beta = if denom_beta > 0.0 { mm * (3.0 * km + mm) / denom_beta } else { 0.0 };
    let base = ki + 4.0 * mi / 3.0 + PI * alpha * beta;
    let shear_den = 4.0 * mi + PI * alpha * (mm + 2.0 * beta);
    if base <= 0.0 || shear_den <= 0.0 {
        // Fully collapsed background: nothing left to soften.
        return (0.0, 0.0);
    }
    let p = (km + 4.0 * mi / 3.0) / base;
    let q = (1.0 + 8.0 * mm / shear_den + 2.0 * (ki + 2.0 * (mi + mm) / 3.0) / base) / 5.0;
    (p, q)
}

/// Right-hand side of the DEM system in porosity `y`.
pub fn dem_rhs(params: &DemParams, y: f64, state: &[f64; 2]) -> [f64; 2] {
    let bg = ElasticModuli { k: state[0].max(0.0), mu: state[1].max(0.0) };
    let (p, q) = penny_crack_factors(bg, params.inclusion, params.aspect_ratio);
    let w = 1.0 / (1.0 - y);
    [(params.inclusion.k - bg.k) * p * w, (params.inclusion.mu - bg.mu) * q * w]
}

/// Effective moduli at porosity `phi`, integrating the DEM system from the
/// pure mineral at `y = 0`.
pub fn dem_moduli(params: &DemParams, phi: f64) -> Result<ElasticModuli> {
    params.validate()?;
    if !(0.0..1.0).contains(&phi) {
        return Err(invalid(format!("porosity {phi} outside [0, 1)")));
    }
    let ctl = StepControl { rtol: params.rtol, max_step: params.max_step, ..StepControl::default() };
    let out = ode::integrate(|y, s| dem_rhs(params, y, s), 0.0, params.mineral.as_array(), phi, &ctl)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric { message: "non-finite DEM result".into(), state: out.to_vec() });
    }
    Ok(ElasticModuli { k: out[0], mu: out[1] }.clamped())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectRatioFit {
    pub alpha: f64,
    pub r2_k: f64,
    pub r2_mu: f64,
}

impl AspectRatioFit {
    pub fn mean_r2(&self) -> f64 {
        0.5 * (self.r2_k + self.r2_mu)
    }
}

/// Grid search for the aspect ratio maximizing the mean of the bulk and
/// shear R² of DEM predictions against `samples` (porosity, moduli). Ties
/// go to the smaller aspect ratio.
pub fn fit_aspect_ratio(
    samples: &[(f64, ElasticModuli)],
    alpha_grid: &[f64],
    base: &DemParams,
) -> Result<AspectRatioFit> {
    if samples.len() < 2 {
        return Err(invalid("aspect-ratio fit needs at least two samples"));
    }
    if alpha_grid.is_empty() {
        return Err(invalid("aspect-ratio grid is empty"));
    }
    let mut grid = alpha_grid.to_vec();
    if grid.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
        return Err(invalid("aspect ratios must lie in (0, 1]"));
    }
    grid.sort_by(f64::total_cmp);
    let truth_k: Vec<f64> = samples.iter().map(|s| s.1.k).collect();
    let truth_mu: Vec<f64> = samples.iter().map(|s| s.1.mu).collect();

    let mut best: Option<AspectRatioFit> = None;
    for alpha in grid {
        let params = base.with_aspect_ratio(alpha);
        let preds = samples
            .iter()
            .map(|&(phi, _)| dem_moduli(&params, phi))
            .collect::<Result<Vec<_>>>()?;
        let pk: Vec<f64> = preds.iter().map(|m| m.k).collect();
        let pm: Vec<f64> = preds.iter().map(|m| m.mu).collect();
        let fit = AspectRatioFit { alpha, r2_k: r2(&pk, &truth_k)?, r2_mu: r2(&pm, &truth_mu)? };
        if best.is_none_or(|b| fit.mean_r2() > b.mean_r2()) {
            best = Some(fit);
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// One row of a bounds-and-DEM porosity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub phi: f64,
    pub k_voigt: f64,
    pub k_reuss: f64,
    pub k_hs_lo: f64,
    pub k_hs_hi: f64,
    pub k_dem: f64,
    pub mu_voigt: f64,
    pub mu_reuss: f64,
    pub mu_hs_lo: f64,
    pub mu_hs_hi: f64,
    pub mu_dem: f64,
}

pub fn sweep_row(params: &DemParams, phi: f64) -> Result<SweepRow> {
    let vr = voigt_reuss_bounds(params.mineral, params.inclusion, phi)?;
    let hs = hashin_shtrikman(params.mineral, params.inclusion, phi)?;
    let dem = dem_moduli(params, phi)?;
    Ok(SweepRow {
        phi,
        k_voigt: vr.upper.k,
        k_reuss: vr.lower.k,
        k_hs_lo: hs.lower.k,
        k_hs_hi: hs.upper.k,
        k_dem: dem.k,
        mu_voigt: vr.upper.mu,
        mu_reuss: vr.lower.mu,
        mu_hs_lo: hs.lower.mu,
        mu_hs_hi: hs.upper.mu,
        mu_dem: dem.mu,
    })
}

/// Evenly spaced sweep with `steps` points from `phi_min` to `phi_max` inclusive.
pub fn porosity_sweep(params: &DemParams, phi_min: f64, phi_max: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if steps == 0 || phi_min.is_nan() || phi_max.is_nan() || phi_min > phi_max {
        return Err(invalid("sweep needs steps >= 1 and phi_min <= phi_max"));
    }
    (0..steps)
        .map(|i| {
            let phi = if steps == 1 {
                phi_min
            } else {
                phi_min + (phi_max - phi_min) * i as f64 / (steps - 1) as f64
            };
            sweep_row(params, phi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const QTZ: ElasticModuli = ElasticModuli { k: 36.0, mu: 44.0 };

    fn rk4_oracle(params: &DemParams, phi: f64, h: f64) -> [f64; 2] {
        let n = (phi / h).round() as usize;
        let h = phi / n as f64;
        let mut y = params.mineral.as_array();
        for i in 0..n {
            let t = i as f64 * h;
            let f = |t: f64, s: &[f64; 2]| dem_rhs(params, t, s);
            let k1 = f(t, &y);
            let k2 = f(t + h / 2.0, &[y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(t + h / 2.0, &[y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(t + h, &[y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        y
    }

    #[test]
    fn isotropic_stiffness_entries() {
        assert_eq!(isotropic_stiffness(ElasticModuli::VACUUM), StiffnessMatrix::zeros());
        let c = isotropic_stiffness(ElasticModuli { k: 1.0, mu: 0.0 });
        assert_eq!((c.c(1, 1), c.c(1, 2), c.c(4, 4)), (1.0, 1.0, 0.0));
        let c = isotropic_stiffness(QTZ);
        assert!(c.is_symmetric(1e-12));
        assert_eq!(c.c(5, 5), 44.0);
        assert_eq!(c.c(1, 4), 0.0);
    }

    #[test]
    fn voigt_average_cases() {
        let m = voigt_average(&isotropic_stiffness(QTZ));
        assert!((m.k - 36.0).abs() < 1e-12 && (m.mu - 44.0).abs() < 1e-12);
        assert_eq!(voigt_average(&StiffnessMatrix::zeros()), ElasticModuli::VACUUM);
        let mut c = StiffnessMatrix::zeros();
        for i in 0..3 {
            c.0[i][i] = 3.0;
        }
        assert_eq!(voigt_average(&c), ElasticModuli { k: 1.0, mu: 0.6 });
    }

    #[test]
    fn voigt_reuss_cases() {
        let b = voigt_reuss_bounds(QTZ, ElasticModuli::VACUUM, 0.0).unwrap();
        assert_eq!((b.upper, b.lower), (QTZ, QTZ));
        let b = voigt_reuss_bounds(QTZ, ElasticModuli::VACUUM, 1.0).unwrap();
        assert_eq!((b.upper, b.lower), (ElasticModuli::VACUUM, ElasticModuli::VACUUM));
        let b = voigt_reuss_bounds(QTZ, ElasticModuli::VACUUM, 0.5).unwrap();
        assert_eq!(b.upper, ElasticModuli { k: 18.0, mu: 22.0 });
        assert_eq!(b.lower, ElasticModuli::VACUUM);
        // Fluid pore: finite harmonic bulk mean.
        let b = voigt_reuss_bounds(QTZ, ElasticModuli { k: 2.25, mu: 0.0 }, 0.2).unwrap();
        assert!((b.lower.k - 1.0 / (0.8 / 36.0 + 0.2 / 2.25)).abs() < 1e-12);
        assert!(voigt_reuss_bounds(QTZ, ElasticModuli::VACUUM, 1.5).is_err());
    }

    #[test]
    fn hashin_shtrikman_limits() {
        let b = hashin_shtrikman(QTZ, ElasticModuli::VACUUM, 0.0).unwrap();
        assert_eq!(b.upper, QTZ);
        for phi in [0.01, 0.2, 0.5, 0.99] {
            let b = hashin_shtrikman(QTZ, ElasticModuli::VACUUM, phi).unwrap();
            assert_eq!(b.lower, ElasticModuli::VACUUM);
            assert!(b.upper.k > 0.0 && b.upper.k < QTZ.k);
        }
    }

    #[test]
    fn hashin_shtrikman_upper_vacuum_closed_form() {
        // Vacuum pores: K+ = K(1-phi) 4mu/3 / (4mu/3 + phi K); an independent
        // rearrangement of the general expression.
        let phi = 0.2;
        let b = hashin_shtrikman(QTZ, ElasticModuli::VACUUM, phi).unwrap();
        let (k, m) = (QTZ.k, QTZ.mu);
        let k_hs = k * (1.0 - phi) * (4.0 * m / 3.0) / (4.0 * m / 3.0 + phi * k);
        let zeta = m / 6.0 * (9.0 * k + 8.0 * m) / (k + 2.0 * m);
        let mu_hs = m * (1.0 - phi) * zeta / (zeta + phi * m);
        assert!((b.upper.k - k_hs).abs() < 1e-10, "{} vs {}", b.upper.k, k_hs);
        assert!((b.upper.mu - mu_hs).abs() < 1e-10, "{} vs {}", b.upper.mu, mu_hs);
    }

    #[test]
    fn hashin_shtrikman_fluid_pore_brackets() {
        let water = ElasticModuli { k: 2.25, mu: 0.0 };
        let b = hashin_shtrikman(QTZ, water, 0.3).unwrap();
        let vr = voigt_reuss_bounds(QTZ, water, 0.3).unwrap();
        assert!(vr.lower.k <= b.lower.k && b.lower.k <= b.upper.k && b.upper.k <= vr.upper.k);
        assert_eq!(b.lower.mu, 0.0);
    }

    #[test]
    fn dem_zero_porosity_is_mineral() {
        let p = DemParams::new(QTZ, 0.25).unwrap();
        assert_eq!(dem_moduli(&p, 0.0).unwrap(), QTZ);
    }

    #[test]
    fn dem_vacuum_is_strictly_decreasing() {
        let p = DemParams::new(QTZ, 0.25).unwrap();
        let mut prev = QTZ;
        for i in 1..=30 {
            let m = dem_moduli(&p, i as f64 * 0.01).unwrap();
            assert!(m.k < prev.k && m.mu < prev.mu, "phi {}: {m:?} vs {prev:?}", i as f64 * 0.01);
            prev = m;
        }
    }

    #[test]
    fn dem_matches_fixed_step_rk4() {
        let p = DemParams::new(QTZ, 0.25).unwrap();
        let m = dem_moduli(&p, 0.2).unwrap();
        let o = rk4_oracle(&p, 0.2, 1e-4);
        assert!(((m.k - o[0]) / o[0]).abs() < 1e-6, "{} vs {}", m.k, o[0]);
        assert!(((m.mu - o[1]) / o[1]).abs() < 1e-6, "{} vs {}", m.mu, o[1]);
    }

    #[test]
    fn dem_is_continuous() {
        let p = DemParams::new(QTZ, 0.25).unwrap();
        for phi in [0.05, 0.17, 0.3] {
            let a = dem_moduli(&p, phi).unwrap();
            let b = dem_moduli(&p, phi + 1e-6).unwrap();
            assert!((a.k - b.k).abs() < 1e-3 && (a.mu - b.mu).abs() < 1e-3);
        }
    }

    #[test]
    fn dem_rejects_bad_inputs() {
        assert!(DemParams::new(QTZ, 0.0).is_err());
        assert!(DemParams::new(QTZ, 1.5).is_err());
        assert!(DemParams::new(ElasticModuli::VACUUM, 0.2).is_err());
        let p = DemParams::new(QTZ, 0.25).unwrap();
        assert!(dem_moduli(&p, 1.0).is_err());
        assert!(dem_moduli(&p, -0.1).is_err());
    }

    #[test]
    fn penny_crack_vacuum_reduces() {
        // Vacuum inclusion: P = K / (pi alpha beta).
        let (p, q) = penny_crack_factors(QTZ, ElasticModuli::VACUUM, 0.1);
        let beta = QTZ.mu * (3.0 * QTZ.k + QTZ.mu) / (3.0 * QTZ.k + 4.0 * QTZ.mu);
        assert!((p - QTZ.k / (PI * 0.1 * beta)).abs() < 1e-12);
        let q_expect = (1.0 + 8.0 * QTZ.mu / (PI * 0.1 * (QTZ.mu + 2.0 * beta))
            + 2.0 * (2.0 * QTZ.mu / 3.0) / (PI * 0.1 * beta))
            / 5.0;
        assert!((q - q_expect).abs() < 1e-12);
    }

    #[test]
    fn aspect_ratio_fit_self_consistent() {
        let base = DemParams::new(QTZ, 0.25).unwrap();
        let truth = base.with_aspect_ratio(0.3);
        let samples: Vec<_> = [0.05, 0.1, 0.15, 0.2, 0.25]
            .iter()
            .map(|&phi| (phi, dem_moduli(&truth, phi).unwrap()))
            .collect();
        let fit = fit_aspect_ratio(&samples, &[0.1, 0.2, 0.3, 0.4, 0.5], &base).unwrap();
        assert_eq!(fit.alpha, 0.3);
        assert_eq!((fit.r2_k, fit.r2_mu), (1.0, 1.0));
        let single = fit_aspect_ratio(&samples, &[0.1], &base).unwrap();
        assert_eq!(single.alpha, 0.1);
        assert!(fit_aspect_ratio(&samples[..1], &[0.1], &base).is_err());
        assert!(fit_aspect_ratio(&samples, &[], &base).is_err());
        let flat: Vec<_> = samples.iter().map(|&(phi, _)| (phi, QTZ)).collect();
        assert!(matches!(fit_aspect_ratio(&flat, &[0.1], &base), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sweep_first_row_is_mineral() {
        let p = DemParams::new(QTZ, 0.25).unwrap();
        let rows = porosity_sweep(&p, 0.0, 0.3, 31).unwrap();
        assert_eq!(rows.len(), 31);
        let r = rows[0];
        for v in [r.k_voigt, r.k_reuss, r.k_hs_lo, r.k_hs_hi, r.k_dem] {
            assert_eq!(v, QTZ.k);
        }
        for v in [r.mu_voigt, r.mu_reuss, r.mu_hs_lo, r.mu_hs_hi, r.mu_dem] {
            assert_eq!(v, QTZ.mu);
        }
        assert!((rows[30].phi - 0.3).abs() < 1e-15);
    }
}
