//! Pointwise closures: Van Genuchten relative permeabilities and regularized
//! capillary pressure, mobilities, Henry's law and the ideal-gas density.
//!
//! Every function that feeds the Jacobian returns its derivative with respect
//! to liquid saturation alongside the value.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Seconds per year used for every year-denominated input.
pub const SECONDS_PER_YEAR: f64 = 3.1536e7;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanGenuchtenParams {
    /// Entry pressure `P_r` (Pa).
    pub entry_pressure: f64,
    /// Shape exponent `n > 1`; `m = 1 - 1/n`.
    pub n: f64,
    pub residual_liquid: f64,
    pub residual_gas: f64,
    /// Width of the regularization band in effective-saturation space.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-5
}

impl VanGenuchtenParams {
    pub fn new(entry_pressure: f64, n: f64, residual_liquid: f64, residual_gas: f64) -> Result<Self> {
        let vg = VanGenuchtenParams {
            entry_pressure,
            n,
            residual_liquid,
            residual_gas,
            epsilon: default_epsilon(),
        };
        vg.validate()?;
        Ok(vg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.entry_pressure > 0.0 && self.entry_pressure.is_finite()) {
            return Err(param("entry_pressure", "must be positive"));
        }
        if !(self.n > 1.0 && self.n.is_finite()) {
            return Err(param("n", "must exceed 1"));
        }
        if !(self.residual_liquid >= 0.0 && self.residual_gas >= 0.0) {
            return Err(param("residual saturation", "must be nonnegative"));
        }
        if self.residual_liquid + self.residual_gas >= 1.0 {
            return Err(param("residual saturation", "S_lr + S_gr must be below 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(param("epsilon", "must lie in (0, 0.5)"));
        }
        Ok(())
    }

    pub fn m(&self) -> f64 {
        1.0 - 1.0 / self.n
    }

    /// `dS_le/dS_l`.
    fn se_slope(&self) -> f64 {
        1.0 / (1.0 - self.residual_liquid - self.residual_gas)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidParams {
    /// Liquid viscosity (Pa·s).
    pub viscosity_liquid: f64,
    /// Gas viscosity (Pa·s).
    pub viscosity_gas: f64,
    /// Henry constant (mol/Pa/m³).
    pub henry: f64,
    /// Molar mass of hydrogen (kg/mol).
    pub molar_mass_hydrogen: f64,
    /// Molar mass of water (kg/mol).
    pub molar_mass_water: f64,
    /// Molecular diffusion of dissolved hydrogen (m²/s).
    pub diffusion: f64,
    /// Water component density in the liquid (kg/m³).
    pub water_density: f64,
    #[serde(default = "default_gas_constant")]
    pub gas_constant: f64,
    /// Temperature (K); only enters through the ideal-gas coefficient.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_gas_constant() -> f64 {
    8.314
}

fn default_temperature() -> f64 {
    303.0
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64); 9] = [
            ("viscosity_liquid", self.viscosity_liquid),
            ("viscosity_gas", self.viscosity_gas),
            ("henry", self.henry),
            ("molar_mass_hydrogen", self.molar_mass_hydrogen),
            ("molar_mass_water", self.molar_mass_water),
            ("diffusion", self.diffusion),
            ("water_density", self.water_density),
            ("gas_constant", self.gas_constant),
            ("temperature", self.temperature),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `C_h = H M_h` (kg/(m³·Pa)).
    pub fn henry_coefficient(&self) -> f64 {
        self.henry * self.molar_mass_hydrogen
    }

    /// `C_v = M_h / (R T)` (kg/(m³·Pa)).
    pub fn ideal_gas_coefficient(&self) -> f64 {
        self.molar_mass_hydrogen / (self.gas_constant * self.temperature)
    }
}

pub fn henry_coefficient(fluid: &FluidParams) -> f64 {
    fluid.henry_coefficient()
}

pub fn ideal_gas_coefficient(fluid: &FluidParams) -> f64 {
    fluid.ideal_gas_coefficient()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Liquid,
    Gas,
}

/// Liquid effective saturation `(S_l - S_lr) / (1 - S_lr - S_gr)`; not clamped.
pub fn effective_saturation(s_l: f64, vg: &VanGenuchtenParams) -> f64 {
    (s_l - vg.residual_liquid) * vg.se_slope()
}

/// `kr_l` and `dkr_l/dS_le` at the clamped effective saturation.
pub fn rel_perm_liquid_with_derivative(se: f64, vg: &VanGenuchtenParams) -> (f64, f64) {
    if se <= 0.0 {
        return (0.0, 0.0);
    }
    if se >= 1.0 {
        return (1.0, 0.0);
    }
    let m = vg.m();
    let w = se.powf(1.0 / m);
    let dw = w / (m * se);
    // v^(m-1) is unbounded as se -> 1
    let v = (1.0 - w).max(1e-14);
    let vm = v.powf(m);
    let g = 1.0 - vm;
    let dg = m * vm / v * dw;
    let sq = se.sqrt();
    (sq * g * g, 0.5 / sq * g * g + 2.0 * sq * g * dg)
}

/// `kr_g` and `dkr_g/dS_le` at the clamped effective saturation.
pub fn rel_perm_gas_with_derivative(se: f64, vg: &VanGenuchtenParams) -> (f64, f64) {
    if se <= 0.0 {
        return (1.0, 0.0);
    }
    if se >= 1.0 {
        return (0.0, 0.0);
    }
    let m = vg.m();
    let w = se.powf(1.0 / m);
    let dw = w / (m * se);
    let v = (1.0 - w).max(1e-14);
    let v2m = v.powf(2.0 * m);
    let root = (1.0 - se).sqrt();
    let value = root * v2m;
    let d = -0.5 / root * v2m - root * 2.0 * m * v2m / v * dw;
    (value, d)
}

pub fn rel_perm_liquid(se: f64, vg: &VanGenuchtenParams) -> f64 {
    rel_perm_liquid_with_derivative(se, vg).0
}

pub fn rel_perm_gas(se: f64, vg: &VanGenuchtenParams) -> f64 {
    rel_perm_gas_with_derivative(se, vg).0
}

/// Closed-form capillary pressure and `dP_c/dS_le`, valid for `se` in (0, 1).
fn capillary_closed_form(se: f64, vg: &VanGenuchtenParams) -> (f64, f64) {
    let m = vg.m();
    let n = vg.n;
    let s_pow = se.powf(-1.0 / m);
    let x = s_pow - 1.0;
    let xp = x.powf(1.0 / n);
    let value = vg.entry_pressure * xp;
    let dx = -s_pow / (m * se);
    let d = vg.entry_pressure * xp / (n * x) * dx;
    (value, d)
}

/// Regularized capillary pressure `P_c(S_l)` and `dP_c/dS_l`.
///
/// Inside `S_le ∈ [ε, 1-ε]` the Van Genuchten closed form is used; outside,
/// the curve continues linearly with the slope of the nearest junction.
pub fn capillary_pressure(s_l: f64, vg: &VanGenuchtenParams) -> (f64, f64) {
    let se = effective_saturation(s_l, vg);
    let eps = vg.epsilon;
    let (value, d_se) = if se < eps {
        let (p0, d0) = capillary_closed_form(eps, vg);
        (p0 + d0 * (se - eps), d0)
    } else if se > 1.0 - eps {
        let (p1, d1) = capillary_closed_form(1.0 - eps, vg);
        (p1 + d1 * (se - (1.0 - eps)), d1)
    } else {
        capillary_closed_form(se, vg)
    };
    (value, d_se * vg.se_slope())
}

/// `P_g = P_l + P_c(S_l)`.
pub fn gas_pressure(p_l: f64, s_l: f64, vg: &VanGenuchtenParams) -> f64 {
    p_l + capillary_pressure(s_l, vg).0
}

/// Phase mobility `kr/μ` and its derivative with respect to `S_l`.
pub fn mobility_with_derivative(phase: Phase, s_l: f64, fluid: &FluidParams, vg: &VanGenuchtenParams) -> (f64, f64) {
    let se = effective_saturation(s_l, vg);
    let (kr, dkr, mu) = match phase {
        Phase::Liquid => {
            let (kr, d) = rel_perm_liquid_with_derivative(se, vg);
            (kr, d, fluid.viscosity_liquid)
        }
        Phase::Gas => {
            let (kr, d) = rel_perm_gas_with_derivative(se, vg);
            (kr, d, fluid.viscosity_gas)
        }
    };
    (kr / mu, dkr * vg.se_slope() / mu)
}

pub fn mobility(phase: Phase, s_l: f64, fluid: &FluidParams, vg: &VanGenuchtenParams) -> f64 {
    mobility_with_derivative(phase, s_l, fluid, vg).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vg(pr: f64) -> VanGenuchtenParams {
        VanGenuchtenParams::new(pr, 1.49, 0.4, 0.0).unwrap()
    }

    fn fluid() -> FluidParams {
        FluidParams {
            viscosity_liquid: 1e-9,
            viscosity_gas: 9e-6,
            henry: 7.65e-6,
            molar_mass_hydrogen: 2e-3,
            molar_mass_water: 1e-2,
            diffusion: 3e-9,
            water_density: 1e3,
            gas_constant: 8.314,
            temperature: 303.0,
        }
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn effective_saturation_endpoints() {
        let p = vg(2e6);
        assert_eq!(effective_saturation(0.4, &p), 0.0);
        assert!((effective_saturation(1.0, &p) - 1.0).abs() < 1e-15);
        assert!((effective_saturation(0.7, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rel_perm_endpoints() {
        let p = vg(2e6);
        assert_eq!(rel_perm_liquid(1.0, &p), 1.0);
        assert_eq!(rel_perm_gas(1.0, &p), 0.0);
        assert_eq!(rel_perm_liquid(0.0, &p), 0.0);
        assert_eq!(rel_perm_gas(0.0, &p), 1.0);
        assert_eq!(rel_perm_liquid(1.5, &p), 1.0);
        assert_eq!(rel_perm_gas(-0.5, &p), 1.0);
    }

    // 40-digit evaluations of the closed forms at S_le = 0.5, n = 1.49
    const KRL_HALF: f64 = 0.001_230_185_647_755_185_171_430_735_740_234;
    const KRG_HALF: f64 = 0.649_349_760_979_268_112_933_886_847_893_8;
    const PC_HALF: f64 = 7_544_237.943_095_650_991_014_214_128_521_779;

    #[test]
    fn rel_perm_matches_high_precision() {
        let p = vg(2e6);
        assert!(rel_close(rel_perm_liquid(0.5, &p), KRL_HALF, 1e-12));
        assert!(rel_close(rel_perm_gas(0.5, &p), KRG_HALF, 1e-12));
    }

    #[test]
    fn capillary_matches_high_precision() {
        let p = vg(2e6);
        // S_le = 0.5 <=> S_l = 0.7
        let (pc, _) = capillary_pressure(0.4 + 0.5 * 0.6, &p);
        assert!(rel_close(pc, PC_HALF, 1e-12), "{pc}");
    }

    #[test]
    fn capillary_continuous_at_junctions() {
        let p = vg(2e6);
        let slope = 1.0 / 0.6;
        for se_j in [p.epsilon, 1.0 - p.epsilon] {
            let s_j = 0.4 + se_j / slope;
            let h = 1e-12;
            let (a, da) = capillary_pressure(s_j - h, &p);
            let (b, db) = capillary_pressure(s_j + h, &p);
            let (c, _) = capillary_closed_form(se_j, &p);
            assert!(rel_close(a, c, 1e-6) && rel_close(b, c, 1e-6));
            assert!(rel_close(da, db, 1e-3), "{da} vs {db}");
        }
        // exactly at the upper junction, closed form holds
        let s_top = 0.4 + (1.0 - p.epsilon) * 0.6;
        let (v, _) = capillary_pressure(s_top, &p);
        assert!(rel_close(v, capillary_closed_form(effective_saturation(s_top, &p), &p).0, 1e-12));
    }

    #[test]
    fn capillary_monotone_dense_sampling() {
        for pr in [2e6, 2e3] {
            let p = vg(pr);
            let n = 10_000;
            let mut prev = f64::INFINITY;
            for i in 0..=n {
                let s = -0.1 + 1.2 * i as f64 / n as f64;
                let (v, d) = capillary_pressure(s, &p);
                assert!(v <= prev, "P_c increased at S_l = {s}");
                assert!(d <= 0.0);
                prev = v;
            }
        }
    }

    #[test]
    fn gas_pressure_is_affine_in_liquid_pressure() {
        let p = vg(2e6);
        assert_eq!(gas_pressure(0.0, 0.8, &p), capillary_pressure(0.8, &p).0);
        // P_c vanishes slightly above S_l = 1 because of the linear extension
        let (p1, d1) = capillary_pressure(1.0, &p);
        let s0 = 1.0 - p1 / d1;
        assert!(gas_pressure(1e6, s0, &p) - 1e6 < 1e-6);
        let (a, b) = (gas_pressure(1e6, 0.8, &p), gas_pressure(1e6 + 1.0, 0.8, &p));
        assert!((b - a - 1.0).abs() < 1e-8);
    }

    #[test]
    fn henry_and_ideal_gas() {
        let f = fluid();
        assert!(rel_close(henry_coefficient(&f), 1.53e-8, 1e-12));
        assert!(rel_close(ideal_gas_coefficient(&f), 7.939_211_048_841_232e-7, 1e-12));
        let mut hot = f;
        hot.temperature *= 2.0;
        assert!(rel_close(ideal_gas_coefficient(&hot), 0.5 * ideal_gas_coefficient(&f), 1e-14));
    }

    #[test]
    fn mobilities() {
        let f = fluid();
        let p = vg(2e6);
        assert!(rel_close(mobility(Phase::Liquid, 1.0, &f, &p), 1e9, 1e-14));
        assert_eq!(mobility(Phase::Liquid, 0.4, &f, &p), 0.0);
        assert!(rel_close(mobility(Phase::Gas, 0.4, &f, &p), 1.0 / 9e-6, 1e-14));
    }

    fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1e-3);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(s in 0.45f64..0.98, pr in prop::sample::select(vec![2e3, 2e6])) {
            let p = vg(pr);
            let f = fluid();
            let (_, dpc) = capillary_pressure(s, &p);
            let fd = central(|x| capillary_pressure(x, &p).0, s);
            prop_assert!(rel_close(dpc, fd, 1e-5), "pc: {} vs {}", dpc, fd);
            for phase in [Phase::Liquid, Phase::Gas] {
                let (_, d) = mobility_with_derivative(phase, s, &f, &p);
                let fd = central(|x| mobility(phase, x, &f, &p), s);
                prop_assert!(rel_close(d, fd, 1e-5), "{:?}: {} vs {}", phase, d, fd);
            }
        }

        #[test]
        fn rel_perm_bounded_and_monotone(a in -0.5f64..1.5, b in -0.5f64..1.5) {
            let p = vg(2e3);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for se in [lo, hi] {
                prop_assert!((0.0..=1.0).contains(&rel_perm_liquid(se, &p)));
                prop_assert!((0.0..=1.0).contains(&rel_perm_gas(se, &p)));
            }
            prop_assert!(rel_perm_liquid(lo, &p) <= rel_perm_liquid(hi, &p));
            prop_assert!(rel_perm_gas(lo, &p) >= rel_perm_gas(hi, &p));
        }
    }
}
