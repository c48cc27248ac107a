use super::{clamp_unit, UnitInterval};
use crate::error::{Error, Result};

/// `ln(sqrt(2π))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF. No clamping; use [`std_normal_cdf`] for the
/// unit-interval contract.
#[inline]
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

#[inline]
pub fn norm_logpdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Checked Φ(x), saturating to the clamp bounds in the far tails.
pub fn std_normal_cdf(x: f64) -> Result<UnitInterval> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "std_normal_cdf",
            value: x,
        });
    }
    Ok(UnitInterval::clamped(phi(x)))
}

/// Checked Φ⁻¹(u); the input is clamped, so the output is always finite.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::NonFinite {
            context: "std_normal_quantile",
            value: u,
        });
    }
    Ok(phi_inv(u))
}

/// Φ⁻¹ on the clamped domain: Wichura's AS241 (PPND16) followed by one
/// Newton step on Φ. Exactly odd under `u -> 1 - u` when `1 - u` is exact.
#[inline]
pub fn phi_inv(u: f64) -> f64 {
    let u = clamp_unit(u);
    if u > 0.5 {
        -lower_quantile(1.0 - u)
    } else {
        lower_quantile(u)
    }
}

// p <= 0.5
fn lower_quantile(p: f64) -> f64 {
    let x = ppnd16(p);
    // Newton polish; Φ(x) is relative-accurate in the lower tail
    let r = phi(x) - p;
    x - r / norm_pdf(x)
}

fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    // lower tail only: p < 0.075
    let r = (-p.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    -x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// erf by its Maclaurin series, summed in f64 with many terms. Only used
    /// for moderate |x| where the series is well conditioned.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0).unwrap().get(), 0.5);
        let v = std_normal_cdf(1.959964).unwrap().get();
        assert!((v - 0.975).abs() < 1e-6);
        // series oracle
        let oracle = 0.5 * (1.0 + erf_series(1.959964 / 2f64.sqrt()));
        assert!((v - oracle).abs() < 1e-13);
        assert!(std_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn cdf_matches_series_oracle_on_grid() {
        for i in -300..=300 {
            let x = i as f64 / 100.0;
            let oracle = 0.5 * (1.0 + erf_series(x / 2f64.sqrt()));
            assert!((phi(x) - oracle).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cdf_saturates_to_clamp() {
        assert_eq!(std_normal_cdf(-40.0).unwrap().get(), crate::numerics::EPS);
        assert_eq!(std_normal_cdf(40.0).unwrap().get(), 1.0 - crate::numerics::EPS);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(phi_inv(0.5), 0.0);
        // bisection oracle on phi
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < 0.975 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((phi_inv(0.975) - lo).abs() < 1e-12);
        assert!((phi_inv(0.975) - 1.959964).abs() < 1e-5);
        for &u in &[1e-9, 0.01, 0.2, 0.375, 0.4999] {
            let upper = 1.0 - u;
            let lower = 1.0 - upper; // exact complement of `upper`
            assert_eq!(phi_inv(lower), -phi_inv(upper));
        }
        assert!(phi_inv(0.0).is_finite() && phi_inv(1.0).is_finite());
    }

    #[test]
    fn cdf_strictly_increasing_on_grid() {
        let mut prev = -1.0;
        for i in 0..10_000 {
            let x = -6.0 + 12.0 * i as f64 / 10_000.0;
            let v = phi(x);
            assert!(v > prev);
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn cdf_of_quantile_is_identity(e in -10.0f64..-0.31, upper in any::<bool>()) {
            let u = 10f64.powf(e);
            let u = if upper { 1.0 - u } else { u };
            let back = phi(phi_inv(u));
            prop_assert!(((back - u) / u).abs() < 1e-10);
        }

        #[test]
        fn quantile_of_cdf_is_identity(x in -6.5f64..6.5) {
            let back = phi_inv(phi(x));
            // upper tail limited by the resolution of 1 - Φ(x) in f64
            let tol = if x > 0.0 { 4e-16 / norm_pdf(x) } else { 0.0 };
            prop_assert!((back - x).abs() < 1e-10 + tol);
        }

        #[test]
        fn cdf_symmetry(x in -8.0f64..8.0) {
            prop_assert!((phi(x) + phi(-x) - 1.0).abs() < 1e-14);
        }
    }
}
