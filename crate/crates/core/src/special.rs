//! Exponential integral `E1(x) = ∫_x^∞ e^{-u}/u du`.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(x)` for `x > 0`; power series below 1, continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on e^{-x} / (x + 1 - 1²/(x + 3 - 2²/(x + 5 - …)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // 20-digit values from an arbitrary-precision evaluation
        let cases = [
            (1e-10, 22.448_635_265_138_924),
            (0.1, 1.822_923_958_419_390_7),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_27),
            (1.5, 0.100_019_582_406_632_65),
            (5.0, 0.001_148_295_591_275_325_8),
            (20.0, 9.835_525_290_649_882e-11),
            (100.0, 3.683_597_761_682_032e-46),
        ];
        for (x, e) in cases {
            let v = exp_integral_e1(x);
            assert!(((v - e) / e).abs() < 1e-14, "E1({x}) = {v}, expected {e}");
        }
    }

    #[test]
    fn derivative_is_minus_exp_over_x() {
        for &x in &[0.3, 0.99, 1.01, 4.0] {
            let h = 1e-5;
            let d = (exp_integral_e1(x + h) - exp_integral_e1(x - h)) / (2.0 * h);
            assert!((d + (-x as f64).exp() / x).abs() < 1e-8);
        }
    }
}
