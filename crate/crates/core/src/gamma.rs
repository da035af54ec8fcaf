//! Complex log-gamma (Lanczos, g = 7, 9 terms) with reflection.
//!
//! The returned branch is not the principal one; only `exp` of sums of these
//! values is meaningful, which is how the analytic spectra use it.

use std::f64::consts::PI;

use crate::mat2::Cx;

const G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// A logarithm of `Γ(z)`.
pub fn ln_gamma(z: Cx) -> Cx {
    if z.re < 0.5 {
        // Γ(z)Γ(1-z) = π / sin(πz)
        Cx::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut acc = Cx::new(LANCZOS[0], 0.0);
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + G + 0.5;
        Cx::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// A logarithm of `sin(πz)`, finite for large `|Im z|`.
fn ln_sin_pi(z: Cx) -> Cx {
    let i = Cx::new(0.0, 1.0);
    if z.im > 1.0 {
        // sin(πz) = (i/2) e^{-iπz} (1 - e^{2iπz})
        (i * 0.5).ln() - i * PI * z + (1.0 - (2.0 * i * PI * z).exp()).ln()
    } else if z.im < -1.0 {
        (-i * 0.5).ln() + i * PI * z + (1.0 - (-2.0 * i * PI * z).exp()).ln()
    } else {
        (z * PI).sin().ln()
    }
}

pub fn gamma(z: Cx) -> Cx {
    ln_gamma(z).exp()
}
