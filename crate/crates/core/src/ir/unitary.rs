use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;

const UNITARY_TOL: f64 = 1e-10;

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary(pub [Complex64; 4]);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Unitary {
    pub fn identity() -> Self {
        Unitary([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    pub fn x() -> Self {
        Unitary([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn h() -> Self {
        let r = FRAC_1_SQRT_2;
        Unitary([c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)])
    }

    /// `diag(1, e^{iθ})`.
    pub fn phase(theta: f64) -> Self {
        Unitary([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, theta)])
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[2 * row + col]
    }

    pub fn mul(&self, rhs: &Unitary) -> Unitary {
        let a = &self.0;
        let b = &rhs.0;
        Unitary([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    pub fn scaled(&self, s: Complex64) -> Unitary {
        Unitary(self.0.map(|e| e * s))
    }

    pub fn dagger(&self) -> Unitary {
        let a = &self.0;
        Unitary([a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()])
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.dagger().mul(self);
        p.max_diff(&Unitary::identity())
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() < UNITARY_TOL
    }

    pub fn max_diff(&self, other: &Unitary) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Angles with `U = e^{iδ} P(α) H P(β) H P(γ)`, `P(θ) = diag(1, e^{iθ})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn reconstruct(&self) -> Unitary {
        let h = Unitary::h();
        Unitary::phase(self.alpha)
            .mul(&h)
            .mul(&Unitary::phase(self.beta))
            .mul(&h)
            .mul(&Unitary::phase(self.gamma))
            .scaled(Complex64::from_polar(1.0, self.delta))
    }

    /// The other angle set for the same matrix, from `H P(-β) H = e^{-iβ} Z H P(β) H Z`.
    pub fn twin(&self) -> EulerAngles {
        EulerAngles {
            delta: wrap_angle(self.delta + self.beta),
            alpha: wrap_angle(self.alpha + PI),
            beta: wrap_angle(-self.beta),
            gamma: wrap_angle(self.gamma + PI),
        }
    }
}

/// Folds an angle into `(-π, π]`.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut t = theta.rem_euclid(tau);
    if t > std::f64::consts::PI {
        t -= tau;
    }
    t
}

/// `None` if `u` is not unitary within 1e-10.
pub fn euler_zxz(u: &Unitary) -> Option<EulerAngles> {
    if !u.is_unitary() {
        return None;
    }
    // H P(β) H = e^{iβ/2} [[cos β/2, -i sin β/2], [-i sin β/2, cos β/2]], so
    // U00 = e^{i(δ+β/2)} c, U01 = e^{i(δ+β/2+γ-π/2)} s, U10 = e^{i(δ+β/2+α-π/2)} s.
    let (u00, u01, u10, u11) = (u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1));
    let beta = 2.0 * u01.norm().atan2(u00.norm());
    let half = beta / 2.0;
    let eps = 1e-13;
    let (delta, alpha, gamma) = if u00.norm() < eps {
        let delta = u01.arg();
        (delta, u10.arg() - delta, 0.0)
    } else if u01.norm() < eps {
        (u00.arg(), u11.arg() - u00.arg(), 0.0)
    } else {
        let delta = u00.arg() - half;
        (delta, u10.arg() - delta - half + FRAC_PI_2, u01.arg() - delta - half + FRAC_PI_2)
    };
    let angles = EulerAngles {
        delta: wrap_angle(delta),
        alpha: wrap_angle(alpha),
        beta,
        gamma: wrap_angle(gamma),
    };
    debug_assert!(angles.reconstruct().max_diff(u) < 1e-9);
    Some(angles)
}
