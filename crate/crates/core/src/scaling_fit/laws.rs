use serde::{Deserialize, Serialize};

use super::FitError;

fn check_positive(what: &'static str, value: f64) -> Result<(), FitError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(FitError::Domain { what, value })
    }
}

/// `floor + (scale / x)^exponent`, the one-axis power law for tokens or frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub floor: f64,
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLawParams {
    pub fn new(floor: f64, scale: f64, exponent: f64) -> Result<Self, FitError> {
        if !floor.is_finite() {
            return Err(FitError::Domain { what: "floor", value: floor });
        }
        check_positive("scale", scale)?;
        check_positive("exponent", exponent)?;
        Ok(Self { floor, scale, exponent })
    }

    pub fn eval(&self, x: f64) -> Result<f64, FitError> {
        check_positive("x", x)?;
        Ok(self.floor + (self.scale / x).powf(self.exponent))
    }

    /// d/dx of the law: `-exponent/x · (scale/x)^exponent`.
    pub fn derivative(&self, x: f64) -> Result<f64, FitError> {
        check_positive("x", x)?;
        Ok(-self.exponent / x * (self.scale / x).powf(self.exponent))
    }
}

/// `slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearParams {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn derivative(&self) -> f64 {
        self.slope
    }
}

/// Two-axis law `c_m·M^(-alpha) + c_t·T^(-beta) + floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    pub c_m: f64,
    pub alpha: f64,
    pub c_t: f64,
    pub beta: f64,
    pub floor: f64,
}

impl JointParams {
    pub fn new(c_m: f64, alpha: f64, c_t: f64, beta: f64, floor: f64) -> Result<Self, FitError> {
        check_positive("c_m", c_m)?;
        check_positive("alpha", alpha)?;
        check_positive("c_t", c_t)?;
        check_positive("beta", beta)?;
        if !floor.is_finite() {
            return Err(FitError::Domain { what: "floor", value: floor });
        }
        Ok(Self { c_m, alpha, c_t, beta, floor })
    }

    /// Loss predicted for `tokens` per frame and `frames` frames.
    pub fn eval(&self, tokens: f64, frames: f64) -> Result<f64, FitError> {
        check_positive("tokens", tokens)?;
        check_positive("frames", frames)?;
        Ok(self.c_m * tokens.powf(-self.alpha) + self.c_t * frames.powf(-self.beta) + self.floor)
    }

    /// `(∂L/∂M, ∂L/∂T)`; both components are negative.
    pub fn gradient(&self, tokens: f64, frames: f64) -> Result<(f64, f64), FitError> {
        check_positive("tokens", tokens)?;
        check_positive("frames", frames)?;
        Ok((
            -self.alpha * self.c_m * tokens.powf(-self.alpha - 1.0),
            -self.beta * self.c_t * frames.powf(-self.beta - 1.0),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn published() -> JointParams {
        JointParams::new(0.25, 0.26, 0.13, 0.21, 0.50).unwrap()
    }

    #[test]
    fn power_law_values() {
        let p = PowerLawParams::new(0.57, 0.01, 0.39).unwrap();
        assert!((p.eval(0.01).unwrap() - 1.57).abs() < 1e-15);
        let expected = 0.57 + (0.01f64 / 196.0).powf(0.39);
        assert_eq!(p.eval(196.0).unwrap(), expected);

        let p = PowerLawParams::new(0.14, 5.37e-7, 0.04).unwrap();
        assert_eq!(p.eval(128.0).unwrap(), 0.14 + (5.37e-7f64 / 128.0).powf(0.04));
        assert!(p.eval(0.0).is_err());
        assert!(p.eval(-1.0).is_err());
    }

    #[test]
    fn linear_values() {
        let p = LinearParams { slope: -0.0002, intercept: 0.651 };
        assert_eq!(p.eval(0.0), 0.651);
        assert!((p.eval(128.0) - 0.6254).abs() < 1e-12);
        let c = LinearParams { slope: 0.0, intercept: 0.3 };
        assert_eq!(c.eval(1e6), 0.3);
    }

    #[test]
    fn joint_values() {
        let p = published();
        assert!((p.eval(1.0, 1.0).unwrap() - 0.88).abs() < 1e-15);
        assert!((p.eval(1e12, 1e12).unwrap() - 0.50).abs() < 1e-3);
        assert!(p.eval(49.0, 128.0).unwrap() < p.eval(49.0, 8.0).unwrap());
        assert!(p.eval(0.0, 1.0).is_err());
        assert!(p.gradient(1.0, -2.0).is_err());
    }

    #[test]
    fn joint_gradient_at_low_corner() {
        let (dm, dt) = published().gradient(4.0, 32.0).unwrap();
        // -0.26·0.25·4^-1.26 and -0.21·0.13·32^-1.21
        assert!((dm - (-0.011332292289097)).abs() < 1e-12, "{dm}");
        assert!((dt - (-0.000412032215307)).abs() < 1e-12, "{dt}");
        assert!(dm.abs() > dt.abs());
    }

    #[test]
    fn constructor_rejects_nonpositive() {
        assert!(JointParams::new(0.0, 0.2, 0.1, 0.2, 0.5).is_err());
        assert!(JointParams::new(0.1, -0.2, 0.1, 0.2, 0.5).is_err());
        assert!(PowerLawParams::new(0.1, 1.0, 0.0).is_err());
    }
}
