use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::path::{smoothstep, smoothstep_derivative};

/// An odd, compactly supported C² cutoff with `χ(1) = 1` and `χ'(0) > 0`.
#[derive(Clone, Copy)]
pub struct ChiProfile {
    name: &'static str,
    radius: f64,
    chi: fn(f64) -> f64,
    dchi: fn(f64) -> f64,
}

impl fmt::Debug for ChiProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChiProfile")
            .field("name", &self.name)
            .field("radius", &self.radius)
            .finish()
    }
}

fn odd(x: f64, f: fn(f64) -> f64) -> f64 {
    if x < 0.0 {
        -f(-x)
    } else {
        f(x)
    }
}

fn even(x: f64, f: fn(f64) -> f64) -> f64 {
    f(x.abs())
}

// sin(πx/2) on [0,1]; quintic hump back to 1 on [1, 1.5] matching value,
// slope and curvature of the sine at 1; smoothstep descent on [1.5, 3]
fn sine_pos(x: f64) -> f64 {
    if x <= 1.0 {
        (0.5 * PI * x).sin()
    } else if x <= 1.5 {
        let t = 2.0 * (x - 1.0);
        1.0 - PI * PI / 32.0 * t * t * (1.0 - t).powi(3)
    } else if x <= 3.0 {
        1.0 - smoothstep((x - 1.5) / 1.5)
    } else {
        0.0
    }
}

fn sine_pos_d(x: f64) -> f64 {
    if x <= 1.0 {
        0.5 * PI * (0.5 * PI * x).cos()
    } else if x <= 1.5 {
        let t = 2.0 * (x - 1.0);
        -PI * PI / 16.0 * (2.0 * t * (1.0 - t).powi(3) - 3.0 * t * t * (1.0 - t).powi(2))
    } else if x <= 3.0 {
        -smoothstep_derivative((x - 1.5) / 1.5) / 1.5
    } else {
        0.0
    }
}

// (15x − 10x³ + 3x⁵)/8 on [0,1]; flat on [1, 1.5]; smoothstep down on [1.5, 2.5]
fn poly_pos(x: f64) -> f64 {
    if x <= 1.0 {
        (15.0 * x - 10.0 * x.powi(3) + 3.0 * x.powi(5)) / 8.0
    } else if x <= 1.5 {
        1.0
    } else if x <= 2.5 {
        1.0 - smoothstep(x - 1.5)
    } else {
        0.0
    }
}

fn poly_pos_d(x: f64) -> f64 {
    if x <= 1.0 {
        15.0 * (1.0 - x * x).powi(2) / 8.0
    } else if x <= 1.5 {
        0.0
    } else if x <= 2.5 {
        -smoothstep_derivative(x - 1.5)
    } else {
        0.0
    }
}

fn sine_chi(x: f64) -> f64 {
    odd(x, sine_pos)
}
fn sine_dchi(x: f64) -> f64 {
    even(x, sine_pos_d)
}
fn poly_chi(x: f64) -> f64 {
    odd(x, poly_pos)
}
fn poly_dchi(x: f64) -> f64 {
    even(x, poly_pos_d)
}

impl ChiProfile {
    /// Builds and validates a profile from odd `chi` and even `dchi`.
    pub fn new(name: &'static str, radius: f64, chi: fn(f64) -> f64, dchi: fn(f64) -> f64) -> Result<Self> {
        let p = ChiProfile {
            name,
            radius,
            chi,
            dchi,
        };
        p.validate()?;
        Ok(p)
    }

    /// Sine core flattened to ±1, supported in `[−3, 3]`.
    pub fn sine() -> Self {
        ChiProfile {
            name: "sine",
            radius: 3.0,
            chi: sine_chi,
            dchi: sine_dchi,
        }
    }

    /// Quintic core, supported in `[−2.5, 2.5]`.
    pub fn polynomial() -> Self {
        ChiProfile {
            name: "polynomial",
            radius: 2.5,
            chi: poly_chi,
            dchi: poly_dchi,
        }
    }

    pub fn builtin() -> [ChiProfile; 2] {
        [Self::sine(), Self::polynomial()]
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::builtin()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Validation(format!("unknown chi profile '{name}'")))
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn chi(&self, x: f64) -> f64 {
        (self.chi)(x)
    }

    pub fn dchi(&self, x: f64) -> f64 {
        (self.dchi)(x)
    }

    /// Sampled admissibility checks: oddness, normalization, monotonicity
    /// on [−1, 1], support, agreement of `dchi` with central differences of
    /// `chi`, and matching one-sided differences of `dchi` (curvature jumps).
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Validation(format!("chi profile '{}': {what}", self.name)));
        if !(self.radius >= 1.0 && self.radius.is_finite()) {
            return fail("support radius must be at least 1");
        }
        if (self.chi(1.0) - 1.0).abs() > 1e-12 {
            return fail("chi(1) != 1");
        }
        if !(self.dchi(0.0) > 0.0) {
            return fail("chi'(0) must be positive");
        }
        let n = 4000;
        let h = 1e-5;
        let mut xs: Vec<f64> = (0..=n)
            .map(|k| -1.25 * self.radius + 2.5 * self.radius * k as f64 / n as f64)
            .collect();
        let quarters = (5.0 * self.radius).ceil() as i64;
        xs.extend((-quarters..=quarters).map(|k| 0.25 * k as f64));
        for &x in &xs {
            if (self.chi(-x) + self.chi(x)).abs() > 1e-12 {
                return fail(&format!("not odd at {x}"));
            }
            if x.abs() > self.radius && (self.chi(x) != 0.0 || self.dchi(x) != 0.0) {
                return fail(&format!("not supported in [-{r}, {r}]", r = self.radius));
            }
            let fd = (self.chi(x + h) - self.chi(x - h)) / (2.0 * h);
            if (fd - self.dchi(x)).abs() > 1e-6 {
                return fail(&format!("derivative mismatch at {x}"));
            }
            let k = 1e-6;
            let left = (self.dchi(x) - self.dchi(x - k)) / k;
            let right = (self.dchi(x + k) - self.dchi(x)) / k;
            if (left - right).abs() > 1e-3 {
                return fail(&format!("second derivative jumps at {x}"));
            }
        }
        let mut prev = self.chi(-1.0);
        for k in 0..=n {
            let v = self.chi(-1.0 + 2.0 * k as f64 / n as f64);
            if v < prev - 1e-15 {
                return fail("not nondecreasing on [-1, 1]");
            }
            prev = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_admissible() {
        for p in ChiProfile::builtin() {
            p.validate().unwrap();
            assert_eq!(p.chi(1.0), 1.0);
            assert_eq!(p.chi(-p.radius() - 0.1), 0.0);
        }
    }

    #[test]
    fn pure_sine_join_is_rejected() {
        // sin(πx/2) joined directly to the plateau has a curvature jump at 1
        fn pos(x: f64) -> f64 {
            if x <= 1.0 {
                (0.5 * PI * x).sin()
            } else {
                poly_pos(x)
            }
        }
        fn pos_d(x: f64) -> f64 {
            if x <= 1.0 {
                0.5 * PI * (0.5 * PI * x).cos()
            } else {
                poly_pos_d(x)
            }
        }
        fn clamped(x: f64) -> f64 {
            odd(x, pos)
        }
        fn dclamped(x: f64) -> f64 {
            even(x, pos_d)
        }
        assert!(ChiProfile::new("clamped", 2.5, clamped, dclamped).is_err());
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(ChiProfile::by_name("polynomial").unwrap().radius(), 2.5);
        assert!(ChiProfile::by_name("gauss").is_err());
    }
}
