//! Evolution-path parameterization and the inverse map from path to drive.
//!
//! The state in the {|b⟩, |a⟩} subspace is written as
//! e^{−if/2}(cos(α/2)e^{iβ/2}, sin(α/2)e^{−iβ/2}). With
//! α(t) = π sin²(πt/T) and f = η(2α − sin 2α), the three relations between
//! path and drive are
//!
//! ```text
//! ḟ = β̇ / cos α,   α̇ = Ω sin(β + φ₀),   β̇ = Ω cot α cos(β + φ₀)
//! ```
//!
//! which invert to Ω = √(α̇² + ḟ² sin²α) and β + φ₀ = atan2(α̇, ḟ sin α).
//! Because ḟ = 4η sin²α · α̇, the phase β has the closed form
//! β = β_start ± (4η/3) sin³α and every quantity is regular at α ∈ {0, π}.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};

/// Which kind of cyclic evolution the path describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Dynamical phase cancels; the bright state picks up the geometric phase γ.
    Holonomic,
    /// The f-sign flips on the second half; the gate phase is γ_D = −2πη.
    Dynamical,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Holonomic => "holonomic",
            Scheme::Dynamical => "dynamical",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holonomic" => Ok(Scheme::Holonomic),
            "dynamical" => Ok(Scheme::Dynamical),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

/// The two equal halves of the cyclic evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    /// [0, T/2]: |b⟩ → |a⟩.
    First,
    /// [T/2, T]: |a⟩ → |b⟩.
    Second,
}

impl Segment {
    /// Sign of α̇ on the segment.
    fn alpha_direction(self) -> f64 {
        match self {
            Segment::First => 1.0,
            Segment::Second => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    duration: f64,
    eta: f64,
    scheme: Scheme,
    gamma: f64,
}

impl PathParams {
    /// Holonomic path with geometric phase γ imprinted at the start of segment 2.
    pub fn holonomic(duration: f64, eta: f64, gamma: f64) -> Result<Self> {
        Self::new(duration, eta, Scheme::Holonomic, gamma)
    }

    /// Dynamical path; the gate phase is fixed to γ_D = −2πη.
    pub fn dynamical(duration: f64, eta: f64) -> Result<Self> {
        Self::new(duration, eta, Scheme::Dynamical, 0.0)
    }

    /// `gamma` is ignored for the dynamical scheme.
    pub fn new(duration: f64, eta: f64, scheme: Scheme, gamma: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(out_of_range("T", duration, "T > 0"));
        }
        if !eta.is_finite() {
            return Err(out_of_range("eta", eta, "finite"));
        }
        if !gamma.is_finite() {
            return Err(out_of_range("gamma", gamma, "finite"));
        }
        let gamma = match scheme {
            Scheme::Holonomic => gamma,
            Scheme::Dynamical => -2.0 * PI * eta,
        };
        Ok(Self {
            duration,
            eta,
            scheme,
            gamma,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Net phase acquired by the bright state over the cycle.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Segment containing `t`; T/2 belongs to the first.
    pub fn segment_of(&self, t: f64) -> Segment {
        if t <= 0.5 * self.duration {
            Segment::First
        } else {
            Segment::Second
        }
    }

    /// Sign multiplying η in f on the given segment.
    pub fn f_sign(&self, segment: Segment) -> f64 {
        match (self.scheme, segment) {
            (Scheme::Dynamical, Segment::Second) => -1.0,
            _ => 1.0,
        }
    }

    /// β at the start of the segment.
    pub fn beta_start(&self, segment: Segment) -> f64 {
        match (self.scheme, segment) {
            (Scheme::Holonomic, Segment::Second) => self.gamma,
            _ => 0.0,
        }
    }

    fn segment_bounds(&self, segment: Segment) -> (f64, f64) {
        match segment {
            Segment::First => (0.0, 0.5 * self.duration),
            Segment::Second => (0.5 * self.duration, self.duration),
        }
    }
}

/// Controls and path angles at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    pub t: f64,
    /// Total Rabi rate √(Ω₀² + Ω₁²), rad/s.
    pub omega: f64,
    pub phi0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub f: f64,
}

/// sin(πx), exactly zero at integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    let (sign, r) = if r > 1.0 { (-1.0, r - 1.0) } else { (1.0, r) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

fn check_time(t: f64, duration: f64) -> Result<()> {
    if duration.is_nan() || duration <= 0.0 {
        return Err(out_of_range("T", duration, "T > 0"));
    }
    if !(0.0..=duration).contains(&t) {
        return Err(out_of_range("t", t, "0 ≤ t ≤ T"));
    }
    Ok(())
}

/// α(t) = π sin²(πt/T).
pub fn alpha_of_t(t: f64, duration: f64) -> Result<f64> {
    check_time(t, duration)?;
    Ok(alpha_at_fraction(t / duration))
}

pub(crate) fn alpha_at_fraction(s: f64) -> f64 {
    let sp = sin_pi(s);
    PI * sp * sp
}

/// α̇(t) = (π²/T) sin(2πt/T).
pub fn alpha_dot(t: f64, duration: f64) -> Result<f64> {
    check_time(t, duration)?;
    Ok(alpha_dot_at_fraction(t / duration, duration))
}

pub(crate) fn alpha_dot_at_fraction(s: f64, duration: f64) -> f64 {
    PI * PI / duration * sin_pi(2.0 * s)
}

/// f(α) = sign·η·(2α − sin 2α).
pub fn f_of_alpha(alpha: f64, eta: f64, sign: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&alpha) {
        return Err(out_of_range("alpha", alpha, "0 ≤ α ≤ π"));
    }
    Ok(sign * eta * (2.0 * alpha - (2.0 * alpha).sin()))
}

/// β on the given segment, from the closed-form integral of ḟ cos α.
pub fn beta_of_t(t: f64, params: &PathParams, segment: Segment) -> Result<f64> {
    let (lo, hi) = params.segment_bounds(segment);
    if !(lo..=hi).contains(&t) {
        return Err(out_of_range("t", t, "within the segment"));
    }
    Ok(beta_at_fraction(t / params.duration, params, segment))
}

fn beta_at_fraction(s: f64, params: &PathParams, segment: Segment) -> f64 {
    // sin α vanishes at both segment ends, so the start term drops out.
    let sin_alpha = alpha_at_fraction(s).sin();
    params.beta_start(segment) + params.f_sign(segment) * 4.0 * params.eta / 3.0 * sin_alpha.powi(3)
}

/// Drive controls (Ω, φ₀) that realize the path at time `t`.
pub fn controls_from_path(t: f64, params: &PathParams) -> Result<ControlSample> {
    check_time(t, params.duration)?;
    let s = t / params.duration;
    Ok(controls_at_fraction(s, params))
}

/// Same as [`controls_from_path`] at t = s·T. Using the fraction keeps the
/// segment boundaries exact on uniform grids.
pub(crate) fn controls_at_fraction(s: f64, params: &PathParams) -> ControlSample {
    let segment = if s <= 0.5 {
        Segment::First
    } else {
        Segment::Second
    };
    let alpha = alpha_at_fraction(s);
    let alpha_dot = alpha_dot_at_fraction(s, params.duration);
    let sin_alpha = alpha.sin();
    let sign = params.f_sign(segment);
    let eta = params.eta;

    // ḟ sin α = 4ησ sin³α · α̇; dividing both atan2 arguments by |α̇| leaves a
    // regular expression that also yields the one-sided limits at α̇ = 0.
    let direction = segment.alpha_direction();
    let chi = direction.atan2(4.0 * eta * sign * sin_alpha.powi(3) * direction);
    let omega = alpha_dot.abs() * (1.0 + 16.0 * eta * eta * sin_alpha.powi(6)).sqrt();
    let beta = beta_at_fraction(s, params, segment);
    let f = sign * eta * (2.0 * alpha - (2.0 * alpha).sin());

    ControlSample {
        t: s * params.duration,
        omega,
        phi0: chi - beta,
        alpha,
        beta,
        f,
    }
}

/// Normalized envelope shape g(s) = Ω(sT)·T/π², for s ∈ [0, 1].
pub(crate) fn envelope_shape(s: f64, eta: f64) -> f64 {
    let sin_alpha = alpha_at_fraction(s).sin();
    sin_pi(2.0 * s).abs() * (1.0 + 16.0 * eta * eta * sin_alpha.powi(6)).sqrt()
}
