//! Per-agent stepsize rules.
//!
//! Every rule is a pure function of the agent's current [`StepsizeState`]
//! and a [`CurvatureProbe`] measured over the last round. A candidate term
//! whose ratio would divide by zero is dropped from the minimum; when every
//! term is dropped the stepsize is left unchanged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    /// `min{1/(2γL_y), √(1+θ)α}` with tracker-based curvature.
    #[serde(rename = "adgt")]
    AdGT,
    /// Adds the local-gradient curvature term to [`Policy::AdGT`].
    #[serde(rename = "adgt-combined")]
    AdGTCombined,
    /// Centralized `min{‖Δx‖/(2‖Δ∇f‖), √(1+θ)α}`.
    #[serde(rename = "adgd")]
    AdGD,
    /// `min{1/(2L_f), 1/‖y‖, √2 α}`.
    #[serde(rename = "method-dm")]
    MethodDM,
    #[serde(rename = "fixed")]
    Fixed,
}

impl Policy {
    pub const ALL: [Policy; 5] = [Policy::AdGT, Policy::AdGTCombined, Policy::AdGD, Policy::MethodDM, Policy::Fixed];

    pub fn name(self) -> &'static str {
        match self {
            Policy::AdGT => "adgt",
            Policy::AdGTCombined => "adgt-combined",
            Policy::AdGD => "adgd",
            Policy::MethodDM => "method-dm",
            Policy::Fixed => "fixed",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

/// Which candidate terms of the adaptive rules are active. Disabling both
/// freezes the stepsize at its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub curvature: bool,
    pub growth: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Terms { curvature: true, growth: true }
    }
}

/// Initial stepsize parameters shared by all agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepsizeConfig {
    pub policy: Policy,
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub terms: Terms,
}

fn default_alpha0() -> f64 {
    1e-3
}

fn default_gamma() -> f64 {
    1.0
}

impl StepsizeConfig {
    pub fn new(policy: Policy) -> Self {
        StepsizeConfig { policy, alpha0: default_alpha0(), theta0: 0.0, gamma: default_gamma(), terms: Terms::default() }
    }

    pub fn fixed(alpha: f64) -> Self {
        StepsizeConfig { alpha0: alpha, ..StepsizeConfig::new(Policy::Fixed) }
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Self {
        self.alpha0 = alpha0;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_terms(mut self, terms: Terms) -> Self {
        self.terms = terms;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(format!("alpha0 must be positive, got {}", self.alpha0));
        }
        if !(self.theta0 >= 0.0 && self.theta0.is_finite()) {
            return Err(format!("theta0 must be nonnegative, got {}", self.theta0));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> StepsizeState {
        StepsizeState {
            alpha: self.alpha0,
            theta: self.theta0,
            gamma: self.gamma,
            policy: self.policy,
            terms: self.terms,
            calibrated: false,
        }
    }
}

/// Norms measured by one agent over one round.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurvatureProbe {
    /// `‖x⁺ − x‖`
    pub dx_norm: f64,
    /// `‖y⁺ − y‖`
    pub dy_norm: f64,
    /// `‖∇f(x⁺) − ∇f(x)‖`
    pub dgrad_norm: f64,
    /// `‖y‖` before the round
    pub y_norm: f64,
}

/// Which candidate produced the new stepsize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    /// A local curvature estimate (`L_y`, `L_f`, or the centralized ratio).
    Curvature,
    /// Method-DM's `1/‖y‖` cap.
    TrackerNorm,
    Growth,
    /// Every term was dropped or the policy is fixed.
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeState {
    pub alpha: f64,
    pub theta: f64,
    pub gamma: f64,
    pub policy: Policy,
    pub terms: Terms,
    /// Set once a curvature term has bound at least one update.
    pub calibrated: bool,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (num > 0.0 && den > 0.0).then(|| num / den)
}

/// Minimum over the present candidates; ties go to the earlier entry.
fn pick(candidates: &[(Option<f64>, Binding)]) -> Option<(f64, Binding)> {
    candidates
        .iter()
        .filter_map(|&(v, b)| v.map(|v| (v, b)))
        .fold(None, |best, (v, b)| match best {
            Some((bv, _)) if bv <= v => best,
            _ => Some((v, b)),
        })
}

impl StepsizeState {
    fn growth(&self) -> Option<f64> {
        self.terms.growth.then(|| (1.0 + self.theta).sqrt() * self.alpha)
    }

    fn finish(self, picked: Option<(f64, Binding)>, track_theta: bool) -> (StepsizeState, Binding) {
        let (alpha, binding) = picked.unwrap_or((self.alpha, Binding::Unchanged));
        let theta = if track_theta { alpha / self.alpha } else { self.theta };
        let calibrated = self.calibrated || binding == Binding::Curvature;
        (StepsizeState { alpha, theta, calibrated, ..self }, binding)
    }

    /// Tracker-curvature rule: `L_y = ‖Δy‖/‖Δx‖`.
    pub fn update_adgt(self, probe: &CurvatureProbe) -> (StepsizeState, Binding) {
        let curv = self
            .terms
            .curvature
            .then(|| ratio(probe.dy_norm, probe.dx_norm))
            .flatten()
            .map(|ly| 1.0 / (2.0 * self.gamma * ly));
        let picked = pick(&[(curv, Binding::Curvature), (self.growth(), Binding::Growth)]);
        self.finish(picked, true)
    }

    /// Tracker and local-gradient curvature together.
    pub fn update_adgt_combined(self, probe: &CurvatureProbe) -> (StepsizeState, Binding) {
        let on = self.terms.curvature;
        let lf = on.then(|| ratio(probe.dgrad_norm, probe.dx_norm)).flatten();
        let ly = on.then(|| ratio(probe.dy_norm, probe.dx_norm)).flatten();
        let picked = pick(&[
            (lf.map(|l| 1.0 / (2.0 * self.gamma * l)), Binding::Curvature),
            (ly.map(|l| 1.0 / (2.0 * self.gamma * l)), Binding::Curvature),
            (self.growth(), Binding::Growth),
        ]);
        self.finish(picked, true)
    }

    /// Centralized rule; `γ` plays no part.
    pub fn update_adgd(self, probe: &CurvatureProbe) -> (StepsizeState, Binding) {
        let curv = self
            .terms
            .curvature
            .then(|| ratio(probe.dgrad_norm, probe.dx_norm))
            .flatten()
            .map(|_| probe.dx_norm / (2.0 * probe.dgrad_norm));
        let picked = pick(&[(curv, Binding::Curvature), (self.growth(), Binding::Growth)]);
        self.finish(picked, true)
    }

    /// Fixed `√2` growth; `θ` is left untouched.
    pub fn update_method_dm(self, probe: &CurvatureProbe) -> (StepsizeState, Binding) {
        let on = self.terms.curvature;
        let lf = on.then(|| ratio(probe.dgrad_norm, probe.dx_norm)).flatten();
        let tracker = (on && probe.y_norm > 0.0).then(|| 1.0 / probe.y_norm);
        let growth = self.terms.growth.then(|| std::f64::consts::SQRT_2 * self.alpha);
        let picked = pick(&[
            (lf.map(|l| 1.0 / (2.0 * l)), Binding::Curvature),
            (tracker, Binding::TrackerNorm),
            (growth, Binding::Growth),
        ]);
        self.finish(picked, false)
    }

    /// Dispatches on the configured policy.
    pub fn update(self, probe: &CurvatureProbe) -> (StepsizeState, Binding) {
        match self.policy {
            Policy::AdGT => self.update_adgt(probe),
            Policy::AdGTCombined => self.update_adgt_combined(probe),
            Policy::AdGD => self.update_adgd(probe),
            Policy::MethodDM => self.update_method_dm(probe),
            Policy::Fixed => (self, Binding::Unchanged),
        }
    }

    /// Where `alpha` sits relative to `[1/(2γL), 1/(2γμ)]`. Never modifies
    /// the stepsize.
    pub fn clamp_report(&self, l: f64, mu: f64) -> BoundReport {
        let lower = 1.0 / (2.0 * self.gamma * l);
        let upper = 1.0 / (2.0 * self.gamma * mu);
        BoundReport {
            lower,
            upper,
            alpha: self.alpha,
            inside: self.alpha >= lower && self.alpha <= upper,
            margin_lower: self.alpha - lower,
            margin_upper: upper - self.alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub inside: bool,
    pub margin_lower: f64,
    pub margin_upper: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn state(policy: Policy, alpha: f64, theta: f64, gamma: f64) -> StepsizeState {
        StepsizeState { alpha, theta, gamma, policy, terms: Terms::default(), calibrated: false }
    }

    fn probe(dx: f64, dy: f64, dgrad: f64, y: f64) -> CurvatureProbe {
        CurvatureProbe { dx_norm: dx, dy_norm: dy, dgrad_norm: dgrad, y_norm: y }
    }

    #[test]
    fn adgt_examples() {
        let (s, b) = state(Policy::AdGT, 0.1, 0.0, 1.0).update(&probe(1.0, 100.0, 0.0, 0.0));
        assert_relative_eq!(s.alpha, 0.005);
        assert_relative_eq!(s.theta, 0.05);
        assert_eq!(b, Binding::Curvature);
        assert!(s.calibrated);

        let (s, b) = state(Policy::AdGT, 0.1, 3.0, 1.0).update(&probe(1.0, 1.0, 0.0, 0.0));
        assert_relative_eq!(s.alpha, 0.2);
        assert_relative_eq!(s.theta, 2.0);
        assert_eq!(b, Binding::Growth);
        assert!(!s.calibrated);

        let (s, _) = state(Policy::AdGT, 0.1, 3.0, 1.0).update(&probe(0.0, 5.0, 0.0, 0.0));
        assert_relative_eq!(s.alpha, 0.2);
    }

    #[test]
    fn combined_examples() {
        let s = state(Policy::AdGTCombined, 1.0, 0.0, 1.0);
        assert_relative_eq!(s.update(&probe(1.0, 2.0, 4.0, 0.0)).0.alpha, 0.125);
        assert_relative_eq!(s.update(&probe(1.0, 4.0, 2.0, 0.0)).0.alpha, 0.125);
        let (z, b) = state(Policy::AdGTCombined, 1.0, 3.0, 1.0).update(&probe(0.0, 0.0, 0.0, 0.0));
        assert_relative_eq!(z.alpha, 2.0);
        assert_eq!(b, Binding::Growth);
    }

    #[test]
    fn adgd_examples() {
        assert_relative_eq!(state(Policy::AdGD, 0.3, 0.0, 7.0).update(&probe(2.0, 0.0, 1.0, 0.0)).0.alpha, 0.3);
        assert_relative_eq!(state(Policy::AdGD, 1.0, 0.0, 1.0).update(&probe(0.02, 0.0, 1.0, 0.0)).0.alpha, 0.01);
        // f = ½ L x², Δ∇f = L Δx
        let l = 7.5;
        let (s, _) = state(Policy::AdGD, 1.0, 0.0, 1.0).update(&probe(0.3, 0.0, l * 0.3, 0.0));
        assert_relative_eq!(s.alpha, 1.0 / (2.0 * l), epsilon = 1e-16);
    }

    #[test]
    fn method_dm_examples() {
        let (s, b) = state(Policy::MethodDM, 1.0, 0.0, 1.0).update(&probe(1.0, 0.0, 1.0, 4.0));
        assert_relative_eq!(s.alpha, 0.25);
        assert_eq!(b, Binding::TrackerNorm);
        assert_relative_eq!(state(Policy::MethodDM, 1.0, 0.0, 1.0).update(&probe(1.0, 0.0, 1.0, 0.0)).0.alpha, 0.5);
        let (s, b) = state(Policy::MethodDM, 1e-6, 0.0, 1.0).update(&probe(1.0, 0.0, 1.0, 1.0));
        assert_relative_eq!(s.alpha, std::f64::consts::SQRT_2 * 1e-6);
        assert_eq!(b, Binding::Growth);
        assert_eq!(s.theta, 0.0);
    }

    #[test]
    fn fixed_and_frozen_are_noops() {
        let s = state(Policy::Fixed, 0.3, 0.0, 1.0);
        assert_eq!(s.update(&probe(1.0, 9.0, 9.0, 9.0)).0, s);
        let frozen = StepsizeState { terms: Terms { curvature: false, growth: false }, ..state(Policy::AdGT, 0.3, 0.0, 1.0) };
        let (next, b) = frozen.update(&probe(1.0, 9.0, 9.0, 9.0));
        assert_eq!(next.alpha, 0.3);
        assert_eq!(b, Binding::Unchanged);
    }

    #[test]
    fn clamp_report_examples() {
        let s = state(Policy::AdGT, 0.3, 0.0, 1.0);
        let r = s.clamp_report(2.0, 1.0);
        assert_eq!((r.lower, r.upper), (0.25, 0.5));
        assert!(r.inside);
        assert_relative_eq!(r.margin_lower, 0.05, epsilon = 1e-15);
        assert_relative_eq!(r.margin_upper, 0.2, epsilon = 1e-15);
        assert_eq!(s.clamp_report(2.0, 1.0).alpha, 0.3);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
    }

    proptest! {
        #[test]
        fn positivity_growth_cap_determinism(
            alpha in 1e-8f64..10.0,
            theta in 0.0f64..5.0,
            gamma in 0.1f64..10.0,
            dx in 0.0f64..10.0,
            dy in 0.0f64..10.0,
            dg in 0.0f64..10.0,
            yn in 0.0f64..10.0,
        ) {
            let pr = probe(dx, dy, dg, yn);
            for policy in Policy::ALL {
                let s = state(policy, alpha, theta, gamma);
                let (a, _) = s.update(&pr);
                let (b, _) = s.update(&pr);
                prop_assert!(a.alpha > 0.0);
                prop_assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
                match policy {
                    Policy::AdGT | Policy::AdGTCombined | Policy::AdGD => {
                        prop_assert!(a.alpha <= (1.0 + theta).sqrt() * alpha);
                        prop_assert!((a.theta - a.alpha / alpha).abs() <= 1e-15 * a.theta.max(1.0));
                    }
                    Policy::MethodDM => prop_assert!(a.alpha <= std::f64::consts::SQRT_2 * alpha),
                    Policy::Fixed => prop_assert_eq!(a.alpha, alpha),
                }
            }
        }

        #[test]
        fn adgd_quadratic_exactness(c in 0.01f64..100.0, dx in 1e-6f64..10.0) {
            let (s, _) = state(Policy::AdGD, 1e6, 0.0, 1.0).update(&probe(dx, 0.0, c * dx, 0.0));
            prop_assert!((s.alpha - 1.0 / (2.0 * c)).abs() <= 1e-15 / c);
        }
    }
}
