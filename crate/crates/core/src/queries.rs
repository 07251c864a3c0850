//! Probabilistic queries answered from circuit derivatives.
//!
//! A [`QuerySession`] runs one upward and one downward pass when it is
//! built. Marginals, what-if values, retraction and family posteriors are
//! then read straight off `val(root)` and the leaf derivatives without
//! touching the circuit again. Queries involving second partials (pair
//! marginals, sensitivities, tweaking) run private toggle passes and leave
//! the session's own state untouched.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::compiler::{Circuit, Leaf};
use crate::engine::{differentiate, second_derivatives_for, PassState};
use crate::error::{Error, Result};
use crate::model::{Evidence, Network, ParamId, VarValue};

/// `θ_xu = α_x τ + β_x` for the values `x` of one family column `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaParameter {
    var: usize,
    parent_config: usize,
    alphas: Vec<f64>,
}

impl MetaParameter {
    pub fn new(net: &Network, var: usize, parent_config: usize, alphas: Vec<f64>) -> Result<Self> {
        if var >= net.len() {
            return Err(Error::UnknownVariable(format!("#{var}")));
        }
        if parent_config >= net.parent_configs(var) {
            return Err(Error::BadMetaParameter(format!(
                "parent configuration {parent_config} out of range"
            )));
        }
        if alphas.len() != net.card(var) {
            return Err(Error::BadMetaParameter(format!(
                "expected {} coefficients, got {}",
                net.card(var),
                alphas.len()
            )));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::BadMetaParameter(
                "coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            var,
            parent_config,
            alphas,
        })
    }

    /// The usual binary scheme: `θ_x = τ`, `θ_x̄ = 1 - τ`.
    pub fn binary(net: &Network, param: ParamId) -> Result<Self> {
        if net.card(param.family) != 2 {
            return Err(Error::NotBinary(net.variable(param.family).name.clone()));
        }
        let (u, x) = net.split_entry(param);
        let mut alphas = vec![-1.0; 2];
        alphas[x] = 1.0;
        Self::new(net, param.family, u, alphas)
    }

    pub fn var(&self) -> usize {
        self.var
    }

    pub fn parent_config(&self) -> usize {
        self.parent_config
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Whether moving `τ` keeps the column summing to 1, i.e. `Σ α_x = 0`.
    pub fn preserves_normalization(&self) -> bool {
        self.alphas.iter().sum::<f64>().abs() <= 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaSensitivity {
    /// `∂Pr(y|e)/∂τ`.
    pub derivative: f64,
    /// False when the coefficients do not sum to zero; the derivative is
    /// still the chain-rule value but moving `τ` would denormalize the CPT.
    pub preserves_normalization: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retraction {
    /// `Pr(e - X)`.
    pub probability: f64,
    /// `Pr(x | e - X)` per value of `X`.
    pub posterior: Vec<f64>,
}

/// Outcome of tweaking one binary parameter pair `θ_xu`, `θ_x̄u = 1 - θ_xu`
/// so that `Pr(y|e) <= Pr(ȳ|e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tweak {
    /// Smallest signed change `Θ'(xu) - Θ(xu)` that achieves the ranking and
    /// the resulting parameter value. Zero when the ranking already holds.
    Feasible {
        delta_min: f64,
        theta_prime_min: f64,
    },
    /// No value in `[0, 1]` works. `required_theta` is the solved boundary,
    /// or `None` when the ranking does not depend on this parameter.
    Infeasible { required_theta: Option<f64> },
}

pub struct QuerySession<'a> {
    net: &'a Network,
    circuit: &'a Circuit,
    evidence: Evidence,
    state: PassState<'a>,
    toggle_passes: AtomicUsize,
}

impl<'a> QuerySession<'a> {
    /// Runs the upward and downward passes for `evidence`.
    pub fn new(net: &'a Network, circuit: &'a Circuit, evidence: Evidence) -> Result<Self> {
        let state = differentiate(circuit, &evidence, net)?;
        Ok(Self {
            net,
            circuit,
            evidence,
            state,
            toggle_passes: AtomicUsize::new(0),
        })
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn circuit(&self) -> &'a Circuit {
        self.circuit
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn state(&self) -> &PassState<'a> {
        &self.state
    }

    /// Circuit passes run so far: the two session passes plus any toggle
    /// passes spent on second partials.
    pub fn passes(&self) -> usize {
        2 + self.toggle_passes.load(Ordering::Relaxed)
    }

    /// `Pr(e) = F(e, Θ)`.
    pub fn prob_evidence(&self) -> f64 {
        self.state.value()
    }

    fn positive_evidence(&self) -> Result<f64> {
        let f = self.prob_evidence();
        if f > 0.0 {
            Ok(f)
        } else {
            Err(Error::ZeroProbability)
        }
    }

    /// `∂F(e)/∂λ_x`; 0 for an indicator absent from the circuit.
    pub fn indicator_pd(&self, x: VarValue) -> f64 {
        self.state.leaf_pd(Leaf::Indicator(x)).unwrap_or(0.0)
    }

    /// `∂F(e)/∂θ_f`; 0 for a parameter absent from the circuit.
    pub fn param_pd(&self, f: ParamId) -> f64 {
        self.state.leaf_pd(Leaf::Parameter(f)).unwrap_or(0.0)
    }

    /// `Pr(x|e)` for every value of `var`. An observed variable gets the
    /// degenerate posterior on its observed value; use [`Self::retraction`]
    /// for the posterior with its own evidence removed.
    pub fn posterior_marginal(&self, var: usize) -> Result<Vec<f64>> {
        let f = self.positive_evidence()?;
        let card = self.net.card(var);
        if let Some(observed) = self.evidence.get(var) {
            return Ok((0..card)
                .map(|x| if x == observed { 1.0 } else { 0.0 })
                .collect());
        }
        Ok((0..card)
            .map(|x| self.indicator_pd(VarValue::new(var, x)) / f)
            .collect())
    }

    /// `Pr(x, e - X)`: the probability of the evidence had `X` been set to
    /// `x` instead.
    pub fn what_if(&self, x: VarValue) -> f64 {
        self.indicator_pd(x)
    }

    /// `Pr(e - X)` and `Pr(x | e - X)`.
    pub fn retraction(&self, var: usize) -> Result<Retraction> {
        let pds: Vec<f64> = (0..self.net.card(var))
            .map(|x| self.indicator_pd(VarValue::new(var, x)))
            .collect();
        let probability: f64 = pds.iter().sum();
        if probability <= 0.0 {
            return Err(Error::ZeroRetraction);
        }
        Ok(Retraction {
            probability,
            posterior: pds.iter().map(|p| p / probability).collect(),
        })
    }

    /// `Pr(f|e) = ∂F/∂θ_f · Θ(f) / F(e)`.
    pub fn family_marginal(&self, f: ParamId) -> Result<f64> {
        let fe = self.positive_evidence()?;
        Ok(self.param_pd(f) * self.net.theta(f) / fe)
    }

    /// `∂²F(e)/∂v∂pinned` for every circuit node, via a toggle pair.
    pub fn second_partials(&self, pinned: Leaf) -> Result<Vec<f64>> {
        let out = second_derivatives_for(self.circuit, self.state.assignment(), pinned)?;
        self.toggle_passes.fetch_add(4, Ordering::Relaxed);
        Ok(out)
    }

    fn second_at(&self, partials: &[f64], leaf: Leaf) -> f64 {
        self.circuit
            .leaf_node(leaf)
            .map_or(0.0, |id| partials[id.index()])
    }

    /// `Pr(x, y, e - XY) = ∂²F(e)/∂λ_x∂λ_y`.
    pub fn pair_marginal(&self, x: VarValue, y: VarValue) -> Result<f64> {
        if x.var == y.var {
            return Err(Error::SameVariable(self.net.variable(x.var).name.clone()));
        }
        let partials = self.second_partials(Leaf::Indicator(y))?;
        Ok(self.second_at(&partials, Leaf::Indicator(x)))
    }

    /// `Pr(x, y | e)` for unobserved `X` and `Y`.
    pub fn pair_posterior(&self, x: VarValue, y: VarValue) -> Result<f64> {
        for v in [x.var, y.var] {
            if self.evidence.is_observed(v) {
                return Err(Error::TargetObserved(self.net.variable(v).name.clone()));
            }
        }
        let f = self.positive_evidence()?;
        Ok(self.pair_marginal(x, y)? / f)
    }

    /// `Pr(f1, f2, e) = ∂²F(e)/∂θ_f1∂θ_f2 · Θ(f1) Θ(f2)`, in product form so
    /// zero parameters are harmless.
    pub fn family_pair_marginal(&self, f1: ParamId, f2: ParamId) -> Result<f64> {
        if f1.family == f2.family {
            return Err(Error::SameFamily(self.net.variable(f1.family).name.clone()));
        }
        let partials = self.second_partials(Leaf::Parameter(f2))?;
        Ok(
            self.second_at(&partials, Leaf::Parameter(f1))
                * self.net.theta(f1)
                * self.net.theta(f2),
        )
    }

    fn check_target(&self, y: VarValue) -> Result<f64> {
        if self.evidence.is_observed(y.var) {
            return Err(Error::TargetObserved(self.net.variable(y.var).name.clone()));
        }
        self.positive_evidence()
    }

    fn sensitivity_from(&self, fe: f64, second: f64, d_theta: f64, d_lambda: f64) -> f64 {
        (second * fe - d_theta * d_lambda) / (fe * fe)
    }

    /// `∂Pr(y|e)/∂θ_xu` with every other parameter held fixed.
    pub fn sensitivity_theta(&self, y: VarValue, f: ParamId) -> Result<f64> {
        let fe = self.check_target(y)?;
        let partials = self.second_partials(Leaf::Indicator(y))?;
        Ok(self.sensitivity_from(
            fe,
            self.second_at(&partials, Leaf::Parameter(f)),
            self.param_pd(f),
            self.indicator_pd(y),
        ))
    }

    /// `∂Pr(y|e)/∂θ` for every parameter, from a single toggle pair.
    pub fn sensitivity_all_params(&self, y: VarValue) -> Result<Vec<(ParamId, f64)>> {
        let fe = self.check_target(y)?;
        let partials = self.second_partials(Leaf::Indicator(y))?;
        let dy = self.indicator_pd(y);
        Ok(self
            .net
            .params()
            .map(|p| {
                let second = self.second_at(&partials, Leaf::Parameter(p));
                (p, self.sensitivity_from(fe, second, self.param_pd(p), dy))
            })
            .collect())
    }

    /// `∂Pr(y|e)/∂θ_f` for every value `y` of every unobserved variable,
    /// from a single toggle pair.
    pub fn sensitivity_all_targets(&self, f: ParamId) -> Result<Vec<(VarValue, f64)>> {
        let fe = self.positive_evidence()?;
        let partials = self.second_partials(Leaf::Parameter(f))?;
        let df = self.param_pd(f);
        Ok(self
            .net
            .var_values()
            .filter(|y| !self.evidence.is_observed(y.var))
            .map(|y| {
                let second = self.second_at(&partials, Leaf::Indicator(y));
                (
                    y,
                    self.sensitivity_from(fe, second, df, self.indicator_pd(y)),
                )
            })
            .collect())
    }

    /// `∂Pr(y|e)/∂τ = Σ_x α_x ∂Pr(y|e)/∂θ_xu`.
    pub fn sensitivity_meta(&self, y: VarValue, meta: &MetaParameter) -> Result<MetaSensitivity> {
        let fe = self.check_target(y)?;
        let partials = self.second_partials(Leaf::Indicator(y))?;
        let dy = self.indicator_pd(y);
        let derivative = meta
            .alphas
            .iter()
            .enumerate()
            .map(|(x, alpha)| {
                let p = self.net.param(meta.var, meta.parent_config, x);
                let second = self.second_at(&partials, Leaf::Parameter(p));
                alpha * self.sensitivity_from(fe, second, self.param_pd(p), dy)
            })
            .sum();
        Ok(MetaSensitivity {
            derivative,
            preserves_normalization: meta.preserves_normalization(),
        })
    }

    /// Smallest change to `θ_xu` (with `θ_x̄u = 1 - θ_xu`) that makes
    /// `Pr(y|e) <= Pr(ȳ|e)`, for binary `Y` and `X`.
    ///
    /// `Pr(y, e)` is affine in the pair: with `G = ∂F/∂λ_y`,
    /// `G_x = ∂²F/∂λ_y∂θ_xu` and likewise for `ȳ` and `x̄`, a change `δ`
    /// moves `G - H` by `-δ D` where
    /// `D = (G_x̄ - H_x̄) - (G_x - H_x)`. The ranking holds iff
    /// `G - H <= δ D`.
    pub fn tweak_binary(&self, y: VarValue, f: ParamId) -> Result<Tweak> {
        for var in [y.var, f.family] {
            if self.net.card(var) != 2 {
                return Err(Error::NotBinary(self.net.variable(var).name.clone()));
            }
        }
        self.check_target(y)?;
        let y_bar = VarValue::new(y.var, 1 - y.value);
        let (u, x) = self.net.split_entry(f);
        let f_bar = self.net.param(f.family, u, 1 - x);

        let g = self.indicator_pd(y);
        let h = self.indicator_pd(y_bar);
        let theta = self.net.theta(f);
        if g <= h {
            return Ok(Tweak::Feasible {
                delta_min: 0.0,
                theta_prime_min: theta,
            });
        }

        let py = self.second_partials(Leaf::Indicator(y))?;
        let pyb = self.second_partials(Leaf::Indicator(y_bar))?;
        let at = |p: &[f64], leaf| self.second_at(p, Leaf::Parameter(leaf));
        let slope = (at(&py, f_bar) - at(&pyb, f_bar)) - (at(&py, f) - at(&pyb, f));
        if slope == 0.0 {
            return Ok(Tweak::Infeasible {
                required_theta: None,
            });
        }
        let delta = (g - h) / slope;
        let required = theta + delta;
        const SLACK: f64 = 1e-12;
        if !(-SLACK..=1.0 + SLACK).contains(&required) {
            return Ok(Tweak::Infeasible {
                required_theta: Some(required),
            });
        }
        let theta_prime_min = required.clamp(0.0, 1.0);
        Ok(Tweak::Feasible {
            delta_min: theta_prime_min - theta,
            theta_prime_min,
        })
    }
}
