mod common;

use acdiff::compiler::{
    compile, deserialize_circuit, multiply_tables, parameterize_cpts, serialize_circuit, sum_out,
    ve_compile, CircuitBuilder, EliminationOrder, Leaf,
};
use acdiff::engine::{differentiate, evaluate_at, second_derivative, LeafAssignment};
use acdiff::model::{consistent, parse_network, Evidence, ParamId, VarValue};
use acdiff::oracle::{
    canonical_eval, oracle_conditional, oracle_derivative, oracle_prob, oracle_second, JointTable,
};
use acdiff::queries::{MetaParameter, QuerySession, Tweak};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn mixed(n: usize) -> NetSpec {
    NetSpec {
        vars: n,
        max_card: 3,
        max_parents: 2,
        edge_prob: 0.5,
        zero_prob: 0.1,
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn circuit_equals_canonical_polynomial(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        for _ in 0..3 {
            let point = random_point(&mut r, &net, -1.5, 1.5);
            let got = evaluate_at(&c, &point).unwrap();
            let want = canonical_eval(&net, &point).unwrap();
            prop_assert!(rel_close(got, want, 1e-9), "{got} vs {want}");
        }
    }

    #[test]
    fn orders_agree_in_value(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let a = compile(&net).unwrap();
        let b = ve_compile(&net, &EliminationOrder::new(&net, order).unwrap()).unwrap();
        let point = random_point(&mut r, &net, 0.0, 2.0);
        let (va, vb) = (evaluate_at(&a, &point).unwrap(), evaluate_at(&b, &point).unwrap());
        prop_assert!(rel_close(va, vb, 1e-9));
    }

    #[test]
    fn multilinear_in_every_leaf(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        let leaves = all_leaves(&net);
        let leaf = leaves[r.gen_range(0..leaves.len())];
        let mut point = random_point(&mut r, &net, 0.0, 1.0);
        let t: f64 = r.gen_range(-2.0..2.0);
        let mut at = |v: f64| {
            point.set(leaf, v).unwrap();
            evaluate_at(&c, &point).unwrap()
        };
        let (f0, f1, ft) = (at(0.0), at(1.0), at(t));
        prop_assert!(((1.0 - t) * f0 + t * f1 - ft).abs() <= 1e-9 * ft.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_oracle_and_finite_differences(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.4);
        let s = differentiate(&c, &e, &net).unwrap();
        let base = LeafAssignment::from_evidence(&net, &e);
        let h = 1e-5;
        for leaf in all_leaves(&net) {
            let pd = s.leaf_pd(leaf).unwrap();
            let exact = oracle_derivative(&net, &e, leaf).unwrap();
            prop_assert!(rel_close(pd, exact, 1e-9), "{leaf:?}: {pd} vs {exact}");
            let v = base.get(leaf).unwrap();
            let mut p = base.clone();
            p.set(leaf, v + h).unwrap();
            let up = evaluate_at(&c, &p).unwrap();
            p.set(leaf, v - h).unwrap();
            let down = evaluate_at(&c, &p).unwrap();
            prop_assert!(rel_close(pd, (up - down) / (2.0 * h), 1e-6));
        }
        prop_assert_eq!(s.up_edge_visits() + s.down_edge_visits(), 2 * c.edge_count());
    }

    #[test]
    fn indicator_derivatives_sum_to_retracted_evidence(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.5);
        let s = differentiate(&c, &e, &net).unwrap();
        for var in 0..net.len() {
            let sum: f64 = (0..net.card(var))
                .map(|x| s.leaf_pd(Leaf::Indicator(VarValue::new(var, x))).unwrap())
                .sum();
            let want = oracle_prob(&net, &e.without(var)).unwrap();
            prop_assert!((sum - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn mixed_partials_are_symmetric(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.3);
        let leaves = all_leaves(&net);
        for _ in 0..4 {
            let a = *leaves.choose(&mut r).unwrap();
            let b = *leaves.choose(&mut r).unwrap();
            let ab = second_derivative(&c, &e, &net, a, b).unwrap();
            let ba = second_derivative(&c, &e, &net, b, a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-9);
            let exact = oracle_second(&net, &e, a, b).unwrap();
            prop_assert!((ab - exact).abs() <= 1e-9, "{a:?} {b:?}: {ab} vs {exact}");
        }
    }

    #[test]
    fn first_order_queries_match_enumeration(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.3);
        let s = QuerySession::new(&net, &c, e.clone()).unwrap();
        let pe = oracle_prob(&net, &e).unwrap();
        prop_assert!((s.prob_evidence() - pe).abs() <= 1e-9);
        if pe > 0.0 {
            for var in 0..net.len() {
                let post = s.posterior_marginal(var).unwrap();
                prop_assert!((post.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                for (x, p) in post.iter().enumerate() {
                    let want = oracle_conditional(&net, VarValue::new(var, x), &e).unwrap();
                    prop_assert!((p - want).abs() <= 1e-9);
                    prop_assert!((-1e-9..=1.0 + 1e-9).contains(p));
                }
            }
            for fam in 0..net.len() {
                let total: f64 = (0..net.family(fam).table.len())
                    .map(|entry| s.family_marginal(ParamId::new(fam, entry)).unwrap())
                    .sum();
                prop_assert!((total - 1.0).abs() <= 1e-9);
            }
        }
        prop_assert_eq!(s.passes(), 2);
    }

    #[test]
    fn family_pair_matches_mixed_identity(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let net = random_network(&mut r, NetSpec { zero_prob: 0.0, ..mixed(n) });
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.3);
        let s = QuerySession::new(&net, &c, e.clone()).unwrap();
        let params: Vec<ParamId> = net.params().collect();
        let f1 = *params.choose(&mut r).unwrap();
        let f2 = *params.choose(&mut r).unwrap();
        if f1.family != f2.family {
            let got = s.family_pair_marginal(f1, f2).unwrap();
            let mut event = e.clone();
            let mut ok = true;
            for vv in net.decode_entry(f1).into_iter().chain(net.decode_entry(f2)) {
                match event.get(vv.var) {
                    Some(v) if v != vv.value => ok = false,
                    _ => event.set(vv),
                }
            }
            let want = if ok { oracle_prob(&net, &event).unwrap() } else { 0.0 };
            prop_assert!((got - want).abs() <= 1e-9);
        }
        // ∂²F/∂λx∂θf · Θ(f) = Pr(x, f, e - X)
        let x = VarValue::new(r.gen_range(0..net.len()), 0);
        let f = *params.choose(&mut r).unwrap();
        let d = second_derivative(&c, &e, &net, Leaf::Indicator(x), Leaf::Parameter(f)).unwrap();
        let mut event = e.without(x.var);
        event.set(x);
        let fam = Evidence::from_pairs(net.len(), net.decode_entry(f));
        let want = if consistent(&event, &fam) {
            for vv in net.decode_entry(f) {
                event.set(vv);
            }
            oracle_prob(&net, &event).unwrap()
        } else {
            0.0
        };
        prop_assert!((d * net.theta(f) - want).abs() <= 1e-9);
    }

    #[test]
    fn sensitivity_matches_finite_differences(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let net = random_network(&mut r, NetSpec { zero_prob: 0.0, ..mixed(n) });
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.3);
        let s = QuerySession::new(&net, &c, e.clone()).unwrap();
        let free: Vec<VarValue> = net.var_values().filter(|y| !e.is_observed(y.var)).collect();
        if free.is_empty() || s.prob_evidence() <= 1e-6 {
            return Ok(());
        }
        let y = *free.choose(&mut r).unwrap();
        let f = *net.params().collect::<Vec<_>>().choose(&mut r).unwrap();
        let got = s.sensitivity_theta(y, f).unwrap();
        let h = 1e-6;
        let theta = net.theta(f);
        let up = oracle_conditional(&net.with_theta(f, theta + h), y, &e).unwrap();
        let down = oracle_conditional(&net.with_theta(f, theta - h), y, &e).unwrap();
        prop_assert!((got - (up - down) / (2.0 * h)).abs() <= 1e-5);

        // probability form, valid because no parameter is zero
        let joint_fam = {
            let mut ev = e.clone();
            let mut ok = !e.is_observed(y.var);
            ev.set(y);
            for vv in net.decode_entry(f) {
                match ev.get(vv.var) {
                    Some(v) if v != vv.value => ok = false,
                    _ => ev.set(vv),
                }
            }
            if ok { oracle_prob(&net, &ev).unwrap() / s.prob_evidence() } else { 0.0 }
        };
        let py = s.posterior_marginal(y.var).unwrap()[y.value];
        let pf = s.family_marginal(f).unwrap();
        let prob_form = (joint_fam - py * pf) / theta;
        prop_assert!((got - prob_form).abs() <= 1e-9 * got.abs().max(1.0));
    }

    #[test]
    fn meta_sensitivity_matches_reparameterized_oracle(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let net = random_network(&mut r, NetSpec { zero_prob: 0.0, ..mixed(n) });
        let c = compile(&net).unwrap();
        let s = QuerySession::new(&net, &c, Evidence::empty(net.len())).unwrap();
        let var = r.gen_range(0..net.len());
        let u = r.gen_range(0..net.parent_configs(var));
        let card = net.card(var);
        // shift mass from one value to another: α sums to zero
        let (from, to) = (r.gen_range(0..card), r.gen_range(0..card));
        let mut alphas = vec![0.0; card];
        alphas[to] += 1.0;
        alphas[from] -= 1.0;
        let meta = MetaParameter::new(&net, var, u, alphas.clone()).unwrap();
        let y = VarValue::new(r.gen_range(0..net.len()), 0);
        let got = s.sensitivity_meta(y, &meta).unwrap();
        prop_assert!(got.preserves_normalization);
        let h = 1e-6;
        let shifted = |tau: f64| {
            let mut moved = net.clone();
            for (x, a) in alphas.iter().enumerate() {
                let p = net.param(var, u, x);
                moved = moved.with_theta(p, net.theta(p) + a * tau);
            }
            oracle_conditional(&moved, y, &Evidence::empty(net.len())).unwrap()
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        prop_assert!((got.derivative - fd).abs() <= 1e-6);
    }

    #[test]
    fn tweak_reaches_the_ranking_boundary(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, NetSpec::binary(n));
        let c = compile(&net).unwrap();
        let e = random_evidence(&mut r, &net, 0.2);
        let s = QuerySession::new(&net, &c, e.clone()).unwrap();
        let free: Vec<usize> = (0..n).filter(|&v| !e.is_observed(v)).collect();
        if free.is_empty() || s.prob_evidence() <= 1e-9 {
            return Ok(());
        }
        let y = VarValue::new(*free.choose(&mut r).unwrap(), r.gen_range(0..2));
        let y_bar = VarValue::new(y.var, 1 - y.value);
        let f = *net.params().collect::<Vec<_>>().choose(&mut r).unwrap();
        let (u, x) = net.split_entry(f);
        let f_bar = net.param(f.family, u, 1 - x);
        let requantify = |t: f64| net.with_theta(f, t).with_theta(f_bar, 1.0 - t);
        let ranked = |t: f64, slack: f64| {
            let m = requantify(t);
            match (oracle_prob(&m, &{ let mut ev = e.clone(); ev.set(y); ev }),
                   oracle_prob(&m, &{ let mut ev = e.clone(); ev.set(y_bar); ev })) {
                (Ok(a), Ok(b)) => a <= b + slack,
                _ => false,
            }
        };
        match s.tweak_binary(y, f).unwrap() {
            Tweak::Feasible { delta_min, theta_prime_min } => {
                let theta = net.theta(f);
                prop_assert!((theta + delta_min - theta_prime_min).abs() < 1e-12);
                prop_assert!(ranked(theta_prime_min, 1e-9));
                if delta_min.abs() > 1e-5 {
                    // backing off toward the original value breaks the ranking
                    let back = theta_prime_min - 1e-5 * delta_min.signum();
                    prop_assert!(!ranked(back, 0.0));
                }
            }
            Tweak::Infeasible { .. } => {
                for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    prop_assert!(!ranked(t, -1e-9));
                }
            }
        }
    }

    #[test]
    fn circuit_files_round_trip(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let c = compile(&net).unwrap();
        let text = serialize_circuit(&c, &net);
        prop_assert_eq!(deserialize_circuit(&text, &net).unwrap(), c);
    }

    #[test]
    fn network_files_round_trip(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        prop_assert_eq!(parse_network(&net.to_json()).unwrap(), net);
    }

    #[test]
    fn indicator_value_ignores_unrelated_evidence(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        let e = random_evidence(&mut r, &net, 0.5);
        let x = VarValue::new(r.gen_range(0..n), 0);
        let other = (0..n).find(|&v| v != x.var && !e.is_observed(v));
        if let Some(v) = other {
            let mut more = e.clone();
            more.set(VarValue::new(v, r.gen_range(0..net.card(v))));
            prop_assert_eq!(e.indicator_value(x).unwrap(), more.indicator_value(x).unwrap());
        }
    }

    #[test]
    fn oracle_identities(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, mixed(n));
        prop_assert!((JointTable::new(&net).unwrap().total() - 1.0).abs() <= 1e-9);
        let e = random_evidence(&mut r, &net, 0.4);
        let var = r.gen_range(0..n);
        // total probability over the values of X, evidence on X retracted
        let total: f64 = (0..net.card(var))
            .map(|x| {
                let mut ev = e.without(var);
                ev.set(VarValue::new(var, x));
                oracle_prob(&net, &ev).unwrap()
            })
            .sum();
        prop_assert!((total - oracle_prob(&net, &e.without(var)).unwrap()).abs() <= 1e-12);
        // ∂F/∂λx = Pr(x, e - X)
        for x in 0..net.card(var) {
            let vv = VarValue::new(var, x);
            let mut ev = e.without(var);
            ev.set(vv);
            let d = oracle_derivative(&net, &e, Leaf::Indicator(vv)).unwrap();
            prop_assert!((d - oracle_prob(&net, &ev).unwrap()).abs() <= 1e-12);
        }
        // ∂F/∂θf · Θ(f) = Pr(f, e)
        for p in net.params() {
            let fam = Evidence::from_pairs(n, net.decode_entry(p));
            let want = if consistent(&fam, &e) {
                let mut ev = e.clone();
                net.decode_entry(p).into_iter().for_each(|vv| ev.set(vv));
                oracle_prob(&net, &ev).unwrap()
            } else {
                0.0
            };
            let d = oracle_derivative(&net, &e, Leaf::Parameter(p)).unwrap();
            prop_assert!((d * net.theta(p) - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn circuit_size_within_width_bound(seed in any::<u64>(), n in 1usize..=10) {
        let mut r = rng(seed);
        let net = random_network(&mut r, NetSpec::binary(n));
        let order = EliminationOrder::min_fill(&net);
        let c = ve_compile(&net, &order).unwrap();
        let bound = acdiff::compiler::SIZE_BOUND_CONSTANT * n * (1usize << (order.width() + 1));
        prop_assert!(c.len() <= bound, "{} > {}", c.len(), bound);
    }

    #[test]
    fn sum_out_commutes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, NetSpec { edge_prob: 1.0, ..NetSpec::binary(3) });
        let mut b = CircuitBuilder::new();
        let tables = parameterize_cpts(&net, &mut b);
        let joint = multiply_tables(&mut b, tables);
        let (x, y) = (joint.scope()[0], joint.scope()[1]);
        let sx = sum_out(&mut b, &joint, x).unwrap();
        let xy = sum_out(&mut b, &sx, y).unwrap();
        let sy = sum_out(&mut b, &joint, y).unwrap();
        let yx = sum_out(&mut b, &sy, x).unwrap();
        let root = xy.entries()[0];
        let c = b.finish(root);
        let point = random_point(&mut r, &net, 0.0, 1.0);
        let vals = acdiff::engine::upward_pass_at(&c, point).unwrap();
        for (p, q) in xy.entries().iter().zip(yx.entries()) {
            prop_assert!(rel_close(vals.val(*p), vals.val(*q), 1e-12));
        }
    }
}

#[test]
fn retraction_on_single_variable_returns_prior() {
    let net = parse_network(
        r#"{"variables":[{"name":"A","values":["t","f"]}],
            "cpts":[{"child":"A","table":[0.35,0.65]}]}"#,
    )
    .unwrap();
    let c = compile(&net).unwrap();
    let e = acdiff::model::parse_evidence("A=t", &net).unwrap();
    let s = QuerySession::new(&net, &c, e).unwrap();
    let r = s.retraction(0).unwrap();
    let prior = oracle_prob(&net, &Evidence::empty(1)).unwrap();
    assert!((r.probability - prior).abs() < 1e-15);
    assert!((r.posterior[0] - 0.35).abs() < 1e-15);
    assert!((r.posterior[1] - 0.65).abs() < 1e-15);
}

#[test]
fn deterministic_target_has_zero_sensitivity() {
    // B copies A exactly, so Pr(b | a) = 1 whatever the prior on A
    let net = parse_network(
        r#"{"variables":[{"name":"A","values":["t","f"]},{"name":"B","values":["t","f"]}],
            "cpts":[{"child":"A","table":[0.4,0.6]},
                    {"child":"B","parents":["A"],"table":[1.0,0.0,0.0,1.0]}]}"#,
    )
    .unwrap();
    let c = compile(&net).unwrap();
    let e = acdiff::model::parse_evidence("A=t", &net).unwrap();
    let s = QuerySession::new(&net, &c, e).unwrap();
    let y = VarValue::new(1, 0);
    // with A observed, neither A's prior nor the B|A=f column can move Pr(b|a)
    for (p, d) in s.sensitivity_all_params(y).unwrap() {
        let touches_observed_column = p.family == 1 && net.split_entry(p).0 == 0;
        if !touches_observed_column {
            assert!(d.abs() < 1e-12, "{p:?}: {d}");
        }
    }
}
