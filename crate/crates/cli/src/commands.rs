use std::fs;
use std::path::Path;

use acdiff::compiler::{
    deserialize_circuit, serialize_circuit, ve_compile, Circuit, EliminationOrder, Node,
};
use acdiff::model::{parse_evidence, parse_network, Evidence, Network, ParamId, VarValue};
use acdiff::oracle::{oracle_conditional, oracle_prob, MAX_ORACLE_VARS};
use acdiff::queries::{QuerySession, Tweak};
use acdiff::Error;

use crate::args::{
    CompileArgs, OracleArgs, QueryArgs, SensitivityArgs, Session, StatsArgs, TweakArgs,
};
use crate::format::{fixed5, sig12};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_QUERY: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn usage(err: Error) -> Self {
        Self::new(EXIT_USAGE, err.to_string())
    }

    fn input(err: Error) -> Self {
        Self::new(EXIT_INPUT, err.to_string())
    }

    /// Query-time errors: conditions on the evidence are numeric failures,
    /// everything else says the request itself was ill-formed.
    fn query(err: Error) -> Self {
        match err {
            Error::ZeroProbability
            | Error::ZeroRetraction
            | Error::TargetObserved(_)
            | Error::OracleTooLarge { .. } => Self::new(EXIT_QUERY, err.to_string()),
            other => Self::usage(other),
        }
    }
}

/// Report lines for standard output plus the exit status. Rows that fail
/// are reported on standard error and the remaining rows still print.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub failure: Option<Failure>,
}

impl Report {
    fn row(&mut self, key: impl AsRef<str>, value: impl AsRef<str>) {
        self.lines
            .push(format!("{}\t{}", key.as_ref(), value.as_ref()));
    }

    fn fail(&mut self, failure: Failure) {
        eprintln!("error: {}", failure.message);
        if self.failure.is_none() {
            self.failure = Some(failure);
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    parse_network(&read(path)?).map_err(Failure::input)
}

fn load_session(s: &Session) -> Result<(Network, Circuit, Evidence), Failure> {
    let net = load_network(&s.network)?;
    let circuit = deserialize_circuit(&read(&s.circuit)?, &net).map_err(Failure::input)?;
    let evidence = parse_evidence(&s.evidence, &net).map_err(Failure::input)?;
    Ok((net, circuit, evidence))
}

fn choose_order(net: &Network, order: Option<&[String]>) -> Result<EliminationOrder, Failure> {
    match order {
        Some(names) => EliminationOrder::from_names(net, names).map_err(Failure::usage),
        None => Ok(EliminationOrder::min_fill(net)),
    }
}

fn parse_value(net: &Network, text: &str) -> Result<VarValue, Failure> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Failure::new(EXIT_USAGE, format!("expected `Var=value`, got `{text}`")))?;
    net.lookup(name.trim(), value.trim())
        .map_err(Failure::usage)
}

fn parse_var(net: &Network, name: &str) -> Result<usize, Failure> {
    net.var_index(name.trim())
        .ok_or_else(|| Failure::usage(Error::UnknownVariable(name.to_string())))
}

fn parse_param(net: &Network, text: &str) -> Result<ParamId, Failure> {
    net.parse_param(text).map_err(Failure::usage)
}

/// `Child=x|Parent=u`, without the trailing bar on root parameters.
fn param_key(net: &Network, p: ParamId) -> String {
    net.param_label(p).trim_end_matches('|').to_string()
}

pub fn run_compile(args: &CompileArgs) -> Result<Report, Failure> {
    let net = load_network(&args.input)?;
    let order = choose_order(&net, args.order.as_deref())?;
    let circuit = ve_compile(&net, &order).map_err(Failure::input)?;
    let text = serialize_circuit(&circuit, &net);
    let order_names: Vec<&str> = order
        .order()
        .iter()
        .map(|&v| net.variable(v).name.as_str())
        .collect();
    eprintln!("nodes\t{}", circuit.len());
    eprintln!("edges\t{}", circuit.edge_count());
    eprintln!("width\t{}", order.width());
    eprintln!("order\t{}", order_names.join(","));
    let mut report = Report::default();
    match &args.output {
        Some(path) => fs::write(path, text).map_err(|e| {
            Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display()))
        })?,
        None => report.lines.extend(text.lines().map(str::to_string)),
    }
    Ok(report)
}

pub fn run_query(args: &QueryArgs) -> Result<Report, Failure> {
    let (net, circuit, evidence) = load_session(&args.session)?;
    let retract: Vec<usize> = args
        .retract
        .iter()
        .map(|name| parse_var(&net, name))
        .collect::<Result<_, _>>()?;
    let what_if: Vec<VarValue> = args
        .what_if
        .iter()
        .map(|text| parse_value(&net, text))
        .collect::<Result<_, _>>()?;
    let s = QuerySession::new(&net, &circuit, evidence).map_err(Failure::input)?;
    let mut report = Report::default();

    if args.prob {
        report.row("P(e)", sig12(s.prob_evidence()));
    }
    if args.marginals {
        for var in 0..net.len() {
            match s.posterior_marginal(var) {
                Ok(post) => {
                    for (x, p) in post.iter().enumerate() {
                        report.row(
                            format!("P({}|e)", net.label(VarValue::new(var, x))),
                            sig12(*p),
                        );
                    }
                }
                Err(e) => {
                    report.fail(Failure::query(e));
                    break;
                }
            }
        }
    }
    if args.families {
        for p in net.params() {
            match s.family_marginal(p) {
                Ok(v) => {
                    let mut inst = net.decode_entry(p);
                    inst.rotate_right(1);
                    let labels: Vec<String> = inst.iter().map(|vv| net.label(*vv)).collect();
                    report.row(format!("P({}|e)", labels.join(",")), sig12(v));
                }
                Err(e) => {
                    report.fail(Failure::query(e));
                    break;
                }
            }
        }
    }
    for &var in &retract {
        let name = &net.variable(var).name;
        match s.retraction(var) {
            Ok(r) => {
                report.row(format!("P(e-{name})"), sig12(r.probability));
                for (x, p) in r.posterior.iter().enumerate() {
                    let label = net.label(VarValue::new(var, x));
                    report.row(format!("P({label}|e-{name})"), sig12(*p));
                }
            }
            Err(e) => {
                report.row(format!("P(e-{name})"), "0");
                report.fail(Failure::query(e));
            }
        }
    }
    for &x in &what_if {
        let name = &net.variable(x.var).name;
        report.row(format!("P({},e-{name})", net.label(x)), sig12(s.what_if(x)));
    }
    Ok(report)
}

pub fn run_sensitivity(args: &SensitivityArgs) -> Result<Report, Failure> {
    let (net, circuit, evidence) = load_session(&args.session)?;
    let target = args
        .target
        .as_deref()
        .map(|t| parse_value(&net, t))
        .transpose()?;
    let param = args
        .param
        .as_deref()
        .map(|p| parse_param(&net, p))
        .transpose()?;
    let s = QuerySession::new(&net, &circuit, evidence).map_err(Failure::input)?;
    let key =
        |y: VarValue, p: ParamId| format!("dP({}|e)/dtheta({})", net.label(y), param_key(&net, p));
    let mut report = Report::default();
    match (target, param) {
        (Some(y), _) if args.all_params => {
            for (p, d) in s.sensitivity_all_params(y).map_err(Failure::query)? {
                report.row(key(y, p), sig12(d));
            }
        }
        (_, Some(p)) if args.all_targets => {
            for (y, d) in s.sensitivity_all_targets(p).map_err(Failure::query)? {
                report.row(key(y, p), sig12(d));
            }
        }
        (Some(y), Some(p)) => {
            let d = s.sensitivity_theta(y, p).map_err(Failure::query)?;
            report.row(key(y, p), sig12(d));
        }
        _ => return Err(Failure::new(EXIT_USAGE, "need --target and --param")),
    }
    Ok(report)
}

pub fn run_tweak(args: &TweakArgs) -> Result<Report, Failure> {
    let (net, circuit, evidence) = load_session(&args.session)?;
    let y = parse_value(&net, &args.target)?;
    let f = parse_param(&net, &args.param)?;
    let s = QuerySession::new(&net, &circuit, evidence.clone()).map_err(Failure::input)?;
    let mut report = Report::default();
    let (delta, theta_prime) = match s.tweak_binary(y, f).map_err(Failure::query)? {
        Tweak::Feasible {
            delta_min,
            theta_prime_min,
        } => (delta_min, theta_prime_min),
        Tweak::Infeasible { required_theta } => {
            if let Some(t) = required_theta {
                eprintln!("required value {} lies outside [0, 1]", sig12(t));
            }
            report.lines.push("INFEASIBLE".into());
            return Ok(report);
        }
    };
    report.row("delta_min", fixed5(delta));
    report.row("theta_prime_min", fixed5(theta_prime));

    if args.verify {
        if net.len() > MAX_ORACLE_VARS {
            eprintln!("verify skipped: network exceeds {MAX_ORACLE_VARS} variables");
            return Ok(report);
        }
        let (u, x) = net.split_entry(f);
        let f_bar = net.param(f.family, u, 1 - x);
        let tweaked = net
            .with_theta(f, theta_prime)
            .with_theta(f_bar, 1.0 - theta_prime);
        let y_bar = VarValue::new(y.var, 1 - y.value);
        let py = oracle_conditional(&tweaked, y, &evidence).map_err(Failure::query)?;
        let pyb = oracle_conditional(&tweaked, y_bar, &evidence).map_err(Failure::query)?;
        report.row(format!("verify_P({}|e)", net.label(y)), sig12(py));
        report.row(format!("verify_P({}|e)", net.label(y_bar)), sig12(pyb));
        if py <= pyb + 1e-9 {
            report.row("verify", "ranking holds");
        } else {
            report.row("verify", "ranking fails");
            report.fail(Failure::new(
                EXIT_QUERY,
                "tweaked network does not satisfy the ranking",
            ));
        }
    }
    Ok(report)
}

pub fn run_stats(args: &StatsArgs) -> Result<Report, Failure> {
    let net = load_network(&args.network)?;
    let (circuit, width) = match &args.circuit {
        Some(path) => (
            deserialize_circuit(&read(path)?, &net).map_err(Failure::input)?,
            None,
        ),
        None => {
            let order = choose_order(&net, args.order.as_deref())?;
            let circuit = ve_compile(&net, &order).map_err(Failure::input)?;
            (circuit, Some(order.width()))
        }
    };
    let count = |pred: fn(&Node) -> bool| circuit.nodes().iter().filter(|n| pred(n)).count();
    let mut report = Report::default();
    report.row("variables", net.len().to_string());
    report.row("parameters", net.params().count().to_string());
    report.row("nodes", circuit.len().to_string());
    report.row("edges", circuit.edge_count().to_string());
    report.row("leaves", circuit.leaf_count().to_string());
    report.row("add", count(|n| matches!(n, Node::Add(_))).to_string());
    report.row("mul", count(|n| matches!(n, Node::Mul(_))).to_string());
    if let Some(w) = width {
        report.row("width", w.to_string());
    }
    Ok(report)
}

pub fn run_oracle(args: &OracleArgs) -> Result<Report, Failure> {
    let net = load_network(&args.network)?;
    let evidence = parse_evidence(&args.evidence, &net).map_err(Failure::input)?;
    let mut report = Report::default();
    report.row(
        "P(e)",
        sig12(oracle_prob(&net, &evidence).map_err(Failure::query)?),
    );
    for y in net.var_values() {
        match oracle_conditional(&net, y, &evidence) {
            Ok(p) => report.row(format!("P({}|e)", net.label(y)), sig12(p)),
            Err(e) => {
                report.fail(Failure::query(e));
                break;
            }
        }
    }
    Ok(report)
}
