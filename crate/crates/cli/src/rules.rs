//! Parameter rules: arithmetic expressions over `n`, `lambda`, `sigma`,
//! `sigma2` and `q`, e.g. `ceil(7 * sqrt(n) * ln(n))`.

use anyhow::{anyhow, bail, Result};
use eda_lab::{Algorithm, EdaConfig, Margin, NoiseKind};
use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables,
    DefaultNumericTypes, EvalexprError, Function, HashMapContext, Node, Value,
};

use crate::config::Section;

type Ctx = HashMapContext<DefaultNumericTypes>;

/// A parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct Expr {
    pub text: String,
    tree: Node<DefaultNumericTypes>,
}

fn unary(f: fn(f64) -> f64) -> Function<DefaultNumericTypes> {
    Function::new(move |v: &Value<DefaultNumericTypes>| Ok(Value::Float(f(v.as_number()?))))
}

fn context(vars: &[(&str, f64)]) -> Ctx {
    let mut ctx = Ctx::new();
    for (name, f) in [
        ("sqrt", f64::sqrt as fn(f64) -> f64),
        ("ln", f64::ln),
        ("log2", f64::log2),
        ("exp", f64::exp),
    ] {
        ctx.set_function(name.into(), unary(f))
            .expect("functions settable");
    }
    ctx.set_function(
        "pow".into(),
        Function::new(|v: &Value<DefaultNumericTypes>| {
            let args = v.as_fixed_len_tuple(2)?;
            Ok(Value::Float(
                args[0].as_number()?.powf(args[1].as_number()?),
            ))
        }),
    )
    .expect("functions settable");
    for (name, value) in vars {
        ctx.set_value((*name).into(), Value::Float(*value))
            .expect("fresh variable");
    }
    ctx
}

impl Expr {
    pub fn parse(key: &str, text: &str) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(text)
            .map_err(|e| anyhow!("'{key}': cannot parse expression '{text}': {e}"))?;
        Ok(Expr {
            text: text.to_string(),
            tree,
        })
    }

    pub fn eval(&self, key: &str, vars: &[(&str, f64)]) -> Result<f64> {
        let ctx = context(vars);
        let v = self.tree.eval_number_with_context(&ctx).map_err(
            |e: EvalexprError<DefaultNumericTypes>| anyhow!("'{key}' = {}: {e}", self.text),
        )?;
        if !v.is_finite() {
            bail!("'{key}' = {} evaluates to {v}", self.text);
        }
        Ok(v)
    }

    /// Evaluates to a positive integer; fractional results are rejected.
    pub fn eval_count(&self, key: &str, vars: &[(&str, f64)]) -> Result<usize> {
        let v = self.eval(key, vars)?;
        if v < 1.0 || v.fract() != 0.0 {
            bail!(
                "'{key}' = {} gives {v} for {}; it must be a positive integer (wrap it in ceil() or floor())",
                self.text,
                describe(vars)
            );
        }
        Ok(v as usize)
    }
}

fn describe(vars: &[(&str, f64)]) -> String {
    vars.iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// How the margin is set: `1/n`, `borderless` or a number.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginSpec {
    OneOverN,
    Borderless,
    Fixed(f64),
}

impl MarginSpec {
    pub fn parse(value: Option<&str>) -> Result<Self> {
        match value.map(str::trim) {
            None | Some("1/n") => Ok(MarginSpec::OneOverN),
            Some("borderless") | Some("none") => Ok(MarginSpec::Borderless),
            Some(v) => {
                let m: f64 = v.parse().map_err(|_| {
                    anyhow!("'margin': expected 1/n, borderless or a number, got '{v}'")
                })?;
                Margin::new(m)?;
                Ok(MarginSpec::Fixed(m))
            }
        }
    }

    pub fn apply(&self, cfg: EdaConfig) -> Result<EdaConfig> {
        Ok(match self {
            MarginSpec::OneOverN => cfg,
            MarginSpec::Borderless => cfg.borderless(),
            MarginSpec::Fixed(m) => cfg.with_margin(Some(Margin::new(*m)?)),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            MarginSpec::OneOverN => "1/n".into(),
            MarginSpec::Borderless => "borderless".into(),
            MarginSpec::Fixed(m) => m.to_string(),
        }
    }
}

/// An algorithm with parameter expressions, resolved per `n` (and noise level).
#[derive(Debug, Clone)]
pub struct AlgoRule {
    pub algorithm: Algorithm,
    pub lambda: Option<Expr>,
    pub mu: Option<Expr>,
    pub rho: Option<Expr>,
    pub k: Option<Expr>,
    pub epsilon: Option<Expr>,
    pub margin: MarginSpec,
}

fn noise_vars(noise: NoiseKind) -> [(&'static str, f64); 3] {
    let (sigma, q) = match noise {
        NoiseKind::None => (0.0, 0.0),
        NoiseKind::Gaussian { sigma } => (sigma, 0.0),
        NoiseKind::PriorBitflip { q } => (0.0, q),
    };
    [("sigma", sigma), ("sigma2", sigma * sigma), ("q", q)]
}

impl AlgoRule {
    /// Reads `algorithm`, the parameter keys it needs and `margin` from `s`.
    /// Keys of other algorithms are left unread, so [`Section::finish`] rejects them.
    pub fn from_section(s: &Section) -> Result<Self> {
        let algorithm: Algorithm = s.require("algorithm")?.parse()?;
        let expr = |key: &str| -> Result<Expr> { Expr::parse(key, s.require(key)?) };
        let mut rule = AlgoRule {
            algorithm,
            lambda: None,
            mu: None,
            rho: None,
            k: None,
            epsilon: None,
            margin: MarginSpec::parse(s.get("margin"))?,
        };
        match algorithm {
            Algorithm::Umda => {
                rule.lambda = Some(expr("lambda")?);
                rule.mu = Some(expr("mu")?);
            }
            Algorithm::Pbil => {
                rule.lambda = Some(expr("lambda")?);
                rule.mu = Some(expr("mu")?);
                rule.rho = Some(expr("rho")?);
            }
            Algorithm::MmasIb => {
                rule.lambda = Some(expr("lambda")?);
                rule.rho = Some(expr("rho")?);
            }
            Algorithm::Cga => rule.k = Some(expr("K")?),
            Algorithm::SigCga => rule.epsilon = Some(expr("epsilon")?),
        }
        Ok(rule)
    }

    pub fn resolve(&self, n: usize, noise: NoiseKind) -> Result<EdaConfig> {
        let mut vars: Vec<(&str, f64)> = vec![("n", n as f64)];
        vars.extend(noise_vars(noise));
        fn get(e: &Option<Expr>) -> &Expr {
            e.as_ref().expect("present for this algorithm")
        }
        let cfg = match self.algorithm {
            Algorithm::Umda | Algorithm::Pbil | Algorithm::MmasIb => {
                let lambda = get(&self.lambda).eval_count("lambda", &vars)?;
                vars.push(("lambda", lambda as f64));
                match self.algorithm {
                    Algorithm::Umda => {
                        EdaConfig::umda(n, lambda, get(&self.mu).eval_count("mu", &vars)?)
                    }
                    Algorithm::Pbil => EdaConfig::pbil(
                        n,
                        lambda,
                        get(&self.mu).eval_count("mu", &vars)?,
                        get(&self.rho).eval("rho", &vars)?,
                    ),
                    _ => EdaConfig::mmas_ib(n, lambda, get(&self.rho).eval("rho", &vars)?),
                }
            }
            Algorithm::Cga => EdaConfig::cga(n, get(&self.k).eval("K", &vars)?),
            Algorithm::SigCga => EdaConfig::sig_cga(n, get(&self.epsilon).eval("epsilon", &vars)?),
        };
        let cfg = self.margin.apply(cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `key=expr` pairs for output metadata.
    pub fn describe(&self) -> String {
        let mut parts = vec![format!("algorithm={}", self.algorithm.name())];
        for (k, e) in [
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("rho", &self.rho),
            ("K", &self.k),
            ("epsilon", &self.epsilon),
        ] {
            if let Some(e) = e {
                parts.push(format!("{k}={}", e.text));
            }
        }
        parts.push(format!("margin={}", self.margin.describe()));
        parts.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    #[test]
    fn expressions_with_functions() {
        let e = Expr::parse("K", "ceil(7 * sqrt(n) * ln(n))").unwrap();
        let k = e.eval("K", &[("n", 100.0)]).unwrap();
        assert_eq!(k, (7.0 * 10.0 * 100f64.ln()).ceil());
        let half = Expr::parse("mu", "lambda / 2").unwrap();
        assert_eq!(half.eval_count("mu", &[("lambda", 30.0)]).unwrap(), 15);
        assert!(half.eval_count("mu", &[("lambda", 31.0)]).is_err());
        let p = Expr::parse("x", "pow(2, 10) + log2(8) + exp(0)").unwrap();
        assert_eq!(p.eval("x", &[]).unwrap(), 1028.0);
        assert!(Expr::parse("x", "1 +")
            .and_then(|e| e.eval("x", &[]))
            .is_err());
        assert!(Expr::parse("x", "(1").is_err());
        assert!(Expr::parse("x", "m * 2")
            .unwrap()
            .eval("x", &[("n", 1.0)])
            .is_err());
    }

    #[test]
    fn rule_resolution() {
        let c = ConfigFile::parse(
            "[a]\nalgorithm = umda\nlambda = ceil(ceil(sqrt(n)) * ln(n))\nmu = floor(lambda / 2)\n",
        )
        .unwrap();
        let s = c.section("a").unwrap();
        let r = AlgoRule::from_section(s).unwrap();
        s.finish().unwrap();
        let cfg = r.resolve(100, NoiseKind::None).unwrap();
        let lambda = (10.0 * 100f64.ln()).ceil() as usize;
        assert_eq!(cfg, EdaConfig::umda(100, lambda, lambda / 2));
    }

    #[test]
    fn foreign_parameters_are_rejected() {
        let c = ConfigFile::parse("[a]\nalgorithm = cga\nK = 10\nlambda = 4\n").unwrap();
        let s = c.section("a").unwrap();
        AlgoRule::from_section(s).unwrap();
        assert!(s.finish().unwrap_err().to_string().contains("lambda"));
    }

    #[test]
    fn noise_variables() {
        let c = ConfigFile::parse(
            "[a]\nalgorithm = cga\nK = ceil(7 * (1 + sigma2) * sqrt(n) * ln(n))\n",
        )
        .unwrap();
        let r = AlgoRule::from_section(c.section("a").unwrap()).unwrap();
        let cfg = r.resolve(100, NoiseKind::Gaussian { sigma: 2.0 }).unwrap();
        assert_eq!(cfg.k(), Some((35.0 * 10.0 * 100f64.ln()).ceil()));
    }

    #[test]
    fn margins() {
        assert_eq!(MarginSpec::parse(None).unwrap(), MarginSpec::OneOverN);
        assert_eq!(
            MarginSpec::parse(Some("borderless")).unwrap(),
            MarginSpec::Borderless
        );
        assert_eq!(
            MarginSpec::parse(Some("0.01")).unwrap(),
            MarginSpec::Fixed(0.01)
        );
        assert!(MarginSpec::parse(Some("0.7")).is_err());
        assert!(MarginSpec::parse(Some("wide")).is_err());
    }
}
