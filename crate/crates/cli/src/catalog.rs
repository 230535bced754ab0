//! Built-in experiment settings.

use smoothnet::activation::ActivationKind;

use crate::spec::ExperimentSpec;

pub struct Entry {
    pub key: &'static str,
    pub expr: &'static str,
    pub dim: usize,
}

pub const ENTRIES: &[Entry] = &[
    Entry { key: "cubic", expr: "x^3+3", dim: 1 },
    Entry { key: "cubic32", expr: "32*x^3+3", dim: 1 },
    Entry { key: "exp2", expr: "exp(2*x)", dim: 1 },
    Entry { key: "exp8", expr: "exp(8*x)", dim: 1 },
    Entry { key: "sin15", expr: "30*(sin(15*x)+1)", dim: 1 },
    Entry { key: "sin6", expr: "30*sin(6*x+3)+3", dim: 1 },
    Entry { key: "cubic2d", expr: "16*(x^3+y^3)+3", dim: 2 },
    Entry { key: "sin2d", expr: "sin(3*(x+y+1))+3", dim: 2 },
    Entry { key: "sin20", expr: "sin(20*x)", dim: 1 },
];

pub fn lookup(name: &str) -> Option<&'static Entry> {
    let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
    let name = squash(name);
    ENTRIES.iter().find(|e| e.key == name || e.expr == name)
}

/// Spec with the catalog's training and threshold settings.
pub fn spec_for(e: &Entry) -> ExperimentSpec {
    let mut s = ExperimentSpec { name: e.key.to_string(), function: e.expr.to_string(), dim: Some(e.dim), ..Default::default() };
    match e.key {
        "cubic32" => s.thresholds.gamma3 = 0.05,
        "sin20" => {
            s.train.kind = ActivationKind::Tanh;
            s.train.theta = 20;
        }
        "cubic2d" | "sin2d" => {
            s.grid = 0.1;
            s.train.theta = 20;
            s.train.lr = 0.01;
            s.thresholds.scan_step = 0.1;
        }
        _ => {}
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use smoothnet::expr::Expr;

    #[test]
    fn entries_parse_with_declared_dim() {
        for e in ENTRIES {
            let x = Expr::parse(e.expr).unwrap();
            assert_eq!(smoothnet::func::Field::dim(&x), e.dim, "{}", e.key);
        }
    }

    #[test]
    fn lookup_by_key_or_expression() {
        assert_eq!(lookup("cubic32").unwrap().expr, "32*x^3+3");
        assert_eq!(lookup("16*(x^3 + y^3)+3").unwrap().key, "cubic2d");
        assert!(lookup("x^4").is_none());
        assert_eq!(spec_for(lookup("cubic32").unwrap()).thresholds.gamma3, 0.05);
    }
}
