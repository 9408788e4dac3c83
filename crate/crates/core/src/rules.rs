//! Multiple-conclusion rules and calculi.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::syntax::{Formula, Signature};

/// Where a generated rule came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleTag {
    /// Existence of a value: one rule per choice of separators.
    Exists,
    /// Designation split for the value with this label.
    Designation(String),
    /// Connective, argument labels and the excluded output label.
    Sigma { conn: String, args: Vec<String>, excluded: String },
    /// A set of values that no valuation realises together.
    Incompatible(Vec<String>),
    User,
}

/// `premises / conclusions`, read disjunctively on the right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: String,
    pub premises: Vec<Formula>,
    pub conclusions: Vec<Formula>,
    pub tag: RuleTag,
}

impl Rule {
    pub fn new(name: impl Into<String>, premises: Vec<Formula>, conclusions: Vec<Formula>, tag: RuleTag) -> Rule {
        Rule {
            name: name.into(),
            premises: dedup(premises),
            conclusions: dedup(conclusions),
            tag,
        }
    }

    pub fn user(name: impl Into<String>, premises: Vec<Formula>, conclusions: Vec<Formula>) -> Rule {
        Rule::new(name, premises, conclusions, RuleTag::User)
    }

    /// Some premise is also a conclusion.
    pub fn is_trivial(&self) -> bool {
        self.premises.iter().any(|p| self.conclusions.contains(p))
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        self.premises
            .iter()
            .chain(&self.conclusions)
            .flat_map(Formula::vars)
            .collect()
    }

    /// Apply a substitution to both sides.
    pub fn instantiate(&self, sigma: &BTreeMap<u32, Formula>) -> (Vec<Formula>, Vec<Formula>) {
        (
            self.premises.iter().map(|f| f.substitute(sigma)).collect(),
            self.conclusions.iter().map(|f| f.substitute(sigma)).collect(),
        )
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Rule, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let side = |xs: &[Formula]| xs.iter().map(|a| a.display(self.1).to_string()).collect::<Vec<_>>().join(", ");
                write!(f, "{}: {} / {}", self.0.name, side(&self.0.premises), side(&self.0.conclusions))
            }
        }
        D(self, sig)
    }
}

fn dedup(xs: Vec<Formula>) -> Vec<Formula> {
    let mut seen = BTreeSet::new();
    xs.into_iter().filter(|f| seen.insert(f.clone())).collect()
}

/// A rule set over a signature together with the separators bounding its
/// analytic proofs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Calculus {
    pub sig: Signature,
    pub separators: Vec<Formula>,
    pub rules: Vec<Rule>,
}

impl Calculus {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }
}
