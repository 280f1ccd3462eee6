//! The `if Uniform >= Theta[k]` fragment of the Sum-Product Loop Language.
//!
//! A program is a binary decision tree. Each branch compares a fresh uniform
//! draw `u ∈ [0, 1)` with a parameter `θ_k` and takes the `then` side iff
//! `u >= θ_k`, so the `then` side has probability `1 - θ_k` and the `else`
//! side `θ_k`. Leaves are outcomes: `null`, `true`, `false` or a bracketed
//! list of booleans.
//!
//! ```
//! use adkit_core::spll::{outcome_density, parse_spll, Outcome};
//! use adkit_core::{eval, Env};
//!
//! let p = parse_spll("main = Uniform >= Theta[1]").unwrap();
//! let d = outcome_density(&p, &Outcome::Bool(false)).unwrap();
//! assert_eq!(eval(&d, &Env::new(vec![0.3])).unwrap(), 0.3);
//! ```

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::expr::{Env, Expr};
use crate::optim::{self, FitConfig, FitError, FitResult};
use crate::{seeded_rng, SeededRng};

/// Value produced by a program run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Null,
    Bool(bool),
    List(Vec<bool>),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Null => f.write_str("null"),
            Outcome::Bool(b) => write!(f, "{b}"),
            Outcome::List(items) => {
                f.write_str("[")?;
                for (i, b) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{b}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl FromStr for Outcome {
    type Err = SpllError;

    /// Parses a single outcome token; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser::new(s)?;
        let o = p.outcome()?;
        p.expect_end()?;
        Ok(o)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpllProgram {
    Branch { theta: u32, then_branch: Box<SpllProgram>, else_branch: Box<SpllProgram> },
    Leaf(Outcome),
}

impl SpllProgram {
    pub fn branch(theta: u32, then_branch: SpllProgram, else_branch: SpllProgram) -> Self {
        SpllProgram::Branch {
            theta,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    /// Leaf outcomes, `then` side first.
    pub fn leaves(&self) -> Vec<&Outcome> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Outcome>) {
        match self {
            SpllProgram::Leaf(o) => out.push(o),
            SpllProgram::Branch { then_branch, else_branch, .. } => {
                then_branch.collect_leaves(out);
                else_branch.collect_leaves(out);
            }
        }
    }

    /// Largest θ index used; the length an `Env` of parameters must have.
    pub fn theta_count(&self) -> usize {
        match self {
            SpllProgram::Leaf(_) => 0,
            SpllProgram::Branch { theta, then_branch, else_branch } => (*theta as usize)
                .max(then_branch.theta_count())
                .max(else_branch.theta_count()),
        }
    }

    /// Number of branches on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            SpllProgram::Leaf(_) => 0,
            SpllProgram::Branch { then_branch, else_branch, .. } => {
                1 + then_branch.depth().max(else_branch.depth())
            }
        }
    }

    /// Root-to-leaf path as `(θ index, took then-branch)` pairs.
    fn path_to(&self, target: &Outcome) -> Option<Vec<(u32, bool)>> {
        match self {
            SpllProgram::Leaf(o) => (o == target).then(Vec::new),
            SpllProgram::Branch { theta, then_branch, else_branch } => {
                let (side, mut path) = match then_branch.path_to(target) {
                    Some(p) => (true, p),
                    None => (false, else_branch.path_to(target)?),
                };
                path.insert(0, (*theta, side));
                Some(path)
            }
        }
    }
}

impl fmt::Display for SpllProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(p: &SpllProgram, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match p {
                SpllProgram::Leaf(o) => write!(f, "{o}"),
                SpllProgram::Branch { theta, then_branch, else_branch } => {
                    write!(f, "if Uniform >= Theta[{theta}] then ")?;
                    go(then_branch, f)?;
                    f.write_str(" else ")?;
                    go(else_branch, f)
                }
            }
        }
        f.write_str("main = ")?;
        go(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SpllError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("Theta indices start at 1")]
    ThetaIndex,
    #[error("outcome {0} appears at more than one leaf")]
    DuplicateOutcome(Outcome),
    #[error("outcome {0} is not produced by the program")]
    UnknownOutcome(Outcome),
    #[error("Theta[{index}] = {value} is outside [0, 1]")]
    ThetaOutOfRange { index: usize, value: f64 },
    #[error("the program uses Theta[{needed}] but only {given} values were supplied")]
    MissingTheta { needed: usize, given: usize },
    #[error("the sample set is empty")]
    NoSamples,
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Parses a complete program, `main = ...`.
pub fn parse_spll(text: &str) -> Result<SpllProgram, SpllError> {
    let mut p = Parser::new(text)?;
    p.keyword("main")?;
    p.punct(Tok::Eq)?;
    let program = p.program()?;
    p.expect_end()?;
    let mut seen = Vec::new();
    for o in program.leaves() {
        if seen.contains(&o) {
            return Err(SpllError::DuplicateOutcome(o.clone()));
        }
        seen.push(o);
    }
    Ok(program)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Int(u64),
    Eq,
    Ge,
    LBracket,
    RBracket,
    Comma,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn new(text: &str) -> Result<Parser, SpllError> {
        let mut toks = Vec::new();
        let (mut line, mut column) = (1, 1);
        let mut chars = text.chars().peekable();
        while let Some(&c) = chars.peek() {
            let at = (line, column);
            let mut advance = |chars: &mut core::iter::Peekable<core::str::Chars<'_>>| {
                let c = chars.next();
                if c == Some('\n') {
                    line += 1;
                    column = 1;
                } else {
                    column += 1;
                }
                c
            };
            let tok = match c {
                c if c.is_whitespace() => {
                    advance(&mut chars);
                    continue;
                }
                '=' => {
                    advance(&mut chars);
                    Tok::Eq
                }
                '>' => {
                    advance(&mut chars);
                    if chars.peek() != Some(&'=') {
                        return Err(syntax(at, "expected `>=`"));
                    }
                    advance(&mut chars);
                    Tok::Ge
                }
                '[' | ']' | ',' | '(' | ')' => {
                    advance(&mut chars);
                    match c {
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ',' => Tok::Comma,
                        '(' => Tok::LParen,
                        _ => Tok::RParen,
                    }
                }
                c if c.is_ascii_digit() => {
                    let mut n: u64 = 0;
                    while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                        n = n
                            .checked_mul(10)
                            .and_then(|n| n.checked_add(d as u64))
                            .ok_or_else(|| syntax(at, "number too large"))?;
                        advance(&mut chars);
                    }
                    Tok::Int(n)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut w = String::new();
                    while let Some(&c) = chars.peek() {
                        if !(c.is_ascii_alphanumeric() || c == '_') {
                            break;
                        }
                        w.push(c);
                        advance(&mut chars);
                    }
                    Tok::Word(w)
                }
                other => {
                    return Err(syntax(at, &alloc::format!("unexpected character `{other}`")))
                }
            };
            toks.push((tok, at.0, at.1));
        }
        Ok(Parser { toks, pos: 0, end: (line, column) })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |&(_, l, c)| (l, c))
    }

    fn error(&self, message: &str) -> SpllError {
        let found = match self.peek() {
            Some(t) => alloc::format!("{message}, found {t}"),
            None => alloc::format!("{message}, found end of input"),
        };
        syntax(self.here(), &found)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn punct(&mut self, want: Tok) -> Result<(), SpllError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected {want}")))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn keyword(&mut self, w: &str) -> Result<(), SpllError> {
        if self.is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected `{w}`")))
        }
    }

    fn expect_end(&self) -> Result<(), SpllError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error("expected end of input")),
        }
    }

    fn program(&mut self) -> Result<SpllProgram, SpllError> {
        if self.is_word("if") {
            self.pos += 1;
            let theta = self.condition()?;
            self.keyword("then")?;
            let then_branch = self.program()?;
            self.keyword("else")?;
            let else_branch = self.program()?;
            Ok(SpllProgram::branch(theta, then_branch, else_branch))
        } else if self.is_word("Uniform") {
            // A bare comparison is a program returning its boolean value.
            let theta = self.condition()?;
            Ok(SpllProgram::branch(
                theta,
                SpllProgram::Leaf(Outcome::Bool(true)),
                SpllProgram::Leaf(Outcome::Bool(false)),
            ))
        } else if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let p = self.program()?;
            self.punct(Tok::RParen)?;
            Ok(p)
        } else {
            Ok(SpllProgram::Leaf(self.outcome()?))
        }
    }

    fn condition(&mut self) -> Result<u32, SpllError> {
        self.keyword("Uniform")?;
        self.punct(Tok::Ge)?;
        self.keyword("Theta")?;
        self.punct(Tok::LBracket)?;
        let k = match self.peek() {
            Some(&Tok::Int(k)) => k,
            _ => return Err(self.error("expected a Theta index")),
        };
        self.pos += 1;
        self.punct(Tok::RBracket)?;
        match u32::try_from(k) {
            Ok(0) => Err(SpllError::ThetaIndex),
            Ok(k) => Ok(k),
            Err(_) => Err(self.error("Theta index too large")),
        }
    }

    fn boolean(&mut self) -> Option<bool> {
        let b = match self.peek() {
            Some(Tok::Word(w)) if w == "true" => true,
            Some(Tok::Word(w)) if w == "false" => false,
            _ => return None,
        };
        self.pos += 1;
        Some(b)
    }

    fn outcome(&mut self) -> Result<Outcome, SpllError> {
        if self.is_word("null") {
            self.pos += 1;
            return Ok(Outcome::Null);
        }
        if let Some(b) = self.boolean() {
            return Ok(Outcome::Bool(b));
        }
        if self.peek() != Some(&Tok::LBracket) {
            return Err(self.error("expected an outcome"));
        }
        self.pos += 1;
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::RBracket) {
            self.pos += 1;
            return Ok(Outcome::List(items));
        }
        loop {
            items.push(self.boolean().ok_or_else(|| self.error("expected `true` or `false`"))?);
            match self.next() {
                Some(Tok::Comma) => {}
                Some(Tok::RBracket) => return Ok(Outcome::List(items)),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected `,` or `]`"));
                }
            }
        }
    }
}

fn syntax((line, column): (usize, usize), message: &str) -> SpllError {
    SpllError::Syntax { line, column, message: message.to_string() }
}

/// Probability of `o` as an expression over the θ variables: the product of
/// `1 - θ_k` for every `then` edge and `θ_k` for every `else` edge on the
/// path to `o`. A program that is a single leaf has density 1.
pub fn outcome_density(p: &SpllProgram, o: &Outcome) -> Result<Expr, SpllError> {
    let path = p.path_to(o).ok_or_else(|| SpllError::UnknownOutcome(o.clone()))?;
    let factors = path.into_iter().map(|(k, then_side)| {
        if then_side {
            Expr::sub(Expr::lit(1.0), Expr::var(k))
        } else {
            Expr::var(k)
        }
    });
    Ok(factors.reduce(Expr::mul).unwrap_or(Expr::Lit(1.0)))
}

fn check_theta(p: &SpllProgram, theta: &Env) -> Result<(), SpllError> {
    let needed = p.theta_count();
    if theta.len() < needed {
        return Err(SpllError::MissingTheta { needed, given: theta.len() });
    }
    match theta.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(SpllError::ThetaOutOfRange { index: i + 1, value: theta.values()[i] }),
        None => Ok(()),
    }
}

/// One run of the program, drawing from `rng`.
pub fn sample_with(
    p: &SpllProgram,
    theta: &Env,
    rng: &mut impl Rng,
) -> Result<Outcome, SpllError> {
    check_theta(p, theta)?;
    Ok(run(p, theta.values(), rng).clone())
}

fn run<'a>(mut p: &'a SpllProgram, theta: &[f64], rng: &mut impl Rng) -> &'a Outcome {
    loop {
        match p {
            SpllProgram::Leaf(o) => return o,
            SpllProgram::Branch { theta: k, then_branch, else_branch } => {
                let u: f64 = rng.random();
                p = if u >= theta[*k as usize - 1] { then_branch } else { else_branch };
            }
        }
    }
}

/// One seeded run of the program.
pub fn sample(p: &SpllProgram, theta: &Env, rng_seed: u64) -> Result<Outcome, SpllError> {
    sample_with(p, theta, &mut seeded_rng(rng_seed))
}

/// `count` runs from one seeded generator.
pub fn sample_many(
    p: &SpllProgram,
    theta: &Env,
    rng_seed: u64,
    count: usize,
) -> Result<Vec<Outcome>, SpllError> {
    check_theta(p, theta)?;
    let mut rng: SeededRng = seeded_rng(rng_seed);
    Ok((0..count).map(|_| run(p, theta.values(), &mut rng).clone()).collect())
}

/// Observed outcome counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleSet {
    counts: BTreeMap<Outcome, u64>,
}

impl SampleSet {
    pub fn new() -> Self {
        SampleSet::default()
    }

    pub fn add(&mut self, o: Outcome, count: u64) {
        *self.counts.entry(o).or_insert(0) += count;
    }

    pub fn count(&self, o: &Outcome) -> u64 {
        self.counts.get(o).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, u64)> + '_ {
        self.counts.iter().map(|(o, &c)| (o, c))
    }
}

impl FromIterator<(Outcome, u64)> for SampleSet {
    fn from_iter<I: IntoIterator<Item = (Outcome, u64)>>(iter: I) -> Self {
        let mut s = SampleSet::new();
        for (o, c) in iter {
            s.add(o, c);
        }
        s
    }
}

impl FromIterator<Outcome> for SampleSet {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        iter.into_iter().map(|o| (o, 1)).collect()
    }
}

/// Negative log-likelihood of `samples` under `p`.
pub fn spll_nll(p: &SpllProgram, samples: &SampleSet) -> Result<Expr, SpllError> {
    if samples.total() == 0 {
        return Err(SpllError::NoSamples);
    }
    let terms = samples
        .iter()
        .filter(|&(_, c)| c > 0)
        .map(|(o, c)| Ok((outcome_density(p, o)?, c)))
        .collect::<Result<Vec<_>, SpllError>>()?;
    Ok(optim::nll(terms))
}

/// Maximum-likelihood θ by gradient descent on [`spll_nll`].
pub fn fit_spll(
    p: &SpllProgram,
    samples: &SampleSet,
    initial: Env,
    config: &FitConfig,
) -> Result<FitResult, SpllError> {
    let objective = spll_nll(p, samples)?;
    if initial.len() < p.theta_count() {
        return Err(SpllError::MissingTheta { needed: p.theta_count(), given: initial.len() });
    }
    Ok(optim::gradient_descent(&objective, initial, config)?)
}

/// Closed-form maximum-likelihood θ for programs in which every index occurs
/// at exactly one branch: `θ_k` is the fraction of the mass reaching that
/// branch that leaves through `else`. Entries are `None` for indices that are
/// unused, repeated or reached by no sample.
pub fn closed_form_mle(p: &SpllProgram, samples: &SampleSet) -> Vec<Option<f64>> {
    fn mass(p: &SpllProgram, samples: &SampleSet, out: &mut [(u32, f64, f64)]) -> u64 {
        match p {
            SpllProgram::Leaf(o) => samples.count(o),
            SpllProgram::Branch { theta, then_branch, else_branch } => {
                let t = mass(then_branch, samples, out);
                let e = mass(else_branch, samples, out);
                let slot = &mut out[*theta as usize - 1];
                slot.0 += 1;
                slot.1 += e as f64;
                slot.2 += (t + e) as f64;
                t + e
            }
        }
    }
    let mut acc = alloc::vec![(0u32, 0.0, 0.0); p.theta_count()];
    mass(p, samples, &mut acc);
    acc.into_iter()
        .map(|(uses, e, total)| (uses == 1 && total > 0.0).then(|| e / total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval;
    use alloc::vec;

    pub(crate) const SIX: &str = "
main = if Uniform >= Theta[1]
       then if Uniform >= Theta[2]
            then if Uniform >= Theta[3] then null    else [true]
            else if Uniform >= Theta[4] then [false] else [true,true]
       else if Uniform >= Theta[5]
            then if Uniform >= Theta[6] then [true,false] else [false,true]
            else [false,false]
";

    fn lst(items: &[bool]) -> Outcome {
        Outcome::List(items.to_vec())
    }

    #[test]
    fn parse_examples() {
        let p = parse_spll("main = if Uniform >= Theta[1] then [true] else [false]").unwrap();
        assert_eq!(
            p,
            SpllProgram::branch(1, SpllProgram::Leaf(lst(&[true])), SpllProgram::Leaf(lst(&[false])))
        );
        assert_eq!(parse_spll("main = null").unwrap(), SpllProgram::Leaf(Outcome::Null));

        let six = parse_spll(SIX).unwrap();
        assert_eq!(six.depth(), 3);
        assert_eq!(six.leaves().len(), 7);
        assert_eq!(six.theta_count(), 6);
    }

    #[test]
    fn display_round_trips() {
        let six = parse_spll(SIX).unwrap();
        assert_eq!(parse_spll(&six.to_string()).unwrap(), six);
        for s in ["null", "true", "[]", "[false,true]"] {
            assert_eq!(s.parse::<Outcome>().unwrap().to_string(), s);
        }
        assert_eq!(" [ true , false ] ".parse::<Outcome>().unwrap(), lst(&[true, false]));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_spll("main = Uniform >= Theta[0]"), Err(SpllError::ThetaIndex));
        assert!(matches!(
            parse_spll("main = if Uniform >= Theta[1] then null else null"),
            Err(SpllError::DuplicateOutcome(Outcome::Null))
        ));
        let err = parse_spll("main = if Uniform >= Theta[1]\nthen null").unwrap_err();
        assert!(matches!(err, SpllError::Syntax { line: 2, .. }), "{err}");
        assert!(parse_spll("main = [true,").is_err());
        assert!(parse_spll("main = null null").is_err());
        assert!(parse_spll("main = Uniform > Theta[1]").is_err());
        assert!("maybe".parse::<Outcome>().is_err());
    }

    #[test]
    fn density_examples() {
        let p = parse_spll("main = Uniform >= Theta[1]").unwrap();
        assert_eq!(outcome_density(&p, &Outcome::Bool(false)).unwrap(), Expr::var(1));
        assert_eq!(
            outcome_density(&p, &Outcome::Bool(true)).unwrap(),
            Expr::add(Expr::lit(1.0), Expr::neg(Expr::var(1)))
        );

        let six = parse_spll(SIX).unwrap();
        assert_eq!(
            outcome_density(&six, &lst(&[false, false])).unwrap(),
            Expr::mul(Expr::var(1), Expr::var(5))
        );
        let theta = Env::new(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let null = eval(&outcome_density(&six, &Outcome::Null).unwrap(), &theta).unwrap();
        assert!((null - 0.9 * 0.8 * 0.7).abs() < 1e-15);
        assert_eq!(
            outcome_density(&six, &Outcome::Bool(true)),
            Err(SpllError::UnknownOutcome(Outcome::Bool(true)))
        );
        let leaf = parse_spll("main = null").unwrap();
        assert_eq!(outcome_density(&leaf, &Outcome::Null).unwrap(), Expr::Lit(1.0));
    }

    #[test]
    fn sampling_boundaries() {
        let p = parse_spll("main = Uniform >= Theta[1]").unwrap();
        let zero = sample_many(&p, &Env::new(vec![0.0]), 7, 1000).unwrap();
        assert!(zero.iter().all(|o| *o == Outcome::Bool(true)));
        let one = sample_many(&p, &Env::new(vec![1.0]), 7, 1000).unwrap();
        assert!(one.iter().all(|o| *o == Outcome::Bool(false)));
        assert!(matches!(
            sample(&p, &Env::new(vec![1.5]), 0),
            Err(SpllError::ThetaOutOfRange { index: 1, .. })
        ));
        assert!(matches!(sample(&p, &Env::new(vec![]), 0), Err(SpllError::MissingTheta { .. })));
        assert_eq!(sample(&p, &Env::new(vec![0.5]), 3), sample(&p, &Env::new(vec![0.5]), 3));
    }

    #[test]
    fn closed_form_on_the_six_parameter_program() {
        let six = parse_spll(SIX).unwrap();
        let samples: SampleSet = six.leaves().into_iter().map(|o| (o.clone(), 3)).collect();
        let mle = closed_form_mle(&six, &samples);
        let expected = [3.0 / 7.0, 0.5, 0.5, 0.5, 1.0 / 3.0, 0.5];
        for (m, e) in mle.iter().zip(expected) {
            assert!((m.unwrap() - e).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_counts_fit_one_half() {
        let p = parse_spll("main = Uniform >= Theta[1]").unwrap();
        let s: SampleSet = [(Outcome::Bool(false), 4), (Outcome::Bool(true), 4)].into_iter().collect();
        let config = FitConfig::new(0.02, 1000, 1e-14);
        for start in [0.1, 0.35, 0.8] {
            let r = fit_spll(&p, &s, Env::new(vec![start]), &config).unwrap();
            assert!((r.parameters.values()[0] - 0.5).abs() < 1e-9, "{start}");
        }
        assert_eq!(
            fit_spll(&p, &SampleSet::new(), Env::new(vec![0.5]), &config),
            Err(SpllError::NoSamples)
        );
    }
}
