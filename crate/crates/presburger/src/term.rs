//! Variables and linear terms.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

struct Interner {
    names: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static TABLE: OnceLock<RwLock<Interner>> = OnceLock::new();
    TABLE.get_or_init(|| {
        RwLock::new(Interner {
            names: Vec::new(),
            ids: HashMap::new(),
        })
    })
}

static FRESH: AtomicU64 = AtomicU64::new(0);

/// An interned variable symbol.
///
/// Two variables are equal iff their names are equal. Ordering follows
/// interning order, which is stable within a process.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    /// Interns `name` and returns its symbol.
    pub fn named(name: &str) -> Var {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Var(id);
        }
        let mut table = interner().write().unwrap();
        if let Some(&id) = table.ids.get(name) {
            return Var(id);
        }
        let id = table.names.len() as u32;
        let name: Arc<str> = Arc::from(name);
        table.names.push(name.clone());
        table.ids.insert(name, id);
        Var(id)
    }

    /// A variable whose name has never been handed out before.
    pub fn fresh(hint: &str) -> Var {
        let n = FRESH.fetch_add(1, Ordering::Relaxed);
        Var::named(&format!("{hint}'{n}"))
    }

    pub fn name(&self) -> Arc<str> {
        interner().read().unwrap().names[self.0 as usize].clone()
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A linear term `Σ c·x + k` with integer coefficients.
///
/// Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinTerm {
    coeffs: BTreeMap<Var, BigInt>,
    constant: BigInt,
}

impl LinTerm {
    pub fn zero() -> LinTerm {
        LinTerm::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> LinTerm {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: c.into(),
        }
    }

    pub fn var(v: Var) -> LinTerm {
        LinTerm::scaled_var(1, v)
    }

    pub fn scaled_var(c: impl Into<BigInt>, v: Var) -> LinTerm {
        let mut t = LinTerm::zero();
        t.add_coeff(v, c.into());
        t
    }

    /// Builds a term from `(coefficient, variable)` pairs and a constant.
    pub fn from_parts<I, C>(parts: I, constant: impl Into<BigInt>) -> LinTerm
    where
        I: IntoIterator<Item = (C, Var)>,
        C: Into<BigInt>,
    {
        let mut t = LinTerm::constant(constant);
        for (c, v) in parts {
            t.add_coeff(v, c.into());
        }
        t
    }

    fn add_coeff(&mut self, v: Var, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn coeff(&self, v: Var) -> BigInt {
        self.coeffs.get(&v).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, BigInt> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &BigInt {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mentions(&self, v: Var) -> bool {
        self.coeffs.contains_key(&v)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.coeffs.keys().copied()
    }

    /// The same term with `v`'s summand removed.
    pub fn without(&self, v: Var) -> LinTerm {
        let mut t = self.clone();
        t.coeffs.remove(&v);
        t
    }

    /// The variable part only.
    pub fn linear_part(&self) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.clone(),
            constant: BigInt::zero(),
        }
    }

    pub fn with_constant(&self, c: BigInt) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.clone(),
            constant: c,
        }
    }

    pub fn scale(&self, k: &BigInt) -> LinTerm {
        if k.is_zero() {
            return LinTerm::zero();
        }
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    /// Replaces `v` by `replacement`.
    pub fn substitute(&self, v: Var, replacement: &LinTerm) -> LinTerm {
        match self.coeffs.get(&v) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                self.without(v) + replacement.scale(&c)
            }
        }
    }

    /// Gcd of the variable coefficients, zero for constant terms.
    pub fn coeff_gcd(&self) -> BigInt {
        self.coeffs
            .values()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Evaluates under `lookup`; `None` if some variable is unassigned.
    pub fn eval_with(&self, mut lookup: impl FnMut(Var) -> Option<BigInt>) -> Option<BigInt> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * lookup(*v)?;
        }
        Some(acc)
    }

    /// Sign of the first nonzero coefficient, used to orient keys.
    pub(crate) fn leading_sign(&self) -> i8 {
        match self.coeffs.values().next() {
            Some(c) if c.is_negative() => -1,
            Some(_) => 1,
            None => 0,
        }
    }
}

impl Add for LinTerm {
    type Output = LinTerm;
    fn add(mut self, rhs: LinTerm) -> LinTerm {
        for (v, c) in rhs.coeffs {
            self.add_coeff(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinTerm {
    type Output = LinTerm;
    fn sub(self, rhs: LinTerm) -> LinTerm {
        self + (-rhs)
    }
}

impl Neg for LinTerm {
    type Output = LinTerm;
    fn neg(self) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.into_iter().map(|(v, c)| (v, -c)).collect(),
            constant: -self.constant,
        }
    }
}

impl Mul<&BigInt> for LinTerm {
    type Output = LinTerm;
    fn mul(self, k: &BigInt) -> LinTerm {
        self.scale(k)
    }
}

impl From<i64> for LinTerm {
    fn from(c: i64) -> LinTerm {
        LinTerm::constant(c)
    }
}

impl From<Var> for LinTerm {
    fn from(v: Var) -> LinTerm {
        LinTerm::var(v)
    }
}

impl fmt::Debug for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Prints summands sorted by variable name, so output does not depend on
/// interning order.
impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(Arc<str>, &BigInt)> =
            self.coeffs.iter().map(|(v, c)| (v.name(), c)).collect();
        parts.sort();
        let mut first = true;
        for (name, c) in parts {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mag.is_one() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant.is_negative() {
            write!(f, " - {}", -&self.constant)
        } else if self.constant.is_positive() {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_stable() {
        assert_eq!(Var::named("x1"), Var::named("x1"));
        assert_ne!(Var::named("x1"), Var::named("x2"));
        assert_ne!(Var::fresh("k"), Var::fresh("k"));
    }

    #[test]
    fn zero_coefficients_vanish() {
        let x = Var::named("x1");
        let t = LinTerm::var(x) - LinTerm::var(x);
        assert!(t.is_constant());
        assert!(t.coeffs().is_empty());
    }

    #[test]
    fn substitution_and_eval() {
        let x = Var::named("x1");
        let y = Var::named("x2");
        let t = LinTerm::from_parts([(2, x), (-1, y)], 3);
        let s = t.substitute(x, &(LinTerm::var(y) + LinTerm::constant(1)));
        assert_eq!(s, LinTerm::from_parts([(1, y)], 5));
        let v = s.eval_with(|_| Some(BigInt::from(4))).unwrap();
        assert_eq!(v, BigInt::from(9));
    }

    #[test]
    fn display() {
        let x = Var::named("#a1");
        let y = Var::named("#a2");
        assert_eq!(LinTerm::from_parts([(1, x), (-2, y)], -3).to_string(), "#a1 - 2*#a2 - 3");
        assert_eq!(LinTerm::constant(-4).to_string(), "-4");
    }
}
