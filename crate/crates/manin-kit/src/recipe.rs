//! Recipe strings for the verification CLI.
//!
//! A recipe names a catalog space or wraps other recipes in an operation:
//!
//! ```text
//! recipe := "fuse" "(" recipe "," recipe ")"
//!         | "conjugate" "(" recipe ")"
//!         | "lift" "(" recipe ")"
//!         | "quotient" "(" recipe ")"
//!         | "reduce" "(" recipe "," int ")"
//!         | ident (":" int ("," int)*)?
//! ```
//!
//! Base identifiers: `2gon`, `4gon`, `2ngon:n`, `torus1`, `annulus:n1,n2`.
//! Hand-rolled LL(1) parser so errors carry byte positions and suggestions.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::hamspace::{self, HamiltonianSpace};
use crate::liegroup::GroupModel;
use crate::moduli::{self, ModuliSpace, SurfaceData};

pub const BASE_RECIPES: [&str; 5] = ["2gon", "4gon", "2ngon:n", "torus1", "annulus:n1,n2"];
pub const OPERATIONS: [&str; 5] = ["fuse", "conjugate", "lift", "quotient", "reduce"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recipe {
    /// Colored 2n-gon (`2gon` = 1, `4gon` = 2, `2ngon:n`).
    Polygon2n(usize),
    /// Uncolored one-holed torus presentation.
    Torus1,
    /// Colored annulus with n1 + n2 free edges.
    Annulus(usize, usize),
    Fuse(Box<Recipe>, Box<Recipe>),
    Conjugate(Box<Recipe>),
    Lift(Box<Recipe>),
    Quotient(Box<Recipe>),
    Reduce(Box<Recipe>, usize),
}

impl std::fmt::Display for Recipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Recipe::Polygon2n(1) => write!(f, "2gon"),
            Recipe::Polygon2n(2) => write!(f, "4gon"),
            Recipe::Polygon2n(n) => write!(f, "2ngon:{n}"),
            Recipe::Torus1 => write!(f, "torus1"),
            Recipe::Annulus(a, b) => write!(f, "annulus:{a},{b}"),
            Recipe::Fuse(a, b) => write!(f, "fuse({a},{b})"),
            Recipe::Conjugate(a) => write!(f, "conjugate({a})"),
            Recipe::Lift(a) => write!(f, "lift({a})"),
            Recipe::Quotient(a) => write!(f, "quotient({a})"),
            Recipe::Reduce(a, e) => write!(f, "reduce({a},{e})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::RecipeParseError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!(
                "expected '{}'{}",
                c as char,
                match self.peek() {
                    Some(got) => format!(", found '{}'", got as char),
                    None => ", found end of input".into(),
                }
            ))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'-')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected a recipe name");
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .to_string())
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected an integer");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .or_else(|e| self.err(format!("integer out of range: {e}")))
    }

    fn recipe(&mut self) -> Result<Recipe> {
        let name_pos = {
            self.skip_ws();
            self.pos
        };
        let name = self.ident()?;
        self.skip_ws();
        match name.as_str() {
            "fuse" => {
                self.expect(b'(')?;
                let a = self.recipe()?;
                self.expect(b',')?;
                let b = self.recipe()?;
                self.expect(b')')?;
                Ok(Recipe::Fuse(Box::new(a), Box::new(b)))
            }
            "conjugate" | "lift" | "quotient" => {
                self.expect(b'(')?;
                let a = Box::new(self.recipe()?);
                self.expect(b')')?;
                Ok(match name.as_str() {
                    "conjugate" => Recipe::Conjugate(a),
                    "lift" => Recipe::Lift(a),
                    _ => Recipe::Quotient(a),
                })
            }
            "reduce" => {
                self.expect(b'(')?;
                let a = self.recipe()?;
                self.expect(b',')?;
                let e = self.integer()?;
                self.expect(b')')?;
                Ok(Recipe::Reduce(Box::new(a), e))
            }
            "2gon" => Ok(Recipe::Polygon2n(1)),
            "4gon" => Ok(Recipe::Polygon2n(2)),
            "2ngon" => {
                self.expect(b':')?;
                let n = self.integer()?;
                if n == 0 {
                    return self.err("2ngon:n needs n >= 1");
                }
                Ok(Recipe::Polygon2n(n))
            }
            "torus1" => Ok(Recipe::Torus1),
            "annulus" => {
                // exactly two parameters: a greedy list would swallow the
                // following argument in e.g. fuse(annulus:1,1,2gon)
                self.expect(b':')?;
                let n1 = self.integer()?;
                self.expect(b',')?;
                let n2 = self.integer()?;
                Ok(Recipe::Annulus(n1, n2))
            }
            other => Err(Error::RecipeParseError {
                pos: name_pos,
                msg: format!(
                    "unknown recipe '{other}'; bases: {}; operations: {}",
                    BASE_RECIPES.join(", "),
                    OPERATIONS.join(", ")
                ),
            }),
        }
    }
}

/// Parse a recipe string, rejecting trailing garbage.
pub fn parse_recipe(src: &str) -> Result<Recipe> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let r = p.recipe()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("trailing input after recipe");
    }
    Ok(r)
}

/// A space built from a recipe: moduli presentations keep their surface
/// bookkeeping alongside the Hamiltonian data when it exists.
pub enum BuiltSpace {
    /// Uncolored polygon presentation (quasi-symplectic axioms only).
    Polygon(ModuliSpace),
    /// Colored presentation with its D^r-valued Hamiltonian structure.
    Colored(ModuliSpace, HamiltonianSpace),
    /// Result of an operation: Hamiltonian data only.
    Ham(HamiltonianSpace),
}

impl BuiltSpace {
    pub fn hamiltonian(&self) -> Option<&HamiltonianSpace> {
        match self {
            BuiltSpace::Polygon(_) => None,
            BuiltSpace::Colored(_, h) => Some(h),
            BuiltSpace::Ham(h) => Some(h),
        }
    }

    pub fn moduli(&self) -> Option<&ModuliSpace> {
        match self {
            BuiltSpace::Polygon(m) | BuiltSpace::Colored(m, _) => Some(m),
            BuiltSpace::Ham(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BuiltSpace::Polygon(m) | BuiltSpace::Colored(m, _) => m.space.param_dim,
            BuiltSpace::Ham(h) => h.dim(),
        }
    }
}

fn require_ham(b: &BuiltSpace, op: &str) -> Result<HamiltonianSpace> {
    b.hamiltonian().cloned().ok_or_else(|| {
        Error::FactorStructureMismatch(format!(
            "{op} needs a Hamiltonian space; uncolored presentations carry none"
        ))
    })
}

/// Build the space a recipe describes over the given model.
pub fn build_recipe(model: &GroupModel, recipe: &Recipe, tol: &Tolerances) -> Result<BuiltSpace> {
    match recipe {
        Recipe::Polygon2n(n) => {
            let (ms, ham) = moduli::build_colored_space(model, &SurfaceData::colored_2ngon(*n), tol)?;
            Ok(BuiltSpace::Colored(ms, ham))
        }
        Recipe::Torus1 => {
            let ms = moduli::build_polygon_space(model, &SurfaceData::torus_one_hole(), tol)?;
            Ok(BuiltSpace::Polygon(ms))
        }
        Recipe::Annulus(n1, n2) => {
            let surface = SurfaceData::colored_annulus(*n1, *n2)?;
            let (ms, ham) = moduli::build_colored_space(model, &surface, tol)?;
            Ok(BuiltSpace::Colored(ms, ham))
        }
        Recipe::Fuse(a, b) => {
            let sa = require_ham(&build_recipe(model, a, tol)?, "fuse")?;
            let sb = require_ham(&build_recipe(model, b, tol)?, "fuse")?;
            Ok(BuiltSpace::Ham(hamspace::fuse(&sa, &sb, tol)?))
        }
        Recipe::Conjugate(a) => {
            let sa = require_ham(&build_recipe(model, a, tol)?, "conjugate")?;
            Ok(BuiltSpace::Ham(hamspace::conjugate(&sa)?))
        }
        Recipe::Lift(a) => {
            let sa = require_ham(&build_recipe(model, a, tol)?, "lift")?;
            Ok(BuiltSpace::Ham(hamspace::lift_to_d(&sa, tol)?))
        }
        Recipe::Quotient(a) => {
            let sa = require_ham(&build_recipe(model, a, tol)?, "quotient")?;
            Ok(BuiltSpace::Ham(hamspace::quotient_to_dg(&sa, tol)?))
        }
        Recipe::Reduce(a, edge) => {
            let built = build_recipe(model, a, tol)?;
            match &built {
                BuiltSpace::Colored(ms, ham) => {
                    Ok(BuiltSpace::Ham(moduli::reduce_free_edge(ms, ham, *edge, tol)?))
                }
                _ => Err(Error::FactorStructureMismatch(
                    "reduce needs a colored polygon presentation".into(),
                )),
            }
        }
    }
}
