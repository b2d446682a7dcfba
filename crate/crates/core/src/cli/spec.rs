use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::acs::AcsField;
use crate::calculus::{Chart, Form, VecField};
use crate::expr::{parse, Expr};
use crate::verify::{random, Structure};

use super::CliError;

/// Points used to check `A * A_inv = I` for conjugated structures.
const INVERSE_CHECK_POINTS: usize = 32;

/// A structure file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub name: String,
    pub dim: usize,
    #[serde(rename = "J")]
    pub j: JSpec,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub integrable: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub forms: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum JSpec {
    /// Rows `i`, columns `r`: `J_i^r = dx^r(J d_i)`.
    Matrix(Vec<Vec<String>>),
    /// `J = A_inv J0 A` with `A`, `A_inv` as linear-map matrices
    /// (`A[r][i] = dx^r(A d_i)`).
    Conjugate(Conjugate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Conjugate {
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    #[serde(rename = "A_inv")]
    pub a_inv: Vec<Vec<String>>,
}

/// A spec turned into engine objects.
#[derive(Debug, Clone)]
pub struct Built {
    pub structure: Structure,
    pub fields: BTreeMap<String, VecField>,
    pub forms: BTreeMap<String, Form>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn parse_at(src: &str, dim: usize, at: &str) -> Result<Expr, CliError> {
    parse(src, dim).map_err(|e| schema(format!("{at}: {e} in \"{src}\"")))
}

fn matrix(rows: &[Vec<String>], dim: usize, at: &str) -> Result<Vec<Vec<Expr>>, CliError> {
    if rows.len() != dim {
        return Err(schema(format!("{at}: expected {dim} rows, got {}", rows.len())));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim {
                return Err(schema(format!("{at}[{i}]: expected {dim} entries, got {}", row.len())));
            }
            row.iter().enumerate().map(|(r, s)| parse_at(s, dim, &format!("{at}[{i}][{r}]"))).collect()
        })
        .collect()
}

fn vector(entries: &[String], dim: usize, at: &str) -> Result<Vec<Expr>, CliError> {
    if entries.len() != dim {
        return Err(schema(format!("{at}: expected {dim} entries, got {}", entries.len())));
    }
    entries.iter().enumerate().map(|(r, s)| parse_at(s, dim, &format!("{at}[{r}]"))).collect()
}

impl StructureSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Json { line: e.line(), column: e.column(), msg: e.to_string() })
    }

    pub fn chart(&self) -> Result<Chart, CliError> {
        let bounds = self.bounds.clone().unwrap_or_else(|| vec![(-1.0, 1.0); self.dim]);
        Chart::with_box(self.dim, bounds).map_err(|e| schema(format!("dim/box: {e}")))
    }

    pub fn build(&self) -> Result<Built, CliError> {
        let chart = self.chart()?;
        let n = self.dim;
        let acs = match &self.j {
            JSpec::Matrix(rows) => AcsField::new(matrix(rows, n, "J.matrix")?).map_err(|e| schema(format!("J.matrix: {e}")))?,
            JSpec::Conjugate(c) => {
                let a = matrix(&c.a, n, "J.conjugate.A")?;
                let a_inv = matrix(&c.a_inv, n, "J.conjugate.A_inv")?;
                let mut rng = random::rng_for(0, random::stable_hash("inverse-check"));
                let samples: Vec<Vec<f64>> =
                    (0..INVERSE_CHECK_POINTS).map(|_| random::point_in_box(&mut rng, &chart)).collect();
                AcsField::conjugate_standard(&a, &a_inv, &samples).map_err(CliError::Engine)?
            }
        };
        let structure = Structure::new(self.name.clone(), chart, acs, self.integrable).map_err(CliError::Engine)?;
        let fields = self
            .fields
            .iter()
            .map(|(k, v)| Ok((k.clone(), VecField::new(vector(v, n, &format!("fields.{k}"))?))))
            .collect::<Result<_, CliError>>()?;
        let forms = self
            .forms
            .iter()
            .map(|(k, v)| Ok((k.clone(), Form::one_form(vector(v, n, &format!("forms.{k}"))?))))
            .collect::<Result<_, CliError>>()?;
        Ok(Built { structure, fields, forms })
    }
}

fn strings(rows: Vec<Vec<&str>>) -> Vec<Vec<String>> {
    rows.into_iter().map(|r| r.into_iter().map(String::from).collect()).collect()
}

/// `J0 d_{2a-1} = d_{2a}`, `J0 d_{2a} = -d_{2a-1}` as a `J_i^r` matrix.
fn standard_matrix(n: usize) -> Vec<Vec<String>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|r| {
                    let v = if i % 2 == 0 && r == i + 1 {
                        "1"
                    } else if i % 2 == 1 && r + 1 == i {
                        "-1"
                    } else {
                        "0"
                    };
                    v.to_string()
                })
                .collect()
        })
        .collect()
}

fn flat(name: &str, n: usize) -> StructureSpec {
    StructureSpec {
        name: name.into(),
        dim: n,
        j: JSpec::Matrix(standard_matrix(n)),
        bounds: Some(vec![(-1.0, 1.0); n]),
        integrable: true,
        fields: BTreeMap::new(),
        forms: BTreeMap::new(),
    }
}

/// Built-in structures, in listing order.
pub fn builtins() -> Vec<StructureSpec> {
    let pullback4 = StructureSpec {
        name: "pullback4".into(),
        dim: 4,
        // Jacobian of (x1, x2, x3 + x1*x2, x4 + x1^2)
        j: JSpec::Conjugate(Conjugate {
            a: strings(vec![
                vec!["1", "0", "0", "0"],
                vec!["0", "1", "0", "0"],
                vec!["x2", "x1", "1", "0"],
                vec!["2*x1", "0", "0", "1"],
            ]),
            a_inv: strings(vec![
                vec!["1", "0", "0", "0"],
                vec!["0", "1", "0", "0"],
                vec!["-x2", "-x1", "1", "0"],
                vec!["-2*x1", "0", "0", "1"],
            ]),
        }),
        bounds: Some(vec![(-0.5, 0.5); 4]),
        integrable: true,
        fields: BTreeMap::new(),
        forms: BTreeMap::new(),
    };
    let twist4 = StructureSpec {
        name: "twist4".into(),
        dim: 4,
        j: JSpec::Conjugate(Conjugate {
            a: strings(vec![
                vec!["1", "0", "x1", "0"],
                vec!["0", "1", "0", "0"],
                vec!["0", "0", "1", "0"],
                vec!["0", "0", "0", "1"],
            ]),
            a_inv: strings(vec![
                vec!["1", "0", "-x1", "0"],
                vec!["0", "1", "0", "0"],
                vec!["0", "0", "1", "0"],
                vec!["0", "0", "0", "1"],
            ]),
        }),
        bounds: Some(vec![(-0.5, 0.5); 4]),
        integrable: false,
        fields: BTreeMap::new(),
        forms: BTreeMap::new(),
    };
    vec![flat("flat", 4), flat("flat2", 2), flat("flat6", 6), pullback4, twist4]
}

pub fn builtin(name: &str) -> Option<StructureSpec> {
    builtins().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_build_and_round_trip() {
        for spec in builtins() {
            let text = serde_json::to_string(&spec).unwrap();
            assert_eq!(StructureSpec::from_json(&text).unwrap(), spec);
            let built = spec.build().unwrap();
            assert_eq!(built.structure.dim(), spec.dim);
        }
    }

    #[test]
    fn standard_matrix_shape() {
        let m = standard_matrix(4);
        assert_eq!(m[0], ["0", "1", "0", "0"]);
        assert_eq!(m[1], ["-1", "0", "0", "0"]);
        assert_eq!(m[3], ["0", "0", "-1", "0"]);
    }

    #[test]
    fn unknown_field_is_schema_error() {
        let r = StructureSpec::from_json(r#"{"name":"x","dim":2,"J":{"matrix":[["0","1"],["-1","0"]]},"colour":1}"#);
        assert!(matches!(r, Err(CliError::Json { line: 1, .. })));
    }

    #[test]
    fn bad_expression_reports_location() {
        let spec = StructureSpec::from_json(r#"{"name":"x","dim":2,"J":{"matrix":[["0","1"],["-1","x3"]]}}"#).unwrap();
        match spec.build() {
            Err(CliError::Schema(msg)) => assert!(msg.starts_with("J.matrix[1][1]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_inverse_is_engine_error() {
        let mut spec = builtin("twist4").unwrap();
        if let JSpec::Conjugate(c) = &mut spec.j {
            c.a_inv[0][2] = "x1".into();
        }
        assert!(matches!(spec.build(), Err(CliError::Engine(crate::Error::NotInverse { .. }))));
    }
}
