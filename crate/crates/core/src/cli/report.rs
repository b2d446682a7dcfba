use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::verify::{SuiteConfig, SuiteReport};

use super::spec::StructureSpec;

pub const TOOL: &str = "nijenhuis";

/// Pointwise `J^2 = -1` and `tr J = 0` check over uniformly drawn box points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub samples: usize,
    pub max_square_residual: f64,
    pub max_trace: f64,
    pub tol: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
}

/// The JSON document written by `verify`. Field order is the schema order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub structure: StructureSpec,
    pub config: SuiteConfig,
    pub validation: Validation,
    pub suite: Option<SuiteReport>,
    pub error: Option<String>,
    /// Validation passed and every tier-1 identity passed.
    pub pass: bool,
    pub timing: Option<Timing>,
}

/// Pretty printer that writes floats with 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        })*
    };
}

impl Formatter for ExactFloats<'_> {
    forward!(begin_array, end_array, begin_object, end_object, end_object_value, end_array_value);

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_f64(value))
    }
}

/// `{:.16e}`, i.e. 17 significant digits, which round-trips every double.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1e-300, -2.5e17, 1.0 / 3.0, 0.0] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn non_finite_becomes_null() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: f64,
        }
        let s = to_json(&R { a: f64::NAN, b: 1.5 });
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["a"].is_null());
        assert_eq!(v["b"].as_f64(), Some(1.5));
        assert!(s.contains("1.5000000000000000e0"));
    }
}
