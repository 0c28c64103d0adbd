//! File formats: circuit templates as JSON, training sets as CSV and result
//! documents as JSON with every float written to 17 significant digits.
//!
//! A circuit file looks like
//!
//! ```json
//! {
//!   "n": 2,
//!   "input_bits": 2,
//!   "layers": [
//!     [{"gate": "H", "qubits": [0]}, {"gate": "X", "qubits": [1], "if_bit": 1}],
//!     [{"gate": "CNOT", "qubits": [0, 1]}]
//!   ],
//!   "generators": ["ZI"],
//!   "observable": [{"coeff": 1.0, "pauli": "ZZ"}]
//! }
//! ```
//!
//! Besides the named gates, `{"gate": "PAULI", "pauli": "XZ"}` conjugates by a
//! Pauli string and `{"gate": "TABLEAU", "images": [...]}` gives an arbitrary
//! Clifford by the images of `Z_0..Z_{n-1}, X_0..X_{n-1}`. A gate may carry
//! `"if_bit": b` (apply when input bit `b` is 1) or `"if_input": "0110"`
//! (apply only for that exact input), which allows arbitrary per-input layers.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::circuit::{
    CircuitTemplate, CliffordLayerSpec, Condition, Gate, GateApplication, InputPoint, Observable,
    ObservableTerm,
};
use crate::clifford::CliffordTableau;
use crate::error::{Error, Result};
use crate::pauli::PauliElement;
use crate::trained_mean::TrainingSet;

/// Serde adapter for types with `Display`/`FromStr` text forms.
#[derive(Clone, Debug, PartialEq)]
struct Text<T>(T);

impl<T: fmt::Display> Serialize for Text<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de, T> Deserialize<'de> for Text<T>
where
    T: FromStr<Err = Error>,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(Text).map_err(de::Error::custom)
    }
}

#[allow(clippy::upper_case_acronyms)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum GateName {
    #[serde(alias = "h")]
    H,
    #[serde(alias = "s")]
    S,
    #[serde(alias = "cnot", alias = "CX", alias = "cx")]
    CNOT,
    #[serde(alias = "cz")]
    CZ,
    #[serde(alias = "swap")]
    SWAP,
    #[serde(alias = "x")]
    X,
    #[serde(alias = "y")]
    Y,
    #[serde(alias = "z")]
    Z,
    #[serde(alias = "pauli")]
    PAULI,
    #[serde(alias = "tableau")]
    TABLEAU,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateEntry {
    gate: GateName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    if_bit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    if_input: Option<Text<InputPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pauli: Option<Text<PauliElement>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    images: Option<Vec<Text<PauliElement>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    coeff: f64,
    pauli: Text<PauliElement>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_bits: Option<usize>,
    /// Accept observable coefficients outside `[-1, 1]`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    unbounded_coefficients: bool,
    layers: Vec<Vec<GateEntry>>,
    generators: Vec<Text<PauliElement>>,
    observable: Vec<TermEntry>,
}

fn json_error(e: serde_json::Error) -> Error {
    let text = e.to_string();
    let message = match text.rsplit_once(" at line ") {
        Some((m, _)) => m.to_string(),
        None => text,
    };
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message,
    }
}

fn gate_error(layer: usize, index: usize, msg: impl fmt::Display) -> Error {
    Error::InvalidArgument(format!("layer {layer}, gate {index}: {msg}"))
}

impl GateEntry {
    fn to_application(&self, n: usize, layer: usize, index: usize) -> Result<GateApplication> {
        let arity = match self.gate {
            GateName::H | GateName::S | GateName::X | GateName::Y | GateName::Z => 1,
            GateName::CNOT | GateName::CZ | GateName::SWAP => 2,
            GateName::PAULI | GateName::TABLEAU => 0,
        };
        if self.qubits.len() != arity {
            return Err(gate_error(
                layer,
                index,
                format!("{:?} takes {arity} qubit indices, got {}", self.gate, self.qubits.len()),
            ));
        }
        let q = &self.qubits;
        let gate = match self.gate {
            GateName::H => Gate::H(q[0]),
            GateName::S => Gate::S(q[0]),
            GateName::X => Gate::X(q[0]),
            GateName::Y => Gate::Y(q[0]),
            GateName::Z => Gate::Z(q[0]),
            GateName::CNOT => Gate::Cnot {
                control: q[0],
                target: q[1],
            },
            GateName::CZ => Gate::Cz(q[0], q[1]),
            GateName::SWAP => Gate::Swap(q[0], q[1]),
            GateName::PAULI => {
                let p = self
                    .pauli
                    .as_ref()
                    .ok_or_else(|| gate_error(layer, index, "PAULI gate needs a \"pauli\" field"))?;
                Gate::Pauli(p.0.clone())
            }
            GateName::TABLEAU => {
                let images = self
                    .images
                    .as_ref()
                    .ok_or_else(|| gate_error(layer, index, "TABLEAU gate needs an \"images\" field"))?;
                let images = images.iter().map(|t| t.0.clone()).collect();
                Gate::Tableau(CliffordTableau::from_images(n, images).map_err(|e| gate_error(layer, index, e))?)
            }
        };
        if self.pauli.is_some() && self.gate != GateName::PAULI {
            return Err(gate_error(layer, index, "\"pauli\" is only valid for PAULI gates"));
        }
        if self.images.is_some() && self.gate != GateName::TABLEAU {
            return Err(gate_error(layer, index, "\"images\" is only valid for TABLEAU gates"));
        }
        let condition = match (self.if_bit, &self.if_input) {
            (Some(_), Some(_)) => {
                return Err(gate_error(layer, index, "use either \"if_bit\" or \"if_input\", not both"))
            }
            (Some(b), None) => Some(Condition::Bit(b)),
            (None, Some(x)) => Some(Condition::Input(x.0.clone())),
            (None, None) => None,
        };
        Ok(GateApplication { gate, condition })
    }

    fn from_application(app: &GateApplication, n: usize) -> Self {
        let (gate, qubits, pauli, images) = match &app.gate {
            Gate::H(q) => (GateName::H, vec![*q], None, None),
            Gate::S(q) => (GateName::S, vec![*q], None, None),
            Gate::X(q) => (GateName::X, vec![*q], None, None),
            Gate::Y(q) => (GateName::Y, vec![*q], None, None),
            Gate::Z(q) => (GateName::Z, vec![*q], None, None),
            Gate::Cnot { control, target } => (GateName::CNOT, vec![*control, *target], None, None),
            Gate::Cz(a, b) => (GateName::CZ, vec![*a, *b], None, None),
            Gate::Swap(a, b) => (GateName::SWAP, vec![*a, *b], None, None),
            Gate::Pauli(p) => (GateName::PAULI, vec![], Some(Text(p.clone())), None),
            Gate::Tableau(t) => (
                GateName::TABLEAU,
                vec![],
                None,
                Some((0..2 * n).map(|k| Text(t.image(k))).collect()),
            ),
        };
        let (if_bit, if_input) = match &app.condition {
            None => (None, None),
            Some(Condition::Bit(b)) => (Some(*b), None),
            Some(Condition::Input(x)) => (None, Some(Text(x.clone()))),
        };
        Self {
            gate,
            qubits,
            if_bit,
            if_input,
            pauli,
            images,
        }
    }
}

pub fn parse_circuit(text: &str) -> Result<CircuitTemplate> {
    let file: CircuitFile = serde_json::from_str(text).map_err(json_error)?;
    let n = file.n;
    let layers = file
        .layers
        .iter()
        .enumerate()
        .map(|(l, gates)| {
            gates
                .iter()
                .enumerate()
                .map(|(i, g)| g.to_application(n, l, i))
                .collect::<Result<Vec<_>>>()
                .map(CliffordLayerSpec::new)
        })
        .collect::<Result<Vec<_>>>()?;
    let generators = file.generators.into_iter().map(|t| t.0).collect();
    let terms = file
        .observable
        .into_iter()
        .map(|t| ObservableTerm {
            coeff: t.coeff,
            pauli: t.pauli.0,
        })
        .collect();
    let observable = if file.unbounded_coefficients {
        Observable::new_unbounded(terms)?
    } else {
        Observable::new(terms)?
    };
    CircuitTemplate::new(n, file.input_bits, layers, generators, observable)
}

pub fn circuit_to_json(template: &CircuitTemplate) -> String {
    let n = template.num_qubits();
    let file = CircuitFile {
        n,
        input_bits: template.declared_input_bits(),
        unbounded_coefficients: !template.observable().is_bounded(),
        layers: template
            .layers()
            .iter()
            .map(|l| l.gates.iter().map(|g| GateEntry::from_application(g, n)).collect())
            .collect(),
        generators: template.generators().iter().cloned().map(Text).collect(),
        observable: template
            .observable()
            .terms()
            .iter()
            .map(|t| TermEntry {
                coeff: t.coeff,
                pauli: Text(t.pauli.clone()),
            })
            .collect(),
    };
    to_json_string(&file)
}

pub fn read_circuit(path: &Path) -> Result<CircuitTemplate> {
    parse_circuit(&std::fs::read_to_string(path)?)
}

/// Parses `input,label` rows. A first row whose label is not a number is
/// taken as a header.
pub fn parse_training_csv(text: &str) -> Result<TrainingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                column: 1,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected 2 fields (input,label), found {}", record.len()),
            });
        }
        let label_column = record[0].len() + 2;
        let label = record[1].parse::<f64>();
        if first && label.is_err() {
            first = false;
            continue;
        }
        first = false;
        let x = record[0].parse::<InputPoint>().map_err(|e| Error::Parse {
            line,
            column: 1,
            message: e.to_string(),
        })?;
        let y = label.map_err(|_| Error::Parse {
            line,
            column: label_column,
            message: format!("label {:?} is not a number", &record[1]),
        })?;
        inputs.push(x);
        labels.push(y);
    }
    if inputs.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "training set has no rows".into(),
        });
    }
    TrainingSet::new(inputs, labels)
}

pub fn training_to_csv(training: &TrainingSet) -> String {
    let mut out = String::from("input,label\n");
    for (x, y) in training.inputs().iter().zip(training.labels()) {
        out.push_str(&format!("{x},{}\n", format_f64(*y)));
    }
    out
}

pub fn read_training(path: &Path) -> Result<TrainingSet> {
    parse_training_csv(&std::fs::read_to_string(path)?)
}

/// `v` with 17 significant digits (`{:.16e}`), `null` when not finite.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Pretty JSON formatter that writes every float to 17 significant digits.
pub struct PreciseFormatter<'a>(PrettyFormatter<'a>);

impl Default for PreciseFormatter<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::new())
    }
}

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, writer: W) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, PreciseFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(e.to_string()))
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(value, &mut buf).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}
