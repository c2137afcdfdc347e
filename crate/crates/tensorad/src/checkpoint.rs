use std::fmt::Write as _;
use std::path::Path;

use netcore::Scalar;

use crate::error::TensorError;
use crate::tensor::Tensor;

const FORMAT_HEADER: &str = "tensor-checkpoint";
const FORMAT_VERSION: u32 = 1;

/// Ordered collection of named tensors plus free-form string metadata,
/// serialized as a line-oriented text file. Values are written with 17
/// significant digits so both f32 and f64 payloads round-trip exactly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint<T> {
    metadata: Vec<(String, String)>,
    tensors: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new() -> Self {
        Self {
            metadata: Vec::new(),
            tensors: Vec::new(),
        }
    }

    /// Stores a metadata entry, replacing any previous value of the key.
    /// Keys must be single tokens; values must be single lines.
    pub fn set_meta(&mut self, key: &str, value: &str) -> Result<(), TensorError> {
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(TensorError::CheckpointEntry(format!(
                "metadata key {key:?} must be one non-empty token"
            )));
        }
        if value.contains('\n') {
            return Err(TensorError::CheckpointEntry(format!(
                "metadata value for {key:?} spans multiple lines"
            )));
        }
        if let Some(slot) = self.metadata.iter_mut().find(|(k, _)| k == key) {
            slot.1 = value.to_string();
        } else {
            self.metadata.push((key.to_string(), value.to_string()));
        }
        Ok(())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// Appends a named tensor. Names must be unique single tokens.
    pub fn add_tensor(&mut self, name: &str, tensor: Tensor<T>) -> Result<(), TensorError> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(TensorError::CheckpointEntry(format!(
                "tensor name {name:?} must be one non-empty token"
            )));
        }
        if self.tensors.iter().any(|(n, _)| n == name) {
            return Err(TensorError::CheckpointEntry(format!(
                "tensor name {name:?} already present"
            )));
        }
        self.tensors.push((name.to_string(), tensor));
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor<T>> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn tensors(&self) -> &[(String, Tensor<T>)] {
        &self.tensors
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER} {FORMAT_VERSION}");
        let _ = writeln!(out, "meta {}", self.metadata.len());
        for (key, value) in &self.metadata {
            let _ = writeln!(out, "{key} {value}");
        }
        let _ = writeln!(out, "tensors {}", self.tensors.len());
        for (name, tensor) in &self.tensors {
            let _ = writeln!(out, "{name} {} {}", tensor.rows(), tensor.cols());
            for r in 0..tensor.rows() {
                let mut line = String::new();
                for (c, v) in tensor.row(r).iter().enumerate() {
                    if c > 0 {
                        line.push(' ');
                    }
                    let _ = write!(line, "{v:.16e}");
                }
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TensorError> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, &str), TensorError> {
            lines.next().map(|(i, l)| (i + 1, l)).ok_or_else(|| {
                TensorError::Checkpoint {
                    line: 0,
                    msg: format!("file ended before {what}"),
                }
            })
        };

        let (line, header) = next("the header")?;
        let expected = format!("{FORMAT_HEADER} {FORMAT_VERSION}");
        if header.trim_end() != expected {
            return Err(TensorError::Checkpoint {
                line,
                msg: format!("expected {expected:?}, found {header:?}"),
            });
        }

        let (line, meta_header) = next("the metadata count")?;
        let meta_count = parse_section_count(line, meta_header, "meta")?;
        let mut checkpoint = Self::new();
        for _ in 0..meta_count {
            let (line, entry) = next("a metadata entry")?;
            let (key, value) = entry.split_once(' ').unwrap_or((entry, ""));
            if checkpoint.meta(key).is_some() {
                return Err(TensorError::Checkpoint {
                    line,
                    msg: format!("metadata key {key:?} repeated"),
                });
            }
            checkpoint
                .set_meta(key, value)
                .map_err(|e| TensorError::Checkpoint {
                    line,
                    msg: e.to_string(),
                })?;
        }

        let (line, tensor_header) = next("the tensor count")?;
        let tensor_count = parse_section_count(line, tensor_header, "tensors")?;
        for _ in 0..tensor_count {
            let (line, head) = next("a tensor header")?;
            let mut parts = head.split_whitespace();
            let (name, rows, cols) = match (parts.next(), parts.next(), parts.next(), parts.next())
            {
                (Some(name), Some(r), Some(c), None) => {
                    let rows = r.parse::<usize>().map_err(|_| TensorError::Checkpoint {
                        line,
                        msg: format!("bad row count {r:?}"),
                    })?;
                    let cols = c.parse::<usize>().map_err(|_| TensorError::Checkpoint {
                        line,
                        msg: format!("bad column count {c:?}"),
                    })?;
                    (name, rows, cols)
                }
                _ => {
                    return Err(TensorError::Checkpoint {
                        line,
                        msg: format!("tensor header {head:?} is not `name rows cols`"),
                    })
                }
            };
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (line, row) = next("a tensor row")?;
                let mut count = 0;
                for token in row.split_whitespace() {
                    let v: f64 = token.parse().map_err(|_| TensorError::Checkpoint {
                        line,
                        msg: format!("bad value {token:?}"),
                    })?;
                    data.push(T::from_f64(v).unwrap());
                    count += 1;
                }
                if count != cols {
                    return Err(TensorError::Checkpoint {
                        line,
                        msg: format!("row has {count} values, want {cols}"),
                    });
                }
            }
            let tensor = Tensor::from_vec(rows, cols, data).map_err(|e| {
                TensorError::Checkpoint {
                    line,
                    msg: e.to_string(),
                }
            })?;
            checkpoint
                .add_tensor(name, tensor)
                .map_err(|e| TensorError::Checkpoint {
                    line,
                    msg: e.to_string(),
                })?;
        }

        if let Some((i, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(TensorError::Checkpoint {
                line: i + 1,
                msg: format!("trailing content {extra:?}"),
            });
        }
        Ok(checkpoint)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TensorError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TensorError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_section_count(
    line: usize,
    text: &str,
    keyword: &str,
) -> Result<usize, TensorError> {
    match text.split_once(' ') {
        Some((k, n)) if k == keyword => n.trim().parse().map_err(|_| TensorError::Checkpoint {
            line,
            msg: format!("bad {keyword} count {n:?}"),
        }),
        _ => Err(TensorError::Checkpoint {
            line,
            msg: format!("expected `{keyword} <count>`, found {text:?}"),
        }),
    }
}
