//! Human-readable model description, serialized with serde (the CLI uses TOML).
//!
//! ```toml
//! order = 1
//! x_alphabet = 2
//! y_alphabet = 2
//!
//! [[rows]]
//! window = [[0, 1]]   # oldest first; each entry is [x, y] or [x, y, z]
//! x = [0.9, 0.1]
//! y = [0.5, 0.5]
//! ```
//!
//! Every window must appear exactly once. An optional `[[initial]]` list of
//! `{ window, p }` entries replaces the stationary initial law.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::Alphabet;

use super::{InitialLaw, JointMarkovModel, JointSymbol, KernelRows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub order: usize,
    pub x_alphabet: usize,
    pub y_alphabet: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_alphabet: Option<usize>,
    pub rows: Vec<RowSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<InitialSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub window: Vec<Vec<usize>>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub window: Vec<Vec<usize>>,
    pub p: f64,
}

fn joint(entry: &[usize], has_z: bool) -> Result<JointSymbol> {
    match (entry, has_z) {
        (&[x, y], false) => Ok(JointSymbol::xy(x, y)),
        (&[x, y, z], true) => Ok(JointSymbol { x, y, z }),
        _ => Err(Error::Parse(format!(
            "window entry {entry:?} must have {} components",
            if has_z { 3 } else { 2 }
        ))),
    }
}

impl ModelFile {
    pub fn to_model(&self) -> Result<JointMarkovModel> {
        let x = Alphabet::new(self.x_alphabet)?;
        let y = Alphabet::new(self.y_alphabet)?;
        let z = self.z_alphabet.map(Alphabet::new).transpose()?;
        let has_z = z.is_some();
        let mut table: HashMap<Vec<JointSymbol>, &RowSpec> = HashMap::new();
        for row in &self.rows {
            let win = row
                .window
                .iter()
                .map(|e| joint(e, has_z))
                .collect::<Result<Vec<_>>>()?;
            if win.len() != self.order {
                return Err(Error::WindowLength { expected: self.order, got: win.len() });
            }
            if table.insert(win.clone(), row).is_some() {
                return Err(Error::Parse(format!("window {:?} listed twice", row.window)));
            }
        }
        let mut missing = None;
        let built = JointMarkovModel::from_fn(self.order, x, y, z, |win| match table.get(win) {
            Some(r) => KernelRows {
                x: r.x.clone(),
                y: r.y.clone(),
                z: r.z.clone(),
            },
            None => {
                missing.get_or_insert_with(|| win.to_vec());
                // Placeholder rows; the missing window is reported below.
                KernelRows {
                    x: uniform(x.size()),
                    y: uniform(y.size()),
                    z: z.map_or(Vec::new(), |a| uniform(a.size())),
                }
            }
        });
        if let Some(win) = missing {
            return Err(Error::Parse(format!("no row for window {win:?}")));
        }
        let mut model = built?;
        if table.len() != model.window_count() {
            return Err(Error::Parse("rows reference windows outside the alphabets".into()));
        }
        if !self.initial.is_empty() {
            let mut law = vec![0.0; model.window_count()];
            for e in &self.initial {
                let win = e.window.iter().map(|v| joint(v, has_z)).collect::<Result<Vec<_>>>()?;
                law[model.encode(&win)?] += e.p;
            }
            model = model.with_initial(law)?;
        }
        Ok(model)
    }

    pub fn from_model(model: &JointMarkovModel) -> Self {
        let has_z = model.has_z();
        let entry = |s: &JointSymbol| if has_z { vec![s.x, s.y, s.z] } else { vec![s.x, s.y] };
        let rows = (0..model.window_count())
            .map(|w| RowSpec {
                window: model.decode(w).iter().map(entry).collect(),
                x: model.x_row(w).to_vec(),
                y: model.y_row(w).to_vec(),
                z: if has_z { model.z_row(w).to_vec() } else { Vec::new() },
            })
            .collect();
        let initial = match (model.initial_law(), model.initial()) {
            (InitialLaw::Custom, Ok(law)) => law
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(w, &p)| InitialSpec {
                    window: model.decode(w).iter().map(entry).collect(),
                    p,
                })
                .collect(),
            _ => Vec::new(),
        };
        ModelFile {
            order: model.order(),
            x_alphabet: model.x_alphabet().size(),
            y_alphabet: model.y_alphabet().size(),
            z_alphabet: model.z_alphabet().map(|a| a.size()),
            rows,
            initial,
        }
    }
}

fn uniform(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}
