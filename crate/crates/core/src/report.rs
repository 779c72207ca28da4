//! Named scalar diagnostics with provenance, the common currency between
//! the solvers and the CSV emitters.

/// One named scalar produced by a run or a check.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
    /// Where the number comes from (grid, window, operator, ...).
    pub provenance: String,
}

/// A labelled collection of diagnostics, usually one per snapshot time.
#[derive(Debug, Clone, Default)]
pub struct ResidualReport {
    pub label: String,
    pub entries: Vec<Diagnostic>,
}

impl ResidualReport {
    pub fn new(label: impl Into<String>) -> Self {
        ResidualReport { label: label.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, provenance: impl Into<String>) {
        self.entries.push(Diagnostic {
            name: name.into(),
            value,
            provenance: provenance.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|d| d.name == name).map(|d| d.value)
    }
}
