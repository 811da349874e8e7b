use serde::{Deserialize, Serialize};

/// A registry conjecture matched against an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureMatch {
    pub name: String,
    pub expression: String,
    pub value: f64,
    /// (estimate - value) / value.
    pub rel_diff: f64,
}

impl ConjectureMatch {
    pub fn new(name: &str, expression: &str, value: f64, estimate: f64) -> Self {
        ConjectureMatch {
            name: name.into(),
            expression: expression.into(),
            value,
            rel_diff: (estimate - value) / value,
        }
    }
}

/// Numeric estimate with its statistical error and provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub quantity: String,
    pub value: f64,
    pub std_error: f64,
    pub conjecture: Option<ConjectureMatch>,
    pub metadata: serde_json::Value,
}

impl EstimateSummary {
    pub fn new(quantity: impl Into<String>, value: f64, std_error: f64) -> Self {
        EstimateSummary {
            quantity: quantity.into(),
            value,
            std_error,
            conjecture: None,
            metadata: serde_json::Value::Null,
        }
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn with_conjecture(mut self, conjecture: ConjectureMatch) -> Self {
        self.conjecture = Some(conjecture);
        self
    }
}
