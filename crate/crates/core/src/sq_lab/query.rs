use std::fmt;
use std::sync::Arc;

type Evaluator = dyn Fn(&[f64], i8) -> f64 + Send + Sync;

/// A bounded statistical query `φ(x, y) ∈ [−1, 1]`.
#[derive(Clone)]
pub struct SQQuery {
    evaluator: Arc<Evaluator>,
    pub description: String,
}

impl SQQuery {
    pub fn new<F>(description: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], i8) -> f64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            description: description.into(),
        }
    }

    /// Clamped to `[−1, 1]`; NaN evaluates to 0.
    #[inline]
    pub fn eval(&self, x: &[f64], y: i8) -> f64 {
        let v = (self.evaluator)(x, y);
        if v.is_nan() {
            0.0
        } else {
            v.clamp(-1.0, 1.0)
        }
    }

    pub fn constant_one() -> Self {
        Self::new("1", |_, _| 1.0)
    }

    pub fn label() -> Self {
        Self::new("y", |_, y| y as f64)
    }
}

impl fmt::Debug for SQQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SQQuery").field("description", &self.description).finish()
    }
}
