use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar that models, learners and oracles are generic over.
///
/// Implemented for `f32` and `f64`. File formats always carry `f64`; a model
/// loaded from disk can be cast to another scalar with
/// [`GroundTruthModel::cast`](crate::GroundTruthModel::cast).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant. Panics only for values the type cannot hold.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sum that is `+0` when empty, unlike `Iterator::sum` on floats.
pub fn total<S: Real>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |a, b| a + b)
}

/// Largest minus second-largest value, counting ties with multiplicity.
///
/// Returns `None` for fewer than two values.
pub fn min2<S: Real>(values: impl IntoIterator<Item = S>) -> Option<S> {
    let mut best: Option<S> = None;
    let mut second: Option<S> = None;
    for v in values {
        match best {
            None => best = Some(v),
            Some(b) if v > b => {
                second = Some(b);
                best = Some(v);
            }
            Some(_) => {
                if second.is_none_or(|s| v > s) {
                    second = Some(v);
                }
            }
        }
    }
    Some(best? - second?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min2_counts_ties() {
        assert_eq!(min2([0.3, 0.9, 0.9, 0.1]), Some(0.0));
        assert_eq!(min2([0.3, 0.9, 0.5]), Some(0.9 - 0.5));
        assert_eq!(min2([1.0_f32]), None);
        assert_eq!(min2(Vec::<f64>::new()), None);
    }

    #[test]
    fn literal_conversion() {
        assert_eq!(f32::lit(0.5), 0.5_f32);
        assert_eq!(f64::from_count(7), 7.0);
    }
}
