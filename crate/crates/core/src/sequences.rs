//! Counting and enumerating material sequences.

use num_integer::binomial;

use crate::error::{invalid, Result, TutorError};
use crate::types::{MaterialId, MaterialSequence};

/// Largest material count [`count_sequences`] accepts; beyond it the sum
/// overflows `u64`.
pub const MAX_COUNTED_MATERIALS: usize = 20;

/// Largest material count [`enumerate_sequences`] will expand.
pub const MAX_ENUMERATED_MATERIALS: usize = 8;

/// Number of ordered sequences of distinct materials with length `1..=Q`,
/// `sum_{t=1}^{Q} C(Q, t) * t!`.
pub fn count_sequences(num_materials: usize) -> Result<u64> {
    if num_materials == 0 {
        return Err(invalid("count_sequences needs at least one material"));
    }
    if num_materials > MAX_COUNTED_MATERIALS {
        return Err(TutorError::SizeLimit {
            what: "materials",
            value: num_materials,
            max: MAX_COUNTED_MATERIALS,
        });
    }
    let q = num_materials as u64;
    let mut total: u64 = 0;
    let mut factorial: u64 = 1;
    for t in 1..=q {
        factorial *= t;
        total += binomial(q, t) * factorial;
    }
    Ok(total)
}

/// Materials of `0..Q` not in `shown`, ascending.
pub fn remaining_materials(shown: &[MaterialId], num_materials: usize) -> Result<Vec<MaterialId>> {
    let mut seen = vec![false; num_materials];
    for q in shown {
        match seen.get_mut(q.0) {
            None => {
                return Err(TutorError::Dimension(format!(
                    "material {q} out of range for {num_materials} materials"
                )))
            }
            Some(flag) if *flag => {
                return Err(TutorError::Invariant(format!("material {q} shown twice")))
            }
            Some(flag) => *flag = true,
        }
    }
    Ok((0..num_materials)
        .filter(|&q| !seen[q])
        .map(MaterialId)
        .collect())
}

/// Every ordered sequence of distinct materials with length `1..=max_len`,
/// shorter sequences first, lexicographic within a length.
pub fn enumerate_sequences(
    num_materials: usize,
    max_len: usize,
) -> Result<impl Iterator<Item = MaterialSequence>> {
    enumerate_sequences_filtered(num_materials, max_len, |_| true)
}

/// Like [`enumerate_sequences`] but keeps only sequences accepted by `keep`.
///
/// Rejecting a sequence does not prune its extensions.
pub fn enumerate_sequences_filtered(
    num_materials: usize,
    max_len: usize,
    mut keep: impl FnMut(&[MaterialId]) -> bool,
) -> Result<impl Iterator<Item = MaterialSequence>> {
    if num_materials == 0 {
        return Err(invalid("enumerate_sequences needs at least one material"));
    }
    if num_materials > MAX_ENUMERATED_MATERIALS {
        return Err(TutorError::SizeLimit {
            what: "materials",
            value: num_materials,
            max: MAX_ENUMERATED_MATERIALS,
        });
    }
    if max_len == 0 || max_len > num_materials {
        return Err(invalid(format!(
            "max_len must lie in 1..={num_materials}, got {max_len}"
        )));
    }
    let mut out = Vec::new();
    let mut layer: Vec<Vec<MaterialId>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * num_materials);
        for prefix in &layer {
            for q in 0..num_materials {
                let q = MaterialId(q);
                if !prefix.contains(&q) {
                    let mut s = prefix.clone();
                    s.push(q);
                    next.push(s);
                }
            }
        }
        out.extend(
            next.iter()
                .filter(|s| keep(s))
                .map(|s| MaterialSequence::new(s.clone()).expect("distinct by construction")),
        );
        layer = next;
    }
    Ok(out.into_iter())
}
