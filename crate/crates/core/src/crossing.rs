//! Left-right crossing of the level-n approximation.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::tree::RealizationTree;

/// Whether the kept level-`n` squares contain an edge-connected path from a
/// square touching `x = 0` to one touching `x = 1`. Squares meeting only at a
/// corner are not adjacent.
pub fn percolation_crossing(tree: &RealizationTree, n: u32) -> Result<bool> {
    if tree.spec().dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: tree.spec().dim() });
    }
    let coords = tree.coords(n)?;
    let last = (tree.spec().base() as u64).pow(n) - 1;
    let index: HashMap<(u64, u64), usize> =
        coords.chunks_exact(2).enumerate().map(|(i, c)| ((c[0], c[1]), i)).collect();
    let mut seen = vec![false; index.len()];
    let mut queue = VecDeque::new();
    for (i, c) in coords.chunks_exact(2).enumerate() {
        if c[0] == 0 {
            seen[i] = true;
            queue.push_back((c[0], c[1]));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        if x == last {
            return Ok(true);
        }
        let neighbours = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for nb in neighbours {
            if let Some(&j) = index.get(&nb) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    Ok(false)
}
