//! Minimal edit scripts between fragment sequences (Myers' O(ND) algorithm).
//!
//! The greedy forward search records the furthest-reaching frontier for
//! every edit distance and backtracks through it. On ties the path that
//! deletes first wins, which fixes one canonical script among the minimal
//! ones. Recording the frontiers costs O(D²) memory, so when the edit
//! distance grows past [`TRACE_LIMIT`] the computation restarts with the
//! linear-space middle-snake refinement. Both produce minimal scripts.

use serde::{Deserialize, Serialize};

use crate::fragment::{Fragment, Granularity};

/// Largest edit distance solved with the recorded-frontier search.
pub const TRACE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edit {
    /// `before[i] == after[j]`
    Keep(usize, usize),
    /// `before[i]` removed
    Delete(usize),
    /// `after[j]` inserted
    Insert(usize),
}

/// Edits in ascending position order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EditScript {
    pub edits: Vec<Edit>,
}

impl EditScript {
    pub fn inserted(&self) -> impl Iterator<Item = usize> + '_ {
        self.edits.iter().filter_map(|e| match *e {
            Edit::Insert(j) => Some(j),
            _ => None,
        })
    }

    pub fn deleted(&self) -> impl Iterator<Item = usize> + '_ {
        self.edits.iter().filter_map(|e| match *e {
            Edit::Delete(i) => Some(i),
            _ => None,
        })
    }

    /// Number of non-diagonal edits.
    pub fn distance(&self) -> usize {
        self.edits
            .iter()
            .filter(|e| !matches!(e, Edit::Keep(..)))
            .count()
    }

    /// Replays the script on `before`, reading insertions from `after`.
    pub fn apply<T: Clone>(&self, before: &[T], after: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(after.len());
        for edit in &self.edits {
            match *edit {
                Edit::Keep(i, _) => out.push(before[i].clone()),
                Edit::Insert(j) => out.push(after[j].clone()),
                Edit::Delete(_) => {}
            }
        }
        out
    }
}

/// Added and removed items of one minimal script, in sequence order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edits<T> {
    pub added: Vec<T>,
    pub removed: Vec<T>,
}

/// Per-file, per-granularity contribution to a commit's added and removed
/// fragments. Duplicates are kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDelta {
    pub path: String,
    pub granularity: Granularity,
    pub added: Vec<Fragment>,
    pub removed: Vec<Fragment>,
}

impl FileDelta {
    pub fn new(path: impl Into<String>, granularity: Granularity, edits: Edits<Fragment>) -> Self {
        debug_assert!(edits
            .added
            .iter()
            .chain(&edits.removed)
            .all(|f| f.granularity() == granularity));
        FileDelta {
            path: path.into(),
            granularity,
            added: edits.added,
            removed: edits.removed,
        }
    }
}

/// Added/removed fragments between two fragment sequences.
pub fn diff_fragments(before: &[Fragment], after: &[Fragment]) -> Edits<Fragment> {
    let script = diff(before, after);
    Edits {
        added: script.inserted().map(|j| after[j].clone()).collect(),
        removed: script.deleted().map(|i| before[i].clone()).collect(),
    }
}

pub fn diff<T: PartialEq>(before: &[T], after: &[T]) -> EditScript {
    diff_with_trace_limit(before, after, TRACE_LIMIT)
}

/// [`diff`] with a custom switch-over point to the linear-space search.
pub fn diff_with_trace_limit<T: PartialEq>(
    before: &[T],
    after: &[T],
    limit: usize,
) -> EditScript {
    let edits = match greedy(before, after, limit) {
        Some(edits) => edits,
        None => {
            let mut edits = Vec::with_capacity(before.len().max(after.len()));
            LinearSpace::new(before, after).solve(0, before.len(), 0, after.len(), &mut edits);
            edits
        }
    };
    EditScript { edits }
}

/// Forward greedy search recording each frontier. Returns `None` once the
/// distance exceeds `limit`.
fn greedy<T: PartialEq>(a: &[T], b: &[T], limit: usize) -> Option<Vec<Edit>> {
    let n = a.len() as isize;
    let m = b.len() as isize;
    if n == 0 || m == 0 {
        let mut edits: Vec<Edit> = (0..a.len()).map(Edit::Delete).collect();
        edits.extend((0..b.len()).map(Edit::Insert));
        return Some(edits);
    }
    let max = (n + m) as usize;
    let offset = max as isize + 1;
    let mut v = vec![0isize; 2 * max + 3];
    // trace[d] holds v[-(d-1)..=(d-1)] as it stood before step d
    let mut trace: Vec<Vec<isize>> = Vec::new();

    for d in 0..=max as isize {
        if d as usize > limit {
            return None;
        }
        let lo = (offset - d + 1).max(0) as usize;
        let hi = (offset + d - 1) as usize;
        trace.push(if d == 0 { Vec::new() } else { v[lo..=hi].to_vec() });

        let mut k = -d;
        while k <= d {
            let idx = (offset + k) as usize;
            let mut x = if k == -d || (k != d && v[idx - 1] < v[idx + 1]) {
                v[idx + 1]
            } else {
                v[idx - 1] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx] = x;
            if x >= n && y >= m {
                return Some(backtrack(&trace, n, m, d));
            }
            k += 2;
        }
    }
    unreachable!("edit distance never exceeds n + m")
}

fn backtrack(trace: &[Vec<isize>], n: isize, m: isize, dist: isize) -> Vec<Edit> {
    let mut edits = Vec::with_capacity((n + m) as usize);
    let (mut x, mut y) = (n, m);
    for d in (1..=dist).rev() {
        let row = &trace[d as usize];
        // row[0] is diagonal -(d-1)
        let at = |k: isize| row[(k + d - 1) as usize];
        let k = x - y;
        let down = k == -d || (k != d && at(k - 1) < at(k + 1));
        let prev_k = if down { k + 1 } else { k - 1 };
        let prev_x = at(prev_k);
        let prev_y = prev_x - prev_k;
        let (mid_x, mid_y) = if down { (prev_x, prev_y + 1) } else { (prev_x + 1, prev_y) };
        while x > mid_x && y > mid_y {
            x -= 1;
            y -= 1;
            edits.push(Edit::Keep(x as usize, y as usize));
        }
        if down {
            edits.push(Edit::Insert(prev_y as usize));
        } else {
            edits.push(Edit::Delete(prev_x as usize));
        }
        x = prev_x;
        y = prev_y;
    }
    while x > 0 && y > 0 {
        x -= 1;
        y -= 1;
        edits.push(Edit::Keep(x as usize, y as usize));
    }
    debug_assert!(x == 0 && y == 0);
    edits.reverse();
    edits
}

struct LinearSpace<'a, T> {
    a: &'a [T],
    b: &'a [T],
    vf: Vec<isize>,
    vb: Vec<isize>,
}

struct Snake {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl<'a, T: PartialEq> LinearSpace<'a, T> {
    fn new(a: &'a [T], b: &'a [T]) -> Self {
        let size = 2 * (a.len() + b.len()) + 5;
        LinearSpace {
            a,
            b,
            vf: vec![0; size],
            vb: vec![0; size],
        }
    }

    fn solve(&mut self, mut x0: usize, mut x1: usize, mut y0: usize, mut y1: usize, out: &mut Vec<Edit>) {
        while x0 < x1 && y0 < y1 && self.a[x0] == self.b[y0] {
            out.push(Edit::Keep(x0, y0));
            x0 += 1;
            y0 += 1;
        }
        let mut suffix = 0;
        while x0 < x1 && y0 < y1 && self.a[x1 - 1] == self.b[y1 - 1] {
            x1 -= 1;
            y1 -= 1;
            suffix += 1;
        }
        if x0 == x1 {
            out.extend((y0..y1).map(Edit::Insert));
        } else if y0 == y1 {
            out.extend((x0..x1).map(Edit::Delete));
        } else {
            let snake = self.middle_snake(x0, x1, y0, y1);
            self.solve(x0, snake.x0, y0, snake.y0, out);
            out.extend((0..snake.x1 - snake.x0).map(|i| Edit::Keep(snake.x0 + i, snake.y0 + i)));
            self.solve(snake.x1, x1, snake.y1, y1, out);
        }
        out.extend((0..suffix).map(|i| Edit::Keep(x1 + i, y1 + i)));
    }

    /// Finds a snake on some minimal path of the box `[x0,x1) x [y0,y1)`.
    /// Coordinates inside are relative to the box; diagonals are `x - y`.
    fn middle_snake(&mut self, x0: usize, x1: usize, y0: usize, y1: usize) -> Snake {
        let a = &self.a[x0..x1];
        let b = &self.b[y0..y1];
        let n = a.len() as isize;
        let m = b.len() as isize;
        let delta = n - m;
        let odd = delta.rem_euclid(2) == 1;
        let max_d = (n + m + 1) / 2;
        // diagonals touched span [-m - max_d - 1, n + max_d + 1]
        let off = m + max_d + 1;
        let at = |k: isize| (k + off) as usize;

        let vf = &mut self.vf;
        let vb = &mut self.vb;
        vf[at(1)] = 0;
        vb[at(delta - 1)] = n;

        for d in 0..=max_d {
            let mut k = -d;
            while k <= d {
                let mut x = if k == -d || (k != d && vf[at(k - 1)] < vf[at(k + 1)]) {
                    vf[at(k + 1)]
                } else {
                    vf[at(k - 1)] + 1
                };
                let mut y = x - k;
                let (sx, sy) = (x, y);
                while x < n && y < m && a[x as usize] == b[y as usize] {
                    x += 1;
                    y += 1;
                }
                vf[at(k)] = x;
                if odd && (k - delta).abs() <= d - 1 && x >= vb[at(k)] {
                    return Snake {
                        x0: x0 + sx as usize,
                        y0: y0 + sy as usize,
                        x1: x0 + x as usize,
                        y1: y0 + y as usize,
                    };
                }
                k += 2;
            }

            let mut k = delta - d;
            while k <= delta + d {
                let mut x = if k == delta + d || (k != delta - d && vb[at(k - 1)] < vb[at(k + 1)]) {
                    vb[at(k - 1)]
                } else {
                    vb[at(k + 1)] - 1
                };
                let mut y = x - k;
                let (ex, ey) = (x, y);
                while x > 0 && y > 0 && a[x as usize - 1] == b[y as usize - 1] {
                    x -= 1;
                    y -= 1;
                }
                vb[at(k)] = x;
                if !odd && k.abs() <= d && x <= vf[at(k)] {
                    return Snake {
                        x0: x0 + x as usize,
                        y0: y0 + y as usize,
                        x1: x0 + ex as usize,
                        y1: y0 + ey as usize,
                    };
                }
                k += 2;
            }
        }
        unreachable!("forward and backward searches always meet")
    }
}
