use crate::geometry::BinBox;

use super::BinaryMask;

/// Tight extents of one 4-connected foreground set, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub t_min: usize,
    pub t_max: usize,
    pub f_min: usize,
    pub f_max: usize,
    pub area: usize,
}

impl Component {
    pub fn bin_box(&self) -> BinBox {
        BinBox {
            t0: self.t_min,
            t1: self.t_max + 1,
            f0: self.f_min,
            f1: self.f_max + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledComponents {
    pub height: usize,
    pub width: usize,
    /// Row-major; 0 is background, component `i` is painted `i + 1`.
    pub labels: Vec<u32>,
    /// Ordered by first appearance in row-major order.
    pub components: Vec<Component>,
}

impl LabeledComponents {
    pub fn count(&self) -> usize {
        self.components.len()
    }
}

struct Run {
    t: usize,
    c0: usize,
    c1: usize,
}

/// Labels 4-connected components, dropping those smaller than `min_area` pixels.
pub fn label(mask: &BinaryMask, min_area: usize) -> LabeledComponents {
    let (runs, comp_of_run, components) = components_of(mask, min_area);
    let mut labels = vec![0u32; mask.height() * mask.width()];
    for (run, comp) in runs.iter().zip(comp_of_run) {
        if let Some(c) = comp {
            labels[run.t * mask.width() + run.c0..run.t * mask.width() + run.c1].fill(c + 1);
        }
    }
    LabeledComponents {
        height: mask.height(),
        width: mask.width(),
        labels,
        components,
    }
}

/// Component extents only, without painting a label raster.
pub fn find_components(mask: &BinaryMask, min_area: usize) -> Vec<Component> {
    components_of(mask, min_area).2
}

fn components_of(
    mask: &BinaryMask,
    min_area: usize,
) -> (Vec<Run>, Vec<Option<u32>>, Vec<Component>) {
    let mut runs: Vec<Run> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();
    let mut prev = 0..0;
    for t in 0..mask.height() {
        let start = runs.len();
        row_runs(mask, t, &mut runs);
        parent.extend(start as u32..runs.len() as u32);
        // Union with overlapping runs of the previous row.
        let mut p = prev.start;
        for i in start..runs.len() {
            while p < prev.end && runs[p].c1 <= runs[i].c0 {
                p += 1;
            }
            let mut q = p;
            while q < prev.end && runs[q].c0 < runs[i].c1 {
                union(&mut parent, q as u32, i as u32);
                q += 1;
            }
        }
        prev = start..runs.len();
    }

    let mut slot = vec![u32::MAX; runs.len()];
    let mut all: Vec<Component> = Vec::new();
    let mut comp_of_run = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter().enumerate() {
        let root = find(&mut parent, i as u32) as usize;
        if slot[root] == u32::MAX {
            slot[root] = all.len() as u32;
            all.push(Component {
                t_min: run.t,
                t_max: run.t,
                f_min: run.c0,
                f_max: run.c1 - 1,
                area: 0,
            });
        }
        let c = &mut all[slot[root] as usize];
        c.t_max = run.t;
        c.f_min = c.f_min.min(run.c0);
        c.f_max = c.f_max.max(run.c1 - 1);
        c.area += run.c1 - run.c0;
        comp_of_run.push(slot[root]);
    }

    let mut renumber = vec![None; all.len()];
    let mut kept = Vec::new();
    for (i, c) in all.iter().enumerate() {
        if c.area >= min_area {
            renumber[i] = Some(kept.len() as u32);
            kept.push(*c);
        }
    }
    let comp_of_run = comp_of_run
        .into_iter()
        .map(|c| renumber[c as usize])
        .collect();
    (runs, comp_of_run, kept)
}

/// Appends the maximal runs of set bits in row `t`.
fn row_runs(mask: &BinaryMask, t: usize, out: &mut Vec<Run>) {
    let mut carry = 0u64;
    let mut open: Option<usize> = None;
    for (j, &w) in mask.row_words(t).iter().enumerate() {
        // Bit p is set where pixel p differs from pixel p-1.
        let mut edges = w ^ ((w << 1) | carry);
        carry = w >> 63;
        while edges != 0 {
            let p = edges.trailing_zeros() as usize;
            edges &= edges - 1;
            let k = j * 64 + p;
            match open.take() {
                None => open = Some(k),
                Some(c0) => out.push(Run { t, c0, c1: k }),
            }
        }
    }
    if let Some(c0) = open {
        out.push(Run {
            t,
            c0,
            c1: mask.width(),
        });
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let gp = parent[parent[x as usize] as usize];
        parent[x as usize] = gp;
        x = gp;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    // Keep the earlier run as the root.
    if ra < rb {
        parent[rb as usize] = ra;
    } else if rb < ra {
        parent[ra as usize] = rb;
    }
}
