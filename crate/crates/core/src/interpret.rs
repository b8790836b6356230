//! Clause rendering: pattern grids, location intervals and reports.
//!
//! Grid cells read `1` (variable included), `0` (negation included), `*`
//! (neither) or `X` (both, so the clause can never fire). A filter with
//! several layers renders one block of rows per layer.
//!
//! Intervals are printed 1-based as `lo < X <= hi` over patch origins.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::automata::{EvalMode, Polarity};
use crate::bits;
use crate::classifier::MulticlassModel;
use crate::convolution::{conv_clause_fires, PatchLayout, PatchedImage};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Admissible patch origins along one axis: `lower < o <= upper` (0-based,
/// `None` meaning unconstrained).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisRange {
    pub axis: char,
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    /// Largest origin on this axis.
    pub last: usize,
}

impl AxisRange {
    pub fn full(axis: char, last: usize) -> Self {
        Self {
            axis,
            lower: None,
            upper: None,
            last,
        }
    }

    pub fn contains(&self, origin: usize) -> bool {
        self.lower.is_none_or(|l| origin > l) && self.upper.is_none_or(|u| origin <= u)
    }

    /// True when no origin in `0..=last` qualifies.
    pub fn is_empty(&self) -> bool {
        let lo = self.lower.map_or(0, |l| l + 1);
        let hi = self.upper.map_or(self.last, |u| u.min(self.last));
        lo > hi
    }
}

impl fmt::Display for AxisRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lower.map_or(0, |l| l + 1);
        let hi = self.upper.map_or(self.last + 1, |u| u + 1);
        write!(f, "{lo} < {} <= {hi}", self.axis)
    }
}

/// Rendered view of one clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClausePattern {
    pub class: usize,
    pub polarity: Polarity,
    pub clause: usize,
    pub weight: u32,
    pub grid: Vec<String>,
    pub x_range: AxisRange,
    pub y_range: AxisRange,
}

impl ClausePattern {
    /// Grid rows followed by the x and y interval lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in &self.grid {
            s.push_str(row);
            s.push('\n');
        }
        s.push_str(&format!("{}\n{}\n", self.x_range, self.y_range));
        s
    }
}

fn cell_char(pos: bool, neg: bool) -> char {
    match (pos, neg) {
        (true, true) => 'X',
        (true, false) => '1',
        (false, true) => '0',
        (false, false) => '*',
    }
}

/// Grid rows for an include mask laid out by `layout`.
pub fn render_grid(layout: &PatchLayout, include: &[u64]) -> Vec<String> {
    let (fw, fh) = (layout.filter_width(), layout.filter_height());
    let o = layout.variables();
    let mut rows = Vec::with_capacity(fh * layout.layers());
    for z in 0..layout.layers() {
        for y in 0..fh {
            let row = (0..fw)
                .map(|x| {
                    let v = (z * fh + y) * fw + x;
                    cell_char(bits::get(include, v), bits::get(include, o + v))
                })
                .collect();
            rows.push(row);
        }
    }
    rows
}

/// Included pixel literals encoded by a grid, ascending. Position literals
/// are not part of the grid.
pub fn parse_grid(layout: &PatchLayout, grid: &[impl AsRef<str>]) -> Result<Vec<usize>> {
    let (fw, fh) = (layout.filter_width(), layout.filter_height());
    let o = layout.variables();
    if grid.len() != fh * layout.layers() {
        return Err(Error::MalformedHeader(format!(
            "grid has {} rows, expected {}",
            grid.len(),
            fh * layout.layers()
        )));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (r, row) in grid.iter().enumerate() {
        let row = row.as_ref();
        if row.chars().count() != fw {
            return Err(Error::MalformedHeader(format!("grid row {r} is not {fw} cells wide")));
        }
        for (x, ch) in row.chars().enumerate() {
            let v = r * fw + x;
            match ch {
                '1' => pos.push(v),
                '0' => neg.push(o + v),
                'X' => {
                    pos.push(v);
                    neg.push(o + v);
                }
                '*' => {}
                other => return Err(Error::MalformedHeader(format!("unknown grid cell {other:?}"))),
            }
        }
    }
    pos.extend(neg);
    Ok(pos)
}

/// Origin interval on one axis implied by the included position literals.
///
/// Position bit `t` reads `origin <= thresholds[t]`; including it caps the
/// upper end, including its negation raises the lower end.
fn axis_range(
    axis: char,
    include: &[u64],
    origins: &[usize],
    thresholds: &[usize],
    first_bit: usize,
    negation_offset: usize,
) -> AxisRange {
    let mut range = AxisRange::full(axis, *origins.last().unwrap());
    for (t, &th) in thresholds.iter().enumerate() {
        let k = first_bit + t;
        if bits::get(include, k) {
            range.upper = Some(range.upper.map_or(th, |u| u.min(th)));
        }
        if bits::get(include, negation_offset + k) {
            range.lower = Some(range.lower.map_or(th, |l| l.max(th)));
        }
    }
    range
}

/// Origin intervals `(x, y)` for an include mask.
pub fn location_ranges(layout: &PatchLayout, include: &[u64]) -> (AxisRange, AxisRange) {
    let o = layout.variables();
    let ox = layout.origins_x();
    let oy = layout.origins_y();
    if !layout.has_position_bits() {
        return (
            AxisRange::full('X', *ox.last().unwrap()),
            AxisRange::full('Y', *oy.last().unwrap()),
        );
    }
    let px = layout.pixel_variables();
    let tx = layout.thresholds_x();
    (
        axis_range('X', include, ox, tx, px, o),
        axis_range('Y', include, oy, layout.thresholds_y(), px + tx.len(), o),
    )
}

/// Renders clause `clause` of the given class and polarity.
///
/// Panics on out-of-range indices.
pub fn clause_to_pattern(model: &MulticlassModel, class: usize, polarity: Polarity, clause: usize) -> ClausePattern {
    let cm = model.class_model(class);
    let include = cm.bank(polarity).include_mask(clause);
    let layout = model.layout();
    let (x_range, y_range) = location_ranges(layout, include);
    ClausePattern {
        class,
        polarity,
        clause,
        weight: cm.weights(polarity).get(clause),
        grid: render_grid(layout, include),
        x_range,
        y_range,
    }
}

/// The `k` highest-weight clauses of one class and polarity (ties by index).
/// `k` is clamped to the clauses available.
pub fn top_clauses(model: &MulticlassModel, class: usize, polarity: Polarity, k: usize) -> Vec<usize> {
    let weights = model.class_model(class).weights(polarity).as_slice();
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by_key(|&j| (std::cmp::Reverse(weights[j]), j));
    idx.truncate(k);
    idx
}

/// Patterns selected for a report: per class, positive then negative, each
/// holding `min(k, m/2)` clauses.
pub fn report_patterns(model: &MulticlassModel, k: usize) -> Vec<ClausePattern> {
    let mut out = Vec::new();
    for class in 0..model.class_models().len() {
        for pol in [Polarity::Positive, Polarity::Negative] {
            for j in top_clauses(model, class, pol, k) {
                out.push(clause_to_pattern(model, class, pol, j));
            }
        }
    }
    out
}

/// Share of `data` on which each pattern's clause fires (inference mode).
pub fn firing_rates(model: &MulticlassModel, patterns: &[ClausePattern], data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = data
        .images()
        .par_iter()
        .map(|img| -> Result<Vec<u32>> {
            let patched = PatchedImage::new(img, model.layout())?;
            Ok(patterns
                .iter()
                .map(|p| {
                    let mask = model.class_model(p.class).bank(p.polarity).include_mask(p.clause);
                    u32::from(conv_clause_fires(mask, &patched, EvalMode::Inference))
                })
                .collect())
        })
        .try_reduce(
            || vec![0; patterns.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    Ok(counts.into_iter().map(|c| f64::from(c) / data.len() as f64).collect())
}

pub const REPORT_HEADER: &str = "class,polarity,clause,weight,firing_rate,x_range,y_range,pattern";

fn polarity_tag(p: Polarity) -> &'static str {
    match p {
        Polarity::Positive => "+",
        Polarity::Negative => "-",
    }
}

/// CSV report of the `k` highest-weight clauses per class and polarity.
///
/// Clause indices are written 1-based; grid rows are joined with `/`. The
/// firing rate column is left empty without `data`.
pub fn export_report<W: Write>(model: &MulticlassModel, k: usize, data: Option<&Dataset>, mut out: W) -> Result<usize> {
    let patterns = report_patterns(model, k);
    let rates = data.map(|d| firing_rates(model, &patterns, d)).transpose()?;
    writeln!(out, "{REPORT_HEADER}")?;
    for (i, p) in patterns.iter().enumerate() {
        let rate = rates.as_ref().map_or(String::new(), |r| format!("{:.6}", r[i]));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.class,
            polarity_tag(p.polarity),
            p.clause + 1,
            p.weight,
            rate,
            p.x_range,
            p.y_range,
            p.grid.join("/")
        )?;
    }
    out.flush()?;
    Ok(patterns.len())
}

/// Plain-text report: one block per clause, a title line then the grid and
/// interval lines.
pub fn export_text_report<W: Write>(
    model: &MulticlassModel,
    k: usize,
    data: Option<&Dataset>,
    mut out: W,
) -> Result<usize> {
    let patterns = report_patterns(model, k);
    let rates = data.map(|d| firing_rates(model, &patterns, d)).transpose()?;
    for (i, p) in patterns.iter().enumerate() {
        write!(
            out,
            "class {} clause {}{} weight {}",
            p.class,
            polarity_tag(p.polarity),
            p.clause + 1,
            p.weight
        )?;
        if let Some(r) = &rates {
            write!(out, " firing {:.4}", r[i])?;
        }
        writeln!(out)?;
        write!(out, "{}", p.to_text())?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(patterns.len())
}
