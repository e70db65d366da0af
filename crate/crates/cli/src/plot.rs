//! Output-space scatter plots as standalone SVG.

use std::fmt::Write;

use dynsample::dataset::Dataset;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const EPOCH_COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug)]
pub enum PlotError {
    Empty,
    Index(String),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::Empty => write!(f, "dataset has no runs to plot"),
            PlotError::Index(m) => f.write_str(m),
        }
    }
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi <= lo {
            let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn subset_position(dataset: &Dataset, index: usize, flag: &str) -> Result<usize, PlotError> {
    dataset.meta.output_subset.iter().position(|&i| i == index).ok_or_else(|| {
        PlotError::Index(format!(
            "{flag} {index} is not in the dataset's output subset {:?}",
            dataset.meta.output_subset
        ))
    })
}

/// Renders samples (per-epoch colors), seeds and used targets of outputs
/// `x` and `y`. Both must belong to the dataset's output subset.
pub fn render_svg(dataset: &Dataset, x: usize, y: usize) -> Result<String, PlotError> {
    if dataset.runs.is_empty() {
        return Err(PlotError::Empty);
    }
    let (kx, ky) = (subset_position(dataset, x, "--x")?, subset_position(dataset, y, "--y")?);

    let samples: Vec<(usize, f64, f64)> = dataset
        .runs
        .iter()
        .flat_map(|r| r.trajectory.outputs.iter().map(move |o| (r.epoch, o[x], o[y])))
        .collect();
    let seeds: Vec<(f64, f64)> = dataset
        .runs
        .iter()
        .filter_map(|r| {
            let s = r.seed.as_ref()?;
            let raw = dataset.meta.epochs[s.epoch].normalization.denormalize(s.y_bar.coords());
            Some((raw[kx], raw[ky]))
        })
        .collect();
    let targets: Vec<(f64, f64)> = dataset.used_targets().map(|t| (t.t_star[kx], t.t_star[ky])).collect();

    let all = || samples.iter().map(|s| (s.1, s.2)).chain(seeds.iter().copied()).chain(targets.iter().copied());
    let ax = Axis::fit(all().map(|p| p.0));
    let ay = Axis::fit(all().map(|p| p.1));
    let px = |v: f64| MARGIN + ax.frac(v) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - ay.frac(v) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="labels" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">y[{x}]</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">y[{y}]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(svg, r#"<text x="{x0}" y="{}" text-anchor="start">{:.4}</text>"#, y0 + 18.0, ax.lo);
    let _ = writeln!(svg, r#"<text x="{x1}" y="{}" text-anchor="end">{:.4}</text>"#, y0 + 18.0, ax.hi);
    let _ = writeln!(svg, r#"<text x="{}" y="{y0}" text-anchor="end">{:.4}</text>"#, x0 - 4.0, ay.lo);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, x0 - 4.0, y1 + 4.0, ay.hi);
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g class="samples" fill-opacity="0.5">"#);
    for &(epoch, sx, sy) in &samples {
        let color = EPOCH_COLORS[epoch % EPOCH_COLORS.len()];
        let _ = writeln!(svg, r#"<circle class="sample" cx="{:.2}" cy="{:.2}" r="1.5" fill="{color}"/>"#, px(sx), py(sy));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="seeds" fill="none" stroke="black" stroke-width="1.5">"#);
    for &(sx, sy) in &seeds {
        let _ = writeln!(svg, r#"<circle class="seed" cx="{:.2}" cy="{:.2}" r="5"/>"#, px(sx), py(sy));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="targets" stroke="crimson" stroke-width="1.5">"#);
    for &(tx, ty) in &targets {
        let (cx, cy) = (px(tx), py(ty));
        let _ = writeln!(
            svg,
            r#"<path class="target" d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}"/>"#,
            cx - 4.0,
            cy - 4.0,
            cx + 4.0,
            cy + 4.0,
            cx - 4.0,
            cy + 4.0,
            cx + 4.0,
            cy - 4.0
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}
