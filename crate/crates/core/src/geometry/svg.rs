use std::fmt::Write;

use super::{GroupVectors, Point, VectorDiagram};
use crate::error::{Error, Result};
use crate::tables::Rate;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Stroke colours of the first and second group.
    pub colors: [String; 2],
    /// `stroke-dasharray` of the stratum chords.
    pub dash: String,
    /// Also draw each stratum chord translated to end at the terminal point,
    /// completing the parallelogram for two strata.
    pub completion_chords: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 480.0,
            margin: 56.0,
            colors: ["#b22222".into(), "#1f3f8f".into()],
            dash: "6 4".into(),
            completion_chords: true,
        }
    }
}

const FONT: &str = "sans-serif";

struct Canvas {
    origin_x: f64,
    origin_y: f64,
    scale: f64,
}

impl Canvas {
    /// One scale for both axes so that drawn slopes equal data slopes.
    fn fit(d: &VectorDiagram, opts: &RenderOptions) -> Result<Self> {
        let points = d.groups.iter().flat_map(|g| g.points.iter());
        let max_x = points.clone().map(|p| p.x).max().unwrap_or(0);
        let max_y = points.map(|p| p.y).max().unwrap_or(0);
        if max_x == 0 && max_y == 0 {
            return Err(Error::DegenerateRange);
        }
        let span = |pixels: f64, data: u64| {
            if data == 0 {
                f64::INFINITY
            } else {
                pixels / data as f64
            }
        };
        let scale = span(opts.width - 2.0 * opts.margin, max_x)
            .min(span(opts.height - 2.0 * opts.margin, max_y));
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(
                "canvas smaller than its margins".into(),
            ));
        }
        Ok(Self {
            origin_x: opts.margin,
            origin_y: opts.height - opts.margin,
            scale,
        })
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            self.origin_x + p.x as f64 * self.scale,
            self.origin_y - p.y as f64 * self.scale,
        )
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(ch),
        }
    }
    out
}

fn slope_text(r: &Rate) -> String {
    format!("{r} = {}", r.percent_display())
}

#[allow(clippy::too_many_arguments)]
fn chord(
    svg: &mut String,
    canvas: &Canvas,
    from: Point,
    to: Point,
    class: &str,
    color: &str,
    dash: Option<&str>,
    title: &str,
) {
    let (x1, y1) = canvas.map(from);
    let (x2, y2) = canvas.map(to);
    let dash = dash
        .map(|d| format!(r#" stroke-dasharray="{}""#, escape(d)))
        .unwrap_or_default();
    let _ = writeln!(
        svg,
        r#"  <line class="{class}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}" stroke-width="2"{dash}><title>{}</title></line>"#,
        escape(color),
        escape(title),
    );
}

fn marker(svg: &mut String, canvas: &Canvas, p: Point, color: &str) {
    let (x, y) = canvas.map(p);
    let _ = writeln!(
        svg,
        r#"  <circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#,
        escape(color)
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{:.2}" y="{:.2}" font-family="{FONT}" font-size="11" fill="{}">({}, {})</text>"#,
        x + 6.0,
        y - 6.0,
        escape(color),
        p.x,
        p.y
    );
}

fn draw_group(
    svg: &mut String,
    canvas: &Canvas,
    g: &GroupVectors,
    color: &str,
    opts: &RenderOptions,
) {
    let terminal = g.terminal();
    let vectors = g.vectors();
    let _ = writeln!(
        svg,
        r#" <g class="group" data-label="{}">"#,
        escape(&g.label)
    );
    // With a single stratum the chord coincides with the aggregate chord.
    if vectors.len() > 1 {
        for ((v, slope), name) in vectors.iter().zip(&g.segment_slopes).zip(&g.strata) {
            let title = format!("{} / {}: slope {}", g.label, name, slope_text(slope));
            chord(
                svg,
                canvas,
                Point::ORIGIN,
                *v,
                "chord stratum",
                color,
                Some(&opts.dash),
                &title,
            );
            if opts.completion_chords {
                let start = Point {
                    x: terminal.x - v.x,
                    y: terminal.y - v.y,
                };
                chord(
                    svg,
                    canvas,
                    start,
                    terminal,
                    "chord completion",
                    color,
                    Some(&opts.dash),
                    &title,
                );
            }
        }
    }
    let title = format!(
        "{} / pooled: slope {}",
        g.label,
        slope_text(&g.terminal_slope)
    );
    chord(
        svg,
        canvas,
        Point::ORIGIN,
        terminal,
        "chord aggregate",
        color,
        None,
        &title,
    );
    if vectors.len() > 1 {
        for v in &vectors {
            marker(svg, canvas, *v, color);
        }
    }
    marker(svg, canvas, terminal, color);
    svg.push_str(" </g>\n");
}

/// Render the diagram as a standalone SVG 1.1 document.
///
/// Output depends only on the diagram and the options. Stratum chords are
/// dashed, origin-to-terminal chords solid; every point is marked and labelled
/// with its data coordinates.
pub fn render_svg(d: &VectorDiagram, opts: &RenderOptions) -> Result<String> {
    let canvas = Canvas::fit(d, opts)?;
    let (w, h, m) = (opts.width, opts.height, opts.margin);
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        svg,
        r##" <rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="#ffffff"/>"##
    );

    // axes
    let _ = writeln!(
        svg,
        r##" <path class="axis" d="M {m:.2} {:.2} H {:.2} M {m:.2} {:.2} V {m:.2}" stroke="#333333" stroke-width="1.5" fill="none"/>"##,
        h - m,
        w - m / 2.0,
        h - m,
    );
    let _ = writeln!(
        svg,
        r##" <text x="{:.2}" y="{:.2}" font-family="{FONT}" font-size="12" text-anchor="end" fill="#333333">x ({})</text>"##,
        w - m / 2.0,
        h - m + 20.0,
        escape(&d.x_label)
    );
    let _ = writeln!(
        svg,
        r##" <text x="{:.2}" y="{:.2}" font-family="{FONT}" font-size="12" text-anchor="start" fill="#333333">y ({})</text>"##,
        m + 6.0,
        m - 8.0,
        escape(&d.y_label)
    );

    for (i, g) in d.groups.iter().enumerate() {
        draw_group(&mut svg, &canvas, g, &opts.colors[i % 2], opts);
    }

    // origin
    let (ox, oy) = canvas.map(Point::ORIGIN);
    let _ = writeln!(
        svg,
        r##" <circle cx="{ox:.2}" cy="{oy:.2}" r="5" fill="#000000"/>"##
    );
    let _ = writeln!(
        svg,
        r##" <text x="{:.2}" y="{:.2}" font-family="{FONT}" font-size="11" text-anchor="end" fill="#000000">(0, 0)</text>"##,
        ox - 6.0,
        oy + 14.0
    );

    // legend
    for (i, g) in d.groups.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#" <text class="legend" x="{:.2}" y="{:.2}" font-family="{FONT}" font-size="12" text-anchor="end" fill="{}">{}: pooled {}</text>"#,
            w - m,
            m + 16.0 * i as f64,
            escape(&opts.colors[i % 2]),
            escape(&g.label),
            escape(&slope_text(&g.terminal_slope))
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
