//! Grouped bar chart of a [`SummaryTable`] as a standalone SVG document.
//!
//! Groups are the four timed operations; each format is one series. The
//! y-axis is linear from zero, so bar heights are proportional to the mean
//! per-dataset time. Only bars are drawn as `<rect>` elements.

use alloc::format;
use alloc::string::String;
use core::fmt::Write as _;

use crate::results::{Operation, SummaryTable};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const PLOT_LEFT: f64 = 90.0;
const PLOT_RIGHT: f64 = 640.0;
const PLOT_TOP: f64 = 70.0;
const PLOT_BOTTOM: f64 = 420.0;
const PLOT_HEIGHT: f64 = PLOT_BOTTOM - PLOT_TOP;
const GROUP_PADDING: f64 = 24.0;
const TICKS: usize = 5;

const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

/// Display unit for the y-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Unit {
    label: &'static str,
    per_second: f64,
}

fn unit_for(max_s: f64) -> Unit {
    if max_s >= 1.0 {
        Unit { label: "s", per_second: 1.0 }
    } else if max_s >= 1e-3 {
        Unit { label: "ms", per_second: 1e3 }
    } else if max_s >= 1e-6 {
        Unit { label: "\u{b5}s", per_second: 1e6 }
    } else {
        Unit { label: "ns", per_second: 1e9 }
    }
}

/// Smallest 1, 2 or 5 times a power of ten that is `>= x`.
fn nice_ceil(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return 1.0;
    }
    let mut step = 1.0;
    while step * 10.0 <= x {
        step *= 10.0;
    }
    while step > x {
        step /= 10.0;
    }
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * step >= x {
            return m * step;
        }
    }
    10.0 * step
}

fn trim_number(v: f64) -> String {
    let mut s = format!("{v:.3}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn capitalize(op: Operation) -> &'static str {
    match op {
        Operation::Create => "Create",
        Operation::Write => "Write",
        Operation::Open => "Open",
        Operation::Read => "Read",
    }
}

/// Renders the summary as an SVG 1.1 document titled `title`.
pub fn render_chart(summary: &SummaryTable, title: &str) -> String {
    let formats = summary.formats();
    let max_s = summary
        .rows
        .iter()
        .map(|r| r.mean_avg_s)
        .fold(0.0f64, f64::max);
    let unit = unit_for(max_s);
    let axis_max = nice_ceil(max_s * unit.per_second);

    let mut svg = String::with_capacity(4096);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    svg.push_str("<g font-family=\"Helvetica,Arial,sans-serif\" font-size=\"12\" fill=\"#222\">\n");
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="18" font-weight="bold">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let dims = summary
        .dims
        .iter()
        .map(|d| format!("{d}"))
        .collect::<alloc::vec::Vec<_>>()
        .join(", ");
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="50" text-anchor="middle" font-size="13">{} Datasets of [{}] Elements</text>"#,
        WIDTH / 2.0,
        summary.dataset_count,
        dims
    );

    // Gridlines and tick labels.
    for i in 0..=TICKS {
        let value = axis_max * i as f64 / TICKS as f64;
        let y = PLOT_BOTTOM - PLOT_HEIGHT * i as f64 / TICKS as f64;
        let _ = writeln!(
            svg,
            r##"<line x1="{PLOT_LEFT}" y1="{y:.2}" x2="{PLOT_RIGHT}" y2="{y:.2}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            PLOT_LEFT - 8.0,
            y + 4.0,
            trim_number(value)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="24" y="{}" text-anchor="middle" transform="rotate(-90 24 {})">Mean time per dataset ({})</text>"#,
        PLOT_TOP + PLOT_HEIGHT / 2.0,
        PLOT_TOP + PLOT_HEIGHT / 2.0,
        unit.label
    );

    // Bars.
    let group_width = (PLOT_RIGHT - PLOT_LEFT) / Operation::ALL.len() as f64;
    let bar_width = (group_width - GROUP_PADDING) / formats.len().max(1) as f64;
    for (g, op) in Operation::ALL.into_iter().enumerate() {
        let group_x = PLOT_LEFT + g as f64 * group_width + GROUP_PADDING / 2.0;
        for (s, format) in formats.iter().enumerate() {
            let Some(value) = summary.mean(format, op) else {
                continue;
            };
            let h = value * unit.per_second / axis_max * PLOT_HEIGHT;
            let x = group_x + s as f64 * bar_width;
            let _ = writeln!(
                svg,
                r#"<rect class="bar" data-format="{f}" data-op="{op}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{c}"><title>{f} {op}: {v} {u}</title></rect>"#,
                f = escape(format),
                y = PLOT_BOTTOM - h,
                w = bar_width,
                c = PALETTE[s % PALETTE.len()],
                v = trim_number(value * unit.per_second),
                u = unit.label,
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            group_x + (group_width - GROUP_PADDING) / 2.0,
            PLOT_BOTTOM + 20.0,
            capitalize(op)
        );
    }

    // Axes.
    let _ = writeln!(
        svg,
        r##"<path d="M{PLOT_LEFT} {PLOT_TOP} V{PLOT_BOTTOM} H{PLOT_RIGHT}" fill="none" stroke="#222"/>"##
    );

    // Legend.
    for (s, format) in formats.iter().enumerate() {
        let y = PLOT_TOP + 10.0 + s as f64 * 22.0;
        let _ = writeln!(
            svg,
            r#"<path d="M{} {} h14 v14 h-14 z" fill="{}"/>"#,
            PLOT_RIGHT + 24.0,
            y,
            PALETTE[s % PALETTE.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            PLOT_RIGHT + 46.0,
            y + 11.0,
            escape(format)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::results::{aggregate, TrialRecord};
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn table(values: &[(&str, [f64; 4])]) -> SummaryTable {
        let records: Vec<_> = values
            .iter()
            .map(|(f, v)| TrialRecord {
                test_name: "t".into(),
                trial: 0,
                format: f.to_string(),
                dataset_count: 2048,
                dims: vec![128],
                create_avg_s: v[0],
                write_avg_s: v[1],
                open_avg_s: v[2],
                read_avg_s: v[3],
                verified: true,
            })
            .collect();
        aggregate(&records).unwrap()
    }

    fn heights(svg: &str) -> Vec<f64> {
        svg.split("<rect ")
            .skip(1)
            .map(|s| {
                let at = s.find("height=\"").unwrap() + 8;
                let rest = &s[at..];
                rest[..rest.find('"').unwrap()].parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn one_rect_per_cell() {
        let t = table(&[("hdf5", [1e-5; 4]), ("nds", [2e-5; 4]), ("zarr", [3e-5; 4])]);
        let svg = render_chart(&t, "2048-Vector");
        assert_eq!(svg.matches("<rect").count(), 12);
        assert_eq!(svg.matches("class=\"bar\"").count(), 12);
        for f in ["hdf5", "nds", "zarr"] {
            assert!(svg.contains(&format!(">{f}</text>")));
        }
        assert!(svg.contains(">2048-Vector</text>"));
        assert!(svg.contains("2048 Datasets of [128] Elements"));
    }

    #[test]
    fn equal_values_equal_heights() {
        let svg = render_chart(&table(&[("a", [4e-6; 4]), ("b", [4e-6; 4])]), "t");
        let h = heights(&svg);
        assert_eq!(h.len(), 8);
        assert!(h.iter().all(|&x| x == h[0] && x > 0.0));
    }

    #[test]
    fn doubling_one_value() {
        let base = table(&[("a", [1e-6, 2e-6, 3e-6, 8e-6])]);
        let doubled = table(&[("a", [2e-6, 2e-6, 3e-6, 8e-6])]);
        let (h0, h1) = (heights(&render_chart(&base, "t")), heights(&render_chart(&doubled, "t")));
        assert!((h1[0] - 2.0 * h0[0]).abs() <= 0.5);
        assert_eq!(&h0[1..], &h1[1..]);
    }

    #[test]
    fn zero_values_zero_height() {
        let svg = render_chart(&table(&[("a", [0.0; 4])]), "t");
        assert!(heights(&svg).iter().all(|&h| h == 0.0));
    }

    #[test]
    fn titles_are_escaped_and_output_deterministic() {
        let t = table(&[("a", [1.0; 4])]);
        let svg = render_chart(&t, "<a&b>");
        assert!(svg.contains("&lt;a&amp;b&gt;"));
        assert_eq!(svg, render_chart(&t, "<a&b>"));
    }

    #[test]
    fn axis_rounding() {
        assert_eq!(nice_ceil(0.0), 1.0);
        assert_eq!(nice_ceil(3.2), 5.0);
        assert_eq!(nice_ceil(12.0), 20.0);
        assert_eq!(nice_ceil(100.0), 100.0);
        assert_eq!(nice_ceil(0.07), 0.1);
        assert_eq!(unit_for(2.5e-5).label, "\u{b5}s");
        assert_eq!(trim_number(0.6000000000000001), "0.6");
    }
}
