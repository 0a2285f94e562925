use std::fmt::Write as _;

use super::ConfusionMatrix;

const CELL: usize = 44;
const MARGIN: usize = 150;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heatmap of row-normalized counts with the raw count in every cell. A
/// trailing column holds rejections when there are any.
pub fn confusion_svg(cm: &ConfusionMatrix, title: &str) -> String {
    let n = cm.n();
    let with_rej = cm.rejected.iter().any(|&r| r > 0);
    let cols = n + with_rej as usize;
    let width = MARGIN + cols * CELL + 20;
    let height = MARGIN + n * CELL + 20;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="18" font-size="14">{}</text>"#, escape(title));
    let mut headers: Vec<&str> = cm.labels.iter().map(|l| l.name.as_str()).collect();
    if with_rej {
        headers.push("rejected");
    }
    for (j, h) in headers.iter().enumerate() {
        let x = MARGIN + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" transform="rotate(-45 {x} {})">{}</text>"#,
            MARGIN - 6,
            MARGIN - 6,
            escape(h)
        );
    }
    for i in 0..n {
        let y = MARGIN + i * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 6,
            y + CELL / 2 + 4,
            escape(&cm.labels[i].name)
        );
        let row_total: u64 = cm.row(i).iter().sum::<u64>() + cm.rejected[i];
        let mut cells: Vec<u64> = cm.row(i).to_vec();
        if with_rej {
            cells.push(cm.rejected[i]);
        }
        for (j, &c) in cells.iter().enumerate() {
            let frac = if row_total > 0 {
                c as f64 / row_total as f64
            } else {
                0.0
            };
            let shade = (255.0 * (1.0 - frac)).round() as u8;
            let x = MARGIN + j * CELL;
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({shade},{shade},255)" stroke="#999"/>"##
            );
            let ink = if frac > 0.5 { "#fff" } else { "#000" };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{c}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
