use crate::config::PaletteEntry;

/// Nearest palette color under squared RGB distance. Ties go to the entry
/// listed first.
pub fn classify_color<'a>(mean_rgb: [f64; 3], palette: &'a [PaletteEntry]) -> &'a str {
    let mut best: Option<(&str, f64)> = None;
    for entry in palette {
        let d: f64 = mean_rgb
            .iter()
            .zip(entry.rgb)
            .map(|(a, b)| (a - b as f64).powi(2))
            .sum();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((&entry.name, d));
        }
    }
    best.map(|(n, _)| n).unwrap_or("")
}
