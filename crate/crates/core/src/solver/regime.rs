use crate::flowstate::Regime;

/// Regime indicator after an update of the wet areas.
///
/// A free-surface cell becomes pressurized once it holds the full section.
/// A pressurized cell stays pressurized while full; below the full section
/// it stays pressurized (a depression) unless a neighbour was free surface.
/// The end cells use their single neighbour twice.
pub fn update_regime(previous: &[Regime], areas: &[f64], sections: &[f64]) -> Vec<Regime> {
    assert_eq!(previous.len(), areas.len());
    assert_eq!(previous.len(), sections.len());
    let n = previous.len();
    (0..n)
        .map(|i| {
            let full = areas[i] >= sections[i];
            match previous[i] {
                Regime::FreeSurface if full => Regime::Pressurized,
                Regime::FreeSurface => Regime::FreeSurface,
                Regime::Pressurized if full => Regime::Pressurized,
                Regime::Pressurized => {
                    let left = if i == 0 { previous.get(1) } else { previous.get(i - 1) };
                    let right = previous.get(i + 1).or(left);
                    let left = left.unwrap_or(&Regime::Pressurized);
                    let right = right.unwrap_or(&Regime::Pressurized);
                    if left.is_pressurized() && right.is_pressurized() {
                        Regime::Pressurized
                    } else {
                        Regime::FreeSurface
                    }
                }
            }
        })
        .collect()
}
