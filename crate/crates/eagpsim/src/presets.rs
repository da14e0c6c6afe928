//! Built-in scenario files covering every topology/scenario pairing.

/// Name and file content of every bundled scenario, in presentation order.
pub const PRESETS: &[(&str, &str)] = &[
    ("steady_symmetrical", include_str!("../presets/steady_symmetrical.cfg")),
    ("steady_asymmetrical", include_str!("../presets/steady_asymmetrical.cfg")),
    ("steady_random", include_str!("../presets/steady_random.cfg")),
    ("eol_symmetrical", include_str!("../presets/eol_symmetrical.cfg")),
    ("eol_asymmetrical", include_str!("../presets/eol_asymmetrical.cfg")),
    ("eol_random", include_str!("../presets/eol_random.cfg")),
    ("mobility_symmetrical", include_str!("../presets/mobility_symmetrical.cfg")),
    ("mobility_asymmetrical", include_str!("../presets/mobility_asymmetrical.cfg")),
    ("mobility_random", include_str!("../presets/mobility_random.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
