//! Bundled experiment configurations, compiled into the binary.

pub const BUNDLED: &[(&str, &str, &str)] = &[
    (
        "obstacle_1d",
        "1D obstacle problem against the exact profile (free boundary at 0)",
        include_str!("../bundled/obstacle_1d.toml"),
    ),
    (
        "alt_phillips_1d",
        "1D Alt-Phillips descent at gamma = 0.5 against the exact profile",
        include_str!("../bundled/alt_phillips_1d.toml"),
    ),
    (
        "halfplane_2d",
        "half-plane cone data on the unit-ball constraint set (zero-flatness run)",
        include_str!("../bundled/halfplane_2d.toml"),
    ),
    (
        "halfplane_ellipse_2d",
        "tilted cone over the 2:1 ellipse constraint set",
        include_str!("../bundled/halfplane_ellipse_2d.toml"),
    ),
    (
        "radial_2d",
        "curved free boundary from the radial gamma = 1 trace",
        include_str!("../bundled/radial_2d.toml"),
    ),
    (
        "perron_2d",
        "Perron envelope with small constant data (zero patch opens)",
        include_str!("../bundled/perron_2d.toml"),
    ),
];

pub fn get(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, text)| *text)
}
