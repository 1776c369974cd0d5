//! The bundled example descriptions.

pub const TIGER: &str = include_str!("../../../corpus/tiger.pbcp");
pub const DIALOG_2I2P2R: &str = include_str!("../../../corpus/dialog_2i2p2r.pbcp");
pub const DIALOG_2I3P2R: &str = include_str!("../../../corpus/dialog_2i3p2r.pbcp");
pub const DIALOG_3I3P2R: &str = include_str!("../../../corpus/dialog_3i3p2r.pbcp");
pub const DIALOG_4I3P2R: &str = include_str!("../../../corpus/dialog_4i3p2r.pbcp");
pub const DIALOG_3I3P2R_NOCOKE: &str = include_str!("../../../corpus/dialog_3i3p2r_nocoke.pbcp");
pub const DIALOG_3I3P2R_NOCOKE_WORLD: &str = include_str!("../../../corpus/dialog_3i3p2r_nocoke_world.pbcp");
pub const DIALOG_4I3P2R_NOCOKE: &str = include_str!("../../../corpus/dialog_4i3p2r_nocoke.pbcp");
pub const DIALOG_4I3P2R_NOCOKE_WORLD: &str = include_str!("../../../corpus/dialog_4i3p2r_nocoke_world.pbcp");
pub const DIALOG_2I2P2R_PREFS: &str = include_str!("../../../corpus/dialog_2i2p2r_prefs.pbcp");
pub const DIALOG_2I2P2R_NOISE_OFF: &str = include_str!("../../../corpus/dialog_2i2p2r_noise_off.pbcp");
pub const DIALOG_2I2P2R_NOISE_ON: &str = include_str!("../../../corpus/dialog_2i2p2r_noise_on.pbcp");

/// Every bundled file, by file name.
pub const ALL: &[(&str, &str)] = &[
    ("tiger.pbcp", TIGER),
    ("dialog_2i2p2r.pbcp", DIALOG_2I2P2R),
    ("dialog_2i3p2r.pbcp", DIALOG_2I3P2R),
    ("dialog_3i3p2r.pbcp", DIALOG_3I3P2R),
    ("dialog_4i3p2r.pbcp", DIALOG_4I3P2R),
    ("dialog_3i3p2r_nocoke.pbcp", DIALOG_3I3P2R_NOCOKE),
    ("dialog_3i3p2r_nocoke_world.pbcp", DIALOG_3I3P2R_NOCOKE_WORLD),
    ("dialog_4i3p2r_nocoke.pbcp", DIALOG_4I3P2R_NOCOKE),
    ("dialog_4i3p2r_nocoke_world.pbcp", DIALOG_4I3P2R_NOCOKE_WORLD),
    ("dialog_2i2p2r_prefs.pbcp", DIALOG_2I2P2R_PREFS),
    ("dialog_2i2p2r_noise_off.pbcp", DIALOG_2I2P2R_NOISE_OFF),
    ("dialog_2i2p2r_noise_on.pbcp", DIALOG_2I2P2R_NOISE_ON),
];

pub fn get(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".pbcp").unwrap_or(name);
    ALL.iter().find(|(n, _)| n.strip_suffix(".pbcp") == Some(name)).map(|(_, s)| *s)
}
