//! Programs and documents bundled with the crate.

pub const DESK_LAMP: &str = include_str!("../assets/programs/desk_lamp.apl");
