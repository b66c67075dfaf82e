//! Built-in example systems, embedded from `gallery/*.json`.

use ifslab_core::mapkit::IFSystem;

use crate::spec::{parse_ifs, SpecError};

pub const GALLERY: [(&str, &str); 7] = [
    ("cantor", include_str!("../gallery/cantor.json")),
    ("sierpinski", include_str!("../gallery/sierpinski.json")),
    ("tarafdar", include_str!("../gallery/tarafdar.json")),
    ("sin-average", include_str!("../gallery/sin-average.json")),
    ("semiattractor", include_str!("../gallery/semiattractor.json")),
    ("circle-rotation", include_str!("../gallery/circle-rotation.json")),
    ("eventual-2d", include_str!("../gallery/eventual-2d.json")),
];

pub fn ids() -> impl Iterator<Item = &'static str> {
    GALLERY.iter().map(|(id, _)| *id)
}

pub fn source(id: &str) -> Option<&'static str> {
    GALLERY.iter().find(|(k, _)| *k == id).map(|(_, text)| *text)
}

pub fn load(id: &str) -> Option<Result<IFSystem, SpecError>> {
    source(id).map(parse_ifs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_gallery_spec_loads() {
        for id in ids() {
            let ifs = load(id).unwrap().unwrap_or_else(|e| panic!("{id}: {e}"));
            assert!(ifs.weights().is_some(), "{id}");
        }
    }
}
