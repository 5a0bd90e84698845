//! The parser must never panic, and accepted input must serialize back into
//! a form the parser maps to the same mesh.

#![no_main]

use libfuzzer_sys::fuzz_target;

use crackmesh::mesh::{parse_mesh, serialize_mesh};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = parse_mesh(text) else {
        return;
    };
    let canonical = serialize_mesh(&file.mesh, &file.crack_faces);
    let again = parse_mesh(&canonical).expect("canonical form must parse");
    assert_eq!(again.mesh.dim, file.mesh.dim);
    assert_eq!(again.mesh.vertices, file.mesh.vertices);
    assert_eq!(again.mesh.elements.len(), file.mesh.elements.len());
    for (a, b) in again.mesh.elements.iter().zip(&file.mesh.elements) {
        assert_eq!(a.vertices, b.vertices);
    }
    assert_eq!(again.crack_faces, file.crack_faces);
    assert_eq!(canonical, serialize_mesh(&again.mesh, &again.crack_faces));
});
