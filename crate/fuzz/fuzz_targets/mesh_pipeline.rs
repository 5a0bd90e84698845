//! Everything downstream of the parser must reject bad meshes with errors,
//! never panics: topology, shape checks, crack validation, region labels.

#![no_main]

use libfuzzer_sys::fuzz_target;

use crackmesh::crack::{region_labels, validate_crack, CrackMesh};
use crackmesh::mesh::{build_topology, parse_mesh, shape_regularity, solid_angle_check};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = parse_mesh(text) else {
        return;
    };
    let Ok(topo) = build_topology(&file.mesh) else {
        return;
    };
    let Ok(shape) = shape_regularity(&file.mesh) else {
        return;
    };
    let _ = solid_angle_check(&file.mesh, &topo, &shape);
    let crack = CrackMesh::new(file.crack_faces);
    if validate_crack(&file.mesh, &topo, &crack).is_ok() {
        let labels = region_labels(&file.mesh, &topo, &crack);
        assert!(labels.count >= 1 || file.mesh.elements.is_empty());
    }
});
