//! Build both meshes, round-trip the voided one through Gmsh text and
//! re-tag its boundary from geometry.

use neurocorr::mesh::{build_unit_square_quad, build_voided_square_tri, classify_boundary, import_gmsh_ascii, BoundaryTag, Domain};

fn main() -> neurocorr::Result<()> {
    let square = build_unit_square_quad(64)?;
    println!(
        "unit square: {} nodes, {} quads, {} bottom facets",
        square.node_count(),
        square.element_count(),
        square.facets_with_tag(BoundaryTag::GammaBottom).count()
    );

    let domain = Domain::paper_voided();
    let Domain::VoidedSquare { circles } = &domain else { unreachable!() };
    for h in [0.05, 0.03, 0.01] {
        let mesh = build_voided_square_tri(h, circles)?;
        let inner = mesh.facets_with_tag(BoundaryTag::GammaIn).count();
        let outer = mesh.facets_with_tag(BoundaryTag::GammaOut).count();
        println!(
            "voided h = {h}: {} nodes, {} triangles, {inner} void facets, {outer} outer facets",
            mesh.node_count(),
            mesh.element_count()
        );
    }

    let mesh = build_voided_square_tri(0.05, circles)?;
    let imported = import_gmsh_ascii(&mesh.to_gmsh_ascii())?;
    let tagged = classify_boundary(&imported, &domain, 1e-3)?;
    let same = tagged
        .facets()
        .iter()
        .zip(mesh.facets())
        .all(|(a, b)| a.tag == b.tag);
    println!("gmsh round trip: {} nodes, tags reproduced: {same}", tagged.node_count());
    Ok(())
}
