//! Sphere and cube surface meshes, their statistics and barycentric refinement.

use cfie::mesh::{barycentric_refine, make_cube_mesh, make_sphere_mesh, meshwidth};

fn main() -> cfie::Result<()> {
    for h in [0.45, 0.3, 0.2] {
        let sphere = make_sphere_mesh(1.0, h)?;
        let cube = make_cube_mesh(1.0, h)?;
        for (name, m) in [("sphere", &sphere), ("cube", &cube)] {
            let r = barycentric_refine(m)?;
            println!(
                "{name:6} h<={h:.2}: width {:.3}, {} vertices, {} edges, {} triangles, euler {}, area {:.4}; refined {} triangles",
                meshwidth(m),
                m.num_vertices(),
                m.num_edges(),
                m.num_triangles(),
                m.euler_characteristic(),
                m.total_area(),
                r.fine.num_triangles()
            );
        }
    }
    let path = std::env::temp_dir().join("sphere.off");
    make_sphere_mesh(1.0, 0.3)?.write_off(std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
