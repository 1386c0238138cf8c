//! Render a UV position map, store it as PFM and read the mesh back out.

use perspface::pfm::{read_pfm, write_pfm};
use perspface::synth::make_synthetic_face;
use perspface::uvmap::{extract_vertices, render_uv_position_map, DEFAULT_UV_SIZE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = make_synthetic_face(42, 1220)?;
    let rendered = render_uv_position_map(&mesh, DEFAULT_UV_SIZE, DEFAULT_UV_SIZE)?;
    let map = &rendered.map;
    println!(
        "{}x{} map, {} valid pixels, {} warnings",
        map.width(),
        map.height(),
        map.valid_pixel_count(),
        rendered.warnings.len()
    );

    let dir = std::env::temp_dir().join("perspface-uv-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("face.pfm");
    write_pfm(map, &path)?;
    let back = extract_vertices(&read_pfm(&path)?, mesh.uv_coords())?;
    let exact = back.as_slice() == mesh.vertices();
    println!("wrote {}; {} vertices recovered, bit-exact: {exact}", path.display(), back.len());
    Ok(())
}
