use super::kernel::composite_pixel;
use super::{Camera, ProjectedSplat, RasterConfig, RenderOutput};

/// Reference rasterizer: every pixel walks the full, globally depth-sorted
/// splat list. Quadratic cost; meant for checking the tiled path.
pub fn naive_rasterize(splats: &[ProjectedSplat], cam: &Camera, cfg: &RasterConfig) -> RenderOutput {
    let mut order: Vec<u32> = (0..splats.len() as u32).filter(|&i| !splats[i as usize].singular).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&splats[i as usize], &splats[j as usize]);
        a.depth.total_cmp(&b.depth).then(i.cmp(&j))
    });
    let mut out = RenderOutput::empty(cam.width, cam.height);
    out.singular_skipped = splats.len() - order.len();
    for y in 0..cam.height {
        for x in 0..cam.width {
            let r = composite_pixel(&order, splats, x, y, cfg, |_| {});
            out.color.set_pixel(x, y, r.color);
            out.alpha[y * cam.width + x] = 1.0 - r.transmittance;
            out.contributors[y * cam.width + x] = r.contributors;
        }
    }
    out
}
