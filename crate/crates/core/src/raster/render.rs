use super::project::conic_backward;
use super::{
    project_backward, project_gaussian, rasterize_backward, rasterize_forward, Camera, Image, ProjectedSplat,
    RasterCache, RasterConfig, RenderOutput,
};
use crate::gauss::sh::{basis_count, sh_basis, sh_basis_grad, sh_raw_color};
use crate::gauss::{Mat3, Vec3};

/// A world-space Gaussian as the renderer consumes it.
#[derive(Debug, Clone, Copy)]
pub struct RenderGaussian<'a> {
    pub mu: Vec3,
    pub cov: Mat3,
    pub opacity: f64,
    pub sh: &'a [f64],
}

/// Gradient of the loss with respect to one [`RenderGaussian`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGrad {
    pub mu: Vec3,
    pub cov: Mat3,
    pub opacity: f64,
    pub sh: Vec<f64>,
    /// `∂L/∂mean2d` in pixels; zero when culled.
    pub screen: [f64; 2],
    pub visible: bool,
}

/// State kept from [`render`] for [`render_backward`].
#[derive(Debug, Clone)]
pub struct RenderCache {
    pub projected: Vec<ProjectedSplat>,
    /// Index into the input list for every projected splat.
    pub source: Vec<usize>,
    pub raster: RasterCache,
    view_dirs: Vec<(Vec3, f64)>,
    color_clamped: Vec<[bool; 3]>,
    sh_degree: usize,
}

/// Projects, colors and composites a set of Gaussians.
pub fn render(gaussians: &[RenderGaussian<'_>], sh_degree: usize, cam: &Camera, cfg: &RasterConfig) -> (RenderOutput, RenderCache) {
    let center = cam.center();
    let mut projected = Vec::with_capacity(gaussians.len());
    let mut source = Vec::with_capacity(gaussians.len());
    let mut view_dirs = Vec::with_capacity(gaussians.len());
    let mut color_clamped = Vec::with_capacity(gaussians.len());
    for (i, g) in gaussians.iter().enumerate() {
        let Some(p) = project_gaussian(&g.mu, &g.cov, cam, cfg) else { continue };
        let offset = g.mu - center;
        let dist = offset.norm();
        let dir = offset / dist;
        let raw = sh_raw_color(g.sh, sh_degree, &dir);
        color_clamped.push(raw.map(|c| !(0.0..=1.0).contains(&c)));
        let color = raw.map(|c| c.clamp(0.0, 1.0));
        projected.push(ProjectedSplat::new(p.mean2d, p.cov2d, p.depth, color, g.opacity, cfg));
        source.push(i);
        view_dirs.push((dir, dist));
    }
    let (out, raster) = rasterize_forward(&projected, cam, cfg);
    (out, RenderCache { projected, source, raster, view_dirs, color_clamped, sh_degree })
}

/// Chains image gradients back to every Gaussian's mean, covariance,
/// opacity and SH coefficients.
pub fn render_backward(
    cache: &RenderCache,
    gaussians: &[RenderGaussian<'_>],
    cam: &Camera,
    cfg: &RasterConfig,
    d_image: &Image,
) -> Vec<GaussianGrad> {
    let n_coeffs = basis_count(cache.sh_degree) * 3;
    let mut grads: Vec<GaussianGrad> = gaussians
        .iter()
        .map(|_| GaussianGrad {
            mu: Vec3::zeros(),
            cov: Mat3::zeros(),
            opacity: 0.0,
            sh: vec![0.0; n_coeffs],
            screen: [0.0; 2],
            visible: false,
        })
        .collect();
    let pgrads = rasterize_backward(&cache.projected, &cache.raster, cam, cfg, d_image);
    for (k, pg) in pgrads.iter().enumerate() {
        let i = cache.source[k];
        let g = &gaussians[i];
        let s = &cache.projected[k];
        let out = &mut grads[i];
        out.visible = true;
        out.opacity = pg.opacity;
        out.screen = pg.mean2d;

        let d_cov2d = conic_backward(&s.conic, &pg.conic);
        let (d_mu, d_cov) = project_backward(&g.mu, &g.cov, cam, &pg.mean2d, &d_cov2d);
        out.mu = d_mu;
        out.cov = d_cov;

        let (dir, dist) = cache.view_dirs[k];
        let clamped = cache.color_clamped[k];
        let d_raw: [f64; 3] = std::array::from_fn(|c| if clamped[c] { 0.0 } else { pg.color[c] });
        if d_raw == [0.0; 3] {
            continue;
        }
        let basis = sh_basis(cache.sh_degree, &dir);
        let basis_grad = sh_basis_grad(cache.sh_degree, &dir);
        let mut d_dir = Vec3::zeros();
        for b in 0..n_coeffs / 3 {
            for c in 0..3 {
                out.sh[b * 3 + c] = basis[b] * d_raw[c];
                let w = g.sh[b * 3 + c] * d_raw[c];
                d_dir += w * Vec3::new(basis_grad[b][0], basis_grad[b][1], basis_grad[b][2]);
            }
        }
        out.mu += (d_dir - dir * dir.dot(&d_dir)) / dist;
    }
    grads
}
