use rayon::prelude::*;

use super::kernel::{composite_pixel, Contribution};
use super::{Camera, Image, ProjectedSplat, RasterConfig, RenderOutput};

/// Per-tile depth-sorted splat lists kept from the forward pass.
#[derive(Debug, Clone)]
pub struct RasterCache {
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub tile_size: usize,
    pub tile_lists: Vec<Vec<u32>>,
}

/// Gradient of the loss with respect to one projected splat.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProjectedGrad {
    pub mean2d: [f64; 2],
    pub conic: [f64; 3],
    pub color: [f64; 3],
    pub opacity: f64,
}

impl ProjectedGrad {
    fn add(&mut self, o: &ProjectedGrad) {
        for k in 0..2 {
            self.mean2d[k] += o.mean2d[k];
        }
        for k in 0..3 {
            self.conic[k] += o.conic[k];
            self.color[k] += o.color[k];
        }
        self.opacity += o.opacity;
    }
}

/// Stable LSD radix sort of splat indices by depth; ties keep index order.
fn depth_order(splats: &[ProjectedSplat]) -> Vec<u32> {
    let mut keys: Vec<(u64, u32)> = splats
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.singular)
        .map(|(i, s)| (s.depth.to_bits(), i as u32))
        .collect();
    // Depths are positive, so their IEEE bit patterns order like the values.
    let mut scratch = vec![(0u64, 0u32); keys.len()];
    for pass in 0..8 {
        let shift = pass * 8;
        let mut counts = [0usize; 257];
        for &(k, _) in &keys {
            counts[((k >> shift) & 0xff) as usize + 1] += 1;
        }
        if counts[1..].iter().any(|&c| c == keys.len()) {
            continue;
        }
        for b in 0..256 {
            counts[b + 1] += counts[b];
        }
        for &item in &keys {
            let b = ((item.0 >> shift) & 0xff) as usize;
            scratch[counts[b]] = item;
            counts[b] += 1;
        }
        std::mem::swap(&mut keys, &mut scratch);
    }
    keys.into_iter().map(|(_, i)| i).collect()
}

fn bin_tiles(splats: &[ProjectedSplat], order: &[u32], cam: &Camera, tile: usize) -> RasterCache {
    let tiles_x = cam.width.div_ceil(tile);
    let tiles_y = cam.height.div_ceil(tile);
    let mut tile_lists = vec![Vec::new(); tiles_x * tiles_y];
    let ts = tile as f64;
    for &idx in order {
        let s = &splats[idx as usize];
        let lo_x = ((s.mean2d[0] - s.radius) / ts).floor().max(0.0);
        let hi_x = ((s.mean2d[0] + s.radius) / ts).floor().min(tiles_x as f64 - 1.0);
        let lo_y = ((s.mean2d[1] - s.radius) / ts).floor().max(0.0);
        let hi_y = ((s.mean2d[1] + s.radius) / ts).floor().min(tiles_y as f64 - 1.0);
        if !(lo_x <= hi_x && lo_y <= hi_y) {
            continue;
        }
        for ty in lo_y as usize..=hi_y as usize {
            for tx in lo_x as usize..=hi_x as usize {
                tile_lists[ty * tiles_x + tx].push(idx);
            }
        }
    }
    RasterCache { tiles_x, tiles_y, tile_size: tile, tile_lists }
}

fn tile_pixels(cache: &RasterCache, tile: usize, cam: &Camera) -> impl Iterator<Item = (usize, usize)> {
    let ts = cache.tile_size;
    let x0 = (tile % cache.tiles_x) * ts;
    let y0 = (tile / cache.tiles_x) * ts;
    let x1 = (x0 + ts).min(cam.width);
    let y1 = (y0 + ts).min(cam.height);
    (y0..y1).flat_map(move |y| (x0..x1).map(move |x| (x, y)))
}

/// Tile-binned forward pass.
pub fn rasterize_forward(splats: &[ProjectedSplat], cam: &Camera, cfg: &RasterConfig) -> (RenderOutput, RasterCache) {
    let order = depth_order(splats);
    let cache = bin_tiles(splats, &order, cam, cfg.tile_size);
    let blocks: Vec<Vec<(usize, usize, [f64; 3], f64, u32)>> = (0..cache.tile_lists.len())
        .into_par_iter()
        .map(|tile| {
            let list = &cache.tile_lists[tile];
            tile_pixels(&cache, tile, cam)
                .map(|(x, y)| {
                    let r = composite_pixel(list, splats, x, y, cfg, |_| {});
                    (x, y, r.color, 1.0 - r.transmittance, r.contributors)
                })
                .collect()
        })
        .collect();
    let mut out = RenderOutput::empty(cam.width, cam.height);
    out.singular_skipped = splats.iter().filter(|s| s.singular).count();
    for block in blocks {
        for (x, y, color, alpha, n) in block {
            out.color.set_pixel(x, y, color);
            out.alpha[y * cam.width + x] = alpha;
            out.contributors[y * cam.width + x] = n;
        }
    }
    (out, cache)
}

/// Exact gradients of the composited color with respect to every projected
/// splat. `d_image` is `∂L/∂color` in the layout of [`Image`].
pub fn rasterize_backward(
    splats: &[ProjectedSplat],
    cache: &RasterCache,
    cam: &Camera,
    cfg: &RasterConfig,
    d_image: &Image,
) -> Vec<ProjectedGrad> {
    let partials: Vec<Vec<ProjectedGrad>> = (0..cache.tile_lists.len())
        .into_par_iter()
        .map(|tile| {
            let list = &cache.tile_lists[tile];
            let mut acc = vec![ProjectedGrad::default(); list.len()];
            let mut contribs: Vec<Contribution> = Vec::new();
            for (x, y) in tile_pixels(cache, tile, cam) {
                let g = d_image.pixel(x, y);
                if g == [0.0; 3] {
                    continue;
                }
                contribs.clear();
                composite_pixel(list, splats, x, y, cfg, |c| contribs.push(*c));
                // Color composited behind the current splat, normalized by
                // the transmittance just past it.
                let mut behind = [0.0; 3];
                for c in contribs.iter().rev() {
                    let s = &splats[list[c.slot as usize] as usize];
                    let slot = &mut acc[c.slot as usize];
                    let w = c.alpha * c.transmittance;
                    let mut d_alpha = 0.0;
                    for ch in 0..3 {
                        slot.color[ch] += w * g[ch];
                        d_alpha += c.transmittance * (s.color[ch] - behind[ch]) * g[ch];
                        behind[ch] = s.color[ch] * c.alpha + (1.0 - c.alpha) * behind[ch];
                    }
                    if c.clamped {
                        continue;
                    }
                    slot.opacity += d_alpha * c.falloff;
                    let d_power = d_alpha * c.alpha;
                    let [a, b, cc] = s.conic;
                    slot.mean2d[0] += d_power * (a * c.dx + b * c.dy);
                    slot.mean2d[1] += d_power * (b * c.dx + cc * c.dy);
                    slot.conic[0] += -0.5 * c.dx * c.dx * d_power;
                    slot.conic[1] += -c.dx * c.dy * d_power;
                    slot.conic[2] += -0.5 * c.dy * c.dy * d_power;
                }
            }
            acc
        })
        .collect();
    let mut grads = vec![ProjectedGrad::default(); splats.len()];
    for (tile, partial) in partials.iter().enumerate() {
        for (slot, g) in partial.iter().enumerate() {
            grads[cache.tile_lists[tile][slot] as usize].add(g);
        }
    }
    grads
}
