//! Web-Mercator helpers.
//!
//! Points are first normalised to world coordinates in `[0, 1]²` (x east,
//! y south). Pixel and grid coordinates at any zoom are those values scaled
//! by a power of two, which is exact in floating point, so grid cells at
//! zoom `z + 1` nest inside the cells at zoom `z` without rounding surprises.

use std::f64::consts::PI;

use crate::model::LatLon;

pub const TILE_SIZE: u32 = 256;
/// Latitude limit of the square Web-Mercator world.
pub const MAX_LATITUDE: f64 = 85.051_128_779_806_59;

/// Normalised world coordinate of a point.
pub fn world_xy(p: LatLon) -> (f64, f64) {
    let lat = p.lat.clamp(-MAX_LATITUDE, MAX_LATITUDE);
    let x = (p.lon + 180.0) / 360.0;
    let s = lat.to_radians().sin();
    let y = 0.5 - ((1.0 + s) / (1.0 - s)).ln() / (4.0 * PI);
    (x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
}

/// Size of the world in pixels at `zoom`.
pub fn world_size_px(zoom: u8) -> f64 {
    f64::from(TILE_SIZE) * f64::from(1u32 << zoom)
}

/// Pixel position at `zoom` with 256-pixel tiles.
pub fn pixel_xy(p: LatLon, zoom: u8) -> (f64, f64) {
    let (x, y) = world_xy(p);
    let size = world_size_px(zoom);
    (x * size, y * size)
}

/// Grid cell index of a world coordinate for square cells of `cell_px`
/// pixels (a power of two no larger than the tile size).
pub fn cell_of(world: (f64, f64), zoom: u8, cell_px: u32) -> (u32, u32) {
    debug_assert!(cell_px.is_power_of_two() && cell_px <= TILE_SIZE);
    let cells = cells_per_side(zoom, cell_px);
    let scale = f64::from(cells);
    let cx = ((world.0 * scale).floor() as u64).min(u64::from(cells - 1)) as u32;
    let cy = ((world.1 * scale).floor() as u64).min(u64::from(cells - 1)) as u32;
    (cx, cy)
}

pub fn cells_per_side(zoom: u8, cell_px: u32) -> u32 {
    (TILE_SIZE / cell_px) << zoom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_maps_to_world_center() {
        let (x, y) = world_xy(LatLon::new(0.0, 0.0));
        assert_eq!(x, 0.5);
        assert!((y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pixel_coordinates_at_zoom_zero() {
        let (x, y) = pixel_xy(LatLon::new(0.0, -180.0), 0);
        assert_eq!(x, 0.0);
        assert!((y - 128.0).abs() < 1e-9);
        let (_, top) = pixel_xy(LatLon::new(MAX_LATITUDE, 0.0), 0);
        assert!(top.abs() < 1e-6);
    }

    #[test]
    fn edge_of_world_stays_in_last_cell() {
        let c = cell_of(world_xy(LatLon::new(-90.0, 180.0)), 3, 64);
        let n = cells_per_side(3, 64);
        assert_eq!(c, (n - 1, n - 1));
    }

    #[test]
    fn cells_nest_across_zooms() {
        let p = world_xy(LatLon::new(40.7128, -74.0060));
        for z in 0..20 {
            let (a, b) = cell_of(p, z, 64);
            let (c, d) = cell_of(p, z + 1, 64);
            assert_eq!((c / 2, d / 2), (a, b), "zoom {z}");
        }
    }
}
