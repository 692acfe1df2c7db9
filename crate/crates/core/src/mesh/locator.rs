//! Uniform bucket grid over cell bounding boxes, for point location.

use crate::geometry::Point2;

#[derive(Clone, Debug)]
pub struct BucketGrid {
    x0: f64,
    y0: f64,
    inv_dx: f64,
    inv_dy: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl BucketGrid {
    pub fn build(vertices: &[Point2], cells: &[[usize; 3]]) -> Self {
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in vertices {
            xmin = xmin.min(v.x);
            ymin = ymin.min(v.y);
            xmax = xmax.max(v.x);
            ymax = ymax.max(v.y);
        }
        if vertices.is_empty() {
            (xmin, ymin, xmax, ymax) = (0.0, 0.0, 1.0, 1.0);
        }
        let n = (cells.len().max(1) as f64).sqrt().ceil() as usize;
        let nx = n.max(1);
        let ny = n.max(1);
        let dx = ((xmax - xmin) / nx as f64).max(f64::MIN_POSITIVE);
        let dy = ((ymax - ymin) / ny as f64).max(f64::MIN_POSITIVE);
        let mut grid = BucketGrid {
            x0: xmin,
            y0: ymin,
            inv_dx: 1.0 / dx,
            inv_dy: 1.0 / dy,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (c, tri) in cells.iter().enumerate() {
            let ps = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let bx0 = ps.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let bx1 = ps.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let by0 = ps.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            let by1 = ps.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
            let (i0, j0) = grid.bucket_of(bx0, by0);
            let (i1, j1) = grid.bucket_of(bx1, by1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.buckets[j * grid.nx + i].push(c as u32);
                }
            }
        }
        grid
    }

    fn bucket_of(&self, x: f64, y: f64) -> (usize, usize) {
        let i = (((x - self.x0) * self.inv_dx).floor() as i64).clamp(0, self.nx as i64 - 1);
        let j = (((y - self.y0) * self.inv_dy).floor() as i64).clamp(0, self.ny as i64 - 1);
        (i as usize, j as usize)
    }

    /// Candidate cells whose bounding box may contain the point, ascending by id.
    pub fn candidates(&self, p: Point2) -> &[u32] {
        let (i, j) = self.bucket_of(p.x, p.y);
        &self.buckets[j * self.nx + i]
    }
}
