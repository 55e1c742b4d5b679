/// Per-pixel {0, 1} image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for r in 0..height {
            for c in 0..width {
                m.data[r * width + c] = f(r, c) as u8;
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.data[row * self.width + col] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| a == 0 || b != 0)
    }

    /// Pixel coordinates `(col, row)` of every set pixel.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Inclusive bounding box `(col_min, row_min, col_max, row_max)` of set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        self.pixels().fold(None, |acc, (c, r)| {
            Some(match acc {
                None => (c, r, c, r),
                Some((c0, r0, c1, r1)) => (c0.min(c), r0.min(r), c1.max(c), r1.max(r)),
            })
        })
    }

    /// 0 -> 0, 1 -> 255.
    pub fn to_gray(&self) -> Vec<u8> {
        self.data.iter().map(|&v| if v != 0 { 255 } else { 0 }).collect()
    }
}

/// Per-pixel {-1, 0, 1} image: -1 contact, 1 object without contact, 0 background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i8>,
}

impl TernaryMask {
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> i8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                let v = f(r, c);
                debug_assert!((-1..=1).contains(&v));
                data.push(v);
            }
        }
        Self { width, height, data }
    }

    /// Combines an object footprint and a contact mask the way the third
    /// binarization does: -1 on both, 1 on footprint only, 0 elsewhere.
    pub fn compose(footprint: &BinaryMask, contact: &BinaryMask) -> Self {
        Self::from_fn(footprint.width, footprint.height, |r, c| {
            match (footprint.get(r, c), contact.get(r, c)) {
                (0, _) => 0,
                (_, 0) => 1,
                _ => -1,
            }
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.width + col]
    }

    pub fn count(&self, value: i8) -> usize {
        self.data.iter().filter(|&&v| v == value).count()
    }

    /// 0 -> 0, 1 -> 255, -1 -> 128.
    pub fn to_gray(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| match v {
                1 => 255,
                -1 => 128,
                _ => 0,
            })
            .collect()
    }
}

/// Indentation depth per pixel, in length units.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn threshold(&self, depth: f64) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&d| (d > depth) as u8).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Linear map of `[0, full_scale]` to 8-bit gray.
    pub fn to_gray(&self, full_scale: f64) -> Vec<u8> {
        self.data
            .iter()
            .map(|&d| ((d / full_scale).clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}
