use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use crate::augment::WarpField;
use crate::error::{Error, Result};

/// Middlebury `.flo` tag, the bytes "PIEH" read as a little-endian f32.
pub const FLO_MAGIC: f32 = 202021.25;

/// Dense per-pixel displacement `(du, dv)`, row-major and interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 2],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 2 {
            return Err(Error::mismatch(
                format!("{} values", width * height * 2),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> Self {
        let mut data = Vec::with_capacity(width * height * 2);
        for y in 0..height {
            for x in 0..width {
                let [du, dv] = f(x, y);
                data.push(du as f32);
                data.push(dv as f32);
            }
        }
        Self { width, height, data }
    }

    pub fn constant(width: usize, height: usize, du: f32, dv: f32) -> Self {
        Self::from_fn(width, height, |_, _| [du as f64, dv as f64])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 2] {
        let i = 2 * (y * self.width + x);
        [self.data[i], self.data[i + 1]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f32; 2]) {
        let i = 2 * (y * self.width + x);
        self.data[i] = v[0];
        self.data[i + 1] = v[1];
    }

    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        let [u, v] = self.get(x, y);
        (u as f64).hypot(v as f64)
    }

    /// Unit direction, `None` at zero magnitude.
    pub fn direction(&self, x: usize, y: usize) -> Option<[f64; 2]> {
        let [u, v] = self.get(x, y);
        let m = (u as f64).hypot(v as f64);
        (m > 0.0).then(|| [u as f64 / m, v as f64 / m])
    }

    pub fn scaled(&self, lambda: f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v * lambda).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_size(&self, other: &FlowField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Mean absolute per-component deviation over pixels where `mask` holds.
    pub fn mean_abs_deviation(&self, other: &FlowField, mask: Option<&[bool]>) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, (a, b)) in self.data.chunks(2).zip(other.data.chunks(2)).enumerate() {
            if mask.is_some_and(|m| !m[i]) {
                continue;
            }
            sum += ((a[0] - b[0]).abs() + (a[1] - b[1]).abs()) as f64 / 2.0;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Fills pixels where `valid` is false with the value of the nearest valid
/// pixel, by breadth-first growth from all valid pixels at once.
pub fn fill_holes(flow: &mut FlowField, valid: &[bool]) {
    let (w, h) = (flow.width, flow.height);
    let mut done = valid.to_vec();
    let mut queue: VecDeque<usize> = (0..w * h).filter(|&i| done[i]).collect();
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let v = flow.get(x, y);
        let mut visit = |nx: usize, ny: usize| {
            let j = ny * w + nx;
            if !done[j] {
                done[j] = true;
                flow.set(nx, ny, v);
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }
}

/// Forward flow implied by an inverse-mapped warp, with the coverage mask
/// (true where at least one output pixel landed before hole filling).
///
/// Output pixel `p` sampling source `q` deposits `p − q` at `round(q)`;
/// deposits are averaged and empty pixels take their nearest neighbor.
pub fn flow_from_warp_with_mask(warp: &WarpField) -> (FlowField, Vec<bool>) {
    let (w, h) = (warp.width(), warp.height());
    let mut sum = vec![[0f64; 2]; w * h];
    let mut count = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let [qx, qy] = warp.source(x, y);
            let (rx, ry) = (qx.round(), qy.round());
            if rx < 0.0 || ry < 0.0 || rx >= w as f64 || ry >= h as f64 {
                continue;
            }
            let i = ry as usize * w + rx as usize;
            sum[i][0] += x as f64 - qx;
            sum[i][1] += y as f64 - qy;
            count[i] += 1;
        }
    }
    let mut flow = FlowField::zeros(w, h);
    for i in 0..w * h {
        if count[i] > 0 {
            let n = count[i] as f64;
            flow.set(i % w, i / w, [(sum[i][0] / n) as f32, (sum[i][1] / n) as f32]);
        }
    }
    let valid: Vec<bool> = count.iter().map(|&c| c > 0).collect();
    if valid.iter().any(|&v| v) {
        fill_holes(&mut flow, &valid);
    }
    (flow, valid)
}

pub fn flow_from_warp(warp: &WarpField) -> FlowField {
    flow_from_warp_with_mask(warp).0
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(12 + flow.data.len() * 4);
    buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    buf.extend_from_slice(&(flow.width as i32).to_le_bytes());
    buf.extend_from_slice(&(flow.height as i32).to_le_bytes());
    for v in &flow.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let word = |off: usize| -> Result<[u8; 4]> {
        bytes
            .get(off..off + 4)
            .map(|b| b.try_into().unwrap())
            .ok_or_else(|| Error::format(path, off as u64, "unexpected end of file"))
    };
    if f32::from_le_bytes(word(0)?) != FLO_MAGIC {
        return Err(Error::format(path, 0, "bad .flo magic (expected 202021.25)"));
    }
    let w = i32::from_le_bytes(word(4)?);
    let h = i32::from_le_bytes(word(8)?);
    if w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16 {
        return Err(Error::format(path, 4, format!("bad .flo dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = 12 + w * h * 8;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            bytes.len().min(expected) as u64,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FlowField::from_raw(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_translation_warps() {
        let f = flow_from_warp(&WarpField::identity(12, 9));
        assert!(f.as_slice().iter().all(|&v| v == 0.0));
        let shift = WarpField::from_fn(12, 9, |x, y| [x - 3.0, y]);
        let (f, valid) = flow_from_warp_with_mask(&shift);
        // columns 9..12 receive no deposits and inherit their neighbor
        assert_eq!(valid.iter().filter(|&&v| !v).count(), 3 * 9);
        for y in 0..9 {
            for x in 0..12 {
                assert_eq!(f.get(x, y), [3.0, 0.0]);
            }
        }
    }

    #[test]
    fn holes_take_nearest() {
        let mut f = FlowField::zeros(5, 1);
        f.set(0, 0, [1.0, 0.0]);
        f.set(4, 0, [2.0, 0.0]);
        fill_holes(&mut f, &[true, false, false, false, true]);
        let row: Vec<f32> = (0..5).map(|x| f.get(x, 0)[0]).collect();
        assert_eq!(row, vec![1.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn flo_round_trip_and_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.flo");
        let f = FlowField::from_fn(7, 5, |x, y| [x as f64 * 0.3 - 1.0, y as f64 / 7.0]);
        write_flo(&p, &f).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(read_flo(&p).unwrap(), f);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        match read_flo(&p) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, &bytes[..30]).unwrap();
        assert!(matches!(read_flo(&p), Err(Error::Format { .. })));
    }
}
