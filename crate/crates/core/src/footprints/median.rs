use crate::footprints::BinaryMask;
use crate::par;

pub const MEDIAN_KERNEL: usize = 7;
/// A 7x7 binary median is 1 iff at least 25 of the 49 samples are 1.
pub const MEDIAN_MAJORITY: u32 = 25;
const HALF: usize = MEDIAN_KERNEL / 2;

/// 7x7 median of a binary mask with edge replication.
pub fn median_filter(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    if w == 0 || h == 0 {
        return mask.clone();
    }
    let rows: Vec<&[u8]> = (0..h).map(|r| &mask.data[r * w..(r + 1) * w]).collect();
    let mut out = vec![0u8; w * h];
    median_rows(&rows, 0, h, &mut out);
    BinaryMask {
        width: w,
        height: h,
        transform: mask.transform,
        data: out,
    }
}

/// Filters output rows `out_row0..out_row0 + out.len()/w` of an image whose
/// binary rows are `rows` (the full image height; rows outside the output
/// band plus a 3-row halo may be empty slices and are never touched).
pub(crate) fn median_rows(rows: &[&[u8]], out_row0: usize, out_rows: usize, out: &mut [u8]) {
    let h = rows.len();
    let w = out.len() / out_rows.max(1);
    debug_assert_eq!(out.len(), w * out_rows);
    let lo = out_row0.saturating_sub(HALF);
    let hi = (out_row0 + out_rows + HALF).min(h);
    // horizontal 7-sums with column replication
    let hsum: Vec<Vec<u8>> = par::map_range(hi - lo, |k| horizontal_sums(rows[lo + k], w));
    let get = |r: isize| -> &Vec<u8> {
        let rr = r.clamp(0, h as isize - 1) as usize;
        &hsum[rr - lo]
    };
    par::for_each_chunk_mut(out, w, |k, dst| {
        let r = (out_row0 + k) as isize;
        let mut acc = vec![0u32; w];
        for dr in -(HALF as isize)..=(HALF as isize) {
            for (a, &v) in acc.iter_mut().zip(get(r + dr).iter()) {
                *a += v as u32;
            }
        }
        for (d, a) in dst.iter_mut().zip(acc) {
            *d = u8::from(a >= MEDIAN_MAJORITY);
        }
    });
}

fn horizontal_sums(row: &[u8], w: usize) -> Vec<u8> {
    let at = |c: isize| row[c.clamp(0, w as isize - 1) as usize];
    let mut out = vec![0u8; w];
    let mut s: i32 = (-(HALF as isize)..=(HALF as isize)).map(|c| at(c) as i32).sum();
    for (c, o) in out.iter_mut().enumerate() {
        *o = s as u8;
        let c = c as isize;
        s += at(c + HALF as isize + 1) as i32 - at(c - HALF as isize) as i32;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;

    fn t() -> GeoTransform {
        GeoTransform::new(0.0, 0.0, 0.5).unwrap()
    }

    #[test]
    fn constant_masks_are_fixed_points() {
        let ones = BinaryMask::new(9, 5, t(), vec![1; 45]).unwrap();
        assert_eq!(median_filter(&ones), ones);
        let zeros = BinaryMask::zeros(9, 5, t());
        assert_eq!(median_filter(&zeros), zeros);
    }

    #[test]
    fn isolated_pixel_removed() {
        let mut m = BinaryMask::zeros(15, 15, t());
        m.data[7 * 15 + 7] = 1;
        assert_eq!(median_filter(&m).count_ones(), 0);
    }

    #[test]
    fn single_pixel_image_replicates() {
        let m = BinaryMask::new(1, 1, t(), vec![1]).unwrap();
        assert_eq!(median_filter(&m).data, vec![1]);
    }
}
