use super::{BinaryRaster, Pixel, RING};

/// Zhang–Suen deletion test for one sub-iteration (`step` 0 or 1).
pub fn is_zhang_suen_deletable(r: &BinaryRaster, p: Pixel, step: usize) -> bool {
    if !r.get(p.x as usize, p.y as usize) {
        return false;
    }
    let mut n = [false; 8];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        n[k] = r.at(p.x as i64 + dx, p.y as i64 + dy);
    }
    let b = n.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = n;
    if step == 0 {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

/// Reduce ink to 1-pixel-wide curves.
///
/// Zhang–Suen sub-iterations run to a fixpoint. A sub-iteration that
/// would erase a whole 8-connected component keeps its first pixel
/// (row-major), so small blobs such as 2x2 squares survive as dots.
/// Redundant staircase corners and simple pixels of solid 2x2 blocks are
/// then removed and the cycle repeats until nothing changes. A 2x2 block
/// can survive only when each of its pixels anchors a branch of its own.
pub fn thin(raster: &BinaryRaster) -> BinaryRaster {
    let mut out = raster.clone();
    loop {
        while zhang_suen_pass(&mut out) {}
        let stairs = remove_staircases(&mut out);
        let blocks = reduce_blocks(&mut out);
        if !(stairs || blocks) {
            break;
        }
    }
    out
}

/// A foreground pixel whose removal keeps the local topology: it touches
/// the background through a 4-neighbor and its foreground neighbors form
/// one 8-connected group.
pub fn is_simple(r: &BinaryRaster, p: Pixel) -> bool {
    if !r.get(p.x as usize, p.y as usize) {
        return false;
    }
    let mut n = [false; 8];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        n[k] = r.at(p.x as i64 + dx, p.y as i64 + dy);
    }
    if n[0] && n[2] && n[4] && n[6] {
        return false;
    }
    let set: Vec<usize> = (0..8).filter(|&k| n[k]).collect();
    if set.is_empty() {
        return false;
    }
    // Ring neighbors touch when adjacent on the ring, or when both are
    // edge neighbors around one corner (e.g. north and east).
    let touches = |a: usize, b: usize| {
        let d = (a + 8 - b) % 8;
        d == 1 || d == 7 || (a.is_multiple_of(2) && b.is_multiple_of(2) && (d == 2 || d == 6))
    };
    let mut seen = vec![set[0]];
    let mut stack = vec![set[0]];
    while let Some(a) = stack.pop() {
        for &b in &set {
            if !seen.contains(&b) && touches(a, b) {
                seen.push(b);
                stack.push(b);
            }
        }
    }
    seen.len() == set.len()
}

fn block_at(r: &BinaryRaster, x: usize, y: usize) -> bool {
    r.get(x, y) && r.get(x + 1, y) && r.get(x, y + 1) && r.get(x + 1, y + 1)
}

/// First simple pixel of a solid 2x2 block, scanning blocks row-major.
pub fn find_reducible_block_pixel(r: &BinaryRaster) -> Option<Pixel> {
    for y in 0..r.height().saturating_sub(1) {
        for x in 0..r.width().saturating_sub(1) {
            if block_at(r, x, y) {
                let corners = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
                if let Some(&(px, py)) = corners.iter().find(|&&(px, py)| is_simple(r, Pixel::new(px as u32, py as u32))) {
                    return Some(Pixel::new(px as u32, py as u32));
                }
            }
        }
    }
    None
}

/// Sequentially delete simple pixels of solid 2x2 blocks.
fn reduce_blocks(r: &mut BinaryRaster) -> bool {
    let mut changed = false;
    while let Some(p) = find_reducible_block_pixel(r) {
        r.set(p.x as usize, p.y as usize, false);
        changed = true;
    }
    changed
}

/// One full pass (both sub-iterations). Returns whether any pixel changed.
fn zhang_suen_pass(r: &mut BinaryRaster) -> bool {
    let mut changed = false;
    for step in 0..2 {
        let candidates: Vec<Pixel> = r
            .foreground()
            .into_iter()
            .filter(|&p| is_zhang_suen_deletable(r, p, step))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let keep = vanishing_components(r, &candidates);
        for &p in &candidates {
            r.set(p.x as usize, p.y as usize, false);
        }
        for p in keep {
            r.set(p.x as usize, p.y as usize, true);
        }
        changed = true;
    }
    changed
}

/// For every component whose pixels are all deletion candidates, the
/// first candidate in row-major order.
fn vanishing_components(r: &BinaryRaster, candidates: &[Pixel]) -> Vec<Pixel> {
    let w = r.width();
    let mut is_candidate = vec![false; w * r.height()];
    for p in candidates {
        is_candidate[p.y as usize * w + p.x as usize] = true;
    }
    let mut seen = vec![false; w * r.height()];
    let mut keep = Vec::new();
    let mut stack = Vec::new();
    for &start in candidates {
        let si = start.y as usize * w + start.x as usize;
        if seen[si] {
            continue;
        }
        seen[si] = true;
        stack.push(start);
        let mut all_candidates = true;
        while let Some(p) = stack.pop() {
            if !is_candidate[p.y as usize * w + p.x as usize] {
                all_candidates = false;
            }
            for q in r.neighbors(p) {
                let qi = q.y as usize * w + q.x as usize;
                if !seen[qi] {
                    seen[qi] = true;
                    stack.push(q);
                }
            }
        }
        if all_candidates {
            keep.push(start);
        }
    }
    keep
}

/// Sequentially delete corner pixels whose two perpendicular 4-neighbors
/// already touch diagonally and whose opposite side is empty. Each such
/// pixel is simple, so connectivity is preserved.
fn remove_staircases(r: &mut BinaryRaster) -> bool {
    // (first, second, opposite three) as ring indices: N=0 NE=1 E=2 SE=3 S=4 SW=5 W=6 NW=7
    const PATTERNS: [(usize, usize, [usize; 3]); 4] = [
        (0, 2, [4, 6, 5]),
        (2, 4, [6, 0, 7]),
        (4, 6, [0, 2, 1]),
        (6, 0, [2, 4, 3]),
    ];
    let mut changed = false;
    for p in r.foreground() {
        let mut n = [false; 8];
        for (k, &(dx, dy)) in RING.iter().enumerate() {
            n[k] = r.at(p.x as i64 + dx, p.y as i64 + dy);
        }
        let redundant = PATTERNS
            .iter()
            .any(|&(a, b, opp)| n[a] && n[b] && opp.iter().all(|&k| !n[k]));
        if redundant {
            r.set(p.x as usize, p.y as usize, false);
            changed = true;
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster_from(rows: &[&str]) -> BinaryRaster {
        let h = rows.len();
        let w = rows[0].len();
        let data = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'#')).collect();
        BinaryRaster::from_vec(w, h, data).unwrap()
    }

    #[test]
    fn empty_and_single_pixel_are_fixpoints() {
        let empty = BinaryRaster::new(5, 5).unwrap();
        assert_eq!(thin(&empty), empty);
        let mut dot = BinaryRaster::new(5, 5).unwrap();
        dot.set(2, 2, true);
        assert_eq!(thin(&dot), dot);
    }

    #[test]
    fn solid_bar_thins_to_middle_row() {
        // Reference Zhang–Suen run: survivors are row 3, columns 3..=19.
        let mut bar = BinaryRaster::new(24, 7).unwrap();
        for y in 2..5 {
            for x in 2..22 {
                bar.set(x, y, true);
            }
        }
        let out = thin(&bar);
        let expected: Vec<Pixel> = (3..=19).map(|x| Pixel::new(x, 3)).collect();
        let mut got = out.foreground();
        got.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn block_with_four_private_branches_is_kept() {
        let r = raster_from(&["#....#", ".#..#.", "..##..", "..##..", ".#..#.", "#....#"]);
        let out = thin(&r);
        assert_eq!(out, r);
        assert_eq!(find_reducible_block_pixel(&out), None);
        let mut spur = r.clone();
        spur.set(5, 5, false);
        spur.set(4, 4, false);
        assert!(find_reducible_block_pixel(&spur).is_some());
        assert!(find_reducible_block_pixel(&thin(&spur)).is_none());
    }

    #[test]
    fn simple_pixel_classification() {
        let line = raster_from(&[".....", ".###.", "....."]);
        assert!(is_simple(&line, Pixel::new(1, 1)));
        assert!(!is_simple(&line, Pixel::new(2, 1)));
        let corner = raster_from(&["##", "#."]);
        assert!(is_simple(&corner, Pixel::new(0, 0)));
    }

    #[test]
    fn two_by_two_square_survives_as_dot() {
        let r = raster_from(&["....", ".##.", ".##.", "...."]);
        let out = thin(&r);
        assert_eq!(out.count(), 1);
        assert_eq!(out.component_count(), 1);
    }

    #[test]
    fn staircase_corner_removed() {
        let r = raster_from(&["##...", ".##..", "..##.", "...##"]);
        let out = thin(&r);
        assert_eq!(out.component_count(), 1);
        assert!(out.find_solid_block().is_none());
        for p in out.foreground() {
            assert!(out.neighbor_count(p) <= 2, "{p:?}");
        }
    }
}
