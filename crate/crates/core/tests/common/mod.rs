//! Brute-force reference implementations used as test oracles. Nothing here
//! calls into the library's matching or IOU code.

#![allow(dead_code)]

use foci::{BBox, ClassId, Detection};

/// IOU by visiting every unit cell of both boxes on an integer grid. Boxes
/// must have integer coordinates.
pub fn raster_iou(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay, aw, ah) = (a.x as i64, a.y as i64, a.w as i64, a.h as i64);
    let (bx, by, bw, bh) = (b.x as i64, b.y as i64, b.w as i64, b.h as i64);
    let inside_b = |x: i64, y: i64| x >= bx && x < bx + bw && y >= by && y < by + bh;
    let mut inter = 0i64;
    for x in ax..ax + aw {
        for y in ay..ay + ah {
            if inside_b(x, y) {
                inter += 1;
            }
        }
    }
    let mut count_b = 0i64;
    for _ in bx..bx + bw {
        for _ in by..by + bh {
            count_b += 1;
        }
    }
    let union = aw * ah + count_b - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Independent overlap ratio used by the brute-force oracles below.
pub fn ref_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let iy = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.w * a.h + b.w * b.h - inter;
    if inter == 0.0 || union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// The unique subset of `dets` that is consistent with greedy suppression,
/// found by enumerating every subset. `dets` must already be in rank order
/// (descending confidence with the library's tie rule).
pub fn brute_force_nms(ranked: &[Detection], thresh: f64) -> Vec<Detection> {
    let n = ranked.len();
    assert!(n <= 16, "subset enumeration is exponential");
    let mut found = Vec::new();
    for mask in 0u32..(1 << n) {
        let chosen = |i: usize| mask & (1 << i) != 0;
        let consistent = (0..n).all(|i| {
            let blocked = (0..i).any(|j| {
                chosen(j) && ranked[j].class == ranked[i].class && ref_iou(&ranked[j].bbox, &ranked[i].bbox) >= thresh
            });
            chosen(i) == !blocked
        });
        if consistent {
            found.push(mask);
        }
    }
    assert_eq!(found.len(), 1, "greedy-consistent subset must be unique");
    (0..n).filter(|i| found[0] & (1 << i) != 0).map(|i| ranked[i]).collect()
}

/// Every matching (set of disjoint edges) of a bipartite edge list.
pub fn all_matchings(edges: &[(usize, usize, f64)]) -> Vec<Vec<(usize, usize, f64)>> {
    fn rec(
        edges: &[(usize, usize, f64)],
        i: usize,
        cur: &mut Vec<(usize, usize, f64)>,
        out: &mut Vec<Vec<(usize, usize, f64)>>,
    ) {
        if i == edges.len() {
            out.push(cur.clone());
            return;
        }
        rec(edges, i + 1, cur, out);
        let e = edges[i];
        if cur.iter().all(|c| c.0 != e.0 && c.1 != e.1) {
            cur.push(e);
            rec(edges, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(edges, 0, &mut Vec::new(), &mut out);
    out
}

/// The matching whose weights, sorted descending, are lexicographically
/// largest. With distinct weights this is exactly what greedy commitment by
/// descending weight produces.
pub fn lexicographic_max_matching(edges: &[(usize, usize, f64)]) -> Vec<(usize, usize)> {
    let key = |m: &Vec<(usize, usize, f64)>| {
        let mut w: Vec<f64> = m.iter().map(|e| e.2).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        w
    };
    let best = all_matchings(edges)
        .into_iter()
        .max_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            for (x, y) in ka.iter().zip(&kb) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Equal => continue,
                    o => return o,
                }
            }
            ka.len().cmp(&kb.len())
        })
        .unwrap_or_default();
    let mut pairs: Vec<(usize, usize)> = best.into_iter().map(|e| (e.0, e.1)).collect();
    pairs.sort();
    pairs
}

/// Size of a maximum-cardinality matching, by enumeration.
pub fn max_matching_size(edges: &[(usize, usize)]) -> usize {
    let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
    all_matchings(&weighted).iter().map(Vec::len).max().unwrap_or(0)
}

pub fn det(frame: u32, class: ClassId, conf: f64, bbox: BBox) -> Detection {
    Detection::new(frame, class, conf, bbox)
}
