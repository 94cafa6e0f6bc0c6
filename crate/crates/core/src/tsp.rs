//! Visiting order of the ground nodes as an open tour with fixed endpoints.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const DEFAULT_RESTARTS: usize = 8;

/// `order` holds zero-based node indices; `length` includes the legs from the
/// start and to the end point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

fn check_permutation(order: &[usize], k: usize) -> Result<()> {
    if order.len() != k {
        return Err(Error::InvalidOrder(format!("expected {k} entries, got {}", order.len())));
    }
    let mut seen = vec![false; k];
    for &i in order {
        if i >= k || seen[i] {
            return Err(Error::InvalidOrder(format!("{order:?} is not a permutation of 0..{k}")));
        }
        seen[i] = true;
    }
    Ok(())
}

fn path_length(order: &[usize], points: &[Point2], start: Point2, end: Option<Point2>) -> f64 {
    let mut len = 0.0;
    let mut prev = start;
    for &i in order {
        len += prev.distance(points[i]);
        prev = points[i];
    }
    if let Some(e) = end {
        len += prev.distance(e);
    }
    len
}

/// Length of the open tour `start → points[order[0]] → … → end`. Without an
/// end point the tour stops at the last node.
pub fn tour_length(order: &[usize], points: &[Point2], start: Point2, end: Option<Point2>) -> Result<f64> {
    check_permutation(order, points.len())?;
    Ok(path_length(order, points, start, end))
}

fn nearest_neighbor(points: &[Point2], start: Point2, first: Option<usize>) -> Vec<usize> {
    let k = points.len();
    let mut used = vec![false; k];
    let mut order = Vec::with_capacity(k);
    let mut cur = start;
    if let Some(f) = first {
        used[f] = true;
        order.push(f);
        cur = points[f];
    }
    while order.len() < k {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            if !used[i] {
                let d = cur.distance(*p);
                if d < best_d {
                    best_d = d;
                    best = Some(i);
                }
            }
        }
        let i = best.unwrap();
        used[i] = true;
        order.push(i);
        cur = points[i];
    }
    order
}

/// Best length reduction available from reversing `order[i..=j]`.
fn two_opt_gain(order: &[usize], points: &[Point2], start: Point2, end: Option<Point2>, i: usize, j: usize) -> f64 {
    let at = |idx: usize| points[order[idx]];
    let before = if i == 0 { start } else { at(i - 1) };
    let (first, last) = (at(i), at(j));
    let old_in = before.distance(first);
    let new_in = before.distance(last);
    let (old_out, new_out) = match (j + 1 < order.len(), end) {
        (true, _) => (last.distance(at(j + 1)), first.distance(at(j + 1))),
        (false, Some(e)) => (last.distance(e), first.distance(e)),
        (false, None) => (0.0, 0.0),
    };
    old_in + old_out - new_in - new_out
}

fn two_opt(order: &mut [usize], points: &[Point2], start: Point2, end: Option<Point2>) {
    let k = order.len();
    let scale = 1e-12 * (1.0 + path_length(order, points, start, end));
    loop {
        let mut improved = false;
        for i in 0..k {
            for j in i + 1..k {
                if two_opt_gain(order, points, start, end, i, j) > scale {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Nearest-neighbor construction from `start` followed by 2-opt, restarted
/// from `restarts − 1` random orders; the shortest tour wins.
pub fn solve_open_tour_with(points: &[Point2], start: Point2, end: Option<Point2>, seed: u64, restarts: usize) -> Result<Tour> {
    if points.is_empty() {
        return Err(Error::invalid("number of ground nodes", "at least 1"));
    }
    let mut best = nearest_neighbor(points, start, None);
    two_opt(&mut best, points, start, end);
    let mut best_len = path_length(&best, points, start, end);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..restarts.max(1) {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(&mut rng);
        two_opt(&mut order, points, start, end);
        let len = path_length(&order, points, start, end);
        if len < best_len - 1e-9 * (1.0 + best_len) {
            best = order;
            best_len = len;
        }
    }
    Ok(Tour {
        order: best,
        length: best_len,
    })
}

pub fn solve_open_tour(points: &[Point2], start: Point2, end: Option<Point2>, seed: u64) -> Result<Tour> {
    solve_open_tour_with(points, start, end, seed, DEFAULT_RESTARTS)
}
