use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::scalp::ScalpModel;
use crate::spatial::PointIndex;
use crate::strand::{bridge, polyline_tangents, Strand, StrandSet};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectConfig {
    /// Largest endpoint gap bridged while chaining, mm.
    pub chain_gap: f64,
    /// Largest bend allowed across a chaining joint, degrees.
    pub chain_angle_deg: f64,
    /// Chains whose nearer end is this close to the scalp get rooted, mm.
    pub root_distance: f64,
    /// Neighborhood for borrowing the growth direction, mm.
    pub sign_distance: f64,
    /// Neighborhood for grafting onto a rooted strand, mm.
    pub graft_distance: f64,
    /// Largest vertex spacing inside inserted bridges, mm.
    pub bridge_step: f64,
    /// Vertices used to estimate an end tangent.
    pub tangent_span: usize,
    pub max_iterations: usize,
    pub keep_unrooted: bool,
}

impl Default for ConnectConfig {
    fn default() -> Self {
        ConnectConfig {
            chain_gap: 3.0,
            chain_angle_deg: 30.0,
            root_distance: 15.0,
            sign_distance: 5.0,
            graft_distance: 2.0,
            bridge_step: 1.0,
            tangent_span: 3,
            max_iterations: 64,
            keep_unrooted: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectResult {
    /// Rooted strands first, then unrooted leftovers when kept.
    pub strands: StrandSet,
    /// Input segment indices owned by each output strand.
    pub members: Vec<Vec<usize>>,
    pub rooted: usize,
    pub unrooted: usize,
    pub long_strands: usize,
}

#[derive(Debug, Clone)]
struct Chain {
    verts: Vec<Vec3>,
    members: Vec<usize>,
}

impl Chain {
    fn reverse(&mut self) {
        self.verts.reverse();
    }
}

fn lex(a: &Vec3, b: &Vec3) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

fn lex_slice(a: &[Vec3], b: &[Vec3]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        let o = lex(u, v);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Orients each segment so its lexicographically smaller endpoint comes
/// first and sorts them, so results do not depend on input order or sign.
fn canonicalize(segments: &[Vec<Vec3>]) -> Vec<Chain> {
    let mut chains: Vec<Chain> = segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.len() >= 2)
        .map(|(i, s)| {
            let mut verts = s.clone();
            if lex(&verts[verts.len() - 1], &verts[0]) == Ordering::Less {
                verts.reverse();
            }
            Chain {
                verts,
                members: vec![i],
            }
        })
        .collect();
    chains.sort_by(|a, b| lex_slice(&a.verts, &b.verts).then(a.members.cmp(&b.members)));
    chains
}

fn end_point(c: &Chain, side: usize) -> Vec3 {
    if side == 0 {
        c.verts[0]
    } else {
        c.verts[c.verts.len() - 1]
    }
}

/// Unit tangent pointing out of the chain at `side`.
fn end_tangent(c: &Chain, side: usize, span: usize) -> Vec3 {
    let n = c.verts.len();
    let k = span.clamp(1, n - 1);
    let v = if side == 0 {
        c.verts[0] - c.verts[k]
    } else {
        c.verts[n - 1] - c.verts[n - 1 - k]
    };
    v.try_normalize(1e-12).unwrap_or_else(Vec3::zeros)
}

/// Appends `b` after `a`, inserting bridge vertices across the gap.
fn join(a: &[Vec3], b: &[Vec3], step: f64) -> Vec<Vec3> {
    let mut out = a.to_vec();
    let last = *a.last().unwrap();
    let first = b[0];
    out.extend(bridge(&last, &first, step));
    let skip = usize::from((first - last).norm() < 1e-9);
    out.extend_from_slice(&b[skip..]);
    out
}

/// One round of mutual-nearest end linking; returns whether anything merged.
fn chain_round(chains: &mut [Option<Chain>], cfg: &ConnectConfig) -> bool {
    struct End {
        chain: usize,
        side: usize,
        pos: Vec3,
        out: Vec3,
    }
    let ends: Vec<End> = chains
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
        .flat_map(|(i, c)| {
            (0..2).map(move |side| End {
                chain: i,
                side,
                pos: end_point(c, side),
                out: end_tangent(c, side, cfg.tangent_span),
            })
        })
        .collect();
    if ends.len() < 4 {
        return false;
    }
    let index = PointIndex::new(&ends.iter().map(|e| e.pos).collect::<Vec<_>>());
    let cos_max = cfg.chain_angle_deg.to_radians().cos();
    let best: Vec<Option<(usize, f64)>> = ends
        .iter()
        .map(|e| {
            index
                .within(&e.pos, cfg.chain_gap)
                .into_iter()
                .filter(|n| n.distance < cfg.chain_gap)
                .filter(|n| ends[n.index].chain != e.chain)
                .find(|n| -e.out.dot(&ends[n.index].out) > cos_max)
                .map(|n| (n.index, n.distance))
        })
        .collect();
    let mut links: Vec<(f64, usize, usize)> = best
        .iter()
        .enumerate()
        .filter_map(|(e, b)| {
            let (f, gap) = (*b)?;
            (e < f && best[f].map(|x| x.0) == Some(e)).then_some((gap, e, f))
        })
        .collect();
    links.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut touched = vec![false; chains.len()];
    let mut merged = false;
    for (_, e, f) in links {
        let (ce, cf) = (ends[e].chain, ends[f].chain);
        if touched[ce] || touched[cf] {
            continue;
        }
        touched[ce] = true;
        touched[cf] = true;
        let mut a = chains[ce].take().unwrap();
        let mut b = chains[cf].take().unwrap();
        if ends[e].side == 0 {
            a.reverse();
        }
        if ends[f].side == 1 {
            b.reverse();
        }
        let mut members = a.members;
        members.extend(b.members);
        members.sort_unstable();
        let c = Chain {
            verts: join(&a.verts, &b.verts, cfg.bridge_step),
            members,
        };
        chains[ce.min(cf)] = Some(c);
        merged = true;
    }
    merged
}

/// Rooted-strand vertices, indexed for proximity queries.
struct RootedIndex {
    index: PointIndex,
    owner: Vec<(usize, usize)>,
    tangents: Vec<Vec<Vec3>>,
}

impl RootedIndex {
    fn new(rooted: &[Chain]) -> Self {
        let mut pts = Vec::new();
        let mut owner = Vec::new();
        for (s, c) in rooted.iter().enumerate() {
            for (k, v) in c.verts.iter().enumerate() {
                pts.push(*v);
                owner.push((s, k));
            }
        }
        RootedIndex {
            index: PointIndex::new(&pts),
            owner,
            tangents: rooted.iter().map(|c| polyline_tangents(&c.verts)).collect(),
        }
    }

    /// Closest vertex pair `(dist, i on c, strand, k on strand)` per rooted
    /// strand within `radius`, sorted by strand.
    fn closest_pairs(&self, c: &Chain, radius: f64) -> Vec<(f64, usize, usize, usize)> {
        let mut best: Vec<(f64, usize, usize, usize)> = Vec::new();
        for (i, v) in c.verts.iter().enumerate() {
            for n in self.index.within(v, radius) {
                if n.distance >= radius {
                    continue;
                }
                let (s, k) = self.owner[n.index];
                let cand = (n.distance, i, s, k);
                match best.iter_mut().find(|b| b.2 == s) {
                    Some(b) => {
                        if (cand.0, cand.1, cand.3) < (b.0, b.1, b.3) {
                            *b = cand;
                        }
                    }
                    None => best.push(cand),
                }
            }
        }
        best.sort_by_key(|b| b.2);
        best
    }
}

fn root_chain(mut c: Chain, scalp: &ScalpModel, cfg: &ConnectConfig) -> Option<Chain> {
    let h0 = scalp.closest_point(&c.verts[0]);
    let h1 = scalp.closest_point(&c.verts[c.verts.len() - 1]);
    let hit = if h0.distance <= h1.distance {
        h0
    } else {
        c.reverse();
        h1
    };
    if hit.distance >= cfg.root_distance {
        if h0.distance > h1.distance {
            c.reverse();
        }
        return None;
    }
    if hit.distance > 1e-9 {
        c.verts = join(&[hit.point], &c.verts, cfg.bridge_step);
    }
    Some(c)
}

/// Chains segments into long strands, roots those near the scalp, and grows
/// the rest by borrowing direction from and grafting onto rooted neighbors.
pub fn connect_strands(
    segments: &[Vec<Vec3>],
    scalp: &ScalpModel,
    cfg: &ConnectConfig,
) -> ConnectResult {
    let mut pool: Vec<Option<Chain>> = canonicalize(segments).into_iter().map(Some).collect();
    while chain_round(&mut pool, cfg) {}
    let mut unrooted: Vec<Chain> = pool.into_iter().flatten().collect();
    let long_strands = unrooted.len();

    let mut rooted: Vec<Chain> = Vec::new();
    let cos_sort = |t: &Vec3, u: &Vec3| t.dot(u).abs();
    for _ in 0..cfg.max_iterations {
        let mut changed = false;
        let mut rest = Vec::new();
        for c in unrooted {
            match root_chain(c.clone(), scalp, cfg) {
                Some(r) => {
                    rooted.push(r);
                    changed = true;
                }
                None => rest.push(c),
            }
        }
        unrooted = rest;
        if rooted.is_empty() || unrooted.is_empty() {
            break;
        }
        let idx = RootedIndex::new(&rooted);
        let mut rest = Vec::new();
        let mut grafted = Vec::new();
        for mut c in unrooted {
            let pairs = idx.closest_pairs(&c, cfg.sign_distance);
            if pairs.is_empty() {
                rest.push(c);
                continue;
            }
            let tc = polyline_tangents(&c.verts);
            let mut pick = pairs[0];
            let mut pick_cos = cos_sort(&tc[pick.1], &idx.tangents[pick.2][pick.3]);
            for p in &pairs[1..] {
                let cs = cos_sort(&tc[p.1], &idx.tangents[p.2][p.3]);
                if cs > pick_cos {
                    pick = *p;
                    pick_cos = cs;
                }
            }
            let mut pairs = pairs;
            if tc[pick.1].dot(&idx.tangents[pick.2][pick.3]) < 0.0 {
                c.reverse();
                let n = c.verts.len();
                pairs.iter_mut().for_each(|p| p.1 = n - 1 - p.1);
            }
            let closest = pairs
                .iter()
                .filter(|p| p.0 < cfg.graft_distance)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
            match closest {
                Some(&(_, i, s, k)) => {
                    let verts = join(&rooted[s].verts[..=k], &c.verts[i..], cfg.bridge_step);
                    grafted.push(Chain {
                        verts,
                        members: c.members,
                    });
                    changed = true;
                }
                None => rest.push(c),
            }
        }
        rooted.extend(grafted);
        unrooted = rest;
        if !changed || unrooted.is_empty() {
            break;
        }
    }

    let rooted_n = rooted.len();
    let unrooted_n = unrooted.len();
    let mut strands = Vec::new();
    let mut members = Vec::new();
    for c in rooted {
        if c.verts.len() >= 2 {
            strands.push(Strand::new(c.verts, true).expect("rooted strands have 2+ vertices"));
            members.push(c.members);
        }
    }
    if cfg.keep_unrooted {
        for c in unrooted {
            strands.push(Strand::new(c.verts, false).expect("chains have 2+ vertices"));
            members.push(c.members);
        }
    }
    ConnectResult {
        strands: StrandSet::new(strands),
        members,
        rooted: rooted_n,
        unrooted: unrooted_n,
        long_strands,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(from: Vec3, dir: Vec3, n: usize) -> Vec<Vec3> {
        (0..n).map(|i| from + dir * i as f64).collect()
    }

    fn flat_scalp() -> ScalpModel {
        let v = vec![
            Vec3::new(-100.0, -100.0, 0.0),
            Vec3::new(100.0, -100.0, 0.0),
            Vec3::new(100.0, 100.0, 0.0),
            Vec3::new(-100.0, 100.0, 0.0),
        ];
        ScalpModel::new(v, vec![[0, 1, 2], [0, 2, 3]], Vec::new()).unwrap()
    }

    #[test]
    fn chains_then_roots() {
        let down = Vec3::new(0.0, 0.0, 1.0);
        let whole = line(Vec3::new(0.0, 0.0, 0.0), down, 40);
        let segs: Vec<Vec<Vec3>> = whole
            .chunks(10)
            .enumerate()
            .map(|(i, c)| {
                let mut c = c.to_vec();
                if i % 2 == 1 {
                    c.reverse();
                }
                c
            })
            .rev()
            .collect();
        let res = connect_strands(&segs, &flat_scalp(), &ConnectConfig::default());
        assert_eq!(res.rooted, 1);
        assert_eq!(res.long_strands, 1);
        let s = &res.strands.strands[0];
        assert_eq!(s.vertices, whole);
        assert_eq!(res.members[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn root_distance_gate() {
        let up = Vec3::z();
        let near = line(Vec3::new(0.0, 0.0, 10.0), up, 10);
        let far = line(Vec3::new(50.0, 0.0, 20.0), up, 10);
        let res = connect_strands(&[near, far], &flat_scalp(), &ConnectConfig::default());
        assert_eq!(res.rooted, 1);
        assert_eq!(res.unrooted, 1);
        let r = &res.strands.strands[0];
        assert_eq!(r.vertices[0], Vec3::zeros());
        assert!(r.max_spacing() <= 1.0 + 1e-9);
    }

    #[test]
    fn nearby_strand_borrows_direction_and_grafts() {
        let up = Vec3::z();
        let rooted = line(Vec3::new(0.0, 0.0, 0.0), up, 60);
        let mut side: Vec<Vec3> = line(Vec3::new(1.5, 0.0, 30.0), up, 30);
        side.reverse();
        let res = connect_strands(&[rooted, side], &flat_scalp(), &ConnectConfig::default());
        assert_eq!(res.rooted, 2);
        let g = &res.strands.strands[1];
        assert_eq!(g.vertices[0], Vec3::zeros());
        assert!(g.vertices.last().unwrap().z > 50.0);
        for w in g.vertices.windows(2) {
            assert!(w[1].z >= w[0].z - 1e-9);
        }
    }
}
