//! Network layout, user-to-O-RU association and structural constraint checks.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub type OruId = usize;
pub type UserId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle users are confined to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Fixed O-CU / O-DU / O-RU graph. The O-CU is the implicit root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub odu_count: usize,
    pub oru_positions: Vec<Point>,
    /// O-DU index hosting each O-RU.
    pub oru_to_odu: Vec<usize>,
    pub inter_site_distance: f64,
    pub h_bs: f64,
    pub h_ut: f64,
}

/// Antenna heights used throughout unless overridden.
pub const DEFAULT_H_BS: f64 = 25.0;
pub const DEFAULT_H_UT: f64 = 1.5;

impl Topology {
    pub fn oru_count(&self) -> usize {
        self.oru_positions.len()
    }

    /// Hexagon circumradius.
    pub fn cell_radius(&self) -> f64 {
        self.inter_site_distance / 3f64.sqrt()
    }

    /// Bounding box of the site coordinates grown by one cell radius.
    pub fn bounding_box(&self) -> BoundingBox {
        let r = self.cell_radius();
        let (mut min, mut max) = (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in &self.oru_positions {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BoundingBox {
            min: Point::new(min.x - r, min.y - r),
            max: Point::new(max.x + r, max.y + r),
        }
    }

    /// Whether `p` lies inside the hexagonal cell drawn around site `s`.
    ///
    /// Neighbours sit at multiples of 60 degrees, so the hexagon's edge
    /// midpoints are at distance isd/2 along those same directions.
    pub fn in_hex_cell(&self, s: OruId, p: &Point) -> bool {
        let c = self.oru_positions[s];
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        let half = self.inter_site_distance / 2.0;
        (0..6).all(|k| {
            let a = k as f64 * std::f64::consts::FRAC_PI_3;
            dx * a.cos() + dy * a.sin() <= half + 1e-9
        })
    }

    pub fn nearest_oru(&self, p: &Point) -> OruId {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (s, site) in self.oru_positions.iter().enumerate() {
            let d = site.distance(p);
            if d < best_d {
                best_d = d;
                best = s;
            }
        }
        best
    }

    /// χ as a dense G×S 0/1 matrix.
    pub fn chi(&self) -> Vec<Vec<u8>> {
        let mut chi = vec![vec![0u8; self.oru_count()]; self.odu_count];
        for (s, &g) in self.oru_to_odu.iter().enumerate() {
            if g < self.odu_count {
                chi[g][s] = 1;
            }
        }
        chi
    }
}

/// Contiguous, as-equal-as-possible partition of `s` O-RUs over `g` O-DUs.
/// The first `s % g` O-DUs take one extra O-RU.
pub fn contiguous_partition(g: usize, s: usize) -> Vec<usize> {
    let base = s / g;
    let extra = s % g;
    let mut map = Vec::with_capacity(s);
    for du in 0..g {
        let size = base + usize::from(du < extra);
        map.extend(std::iter::repeat_n(du, size));
    }
    map
}

/// Hexagonal layout of 1, 7 or 19 sites, center at the origin.
pub fn build_hex_topology(g: usize, s: usize, isd: f64) -> Result<Topology> {
    if g == 0 || g > s {
        return Err(SimError::Config(format!(
            "O-DU count must be in 1..={s}, got {g}"
        )));
    }
    if !(isd.is_finite() && isd > 0.0) {
        return Err(SimError::Config(format!(
            "inter-site distance must be positive, got {isd}"
        )));
    }
    let mut positions = vec![Point::new(0.0, 0.0)];
    let ring1 = |k: usize, d: f64, offset: f64| {
        let a = offset + k as f64 * std::f64::consts::FRAC_PI_3;
        Point::new(d * a.cos(), d * a.sin())
    };
    match s {
        1 => {}
        7 | 19 => {
            positions.extend((0..6).map(|k| ring1(k, isd, 0.0)));
            if s == 19 {
                // Second ring, walked counter-clockwise: a corner site followed
                // by the edge site between it and the next corner.
                for k in 0..6 {
                    positions.push(ring1(k, 2.0 * isd, 0.0));
                    positions.push(ring1(k, 3f64.sqrt() * isd, std::f64::consts::FRAC_PI_6));
                }
            }
        }
        _ => {
            return Err(SimError::Config(format!(
                "unsupported O-RU count {s}; expected 1, 7 or 19"
            )))
        }
    }
    Ok(Topology {
        odu_count: g,
        oru_positions: positions,
        oru_to_odu: contiguous_partition(g, s),
        inter_site_distance: isd,
        h_bs: DEFAULT_H_BS,
        h_ut: DEFAULT_H_UT,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: UserId,
    pub position: Point,
    pub speed: f64,
    pub heading: f64,
    /// Rate demand in bit/s.
    pub demand: f64,
}

/// φ: serving O-RU per user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub serving: Vec<Option<OruId>>,
}

impl Association {
    pub fn unattached(users: usize) -> Self {
        Self {
            serving: vec![None; users],
        }
    }

    pub fn served_by(&self, s: OruId) -> impl Iterator<Item = UserId> + '_ {
        self.serving
            .iter()
            .enumerate()
            .filter_map(move |(u, &o)| (o == Some(s)).then_some(u))
    }

    /// φ as a dense S×U 0/1 matrix.
    pub fn phi(&self, orus: usize) -> Vec<Vec<u8>> {
        let mut phi = vec![vec![0u8; self.serving.len()]; orus];
        for (u, o) in self.serving.iter().enumerate() {
            if let Some(s) = *o {
                if s < orus {
                    phi[s][u] = 1;
                }
            }
        }
        phi
    }
}

/// One granted subchannel: ψ = 1 and its power p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grant {
    pub user: UserId,
    pub subchannel: usize,
    pub power: f64,
}

/// Ψ and P, stored per O-RU as a list of grants.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Allocation {
    pub subchannels: usize,
    pub per_oru: Vec<Vec<Grant>>,
}

impl Allocation {
    pub fn empty(orus: usize, subchannels: usize) -> Self {
        Self {
            subchannels,
            per_oru: vec![Vec::new(); orus],
        }
    }

    pub fn total_power(&self, s: OruId) -> f64 {
        self.per_oru[s].iter().map(|g| g.power).sum()
    }

    pub fn granted_to(&self, s: OruId, u: UserId) -> usize {
        self.per_oru[s].iter().filter(|g| g.user == u).count()
    }
}

/// Raw indicator tensors. Kept as integers so non-binary values can be
/// represented and reported.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicators {
    /// G×S
    pub chi: Vec<Vec<u8>>,
    /// S×U
    pub phi: Vec<Vec<u8>>,
    /// S×U×N
    pub psi: Vec<Vec<Vec<u8>>>,
}

impl Indicators {
    pub fn from_state(topo: &Topology, assoc: &Association, alloc: &Allocation) -> Self {
        let (s_count, u_count, n) = (topo.oru_count(), assoc.serving.len(), alloc.subchannels);
        let mut psi = vec![vec![vec![0u8; n]; u_count]; s_count];
        for (s, grants) in alloc.per_oru.iter().enumerate().take(s_count) {
            for g in grants {
                if g.user < u_count && g.subchannel < n {
                    psi[s][g.user][g.subchannel] = psi[s][g.user][g.subchannel].saturating_add(1);
                }
            }
        }
        Self {
            chi: topo.chi(),
            phi: assoc.phi(s_count),
            psi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// C1: an indicator outside {0, 1}.
    NonBinary { tensor: &'static str, index: Vec<usize>, value: u8 },
    /// C2: a user associated with more than one O-RU.
    MultipleServing { user: UserId, orus: Vec<OruId> },
    /// C3: an O-RU not attached to exactly one O-DU.
    OduMembership { oru: OruId, odus: usize },
    /// One subchannel of an O-RU granted to several users at once.
    DoubleAssignment { oru: OruId, subchannel: usize, users: Vec<UserId> },
    /// ψ = 1 for a user the O-RU does not serve.
    GrantWithoutAssociation { oru: OruId, user: UserId },
}

/// Checks C1–C3 and per-O-RU subchannel exclusivity on raw indicators.
pub fn validate_indicators(ind: &Indicators) -> Vec<Violation> {
    let mut out = Vec::new();
    for (g, row) in ind.chi.iter().enumerate() {
        for (s, &v) in row.iter().enumerate() {
            if v > 1 {
                out.push(Violation::NonBinary { tensor: "chi", index: vec![g, s], value: v });
            }
        }
    }
    for (s, row) in ind.phi.iter().enumerate() {
        for (u, &v) in row.iter().enumerate() {
            if v > 1 {
                out.push(Violation::NonBinary { tensor: "phi", index: vec![s, u], value: v });
            }
        }
    }
    for (s, users) in ind.psi.iter().enumerate() {
        for (u, chans) in users.iter().enumerate() {
            for (n, &v) in chans.iter().enumerate() {
                if v > 1 {
                    out.push(Violation::NonBinary { tensor: "psi", index: vec![s, u, n], value: v });
                }
            }
        }
    }

    let users = ind.phi.first().map_or(0, Vec::len);
    for u in 0..users {
        let orus: Vec<OruId> = (0..ind.phi.len()).filter(|&s| ind.phi[s][u] > 0).collect();
        if orus.len() > 1 {
            out.push(Violation::MultipleServing { user: u, orus });
        }
    }

    let orus = ind.chi.first().map_or(ind.phi.len(), Vec::len);
    for s in 0..orus {
        let odus = ind.chi.iter().filter(|row| row.get(s).copied().unwrap_or(0) > 0).count();
        if odus != 1 {
            out.push(Violation::OduMembership { oru: s, odus });
        }
    }

    for (s, per_user) in ind.psi.iter().enumerate() {
        let n = per_user.first().map_or(0, Vec::len);
        for ch in 0..n {
            let holders: Vec<UserId> = (0..per_user.len()).filter(|&u| per_user[u][ch] > 0).collect();
            if holders.len() > 1 {
                out.push(Violation::DoubleAssignment { oru: s, subchannel: ch, users: holders });
            }
        }
        for (u, chans) in per_user.iter().enumerate() {
            let served = ind.phi.get(s).and_then(|r| r.get(u)).copied().unwrap_or(0) > 0;
            if !served && chans.iter().any(|&v| v > 0) {
                out.push(Violation::GrantWithoutAssociation { oru: s, user: u });
            }
        }
    }
    out
}

pub fn validate_constraints(topo: &Topology, assoc: &Association, alloc: &Allocation) -> Vec<Violation> {
    validate_indicators(&Indicators::from_state(topo, assoc, alloc))
}

/// Attaches every user to its strongest O-RU. `rsrp[s][u]` in dBm; ties go
/// to the lowest O-RU index.
pub fn initial_association(users: usize, rsrp: &[Vec<f64>]) -> Result<Association> {
    if rsrp.is_empty() {
        return Err(SimError::NoOrus);
    }
    let serving = (0..users)
        .map(|u| {
            let mut best = 0;
            for s in 1..rsrp.len() {
                if rsrp[s][u] > rsrp[best][u] {
                    best = s;
                }
            }
            Some(best)
        })
        .collect();
    Ok(Association { serving })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn seven_site_layout() {
        let t = build_hex_topology(3, 7, 500.0).unwrap();
        assert_eq!(t.oru_count(), 7);
        assert_eq!(t.oru_positions[0], Point::new(0.0, 0.0));
        for p in &t.oru_positions[1..] {
            assert!(approx(p.distance(&t.oru_positions[0]), 500.0));
        }
        // adjacent outer sites are also one ISD apart
        for k in 1..7 {
            let next = if k == 6 { 1 } else { k + 1 };
            assert!(approx(t.oru_positions[k].distance(&t.oru_positions[next]), 500.0));
        }
        assert_eq!(t.oru_to_odu, vec![0, 0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn single_site_layout() {
        let t = build_hex_topology(1, 1, 500.0).unwrap();
        assert_eq!(t.oru_positions, vec![Point::new(0.0, 0.0)]);
        assert_eq!(t.oru_to_odu, vec![0]);
        assert!(validate_constraints(&t, &Association::unattached(0), &Allocation::empty(1, 80)).is_empty());
    }

    #[test]
    fn nineteen_sites_are_distinct_and_on_grid() {
        let t = build_hex_topology(3, 19, 500.0).unwrap();
        assert_eq!(t.oru_count(), 19);
        for i in 0..19 {
            let mut nearest = f64::INFINITY;
            for j in 0..19 {
                if i != j {
                    nearest = nearest.min(t.oru_positions[i].distance(&t.oru_positions[j]));
                }
            }
            assert!(approx(nearest, 500.0), "site {i} nearest {nearest}");
        }
    }

    #[test]
    fn unsupported_counts_are_rejected() {
        assert!(build_hex_topology(1, 6, 500.0).is_err());
        assert!(build_hex_topology(8, 7, 500.0).is_err());
        assert!(build_hex_topology(0, 7, 500.0).is_err());
    }

    #[test]
    fn partition_is_contiguous_and_covers_every_oru() {
        assert_eq!(contiguous_partition(3, 7), vec![0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(contiguous_partition(3, 19).iter().filter(|&&g| g == 0).count(), 7);
        let t = build_hex_topology(3, 7, 500.0).unwrap();
        let chi = t.chi();
        for s in 0..7 {
            assert_eq!(chi.iter().map(|r| r[s] as u32).sum::<u32>(), 1);
        }
    }

    #[test]
    fn hex_cell_membership() {
        let t = build_hex_topology(1, 7, 500.0).unwrap();
        assert!(t.in_hex_cell(0, &Point::new(0.0, 0.0)));
        assert!(t.in_hex_cell(0, &Point::new(249.0, 0.0)));
        assert!(!t.in_hex_cell(0, &Point::new(251.0, 0.0)));
        assert!(t.in_hex_cell(0, &Point::new(0.0, 288.0)));
        assert!(!t.in_hex_cell(0, &Point::new(0.0, 290.0)));
    }

    #[test]
    fn valid_state_has_empty_report() {
        let t = build_hex_topology(3, 7, 500.0).unwrap();
        let assoc = Association { serving: vec![Some(0), Some(1), None] };
        let mut alloc = Allocation::empty(7, 8);
        alloc.per_oru[0].push(Grant { user: 0, subchannel: 3, power: 1.25 });
        alloc.per_oru[1].push(Grant { user: 1, subchannel: 3, power: 1.25 });
        assert!(validate_constraints(&t, &assoc, &alloc).is_empty());
    }

    #[test]
    fn user_on_two_orus_is_a_c2_violation() {
        let t = build_hex_topology(3, 7, 500.0).unwrap();
        let mut ind = Indicators::from_state(&t, &Association { serving: vec![Some(0)] }, &Allocation::empty(7, 4));
        ind.phi[3][0] = 1;
        let v = validate_indicators(&ind);
        assert_eq!(v, vec![Violation::MultipleServing { user: 0, orus: vec![0, 3] }]);
    }

    #[test]
    fn double_assignment_is_reported() {
        let t = build_hex_topology(3, 7, 500.0).unwrap();
        let mut serving = vec![None; 10];
        serving[3] = Some(2);
        serving[9] = Some(2);
        let assoc = Association { serving };
        let mut alloc = Allocation::empty(7, 80);
        alloc.per_oru[2].push(Grant { user: 3, subchannel: 5, power: 1.0 });
        alloc.per_oru[2].push(Grant { user: 9, subchannel: 5, power: 1.0 });
        let v = validate_constraints(&t, &assoc, &alloc);
        assert_eq!(v, vec![Violation::DoubleAssignment { oru: 2, subchannel: 5, users: vec![3, 9] }]);
    }

    #[test]
    fn non_binary_and_membership_violations() {
        let t = build_hex_topology(3, 7, 500.0).unwrap();
        let mut ind = Indicators::from_state(&t, &Association::unattached(1), &Allocation::empty(7, 2));
        ind.chi[1][0] = 1; // O-RU 0 now on two O-DUs
        ind.phi[0][0] = 2;
        let v = validate_indicators(&ind);
        assert!(v.contains(&Violation::OduMembership { oru: 0, odus: 2 }));
        assert!(v.contains(&Violation::NonBinary { tensor: "phi", index: vec![0, 0], value: 2 }));
    }

    #[test]
    fn grant_for_unserved_user_is_reported() {
        let t = build_hex_topology(1, 7, 500.0).unwrap();
        let assoc = Association { serving: vec![Some(1)] };
        let mut alloc = Allocation::empty(7, 4);
        alloc.per_oru[0].push(Grant { user: 0, subchannel: 0, power: 1.0 });
        assert_eq!(
            validate_constraints(&t, &assoc, &alloc),
            vec![Violation::GrantWithoutAssociation { oru: 0, user: 0 }]
        );
    }

    #[test]
    fn strongest_oru_wins_with_lowest_index_on_ties() {
        let a = initial_association(1, &[vec![-70.0], vec![-80.0]]).unwrap();
        assert_eq!(a.serving, vec![Some(0)]);
        let a = initial_association(1, &[vec![-75.0], vec![-75.0]]).unwrap();
        assert_eq!(a.serving, vec![Some(0)]);
        let a = initial_association(1, &[vec![-90.0], vec![-75.0], vec![-75.0]]).unwrap();
        assert_eq!(a.serving, vec![Some(1)]);
        assert!(initial_association(3, &[]).is_err());
    }
}
