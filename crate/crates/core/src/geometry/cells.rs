use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use super::Epsilon;
use crate::complex::{Simplex, SimplexId, SimplicialComplex};

/// Position of one barycentric coordinate relative to ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Symbol {
    /// `{0}`
    Zero,
    /// `(0, ε)`
    Low,
    /// `{ε}`
    Eps,
    /// `(ε, 1)`
    High,
    /// `{1}`
    One,
}

impl Symbol {
    pub const ALL: [Symbol; 5] = [
        Symbol::Zero,
        Symbol::Low,
        Symbol::Eps,
        Symbol::High,
        Symbol::One,
    ];

    /// Symbols whose sets meet the closure of this one.
    pub fn closure(self) -> &'static [Symbol] {
        match self {
            Symbol::Zero => &[Symbol::Zero],
            Symbol::Low => &[Symbol::Zero, Symbol::Low, Symbol::Eps],
            Symbol::Eps => &[Symbol::Eps],
            Symbol::High => &[Symbol::Eps, Symbol::High, Symbol::One],
            Symbol::One => &[Symbol::One],
        }
    }

    pub fn is_open(self) -> bool {
        matches!(self, Symbol::Low | Symbol::High)
    }

    /// (infimum, supremum) for the given ε.
    pub fn bounds(self, eps: &BigRational) -> (BigRational, BigRational) {
        match self {
            Symbol::Zero => (BigRational::zero(), BigRational::zero()),
            Symbol::Low => (BigRational::zero(), eps.clone()),
            Symbol::Eps => (eps.clone(), eps.clone()),
            Symbol::High => (eps.clone(), BigRational::one()),
            Symbol::One => (BigRational::one(), BigRational::one()),
        }
    }

    /// Classifies a coordinate value.
    pub fn of(value: &BigRational, eps: &BigRational) -> Symbol {
        if value.is_zero() {
            Symbol::Zero
        } else if value < eps {
            Symbol::Low
        } else if value == eps {
            Symbol::Eps
        } else if value.is_one() {
            Symbol::One
        } else {
            Symbol::High
        }
    }

    fn glyph(self) -> &'static str {
        match self {
            Symbol::Zero => "0",
            Symbol::Low => "<",
            Symbol::Eps => "e",
            Symbol::High => ">",
            Symbol::One => "1",
        }
    }
}

/// One relatively open cell: a symbol for every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PartitionCell {
    pub label: Vec<Symbol>,
}

impl PartitionCell {
    pub fn new(label: Vec<Symbol>) -> Self {
        PartitionCell { label }
    }

    /// Vertices with nonzero coordinate.
    pub fn support(&self) -> Vec<usize> {
        self.vertices_where(|s| s != Symbol::Zero)
    }

    /// Vertices with coordinate > ε.
    pub fn sigma_min(&self) -> Vec<usize> {
        self.vertices_where(|s| matches!(s, Symbol::High | Symbol::One))
    }

    /// Vertices with coordinate ≥ ε.
    pub fn sigma_max(&self) -> Vec<usize> {
        self.vertices_where(|s| matches!(s, Symbol::Eps | Symbol::High | Symbol::One))
    }

    fn vertices_where(&self, pred: impl Fn(Symbol) -> bool) -> Vec<usize> {
        self.label
            .iter()
            .enumerate()
            .filter(|(_, &s)| pred(s))
            .map(|(v, _)| v)
            .collect()
    }

    /// Dimension of the cell as a convex set.
    pub fn dim(&self) -> usize {
        self.label
            .iter()
            .filter(|s| s.is_open())
            .count()
            .saturating_sub(1)
    }

    /// Decides whether the slice of the interval box by Σx = 1 is nonempty.
    pub fn is_feasible(&self, eps: &BigRational) -> bool {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        let mut any_open = false;
        for s in &self.label {
            let (a, b) = s.bounds(eps);
            lo += a;
            hi += b;
            any_open |= s.is_open();
        }
        let one = BigRational::one();
        // Open symbols never attain their bounds, closed ones always do.
        let lo_ok = lo < one || (lo == one && !any_open);
        let hi_ok = one < hi || (hi == one && !any_open);
        lo_ok && hi_ok
    }

    /// c' lies in the closure of c.
    pub fn is_face_of(&self, other: &PartitionCell) -> bool {
        self.label
            .iter()
            .zip(&other.label)
            .all(|(a, b)| b.closure().contains(a))
    }

    /// Cell of cc_ε(σ)?
    pub fn in_open_eps_cell(&self, sigma: &Simplex) -> bool {
        self.label.iter().enumerate().all(|(v, s)| {
            if sigma.contains(v) {
                matches!(s, Symbol::High | Symbol::One)
            } else {
                matches!(s, Symbol::Zero | Symbol::Low)
            }
        })
    }

    /// Cell of cl cc_ε(σ)?
    pub fn in_closed_eps_cell(&self, sigma: &Simplex) -> bool {
        self.label.iter().enumerate().all(|(v, s)| {
            if sigma.contains(v) {
                matches!(s, Symbol::Eps | Symbol::High | Symbol::One)
            } else {
                matches!(s, Symbol::Zero | Symbol::Low | Symbol::Eps)
            }
        })
    }

    /// An exact point inside the cell: every open coordinate moves the same
    /// fraction of the way from its infimum to its supremum.
    pub fn representative(&self, eps: &BigRational) -> Vec<BigRational> {
        let bounds: Vec<_> = self.label.iter().map(|s| s.bounds(eps)).collect();
        let lo: BigRational = bounds.iter().map(|b| b.0.clone()).sum();
        let hi: BigRational = bounds.iter().map(|b| b.1.clone()).sum();
        if hi == lo {
            return bounds.into_iter().map(|b| b.0).collect();
        }
        let lambda = (BigRational::one() - &lo) / (hi - lo);
        bounds
            .into_iter()
            .map(|(a, b)| {
                let w = &b - &a;
                a + &lambda * w
            })
            .collect()
    }
}

impl PartitionCell {
    /// A random floating point of the cell. Open coordinates are drawn inside
    /// their intervals, about a third of them close to ε, and then pushed
    /// proportionally towards one end so that the coordinates sum to one.
    pub fn sample<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> Vec<f64> {
        let bounds: Vec<(f64, f64)> = self
            .label
            .iter()
            .map(|s| match s {
                Symbol::Zero => (0.0, 0.0),
                Symbol::Low => (0.0, eps),
                Symbol::Eps => (eps, eps),
                Symbol::High => (eps, 1.0),
                Symbol::One => (1.0, 1.0),
            })
            .collect();
        let mut y: Vec<f64> = self
            .label
            .iter()
            .zip(&bounds)
            .map(|(s, &(a, b))| match s {
                Symbol::Low | Symbol::High => loop {
                    let u: f64 = rng.gen();
                    let v = if rng.gen_bool(1.0 / 3.0) {
                        let r = u.powi(4) * (b - a);
                        if *s == Symbol::Low {
                            eps - r
                        } else {
                            eps + r
                        }
                    } else {
                        a + u * (b - a)
                    };
                    if v > a && v < b {
                        break v;
                    }
                },
                _ => a,
            })
            .collect();
        let total: f64 = y.iter().sum();
        if total < 1.0 {
            let room: f64 = y.iter().zip(&bounds).map(|(v, b)| b.1 - v).sum();
            let mu = (1.0 - total) / room;
            for (v, b) in y.iter_mut().zip(&bounds) {
                *v += mu * (b.1 - *v);
            }
        } else if total > 1.0 {
            let room: f64 = y.iter().zip(&bounds).map(|(v, b)| v - b.0).sum();
            let mu = (total - 1.0) / room;
            for (v, b) in y.iter_mut().zip(&bounds) {
                *v -= mu * (*v - b.0);
            }
        }
        y
    }
}

impl fmt::Display for PartitionCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.label {
            f.write_str(s.glyph())?;
        }
        Ok(())
    }
}

pub type CellId = usize;

/// All nonempty cells of the ε-partition lying in |X|, with face relations.
#[derive(Clone, Debug)]
pub struct CellPartition {
    eps: Epsilon,
    cells: Vec<PartitionCell>,
    index: HashMap<PartitionCell, CellId>,
    /// `faces[c]`: cells in the closure of `c`, including `c`, sorted.
    faces: Vec<Vec<CellId>>,
    support: Vec<SimplexId>,
}

impl CellPartition {
    pub fn new(x: &SimplicialComplex, eps: &Epsilon) -> Self {
        let d = x.num_vertices();
        let e = eps.value();
        let mut found: BTreeSet<(usize, PartitionCell)> = BTreeSet::new();
        let choices = [Symbol::Low, Symbol::Eps, Symbol::High, Symbol::One];
        for s in x.simplices() {
            let verts = s.vertices();
            let k = verts.len();
            let mut digits = vec![0usize; k];
            loop {
                let mut label = vec![Symbol::Zero; d];
                for (i, &v) in verts.iter().enumerate() {
                    label[v] = choices[digits[i]];
                }
                let cell = PartitionCell::new(label);
                if cell.is_feasible(e) {
                    found.insert((cell.dim(), cell));
                }
                let mut i = 0;
                while i < k {
                    digits[i] += 1;
                    if digits[i] < choices.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
        }
        let cells: Vec<PartitionCell> = found.into_iter().map(|(_, c)| c).collect();
        let index: HashMap<PartitionCell, CellId> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let faces = cells
            .iter()
            .map(|c| {
                let mut out = Vec::new();
                let mut label = c.label.clone();
                enumerate_faces(&c.label, 0, &mut label, &index, &mut out);
                out.sort_unstable();
                out
            })
            .collect();
        let support = cells
            .iter()
            .map(|c| {
                x.id_of(&Simplex::new(c.support()).expect("cell support is nonempty"))
                    .expect("cell support lies in the complex")
            })
            .collect();
        CellPartition {
            eps: eps.clone(),
            cells,
            index,
            faces,
            support,
        }
    }

    pub fn eps(&self) -> &Epsilon {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, id: CellId) -> &PartitionCell {
        &self.cells[id]
    }

    pub fn cells(&self) -> &[PartitionCell] {
        &self.cells
    }

    pub fn id_of(&self, cell: &PartitionCell) -> Option<CellId> {
        self.index.get(cell).copied()
    }

    /// Closure of a single cell, including itself.
    pub fn faces(&self, id: CellId) -> &[CellId] {
        &self.faces[id]
    }

    /// The simplex whose relative interior contains the cell.
    pub fn support(&self, id: CellId) -> SimplexId {
        self.support[id]
    }

    /// Cell containing an exact point.
    pub fn locate(&self, coords: &[BigRational]) -> Option<CellId> {
        let e = self.eps.value();
        let label = coords.iter().map(|c| Symbol::of(c, e)).collect();
        self.id_of(&PartitionCell::new(label))
    }
}

fn enumerate_faces(
    base: &[Symbol],
    i: usize,
    label: &mut Vec<Symbol>,
    index: &HashMap<PartitionCell, CellId>,
    out: &mut Vec<CellId>,
) {
    if i == base.len() {
        if let Some(&id) = index.get(&PartitionCell::new(label.clone())) {
            out.push(id);
        }
        return;
    }
    for &s in base[i].closure() {
        label[i] = s;
        enumerate_faces(base, i + 1, label, index, out);
    }
    label[i] = base[i];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::running_example_complex;
    use crate::geometry::rat;

    #[test]
    fn samples_stay_in_their_cell() {
        use rand::SeedableRng;
        let x = running_example_complex();
        let eps = Epsilon::default_for(&x);
        let p = CellPartition::new(&x, &eps);
        let e = eps.to_f64();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for c in p.cells() {
            for _ in 0..20 {
                let y = c.sample(e, &mut rng);
                assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for (v, s) in y.iter().zip(&c.label) {
                    let ok = match s {
                        Symbol::Zero => *v == 0.0,
                        Symbol::Low => *v > 0.0 && *v < e,
                        Symbol::Eps => *v == e,
                        Symbol::High => *v > e && *v < 1.0,
                        Symbol::One => *v == 1.0,
                    };
                    assert!(ok, "{c} {y:?}");
                }
            }
        }
    }

    #[test]
    fn feasibility() {
        let e = rat(1, 48);
        use Symbol::*;
        // Single vertex at 1.
        assert!(PartitionCell::new(vec![One, Zero]).is_feasible(&e));
        assert!(!PartitionCell::new(vec![High, Zero]).is_feasible(&e));
        assert!(PartitionCell::new(vec![High, Low]).is_feasible(&e));
        assert!(PartitionCell::new(vec![High, Eps]).is_feasible(&e));
        assert!(!PartitionCell::new(vec![Low, Low]).is_feasible(&e));
        assert!(!PartitionCell::new(vec![Eps, Eps]).is_feasible(&e));
        assert!(!PartitionCell::new(vec![One, Low]).is_feasible(&e));
    }

    #[test]
    fn every_cell_has_a_high_coordinate() {
        let x = running_example_complex();
        let p = CellPartition::new(&x, &Epsilon::default_for(&x));
        assert!(!p.is_empty());
        for c in p.cells() {
            assert!(!c.sigma_min().is_empty(), "{c}");
            let r = c.representative(p.eps().value());
            let sum: BigRational = r.iter().cloned().sum();
            assert_eq!(sum, BigRational::one());
            assert_eq!(p.locate(&r).map(|id| p.cell(id)), Some(c));
        }
    }

    #[test]
    fn faces_are_reflexive_and_transitive() {
        let x = running_example_complex();
        let p = CellPartition::new(&x, &Epsilon::default_for(&x));
        for c in 0..p.len() {
            assert!(p.faces(c).contains(&c));
            for &f in p.faces(c) {
                assert!(p.cell(f).dim() <= p.cell(c).dim());
                for &g in p.faces(f) {
                    assert!(p.faces(c).contains(&g));
                }
            }
        }
    }

    #[test]
    fn eps_cells_are_disjoint_and_cover() {
        let x = running_example_complex();
        let p = CellPartition::new(&x, &Epsilon::default_for(&x));
        for c in p.cells() {
            let owners: Vec<_> = x
                .simplices()
                .iter()
                .filter(|s| c.in_open_eps_cell(s))
                .collect();
            // Cells with a coordinate equal to ε lie on walls, in no open ε-cell.
            if c.label.contains(&Symbol::Eps) {
                assert!(owners.is_empty());
            } else {
                assert_eq!(owners.len(), 1);
            }
            assert!(x.simplices().iter().any(|s| c.in_closed_eps_cell(s)));
        }
    }
}
