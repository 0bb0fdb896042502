//! Structure constants for antisymmetric tensors in six dimensions.
//!
//! Components are stored by strictly increasing multi-index in lexicographic
//! order.  Every bilinear or contraction kernel in this crate expands to full
//! antisymmetric index tuples only here, at table-build time; runtime loops
//! walk flat sparse entry lists.

use once_cell::sync::Lazy;

pub const DIM: usize = 6;
/// Components of a k-form, k = 0..=6.
pub const NCOMP: [usize; 7] = [1, 6, 15, 20, 15, 6, 1];
pub const MAX_COMP: usize = 20;

/// Sorts a multi-index, returning (sorted, sign); sign = 0 for repeated entries.
pub fn sort_sign(idx: &[usize]) -> ([usize; 6], i32) {
    let mut t = [0usize; 6];
    let k = idx.len();
    t[..k].copy_from_slice(idx);
    let mut sign = 1i32;
    for i in 0..k {
        for j in 0..k - 1 - i {
            if t[j] > t[j + 1] {
                t.swap(j, j + 1);
                sign = -sign;
            } else if t[j] == t[j + 1] {
                return (t, 0);
            }
        }
    }
    (t, sign)
}

/// Lexicographic combinations of {0..5} of each length.
fn combinations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + DIM - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BilinearEntry {
    pub a: u16,
    pub b: u16,
    pub out: u16,
    pub sign: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct AxisEntry {
    pub out: u16,
    pub axis: u8,
    pub inp: u16,
    pub sign: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ContractEntry {
    pub out: u16,
    pub a: u8,
    pub b: u8,
    pub inp: u16,
    pub sign: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct HitchinEntry {
    pub i: u8,
    pub j: u8,
    pub pa: u16,
    pub pb: u16,
    pub coef: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct MetricEntry {
    pub ij: u8, // packed i*6+j with i <= j
    pub pa: u16,
    pub pb: u16,
    pub a: u8,
    pub b: u8,
    pub k: u8,
    pub p: u8,
    pub coef: f64,
}

pub struct Tables {
    pub combs: [Vec<Vec<usize>>; 7],
    rank: [Vec<u16>; 7], // indexed by 6-bit mask
    /// wedge[p][q]: entries for a (p)-form wedge (q)-form.
    pub wedge: Vec<Vec<Vec<BilinearEntry>>>,
    /// d_tab[k]: exterior derivative of a k-form, k = 0..=5.
    pub d_tab: Vec<Vec<AxisEntry>>,
    /// dstar_tab[k]: flat codifferential of a k-form, k = 1..=6.
    pub dstar_tab: Vec<Vec<AxisEntry>>,
    /// int_tab[k]: interior product of a vector and a k-form, k = 1..=6.
    pub int_tab: Vec<Vec<ContractEntry>>,
    /// lam_tab[k]: Hodge contraction of a k-form, k = 2..=6.
    pub lam_tab: Vec<Vec<ContractEntry>>,
    /// Hitchin K as a quadratic form in the 3-form components.
    pub hitchin: Vec<HitchinEntry>,
    /// phihat_{m j k} = -J^a_m phi_{a j k}: entries (out, a, m, inp, sign).
    pub phihat: Vec<ContractEntry>,
    /// Metric contraction of the component formula for g_{ij}.
    pub metric: Vec<MetricEntry>,
}

impl Tables {
    /// Rank of the sorted multi-index inside the lexicographic component list.
    #[inline]
    pub fn rank_of(&self, k: usize, sorted: &[usize]) -> usize {
        let mut mask = 0usize;
        for &i in sorted {
            mask |= 1 << i;
        }
        self.rank[k][mask] as usize
    }

    /// (rank, sign) of an arbitrary multi-index; sign = 0 if degenerate.
    #[inline]
    pub fn signed_rank(&self, k: usize, idx: &[usize]) -> (usize, i32) {
        let (sorted, sign) = sort_sign(idx);
        if sign == 0 {
            return (0, 0);
        }
        (self.rank_of(k, &sorted[..k]), sign)
    }
}

fn wedge_table(t: &Tables, p: usize, q: usize) -> Vec<BilinearEntry> {
    let mut out = Vec::new();
    for (ia, ci) in t.combs[p].iter().enumerate() {
        for (ib, cj) in t.combs[q].iter().enumerate() {
            let mut idx = ci.clone();
            idx.extend_from_slice(cj);
            let (pos, sign) = t.signed_rank(p + q, &idx);
            if sign != 0 {
                out.push(BilinearEntry {
                    a: ia as u16,
                    b: ib as u16,
                    out: pos as u16,
                    sign: sign as f64,
                });
            }
        }
    }
    out
}

fn build() -> Tables {
    let combs: [Vec<Vec<usize>>; 7] = std::array::from_fn(combinations);
    let rank: [Vec<u16>; 7] = std::array::from_fn(|k| {
        let mut r = vec![u16::MAX; 64];
        for (pos, c) in combs[k].iter().enumerate() {
            let mask: usize = c.iter().map(|&i| 1usize << i).sum();
            r[mask] = pos as u16;
        }
        r
    });
    let mut t = Tables {
        combs,
        rank,
        wedge: Vec::new(),
        d_tab: Vec::new(),
        dstar_tab: Vec::new(),
        int_tab: Vec::new(),
        lam_tab: Vec::new(),
        hitchin: Vec::new(),
        phihat: Vec::new(),
        metric: Vec::new(),
    };

    t.wedge = (0..=DIM)
        .map(|p| {
            (0..=DIM)
                .map(|q| {
                    if p + q <= DIM {
                        wedge_table(&t, p, q)
                    } else {
                        Vec::new()
                    }
                })
                .collect()
        })
        .collect();

    // d: (dA)_K = sum_m (-1)^m  d_{K_m} A_{K \ K_m}
    t.d_tab = (0..DIM)
        .map(|k| {
            let mut tab = Vec::new();
            for (o, kk) in t.combs[k + 1].iter().enumerate() {
                for m in 0..=k {
                    let mut rest = kk.clone();
                    let axis = rest.remove(m);
                    tab.push(AxisEntry {
                        out: o as u16,
                        axis: axis as u8,
                        inp: t.rank_of(k, &rest) as u16,
                        sign: if m % 2 == 0 { 1.0 } else { -1.0 },
                    });
                }
            }
            tab
        })
        .collect();

    // d*: (d*A)_I = -d_p A_{p I} summed over p (flat reference metric)
    t.dstar_tab = (0..=DIM)
        .map(|k| {
            let mut tab = Vec::new();
            if k == 0 {
                return tab;
            }
            for (o, ii) in t.combs[k - 1].iter().enumerate() {
                for p in 0..DIM {
                    let mut idx = vec![p];
                    idx.extend_from_slice(ii);
                    let (pos, sign) = t.signed_rank(k, &idx);
                    if sign != 0 {
                        tab.push(AxisEntry {
                            out: o as u16,
                            axis: p as u8,
                            inp: pos as u16,
                            sign: -(sign as f64),
                        });
                    }
                }
            }
            tab
        })
        .collect();

    // interior product: (iota_v A)_J = v^m A_{m J}
    t.int_tab = (0..=DIM)
        .map(|k| {
            let mut tab = Vec::new();
            if k == 0 {
                return tab;
            }
            for (o, jj) in t.combs[k - 1].iter().enumerate() {
                for m in 0..DIM {
                    let mut idx = vec![m];
                    idx.extend_from_slice(jj);
                    let (pos, sign) = t.signed_rank(k, &idx);
                    if sign != 0 {
                        tab.push(ContractEntry {
                            out: o as u16,
                            a: m as u8,
                            b: 0,
                            inp: pos as u16,
                            sign: sign as f64,
                        });
                    }
                }
            }
            tab
        })
        .collect();

    // Hodge contraction: (Lam A)_P = (1/2) w^{ab} A_{b a P}
    t.lam_tab = (0..=DIM)
        .map(|k| {
            let mut tab = Vec::new();
            if k < 2 {
                return tab;
            }
            for (o, pp) in t.combs[k - 2].iter().enumerate() {
                for a in 0..DIM {
                    for b in 0..DIM {
                        let mut idx = vec![b, a];
                        idx.extend_from_slice(pp);
                        let (pos, sign) = t.signed_rank(k, &idx);
                        if sign != 0 {
                            tab.push(ContractEntry {
                                out: o as u16,
                                a: a as u8,
                                b: b as u8,
                                inp: pos as u16,
                                sign: sign as f64,
                            });
                        }
                    }
                }
            }
            tab
        })
        .collect();

    // Hitchin: K^i_j = -(1/2) eps^{i a1..a5} (iota_{e_j} phi ^ phi)_{a1..a5},
    // increasing multi-index sum, orientation e^{123456}.  The sign is pinned
    // by the normal-form oracle.
    for i in 0..DIM {
        let rest: Vec<usize> = (0..DIM).filter(|&x| x != i).collect();
        let mut idx = vec![i];
        idx.extend_from_slice(&rest);
        let (_, sg0) = sort_sign(&idx);
        let o5 = t.rank_of(5, &rest);
        for j in 0..DIM {
            for e_int in &t.int_tab[3] {
                if e_int.a as usize != j {
                    continue;
                }
                for e_w in &t.wedge[2][3] {
                    if e_w.a as usize == e_int.out as usize && e_w.out as usize == o5 {
                        t.hitchin.push(HitchinEntry {
                            i: i as u8,
                            j: j as u8,
                            pa: e_int.inp,
                            pb: e_w.b,
                            coef: -0.5 * sg0 as f64 * e_int.sign * e_w.sign,
                        });
                    }
                }
            }
        }
    }
    t.hitchin.sort_by_key(|e| (e.i, e.j, e.pa, e.pb));

    // phihat_{P} = -J^a_{P0} phi_{a P1 P2}
    for (o, pp) in t.combs[3].iter().enumerate() {
        for a in 0..DIM {
            let idx = [a, pp[1], pp[2]];
            let (pos, sign) = t.signed_rank(3, &idx);
            if sign != 0 {
                t.phihat.push(ContractEntry {
                    out: o as u16,
                    a: a as u8,
                    b: pp[0] as u8,
                    inp: pos as u16,
                    sign: -(sign as f64),
                });
            }
        }
    }

    // Metric: g_{ij} = -|phi|^{-2} phi_{iab} phi_{jkp} w^{ak} w^{bp}, expanded
    // over increasing (a,b), (k,p) pairs; each entry carries the factor 2 from
    // the antisymmetric double count, split over the two inverse products.
    for i in 0..DIM {
        for j in i..DIM {
            for cab in &t.combs[2] {
                let (pa, sa) = t.signed_rank(3, &[i, cab[0], cab[1]]);
                if sa == 0 {
                    continue;
                }
                for ckp in &t.combs[2] {
                    let (pb, sb) = t.signed_rank(3, &[j, ckp[0], ckp[1]]);
                    if sb == 0 {
                        continue;
                    }
                    t.metric.push(MetricEntry {
                        ij: (i * DIM + j) as u8,
                        pa: pa as u16,
                        pb: pb as u16,
                        a: cab[0] as u8,
                        b: cab[1] as u8,
                        k: ckp[0] as u8,
                        p: ckp[1] as u8,
                        coef: 2.0 * sa as f64 * sb as f64,
                    });
                }
            }
        }
    }

    t
}

pub static TABLES: Lazy<Tables> = Lazy::new(build);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_counts() {
        let t = &*TABLES;
        for k in 0..=6 {
            assert_eq!(t.combs[k].len(), NCOMP[k]);
        }
        assert_eq!(t.combs[2][0], vec![0, 1]);
        assert_eq!(t.combs[2][14], vec![4, 5]);
        assert_eq!(t.combs[3][0], vec![0, 1, 2]);
    }

    #[test]
    fn signed_rank_antisymmetry() {
        let t = &*TABLES;
        let (r1, s1) = t.signed_rank(3, &[0, 2, 4]);
        let (r2, s2) = t.signed_rank(3, &[2, 0, 4]);
        assert_eq!(r1, r2);
        assert_eq!(s1, -s2);
        let (_, s3) = t.signed_rank(3, &[2, 2, 4]);
        assert_eq!(s3, 0);
    }
}
