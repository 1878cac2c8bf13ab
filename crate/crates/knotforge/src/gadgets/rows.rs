//! Variable rows and word loops.
//!
//! The SAT links all start from the same picture: a horizontal row of
//! staircase circle pairs, one pair per variable, each pair crossing exactly
//! twice so that the two circles of a pair form a positive Hopf link. Every
//! circle drops two long parallel legs below the row. Loops routed in the
//! space underneath duck beneath chosen legs and bridge over everything
//! else, so the word they spell in the Wirtinger generators of the circles
//! is exactly the letter list they were routed from.
//!
//! Coordinates are deliberately coarse: a unit of slack around every strand
//! leaves room for later satellite operations to widen strands into bands.

use crate::geom::PolyComponent;

/// Horizontal pitch of one variable pair.
pub const PITCH: i64 = 12;
/// Vertical extent reserved for one ten-letter clause slab.
pub const SLAB: i64 = 22;
/// Level shared by all circle legs (and by default every circle segment
/// that nothing is known to cross).
pub const LEG_LEVEL: i64 = 0;
/// Level of the short under-passing arrow segments in word loops.
pub const ARROW_LEVEL: i64 = -5;
/// Level of word-loop segments that bridge over the legs.
pub const BRIDGE_LEVEL: i64 = 50;

/// Coordinate plan for a row of `vars` variable pairs with room underneath
/// for the word loops the reduction intends to route.
#[derive(Debug, Clone, Copy)]
pub struct RowPlan {
    pub vars: u32,
    leg_bottom: i64,
}

impl RowPlan {
    /// Room for `clauses` ten-letter loops, one slab each.
    pub fn for_clause_slabs(vars: u32, clauses: u32) -> RowPlan {
        RowPlan { vars, leg_bottom: -(SLAB * clauses as i64 + 6) }
    }

    /// Room for a single loop of `letters` letters in one tall slab.
    pub fn for_single_loop(vars: u32, letters: usize) -> RowPlan {
        RowPlan { vars, leg_bottom: -(2 * letters as i64 + 8) }
    }

    /// Generators are numbered like the literals they stand for: circle
    /// `x_v` carries generator `v`, circle `not x_v` carries `vars + v`.
    pub fn generator_count(&self) -> u32 {
        2 * self.vars
    }

    /// The x position of the north-traveling leg of the circle carrying
    /// generator `gen`.
    pub fn n_leg_x(&self, gen: u32) -> i64 {
        assert!(gen >= 1 && gen <= 2 * self.vars, "generator {gen} out of range");
        if gen <= self.vars {
            PITCH * (gen - 1) as i64
        } else {
            PITCH * (gen - self.vars - 1) as i64 + 6
        }
    }

    /// The staircase pair for variable `alpha` (zero-based): the positive
    /// circle first, the negated one second. The two cross twice, negated
    /// over positive at the top left and positive over negated at the lower
    /// right, which makes their linking number +1.
    pub fn pair(&self, alpha: u32) -> [PolyComponent; 2] {
        assert!(alpha < self.vars);
        let a = PITCH * alpha as i64;
        let ya = self.leg_bottom;
        let yb = self.leg_bottom - 2;
        let pos = PolyComponent::new(
            vec![(a, ya), (a, 8), (a + 4, 8), (a + 4, 2), (a + 2, 2), (a + 2, ya)],
            vec![LEG_LEVEL, 5, 10, LEG_LEVEL, LEG_LEVEL, LEG_LEVEL],
            Some(format!("x_{}", alpha + 1)),
        );
        let neg = PolyComponent::new(
            vec![(a + 3, 10), (a + 8, 10), (a + 8, yb), (a + 6, yb), (a + 6, 4), (a + 3, 4)],
            vec![LEG_LEVEL, LEG_LEVEL, LEG_LEVEL, LEG_LEVEL, 5, 10],
            Some(format!("not_x_{}", alpha + 1)),
        );
        [pos, neg]
    }

    /// Unlinked variant of [`pair`](Self::pair): two plain rectangles with
    /// the same leg positions and roles but no mutual crossings. Used where
    /// the variable circles start out as a genuine unlink.
    pub fn unlink_pair(&self, alpha: u32) -> [PolyComponent; 2] {
        assert!(alpha < self.vars);
        let a = PITCH * alpha as i64;
        let ya = self.leg_bottom;
        let pos = PolyComponent::new(
            vec![(a, ya), (a, 8), (a + 2, 8), (a + 2, ya)],
            vec![LEG_LEVEL; 4],
            Some(format!("x_{}", alpha + 1)),
        );
        let neg = PolyComponent::new(
            vec![(a + 6, ya), (a + 6, 10), (a + 8, 10), (a + 8, ya)],
            vec![LEG_LEVEL; 4],
            Some(format!("not_x_{}", alpha + 1)),
        );
        [pos, neg]
    }

    /// All variable circles in generator order: `x_1 .. x_n` first, then
    /// `not x_1 .. not x_n`, so the circle carrying generator `g` sits at
    /// index `g - 1`.
    pub fn circles(&self) -> Vec<PolyComponent> {
        let mut pos = Vec::with_capacity(self.vars as usize);
        let mut neg = Vec::with_capacity(self.vars as usize);
        for alpha in 0..self.vars {
            let [p, q] = self.pair(alpha);
            pos.push(p);
            neg.push(q);
        }
        pos.extend(neg);
        pos
    }

    /// Like [`circles`](Self::circles) but with the crossing-free
    /// rectangles from [`unlink_pair`](Self::unlink_pair).
    pub fn unlink_circles(&self) -> Vec<PolyComponent> {
        let mut pos = Vec::with_capacity(self.vars as usize);
        let mut neg = Vec::with_capacity(self.vars as usize);
        for alpha in 0..self.vars {
            let [p, q] = self.unlink_pair(alpha);
            pos.push(p);
            neg.push(q);
        }
        pos.extend(neg);
        pos
    }

    /// Bottom y of the circle legs, for callers that lay out extra pieces
    /// below the row.
    pub fn leg_bottom(&self) -> i64 {
        self.leg_bottom
    }

    /// Top boundary of clause slab `j`.
    pub fn slab_top(&self, j: u32) -> i64 {
        -2 - SLAB * j as i64
    }

    /// x position of the closing run to the right of the row, kept distinct
    /// per slab purely for readability of the drawing.
    pub fn slab_margin(&self, j: u32) -> i64 {
        PITCH * self.vars as i64 + 2 + 2 * j as i64
    }

    /// Routes a loop below the row that reads exactly `letters` when
    /// traversed from its starting corner: letter `k` is a short arrow on
    /// row `k` of the slab passing under the north leg of its generator's
    /// circle, heading east for a positive letter and west for a negative
    /// one. Everything that joins the arrows up bridges over the legs.
    ///
    /// `top_y` is the top boundary of the slab this loop may use and
    /// `margin_x` the x of its closing run right of the row.
    pub fn word_loop(
        &self,
        top_y: i64,
        margin_x: i64,
        letters: &[i32],
        role: Option<String>,
    ) -> PolyComponent {
        assert!(!letters.is_empty(), "a word loop needs at least one letter");
        assert!(margin_x >= PITCH * self.vars as i64, "margin must clear the row");
        let lowest = top_y - 2 * letters.len() as i64 - 1;
        assert!(
            self.leg_bottom <= lowest - 2,
            "row plan reserves too little room below the legs"
        );

        let row_y = |k: usize| top_y - 2 * (k as i64 + 1);
        let span = |letter: i32| {
            let gen = letter.unsigned_abs();
            let t = self.n_leg_x(gen);
            if letter > 0 {
                (t - 1, t + 1)
            } else {
                (t + 1, t - 1)
            }
        };

        let (s0, _) = span(letters[0]);
        let mut pts: Vec<(i64, i64)> = vec![(s0, row_y(0))];
        let mut lvs: Vec<i64> = Vec::new();

        for (k, &letter) in letters.iter().enumerate() {
            let (s, e) = span(letter);
            debug_assert_eq!(pts.last().unwrap(), &(s, row_y(k)));
            // The arrow itself.
            pts.push((e, row_y(k)));
            lvs.push(ARROW_LEVEL);
            if k + 1 == letters.len() {
                break;
            }
            let (s_next, _) = span(letters[k + 1]);
            if s_next == e {
                // Straight drop to the next row.
                pts.push((e, row_y(k + 1)));
                lvs.push(BRIDGE_LEVEL);
            } else {
                pts.push((e, row_y(k) - 1));
                lvs.push(BRIDGE_LEVEL);
                pts.push((s_next, row_y(k) - 1));
                lvs.push(BRIDGE_LEVEL);
                pts.push((s_next, row_y(k + 1)));
                lvs.push(BRIDGE_LEVEL);
            }
        }

        // Close via the right margin and a run along the slab top.
        let last = letters.len() - 1;
        pts.push((pts.last().unwrap().0, row_y(last) - 1));
        lvs.push(BRIDGE_LEVEL);
        pts.push((margin_x, row_y(last) - 1));
        lvs.push(BRIDGE_LEVEL);
        pts.push((margin_x, top_y));
        lvs.push(BRIDGE_LEVEL);
        pts.push((s0, top_y));
        lvs.push(BRIDGE_LEVEL);
        // Final descent back to the first arrow's start.
        lvs.push(BRIDGE_LEVEL);

        PolyComponent::new(pts, lvs, role)
    }

    /// Clause loop in slab `j` reading `letters`. A slab holds ten arrow
    /// rows, the length of an iterated triple commutator.
    pub fn clause_loop(&self, j: u32, letters: &[i32], role: Option<String>) -> PolyComponent {
        assert!(letters.len() <= 10, "a clause slab holds at most ten letters");
        self.word_loop(self.slab_top(j), self.slab_margin(j), letters, role)
    }
}

/// A rectangle with short low dips along its bottom run: the run travels
/// east at `run_y` from `left_x` to `right_x`, dropping to an under level
/// on each window `[x - 2, x]` for `x` in `dips`, and the rest of the ring
/// bridges over everything. Used to thread a circle through the bands of
/// doubled circles: put the window so the band's outgoing strand sits at
/// `x - 1` and its returning strand just right of `x`.
pub fn threading_ring(
    run_y: i64,
    top_y: i64,
    left_x: i64,
    right_x: i64,
    dips: &[i64],
    role: Option<String>,
) -> PolyComponent {
    const LOW: i64 = -3;
    const HIGH: i64 = 70;
    assert!(top_y > run_y);
    let mut pts = vec![(left_x, run_y)];
    let mut lvs = Vec::new();
    let mut prev = left_x;
    for &x in dips {
        assert!(x - 2 > prev, "dips too close together or out of order");
        pts.push((x - 2, run_y));
        lvs.push(HIGH);
        pts.push((x, run_y));
        lvs.push(LOW);
        prev = x;
    }
    assert!(right_x > prev);
    pts.push((right_x, run_y));
    lvs.push(HIGH);
    pts.push((right_x, top_y));
    lvs.push(HIGH);
    pts.push((left_x, top_y));
    lvs.push(HIGH);
    lvs.push(HIGH);
    PolyComponent::new(pts, lvs, role)
}
