//! Straight-line occurrence checks for the eight elimination rules.
//!
//! Each check answers the same question as `occurs_at` on the matching
//! catalog pattern, for an instance that is arc consistent. In the catalog
//! numbering x, y, z are pattern variables 0, 1, 2; values a, b of x are 0
//! and 1, and p, q of y are 0 and 1.

use crate::model::{Instance, Value, VarId};

use super::RuleId;

fn vals(inst: &Instance, v: VarId) -> impl Iterator<Item = Value> + '_ {
    inst.domain(v).values()
}

fn neighbours(inst: &Instance, v: VarId) -> impl Iterator<Item = VarId> + '_ {
    inst.neighbours(v).iter().copied()
}

/// Occurrence of `rule`'s pattern at `x`. `d` is the image of a (ignored by
/// BTP); `b` is the image of b and only read by value rules.
pub(crate) fn occurs(inst: &Instance, rule: RuleId, x: VarId, d: Value, b: Value) -> bool {
    match rule {
        RuleId::Btp => btp(inst, x),
        RuleId::ExistsSubBtp => exists_sub_btp(inst, x, d),
        RuleId::ExistsInvSubBtp => exists_inv_sub_btp(inst, x, d),
        RuleId::ExistsSnake => exists_snake(inst, x, d),
        RuleId::Ns => ns(inst, x, d, b),
        RuleId::Exists2Triangle => exists2_triangle(inst, x, d, b),
        RuleId::Exists2InvSubBtp => exists2_inv_sub_btp(inst, x, d, b),
        RuleId::Exists2Snake => exists2_snake(inst, x, d, b),
    }
}

/// y, z in N(x), c ~ d, c ~ b, d ~ a, c !~ a, d !~ b.
fn btp(inst: &Instance, x: VarId) -> bool {
    let nx: Vec<VarId> = neighbours(inst, x).collect();
    for (i, &y) in nx.iter().enumerate() {
        for &z in &nx[i + 1..] {
            for c in vals(inst, y) {
                for e in vals(inst, z) {
                    if !inst.compatible(y, c, z, e) {
                        continue;
                    }
                    let a_side = vals(inst, x).any(|a| !inst.compatible(y, c, x, a) && inst.compatible(z, e, x, a));
                    let b_side = vals(inst, x).any(|a| inst.compatible(y, c, x, a) && !inst.compatible(z, e, x, a));
                    if a_side && b_side {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// y, z in N(x), c !~ <x,alpha>, c ~ b, c ~ d, d !~ b.
fn exists_sub_btp(inst: &Instance, x: VarId, alpha: Value) -> bool {
    for y in neighbours(inst, x) {
        for c in vals(inst, y).filter(|&c| !inst.compatible(y, c, x, alpha)) {
            for z in neighbours(inst, x).filter(|&z| z != y) {
                for e in vals(inst, z).filter(|&e| inst.compatible(y, c, z, e)) {
                    if vals(inst, x).any(|b| inst.compatible(y, c, x, b) && !inst.compatible(z, e, x, b)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Shared shape of the invsubBTP and snake families: y in N(x) with p, q,
/// z in N(y) other than x with r, where r !~ q and `link(z, r)` holds.
fn y_z_chain(
    inst: &Instance,
    x: VarId,
    p_ok: impl Fn(VarId, Value) -> bool,
    q_ok: impl Fn(VarId, Value) -> bool,
    link: impl Fn(VarId, Value, VarId, Value) -> bool,
) -> bool {
    for y in neighbours(inst, x) {
        let ps: Vec<Value> = vals(inst, y).filter(|&p| p_ok(y, p)).collect();
        if ps.is_empty() {
            continue;
        }
        for q in vals(inst, y).filter(|&q| q_ok(y, q)) {
            for z in neighbours(inst, y).filter(|&z| z != x) {
                for r in vals(inst, z).filter(|&r| !inst.compatible(z, r, y, q)) {
                    if ps.iter().any(|&p| link(y, p, z, r)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// p !~ <x,alpha>, q ~ <x,alpha>, r ~ <x,alpha>, r !~ q.
fn exists_inv_sub_btp(inst: &Instance, x: VarId, alpha: Value) -> bool {
    y_z_chain(
        inst,
        x,
        |y, p| !inst.compatible(y, p, x, alpha),
        |y, q| inst.compatible(y, q, x, alpha),
        |_, _, z, r| inst.compatible(z, r, x, alpha),
    )
}

/// p !~ <x,alpha>, q ~ <x,alpha>, p ~ r, r !~ q.
fn exists_snake(inst: &Instance, x: VarId, alpha: Value) -> bool {
    y_z_chain(
        inst,
        x,
        |y, p| !inst.compatible(y, p, x, alpha),
        |y, q| inst.compatible(y, q, x, alpha),
        |y, p, z, r| inst.compatible(y, p, z, r),
    )
}

/// Some <y,c> compatible with <x,b> but not with <x,d>.
fn ns(inst: &Instance, x: VarId, d: Value, b: Value) -> bool {
    neighbours(inst, x)
        .any(|y| vals(inst, y).any(|c| inst.compatible(y, c, x, b) && !inst.compatible(y, c, x, d)))
}

/// c ~ b, c !~ d, and some <z,e> compatible with both <y,c> and <x,b>.
fn exists2_triangle(inst: &Instance, x: VarId, d: Value, b: Value) -> bool {
    for y in neighbours(inst, x) {
        let cs: Vec<Value> =
            vals(inst, y).filter(|&c| inst.compatible(y, c, x, b) && !inst.compatible(y, c, x, d)).collect();
        if cs.is_empty() {
            continue;
        }
        let mut near: Vec<VarId> = neighbours(inst, x).chain(neighbours(inst, y)).filter(|&z| z != x && z != y).collect();
        near.sort_unstable();
        near.dedup();
        // Any active variable unconstrained with both x and y closes the triangle.
        if inst.active_count() > near.len() + 2 {
            return true;
        }
        for &c in &cs {
            if near.iter().any(|&z| vals(inst, z).any(|e| inst.compatible(y, c, z, e) && inst.compatible(z, e, x, b))) {
                return true;
            }
        }
    }
    false
}

/// p ~ b, p !~ d, q ~ d, r ~ d, r !~ q.
fn exists2_inv_sub_btp(inst: &Instance, x: VarId, d: Value, b: Value) -> bool {
    y_z_chain(
        inst,
        x,
        |y, p| inst.compatible(y, p, x, b) && !inst.compatible(y, p, x, d),
        |y, q| inst.compatible(y, q, x, d),
        |_, _, z, r| inst.compatible(z, r, x, d),
    )
}

/// p ~ b, p !~ d, q ~ d, p ~ r, r !~ q.
fn exists2_snake(inst: &Instance, x: VarId, d: Value, b: Value) -> bool {
    y_z_chain(
        inst,
        x,
        |y, p| inst.compatible(y, p, x, b) && !inst.compatible(y, p, x, d),
        |y, q| inst.compatible(y, q, x, d),
        |y, p, z, r| inst.compatible(y, p, z, r),
    )
}
