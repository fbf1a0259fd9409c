//! Linear policies that realize tree paths under the lazy feature layout.

use crate::error::Result;
use crate::instances::Theorem1Member;
use crate::mdp::{ActionId, LayeredMdp, LinearPolicy, SequencePolicy, StateRef, TreePath};

/// Direction preferring `a0` at every state: `[0, ..., 0, 1, -1/2, 0]`.
fn bias_direction(dim: usize, sign: f64) -> Vec<f64> {
    let mut theta = vec![0.0; dim];
    theta[dim - 3] = sign;
    theta[dim - 2] = -0.5 * sign;
    theta
}

/// Direction that separates one state's `a0` from every incoherent state's:
/// `[z, 0, 1/2, 0]` picks `a0` at the state itself and `a1` elsewhere.
fn anchor_direction(z: &[f64], dim: usize, sign: f64) -> Vec<f64> {
    let mut theta: Vec<f64> = z.iter().map(|x| sign * x).collect();
    theta.extend_from_slice(&[0.0, 0.5 * sign, 0.0]);
    debug_assert_eq!(theta.len(), dim);
    theta
}

/// Level-wise constant action choice: `+` direction for `a0`, negated for `a1`.
pub fn path_to_linear_policy(actions: &SequencePolicy, dim: usize) -> Result<LinearPolicy> {
    let thetas = actions
        .actions()
        .iter()
        .map(|a| bias_direction(dim, if a.0 == 0 { 1.0 } else { -1.0 }))
        .collect();
    LinearPolicy::normalized(thetas)
}

/// Linear policy that follows `star` from the root and, below the split level,
/// picks the member's own target action at every state off the star path.
pub fn sio_linear_witness(member: &Theorem1Member, star: TreePath) -> Result<LinearPolicy> {
    let params = member.params();
    let dim = member.feature_dim();
    let half = params.split_level();
    let own = TreePath::from_bits(member.index(), half);
    let thetas = (0..params.horizon)
        .map(|h| {
            let star_action = star.action_at(h);
            let other = if h < half { star_action } else { own.action_at(h - half) };
            match (star_action.0, other.0) {
                (0, 1) => anchor_direction(&member.features().z(&StateRef::Tree(star.prefix(h))), dim, 1.0),
                (1, 0) => anchor_direction(&member.features().z(&StateRef::Tree(star.prefix(h))), dim, -1.0),
                (0, 0) => bias_direction(dim, 1.0),
                _ => bias_direction(dim, -1.0),
            }
        })
        .collect();
    LinearPolicy::normalized(thetas)
}

/// Actions a linear policy takes along its own deterministic trajectory.
pub fn linear_trajectory(mdp: &dyn LayeredMdp, policy: &LinearPolicy) -> Vec<ActionId> {
    let mut s = mdp.initial_state();
    let mut out = Vec::new();
    while !mdp.is_terminal(&s) {
        let a = crate::mdp::linear_action(mdp, policy, &s);
        out.push(a);
        s = mdp.transition(&s, a).entries()[0].0;
    }
    out
}
