//! Coupled optimality systems for a fixed active set.
//!
//! The monolithic system uses the unknown ordering `(q, y, p, z, u)`:
//!
//! ```text
//! [  A    B    0    0   -M1^T ] q   0
//! [ -B^T  C    0    0   -M2^T ] y   F
//! [  0    0    A   -B    0    ] p = 0
//! [  0   -Mo   B^T  C^T  0    ] z   -Yd
//! [  0    0    M1   M2   wMg  ] u   0      (inactive rows)
//! ```
//!
//! Active control rows are replaced by `u_i = bound`. The condensed system
//! eliminates both fluxes elementwise and keeps `(y, z, u)`.

use crate::control::{ActiveSetState, Status};
use crate::error::{Error, Result};
use crate::ldg::Discretization;
use crate::linsolve::{LuFactorization, SparseMatrix, TripletList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KktForm {
    /// `(y, z, u)` with fluxes eliminated.
    #[default]
    Condensed,
    /// `(q, y, p, z, u)`.
    Monolithic,
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub form: KktForm,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Start of every block plus the total size.
    pub offsets: Vec<usize>,
}

impl BlockSystem {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn control_offset(&self) -> usize {
        self.offsets[self.offsets.len() - 2]
    }

    /// Global index of control DOF `i`.
    pub fn control_index(&self, i: usize) -> usize {
        self.control_offset() + i
    }

    pub fn block<'a>(&self, x: &'a [f64], b: usize) -> &'a [f64] {
        &x[self.offsets[b]..self.offsets[b + 1]]
    }
}

/// All five unknowns of the optimality system.
#[derive(Debug, Clone)]
pub struct KktSolution {
    pub q: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

fn bound_values(disc: &Discretization, active: &ActiveSetState) -> Result<Vec<Option<f64>>> {
    let n = disc.ops().control.len();
    if active.len() != n {
        return Err(Error::InconsistentActiveSet(format!(
            "{} statuses for {} control DOFs",
            active.len(),
            n
        )));
    }
    active.validate(disc.data().ua, disc.data().ub)?;
    let data = disc.data();
    Ok(active
        .statuses()
        .iter()
        .map(|s| match s {
            Status::Inactive => None,
            Status::Lower => Some(data.ua),
            Status::Upper => Some(data.ub),
        })
        .collect())
}

fn push_control_rows(
    t: &mut TripletList,
    rhs: &mut [f64],
    disc: &Discretization,
    bounds: &[Option<f64>],
    u0: usize,
    adjoint_terms: &[(usize, &SparseMatrix)],
) {
    let omega = disc.data().omega;
    let mass = &disc.ops().control.mass;
    for (i, b) in bounds.iter().enumerate() {
        match b {
            Some(v) => {
                t.push(u0 + i, u0 + i, 1.0);
                rhs[u0 + i] = *v;
            }
            None => {
                for (j, m) in mass.row(i) {
                    t.push(u0 + i, u0 + j, omega * m);
                }
                for &(off, mat) in adjoint_terms {
                    for (j, v) in mat.row(i) {
                        t.push(u0 + i, off + j, v);
                    }
                }
            }
        }
    }
}

/// Monolithic system in the ordering `(q, y, p, z, u)`.
pub fn compose_kkt(disc: &Discretization, active: &ActiveSetState) -> Result<BlockSystem> {
    let bounds = bound_values(disc, active)?;
    let ops = disc.ops();
    let nw = ops.vector.num_dofs();
    let nv = ops.scalar.num_dofs();
    let nu = ops.control.len();
    let offsets = vec![0, nw, nw + nv, 2 * nw + nv, 2 * nw + 2 * nv, 2 * nw + 2 * nv + nu];
    let (oq, oy, op, oz, ou, n) = (offsets[0], offsets[1], offsets[2], offsets[3], offsets[4], offsets[5]);
    let cap = 2 * (ops.a.nnz() + 2 * ops.b.nnz() + ops.c.nnz()) + 3 * (ops.control.m1.nnz() + ops.control.m2.nnz());
    let mut t = TripletList::with_capacity(n, n, cap);
    let mut rhs = vec![0.0; n];
    let m1t = ops.control.m1.transpose();
    let m2t = ops.control.m2.transpose();
    t.add_block(oq, oq, &ops.a, 1.0);
    t.add_block(oq, oy, &ops.b, 1.0);
    t.add_block(oq, ou, &m1t, -1.0);
    t.add_block_transposed(oy, oq, &ops.b, -1.0);
    t.add_block(oy, oy, &ops.c, 1.0);
    t.add_block(oy, ou, &m2t, -1.0);
    rhs[oy..oy + nv].copy_from_slice(&ops.load);
    t.add_block(op, op, &ops.a, 1.0);
    t.add_block(op, oz, &ops.b, -1.0);
    t.add_block(oz, oy, &ops.mass_omega, -1.0);
    t.add_block_transposed(oz, op, &ops.b, 1.0);
    t.add_block_transposed(oz, oz, &ops.c, 1.0);
    for (i, d) in ops.desired.iter().enumerate() {
        rhs[oz + i] = -d;
    }
    push_control_rows(
        &mut t,
        &mut rhs,
        disc,
        &bounds,
        ou,
        &[(op, &ops.control.m1), (oz, &ops.control.m2)],
    );
    Ok(BlockSystem {
        form: KktForm::Monolithic,
        matrix: t.finalize()?,
        rhs,
        offsets,
    })
}

/// Condensed system in the ordering `(y, z, u)`:
/// `K y - G u = F`, `-Mo y + K^T z = -Yd`, `G^T z + w Mg u = 0`.
pub fn compose_condensed_kkt(disc: &Discretization, active: &ActiveSetState) -> Result<BlockSystem> {
    let bounds = bound_values(disc, active)?;
    let ops = disc.ops();
    let nv = ops.scalar.num_dofs();
    let nu = ops.control.len();
    let offsets = vec![0, nv, 2 * nv, 2 * nv + nu];
    let (oy, oz, ou, n) = (0, nv, 2 * nv, 2 * nv + nu);
    let k = disc.primal_operator();
    let g = disc.control_operator();
    let gt = g.transpose();
    let mut t = TripletList::with_capacity(n, n, 2 * k.nnz() + 2 * g.nnz() + ops.mass_omega.nnz());
    let mut rhs = vec![0.0; n];
    t.add_block(oy, oy, k, 1.0);
    t.add_block(oy, ou, g, -1.0);
    rhs[..nv].copy_from_slice(&ops.load);
    t.add_block(oz, oy, &ops.mass_omega, -1.0);
    t.add_block_transposed(oz, oz, k, 1.0);
    for (i, d) in ops.desired.iter().enumerate() {
        rhs[oz + i] = -d;
    }
    push_control_rows(&mut t, &mut rhs, disc, &bounds, ou, &[(oz, &gt)]);
    Ok(BlockSystem {
        form: KktForm::Condensed,
        matrix: t.finalize()?,
        rhs,
        offsets,
    })
}

pub fn compose(disc: &Discretization, active: &ActiveSetState, form: KktForm) -> Result<BlockSystem> {
    match form {
        KktForm::Condensed => compose_condensed_kkt(disc, active),
        KktForm::Monolithic => compose_kkt(disc, active),
    }
}

pub fn solve_kkt(disc: &Discretization, active: &ActiveSetState, form: KktForm) -> Result<KktSolution> {
    let system = compose(disc, active, form)?;
    let x = LuFactorization::new(&system.matrix)?.solve(&system.rhs)?;
    Ok(match form {
        KktForm::Monolithic => KktSolution {
            q: system.block(&x, 0).to_vec(),
            y: system.block(&x, 1).to_vec(),
            p: system.block(&x, 2).to_vec(),
            z: system.block(&x, 3).to_vec(),
            u: system.block(&x, 4).to_vec(),
        },
        KktForm::Condensed => {
            let y = system.block(&x, 0).to_vec();
            let z = system.block(&x, 1).to_vec();
            let u = system.block(&x, 2).to_vec();
            KktSolution {
                q: disc.state_flux(&y, &u),
                p: disc.adjoint_flux(&z),
                y,
                z,
                u,
            }
        }
    })
}
