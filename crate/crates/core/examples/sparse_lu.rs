//! Sparse assembly from triplets and a direct solve with its transpose.

use ldg_control::linsolve::{norm2, LuFactorization, TripletList};

fn main() -> ldg_control::Result<()> {
    // 1D convection-diffusion stencil: non-symmetric, diagonally dominant
    let n = 200;
    let h = 1.0 / (n + 1) as f64;
    let mut t = TripletList::new(n, n);
    for i in 0..n {
        t.push(i, i, 2.0 / h + 1.0);
        if i > 0 {
            t.push(i, i - 1, -1.0 / h - 0.5);
        }
        if i + 1 < n {
            t.push(i, i + 1, -1.0 / h + 0.5);
        }
        // duplicates are summed
        t.push(i, i, 0.25);
    }
    let a = t.finalize()?;
    println!("{} x {} with {} nonzeros", a.nrows(), a.ncols(), a.nnz());

    let b = vec![h; n];
    let lu = LuFactorization::new(&a)?;
    let x = lu.solve(&b)?;
    let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(ax, b)| ax - b).collect();
    println!("A x = b: relative residual {:.2e}", norm2(&r) / norm2(&b));

    let y = lu.solve_transposed(&b)?;
    let r: Vec<f64> = a.transpose_matvec(&y).iter().zip(&b).map(|(ay, b)| ay - b).collect();
    println!("A^T y = b: relative residual {:.2e}", norm2(&r) / norm2(&b));
    Ok(())
}
