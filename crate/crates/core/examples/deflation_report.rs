//! Hotelling, projection and Schur complement deflation on the same sparse,
//! non-singular PC pairs, with their orthogonality reports.
//!
//! ```text
//! cargo run --release --example deflation_report
//! ```

use sfpca::deflation::{DeflationKind, DeflationScheme, DeflationState};
use sfpca::{DenseMatrix, Vector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = DenseMatrix::from_row_slice(
        4,
        3,
        &[-2.0, -1.5, 1.0, 8.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, 0.0, 2.5, 1.0, 2.0 / 3.0, 7.0 / 6.0, 7.0 / 3.0],
    );
    let h = 1.0 / 2f64.sqrt();
    let pairs = [
        (Vector::from_vec(vec![0.5; 4]), Vector::from_vec(vec![h, h, 0.0])),
        (Vector::from_vec(vec![0.0, 0.0, 0.8, 0.6]), Vector::from_vec(vec![h, 0.0, h])),
    ];
    for kind in [DeflationKind::Hotelling, DeflationKind::Projection, DeflationKind::Schur] {
        let mut st = DeflationState::new(x.clone())?;
        for (u, v) in &pairs {
            st = st.deflate_vector(u, v, DeflationScheme::new(kind))?;
        }
        println!("== {kind} ==");
        print!("{}", st.orthogonality_report()?.to_table());
        println!("X₂ = {:.4}", st.x_current());
    }

    // Hotelling without unit scaling loses even two-way orthogonality
    let (u, v) = &pairs[0];
    let st = DeflationState::new(x)?.deflate_vector(&(u * 2.0), v, DeflationScheme::unnormalized(DeflationKind::Hotelling))?;
    println!("unnormalized HD with ‖u‖ = 2: two-way residual {:.4}", st.orthogonality_report()?.max_two_way());
    Ok(())
}
