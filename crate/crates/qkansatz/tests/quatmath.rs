use proptest::prelude::*;
use qkansatz::quatmath::*;

fn quat() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-2.0f64..2.0)
        .prop_filter("away from zero", |a| a.iter().map(|v| v * v).sum::<f64>() > 1e-2)
        .prop_map(Quaternion::from_array)
}

fn matmul(a: &AdjointMatrix, b: &AdjointMatrix) -> AdjointMatrix {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn adjoint_is_a_homomorphism(p in quat(), q in quat()) {
        let lhs = adjoint(p * q).unwrap();
        let rhs = matmul(&adjoint(p).unwrap(), &adjoint(q).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_is_orthogonal(q in quat()) {
        let r = adjoint(q).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| r[i][k] * r[j][k]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_matches_conjugation(q in quat(), a in 0usize..4) {
        // q⁻¹ u_a q = R_ab u_b, compared by direct multiplication
        let r = adjoint(q).unwrap();
        let lhs = q.inv() * Quaternion::basis(a) * q;
        let rhs = (0..4).fold(Quaternion::zero(), |s, b| s + Quaternion::basis(b).scale(r[a][b]));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn norm_is_multiplicative(p in quat(), q in quat()) {
        prop_assert!(((p * q).norm() - p.norm() * q.norm()).abs() < 1e-12);
    }

    #[test]
    fn rot3_preserves_vectors(q in quat(), v in prop::array::uniform3(-2.0f64..2.0)) {
        let u = ImQuaternion::from_array(v);
        let s = sandwich(q, u);
        let r = rot3(q);
        let w: Vec<f64> = (0..3).map(|j| (0..3).map(|i| v[i] * r[i][j]).sum::<f64>()).collect();
        let n2 = q.norm2();
        prop_assert!((s.norm() - n2 * u.norm()).abs() < 1e-11);
        prop_assert!((0..3).all(|i| (w[i] * n2 - s.to_array()[i]).abs() < 1e-11));
    }
}

#[test]
fn cartan_maurer_left_right_relation() {
    // σ^L = −R(q⁻¹) σ^R on the imaginary parts
    let q = Quaternion::new(0.4, -1.1, 0.7, 0.2);
    let dq = Quaternion::new(0.3, 0.5, -0.2, 1.0);
    let (l, r) = cartan_maurer(q, dq).unwrap();
    let rq = adjoint(q.inv()).unwrap();
    let rv = r.to_array();
    let lv = l.to_array();
    for a in 0..4 {
        let s: f64 = (0..4).map(|b| rq[a][b] * rv[b]).sum();
        assert!((lv[a] + s).abs() < 1e-12);
    }
}
