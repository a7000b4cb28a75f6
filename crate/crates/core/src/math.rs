//! Small fixed-size linear algebra helpers: 3-vectors, symmetric 3x3
//! eigen-decomposition and moment-based plane fitting.

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Returns `a / |a|`, or `None` when `a` is (numerically) zero.
pub fn normalize(a: Vec3) -> Option<Vec3> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Symmetric 3x3 matrix stored as its six independent entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sym3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl Sym3 {
    #[inline]
    fn apply(&self, v: Vec3) -> Vec3 {
        [
            self.xx * v[0] + self.xy * v[1] + self.xz * v[2],
            self.xy * v[0] + self.yy * v[1] + self.yz * v[2],
            self.xz * v[0] + self.yz * v[1] + self.zz * v[2],
        ]
    }

    /// Eigenvalues in ascending order, by the trigonometric closed form.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let p1 = self.xy * self.xy + self.xz * self.xz + self.yz * self.yz;
        let q = (self.xx + self.yy + self.zz) / 3.0;
        if p1 == 0.0 {
            let mut e = [self.xx, self.yy, self.zz];
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return e;
        }
        let p2 = (self.xx - q).powi(2) + (self.yy - q).powi(2) + (self.zz - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        if p == 0.0 {
            return [q, q, q];
        }
        // B = (A - qI) / p; r = det(B) / 2 in [-1, 1] up to rounding
        let b = Sym3 {
            xx: (self.xx - q) / p,
            xy: self.xy / p,
            xz: self.xz / p,
            yy: (self.yy - q) / p,
            yz: self.yz / p,
            zz: (self.zz - q) / p,
        };
        let det_b = b.xx * (b.yy * b.zz - b.yz * b.yz) - b.xy * (b.xy * b.zz - b.yz * b.xz)
            + b.xz * (b.xy * b.yz - b.yy * b.xz);
        let r = (det_b / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e_max = q + 2.0 * p * phi.cos();
        let e_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let e_mid = 3.0 * q - e_max - e_min;
        [e_min, e_mid, e_max]
    }

    /// Eigenvector for the given eigenvalue via cross products of the rows of
    /// `A - lambda I`; returns `None` when the eigenvalue is (numerically)
    /// repeated and the direction is ambiguous.
    pub fn eigenvector(&self, lambda: f64) -> Option<Vec3> {
        let r0 = [self.xx - lambda, self.xy, self.xz];
        let r1 = [self.xy, self.yy - lambda, self.yz];
        let r2 = [self.xz, self.yz, self.zz - lambda];
        let candidates = [cross(r0, r1), cross(r0, r2), cross(r1, r2)];
        let best = candidates
            .into_iter()
            .max_by(|a, b| dot(*a, *a).partial_cmp(&dot(*b, *b)).unwrap())?;
        let v = normalize(best)?;
        // Residual check guards against picking a vector for a repeated eigenvalue.
        let res = sub(self.apply(v), scale(v, lambda));
        let scale_ref = [self.xx, self.yy, self.zz]
            .iter()
            .fold(lambda.abs(), |m, &d| m.max(d.abs()));
        if norm(res) <= 1e-8 * scale_ref.max(1e-300) {
            Some(v)
        } else {
            None
        }
    }
}

/// Running sums of first and second moments of a set of 3D points.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub sxx: f64,
    pub sxy: f64,
    pub sxz: f64,
    pub syy: f64,
    pub syz: f64,
    pub szz: f64,
}

impl Moments {
    #[inline]
    pub fn add(&mut self, p: Vec3) {
        self.n += 1.0;
        self.sx += p[0];
        self.sy += p[1];
        self.sz += p[2];
        self.sxx += p[0] * p[0];
        self.sxy += p[0] * p[1];
        self.sxz += p[0] * p[2];
        self.syy += p[1] * p[1];
        self.syz += p[1] * p[2];
        self.szz += p[2] * p[2];
    }

    pub fn centroid(&self) -> Vec3 {
        [self.sx / self.n, self.sy / self.n, self.sz / self.n]
    }

    /// Centered scatter matrix `sum (p - mean)(p - mean)^T`.
    pub fn scatter(&self) -> Sym3 {
        let c = self.centroid();
        Sym3 {
            xx: self.sxx - self.n * c[0] * c[0],
            xy: self.sxy - self.n * c[0] * c[1],
            xz: self.sxz - self.n * c[0] * c[2],
            yy: self.syy - self.n * c[1] * c[1],
            yz: self.syz - self.n * c[1] * c[2],
            zz: self.szz - self.n * c[2] * c[2],
        }
    }
}

/// Total-least-squares plane through a point set described by its moments.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFit {
    /// Unit normal of the fitted plane (sign unspecified).
    pub normal: Vec3,
    pub centroid: Vec3,
    /// Sum of squared point-to-plane distances (smallest scatter eigenvalue).
    pub sq_residual_sum: f64,
    /// Second-smallest scatter eigenvalue; near zero means collinear points.
    pub mid_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Fits a plane to `moments`; `None` when fewer than 3 points or when the
/// point set is degenerate (collinear or coincident).
pub fn fit_plane(moments: &Moments) -> Option<PlaneFit> {
    if moments.n < 3.0 {
        return None;
    }
    let s = moments.scatter();
    let [e_min, e_mid, e_max] = s.eigenvalues();
    // Collinear sets have two vanishing eigenvalues: the plane is ambiguous.
    if e_mid <= 1e-12 * e_max.max(1e-300) {
        return None;
    }
    let normal = s.eigenvector(e_min)?;
    Some(PlaneFit {
        normal,
        centroid: moments.centroid(),
        sq_residual_sum: e_min.max(0.0),
        mid_eigenvalue: e_mid,
        max_eigenvalue: e_max,
    })
}
