//! Small 3-vector math and Earth constants shared by the geometry modules.

use std::ops::{Add, Mul, Neg, Sub};

/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.4418;
/// Mean equatorial Earth radius, km (spherical Earth model throughout).
pub const EARTH_RADIUS_KM: f64 = 6378.137;
/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_9e-5;
/// Speed of light, km/s.
pub const LIGHT_SPEED_KM_S: f64 = 299_792.458;
/// J2 zonal harmonic coefficient.
pub const J2: f64 = 1.082_626_68e-3;

/// Cartesian 3-vector in km (positions) or km/s (velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    /// Angle between two vectors in degrees, in [0, 180].
    pub fn angle_deg(self, other: Vec3) -> f64 {
        let c = self.dot(other) / (self.norm() * other.norm());
        c.clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// Rotate about the z axis by `theta` radians (right-handed).
    pub fn rotated_z(self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// ECEF position of a point on the spherical Earth surface.
pub fn surface_point_ecef(lat_deg: f64, lon_deg: f64) -> Vec3 {
    let lat = lat_deg.to_radians();
    let lon = lon_deg.to_radians();
    Vec3::new(
        EARTH_RADIUS_KM * lat.cos() * lon.cos(),
        EARTH_RADIUS_KM * lat.cos() * lon.sin(),
        EARTH_RADIUS_KM * lat.sin(),
    )
}

/// Great-circle ground distance between two surface points, km.
pub fn ground_distance_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let a = surface_point_ecef(lat1, lon1);
    let b = surface_point_ecef(lat2, lon2);
    EARTH_RADIUS_KM * a.angle_deg(b).to_radians()
}

/// Minimum distance from Earth's center to the segment joining `a` and `b`.
///
/// Used for line-of-sight tests: the segment clears the Earth when this
/// exceeds the Earth radius plus a grazing margin.
pub fn segment_min_distance_to_origin(a: Vec3, b: Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-a.dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t).norm()
}

/// Deterministic counter-keyed generator: one u64 per key, splitmix64 finalizer.
///
/// Order-independent by construction; reproducible across platforms. Used for
/// per-(satellite, ground point, time) noise draws and seed derivation.
pub fn keyed_u64(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        // splitmix64 mixing round
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Uniform draw in (0, 1] from a keyed u64.
pub fn keyed_unit(parts: &[u64]) -> f64 {
    let u = keyed_u64(parts);
    // 53 mantissa bits; shift into (0, 1] so ln() below never sees zero
    ((u >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

/// Standard normal draw from a keyed stream via Box-Muller.
pub fn keyed_standard_normal(parts: &[u64]) -> f64 {
    let mut p1 = parts.to_vec();
    p1.push(0xb0c5);
    let mut p2 = parts.to_vec();
    p2.push(0xa11e);
    let u1 = keyed_unit(&p1);
    let u2 = keyed_unit(&p2);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
