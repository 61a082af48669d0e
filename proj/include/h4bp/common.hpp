// Basic value types and error taxonomy shared across the toolkit.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace h4bp {

inline constexpr double PI = 3.14159265358979323846264338327950288;
inline constexpr double TWO_PI = 2.0 * PI;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------
struct CollisionError : std::runtime_error {
    explicit CollisionError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};
struct BranchError : std::runtime_error {
    explicit BranchError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DepritSingular : std::runtime_error {
    explicit DepritSingular(const std::string& msg) : std::runtime_error(msg) {}
};
struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& msg) : std::runtime_error(msg) {}
};
struct NonConvergent : std::runtime_error {
    explicit NonConvergent(const std::string& msg) : std::runtime_error(msg) {}
};
struct SectionMiss : std::runtime_error {
    explicit SectionMiss(const std::string& msg) : std::runtime_error(msg) {}
};
struct NewtonDiverged : std::runtime_error {
    explicit NewtonDiverged(const std::string& msg) : std::runtime_error(msg) {}
};
struct TwistDegenerate : std::runtime_error {
    explicit TwistDegenerate(const std::string& msg) : std::runtime_error(msg) {}
};
struct SingularAtZ : std::runtime_error {
    explicit SingularAtZ(const std::string& msg) : std::runtime_error(msg) {}
};
struct OctantNotFound : std::runtime_error {
    explicit OctantNotFound(const std::string& msg) : std::runtime_error(msg) {}
};
struct ItineraryInfeasible : std::runtime_error {
    explicit ItineraryInfeasible(const std::string& msg) : std::runtime_error(msg) {}
};
struct StepFailure : std::runtime_error {
    explicit StepFailure(const std::string& msg) : std::runtime_error(msg) {}
};
struct MaxStepsExceeded : std::runtime_error {
    explicit MaxStepsExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// 3-vector
// ---------------------------------------------------------------------------
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double xx, double yy, double zz) : x(xx), y(yy), z(zz) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 unit(const Vec3& v) { return v / norm(v); }

// Oriented angle from u to v in the plane orthogonal to z, right-hand rule
// around z.  Result in [0, 2*pi).
inline double oriented_angle(const Vec3& z, const Vec3& u, const Vec3& v) {
    const Vec3 zn = unit(z);
    const double s = dot(zn, cross(u, v));
    const double c = dot(u, v);
    double a = std::atan2(s, c);
    if (a < 0.0) a += TWO_PI;
    return a;
}

// Rotation about the x-axis by angle a.
inline Vec3 rot1(double a, const Vec3& v) {
    const double c = std::cos(a), s = std::sin(a);
    return {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
}
// Rotation about the z-axis by angle a.
inline Vec3 rot3(double a, const Vec3& v) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}
// Rotation about an arbitrary unit axis by angle a (Rodrigues formula).
inline Vec3 rot_axis(const Vec3& axis, double a, const Vec3& v) {
    const Vec3 k = unit(axis);
    const double c = std::cos(a), s = std::sin(a);
    return v * c + cross(k, v) * s + k * (dot(k, v) * (1.0 - c));
}

inline double wrap_2pi(double a) {
    a = std::fmod(a, TWO_PI);
    if (a < 0.0) a += TWO_PI;
    return a;
}

inline double clamp_unit(double c, double tol, const char* what) {
    if (c > 1.0 + tol || c < -1.0 - tol)
        throw DomainError(std::string(what) + " cosine out of range");
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// ---------------------------------------------------------------------------
// Counter-based deterministic RNG (splitmix64 over (seed, counter)).
// ---------------------------------------------------------------------------
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return mix(seed_, counter_++); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace h4bp
