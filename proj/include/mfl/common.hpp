#pragma once

// Shared basics: 2-vectors, error taxonomy, numeric constants, hashing.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfl {

inline constexpr double kPi = 3.14159265358979323846;

/// Configuration or argument outside the admissible set.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Discretization cannot represent the requested regime (resolution guards).
struct ResolutionError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A numeric routine failed to reach its tolerance (solver breakdown, NaN).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double dot(const Vec2& a, const Vec2& b) { return a.dot(b); }
inline double cross(const Vec2& a, const Vec2& b) { return a.cross(b); }
inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// FNV-1a over a byte stream; used to key cache files by model/mesh content.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 1099511628211ull;
        }
    }
    void add(double v) { add_bytes(&v, sizeof v); }
    void add(std::uint64_t v) { add_bytes(&v, sizeof v); }
    void add(const std::string& s) { add_bytes(s.data(), s.size()); }
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 14695981039346656037ull;
};

/// std::once_flag wrapper whose copies start unset, keeping the owning type
/// copyable; each copy simply re-runs its lazy initialization once.
struct CopyableOnce {
    std::once_flag flag;
    CopyableOnce() = default;
    CopyableOnce(const CopyableOnce&) noexcept {}
    CopyableOnce& operator=(const CopyableOnce&) noexcept { return *this; }
};

/// true if g is an admissible singular weight: g in (-1, inf) and not in {0,1,2,...}.
inline bool admissible_gamma(double g) {
    if (!(g > -1.0)) return false;
    double r = std::round(g);
    return !(r >= -0.5 && std::abs(g - r) < 1e-12 && r >= 0.0);
}

/// Run f(i) for i in [0, n) on `jobs` threads (jobs <= 1 runs inline).
/// Exceptions propagate: the first one thrown (lowest index wins ties by
/// scheduling) is rethrown on the calling thread.
void parallel_for(int n, int jobs, const std::function<void(int)>& f);

}  // namespace mfl
