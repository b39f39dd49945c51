#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace odeco {

// Deterministic splitmix64 generator. All randomness in the library flows
// through this so that results are reproducible from a single root seed and
// independent per-trial streams can be derived by index (see derive_stream).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1]; never returns 0 so log() below is safe.
    double uniform01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller with one cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Gamma(alpha, 1) for alpha >= 1 (Marsaglia-Tsang).
    double gamma(double alpha) {
        if (alpha < 1.0) throw std::invalid_argument("Rng::gamma: alpha < 1 unsupported");
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform01();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double chi_square(double df) { return 2.0 * gamma(0.5 * df); }

    // Student t with df degrees of freedom, scaled to unit variance (df > 2).
    double student_t_unit_variance(double df) {
        const double z = gaussian();
        const double g = chi_square(df);
        const double t = z / std::sqrt(g / df);
        return t * std::sqrt((df - 2.0) / df);
    }

    std::vector<double> gaussian_vector(int n) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = gaussian();
        return v;
    }

    // Uniform on the unit sphere in R^n.
    std::vector<double> unit_vector(int n) {
        for (;;) {
            std::vector<double> v = gaussian_vector(n);
            double s = 0.0;
            for (double x : v) s += x * x;
            if (s > 1e-30) {
                const double inv = 1.0 / std::sqrt(s);
                for (double& x : v) x *= inv;
                return v;
            }
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derived stream for trial `index` under `root`: a single splitmix64 mix of
// root + (index+1) * golden. Streams for distinct indices are effectively
// independent, and the derivation is part of the documented file contract so
// parallel execution order cannot change results.
inline std::uint64_t derive_stream(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace odeco
