#pragma once

#include <hexpert/random.hpp>

#include <cstddef>
#include <numbers>
#include <vector>

namespace hexpert::tasks {

inline constexpr double kAmplitudeMin = 0.1;
inline constexpr double kAmplitudeMax = 5.0;
inline constexpr double kPhaseMin = 0.0;
inline constexpr double kPhaseMax = 2.0 * std::numbers::pi;
inline constexpr double kInputMin = -5.0;
inline constexpr double kInputMax = 5.0;

/// y = amplitude * sin(x + phase)
struct SinusoidTask {
    double amplitude = 1.0;
    double phase = 0.0;

    double operator()(double x) const;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Amplitude and phase uniform on their ranges.
SinusoidTask sample_sinusoid(Rng& rng);

/// k points with x uniform on [-5, 5]. ContractViolation when k == 0.
std::vector<Point> sample_points(const SinusoidTask& task, std::size_t k, Rng& rng);

} // namespace hexpert::tasks
