#include <hexpert/tasks/sinusoid.hpp>

#include <hexpert/errors.hpp>

#include <cmath>

namespace hexpert::tasks {

double SinusoidTask::operator()(double x) const
{
    return amplitude * std::sin(x + phase);
}

SinusoidTask sample_sinusoid(Rng& rng)
{
    SinusoidTask t;
    t.amplitude = uniform(rng, kAmplitudeMin, kAmplitudeMax);
    t.phase = uniform(rng, kPhaseMin, kPhaseMax);
    return t;
}

std::vector<Point> sample_points(const SinusoidTask& task, std::size_t k, Rng& rng)
{
    if (k == 0)
        throw ContractViolation("sample_points: k must be at least 1");
    std::vector<Point> pts(k);
    for (auto& p : pts) {
        p.x = uniform(rng, kInputMin, kInputMax);
        p.y = task(p.x);
    }
    return pts;
}

} // namespace hexpert::tasks
