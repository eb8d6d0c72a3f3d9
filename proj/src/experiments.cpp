#include "cosimo/experiments.hpp"

#include "cosimo/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace cosimo {

std::vector<HoleDisk> default_holes() { return {{{0.3, 0.3}, 0.12}, {{0.7, 0.7}, 0.12}}; }

SimplicialComplex generate_complex(const ComplexSpec& spec, std::uint64_t seed) {
    if (spec.n_points < 3) throw DomainError("need at least 3 points, got " + std::to_string(spec.n_points));
    const auto points = random_points(static_cast<std::size_t>(spec.n_points), seed);
    return delaunay_complex(points, spec.holes);
}

std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream) {
    // splitmix64 finalizer over a mix of the three inputs
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1) + 0xbf58476d1ce4e5b9ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
    if (count <= 0) return;
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int workers = std::clamp(jobs > 0 ? jobs : std::min(count, hw), 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
        case ExperimentKind::Oversmoothing: return run_oversmoothing(config.oversmoothing, config.seed, config.jobs);
        case ExperimentKind::Stability: return run_stability(config.stability, config.seed, config.jobs);
        case ExperimentKind::Trajectory: return run_trajectory(config.trajectory, config.seed, config.jobs);
    }
    throw DomainError("unknown experiment kind");
}

}  // namespace cosimo
