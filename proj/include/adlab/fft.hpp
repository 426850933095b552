#pragma once

/// @file fft.hpp
/// @brief Thin FFTW wrapper: cached multi-dimensional complex plans, executed on caller arrays.

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "adlab/torus.hpp"

namespace adlab::fft {

enum class Direction { forward, backward };

namespace detail {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans live for the process lifetime.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(const TorusGrid& g, Direction dir) {
        const auto key = std::make_tuple(g.dim(), g.n(), dir == Direction::forward);
        std::lock_guard lock(mutex_);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<int> dims(g.dim(), g.n());
        std::vector<std::complex<double>> scratch(g.size());
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_dft(g.dim(), dims.data(), buf, buf,
                                    dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized in-place transform of a row-major complex array on grid g.
inline void execute(const TorusGrid& g, std::vector<std::complex<double>>& data, Direction dir) {
    if (data.size() != g.size()) throw GridMismatch("fft::execute: array size does not match grid");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(detail::PlanCache::instance().get(g, dir), buf, buf);
}

inline const char* backend_version() { return fftw_version; }

}  // namespace adlab::fft
