#pragma once

// Thin RAII layer over FFTW3. Plans are created once per length under a lock
// (the FFTW planner is not re-entrant) and shared; execution through the
// new-array interface is thread-safe.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace qpump::fft {

class Plan {
public:
    explicit Plan(std::size_t n) : n_(n) {
        if (n == 0) throw std::invalid_argument("fft::Plan: zero length");
        std::vector<std::complex<double>> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const int ni = static_cast<int>(n);
        forward_ = fftw_plan_dft_1d(ni, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        backward_ = fftw_plan_dft_1d(ni, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("fft::Plan: planning failed");
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        const std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    /// In-place unnormalized forward transform: X_m = sum_j x_j exp(-2 pi i j m / n).
    void forward(std::span<std::complex<double>> data) const { execute(forward_, data); }
    /// In-place unnormalized backward transform (no 1/n factor).
    void backward(std::span<std::complex<double>> data) const { execute(backward_, data); }

    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

private:
    void execute(fftw_plan p, std::span<std::complex<double>> data) const {
        if (data.size() != n_) throw std::invalid_argument("fft::Plan: length mismatch");
        auto* buf = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(p, buf, buf);
    }

    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Shared plan for length n.
inline std::shared_ptr<const Plan> plan_for(std::size_t n) {
    static std::map<std::size_t, std::weak_ptr<const Plan>> cache;
    static std::mutex cache_mutex;
    const std::lock_guard cache_lock(cache_mutex);
    if (auto it = cache.find(n); it != cache.end()) {
        if (auto p = it->second.lock()) return p;
    }
    std::shared_ptr<const Plan> p;
    {
        const std::lock_guard lock(Plan::planner_mutex());
        p = std::make_shared<const Plan>(n);
    }
    cache[n] = p;
    return p;
}

/// Forward transform returning a copy.
inline std::vector<std::complex<double>> forward_copy(std::span<const std::complex<double>> in) {
    std::vector<std::complex<double>> out(in.begin(), in.end());
    plan_for(out.size())->forward(out);
    return out;
}

/// Backward transform including the 1/n normalization.
inline std::vector<std::complex<double>> inverse_copy(std::span<const std::complex<double>> in) {
    std::vector<std::complex<double>> out(in.begin(), in.end());
    plan_for(out.size())->backward(out);
    const double s = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= s;
    return out;
}

/// Signed FFT frequency index for bin m (numpy fftfreq ordering).
inline long signed_index(std::size_t m, std::size_t n) noexcept {
    const long mi = static_cast<long>(m);
    const long ni = static_cast<long>(n);
    return mi < (ni + 1) / 2 ? mi : mi - ni;
}

/// Bin holding signed frequency index j (inverse of signed_index).
inline std::size_t bin_of(long j, std::size_t n) noexcept {
    const long ni = static_cast<long>(n);
    long r = j % ni;
    if (r < 0) r += ni;
    return static_cast<std::size_t>(r);
}

}  // namespace qpump::fft
