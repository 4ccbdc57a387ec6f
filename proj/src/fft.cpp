#include "tagdsp/fft.hpp"

#include <algorithm>
#include <cstring>

#include <fftw3.h>

namespace tagdsp {

struct PlanCache::Plan {
    fftwf_plan plan = nullptr;
    fftwf_complex* in = nullptr;
    fftwf_complex* out = nullptr;
    size_t n = 0;

    ~Plan() {
        if (plan) fftwf_destroy_plan(plan);
        if (in) fftwf_free(in);
        if (out) fftwf_free(out);
    }
};

PlanCache::~PlanCache() {
    for (auto& [key, plan] : plans_) delete plan;
}

PlanCache::Plan& PlanCache::get_plan(size_t n, int sign) {
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) {
        ++stats_.plan_hits;
        return *it->second;
    }
    auto* p = new Plan;
    p->n = n;
    p->in = fftwf_alloc_complex(n);
    p->out = fftwf_alloc_complex(n);
    // Plans refer to these fixed buffers; callers copy through them.
    p->plan = fftwf_plan_dft_1d(int(n), p->in, p->out, sign, FFTW_ESTIMATE);
    ++stats_.plans_created;
    stats_.buffers_allocated += 2;
    plans_.emplace(key, p);
    return *p;
}

void PlanCache::forward(std::span<const cfloat> in, std::span<cfloat> out) {
    if (in.size() != out.size()) throw std::invalid_argument("forward: size mismatch");
    if (in.empty()) return;
    Plan& p = get_plan(in.size(), FFTW_FORWARD);
    std::memcpy(p.in, in.data(), in.size() * sizeof(cfloat));
    fftwf_execute(p.plan);
    auto* src = reinterpret_cast<const cfloat*>(p.out);
    std::copy(src, src + out.size(), out.begin());
    ++stats_.forward_execs;
}

void PlanCache::inverse(std::span<const cfloat> in, std::span<cfloat> out) {
    if (in.size() != out.size()) throw std::invalid_argument("inverse: size mismatch");
    if (in.empty()) return;
    Plan& p = get_plan(in.size(), FFTW_BACKWARD);
    std::memcpy(p.in, in.data(), in.size() * sizeof(cfloat));
    fftwf_execute(p.plan);
    float inv = 1.0f / float(in.size());
    auto* src = reinterpret_cast<const cfloat*>(p.out);
    for (size_t i = 0; i < out.size(); ++i) out[i] = src[i] * inv;
    ++stats_.inverse_execs;
}

std::vector<cfloat>& PlanCache::work(const std::string& name, size_t n) {
    auto key = std::make_pair(name, n);
    auto it = work_.find(key);
    if (it != work_.end()) {
        ++stats_.buffer_hits;
        return it->second;
    }
    ++stats_.buffers_allocated;
    auto [ins, ok] = work_.emplace(key, std::vector<cfloat>(n));
    return ins->second;
}

std::vector<float>& PlanCache::work_real(const std::string& name, size_t n) {
    auto key = std::make_pair(name, n);
    auto it = work_real_.find(key);
    if (it != work_real_.end()) {
        ++stats_.buffer_hits;
        return it->second;
    }
    ++stats_.buffers_allocated;
    auto [ins, ok] = work_real_.emplace(key, std::vector<float>(n));
    return ins->second;
}

size_t pad_length(size_t n) {
    if (n < 1) throw std::invalid_argument("pad_length: n must be >= 1");
    for (size_t m = n;; ++m) {
        size_t r = m;
        for (size_t p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace tagdsp
