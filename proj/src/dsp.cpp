#include "tagdsp/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tagdsp {

std::vector<cfloat> convert(const RawSampleBlock& block) {
    if (block.samples.size() % 2 != 0)
        throw std::invalid_argument("convert: odd raw sample count");
    std::vector<cfloat> out(block.samples.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = cfloat(float(block.samples[2 * i]), float(block.samples[2 * i + 1]));
    return out;
}

void mix(std::span<cfloat> x, double lo_freq, int64_t start_index, double sample_rate) {
    if (lo_freq == 0.0 || x.empty()) return;
    double step = -2.0 * std::numbers::pi * lo_freq / sample_rate;
    double phase0 = step * double(start_index);
    std::complex<double> w(std::cos(step), std::sin(step));
    std::complex<double> cur(std::cos(phase0), std::sin(phase0));
    for (size_t i = 0; i < x.size(); ++i) {
        x[i] *= cfloat(float(cur.real()), float(cur.imag()));
        cur *= w;
        if ((i & 255) == 255) {
            // renormalize against accumulated rotation drift
            double phase = step * double(start_index + int64_t(i) + 1);
            cur = {std::cos(phase), std::sin(phase)};
        }
    }
}

namespace {

void fill_bandpass(double center, double width, size_t taps, double sample_rate,
                   std::span<cfloat> out) {
    double fc = width / 2.0;
    double mid = double(taps - 1) / 2.0;
    std::vector<double> lp(taps);
    double sum = 0.0;
    for (size_t k = 0; k < taps; ++k) {
        double t = double(k) - mid;
        double x = 2.0 * fc * t / sample_rate;
        double sinc = (x == 0.0) ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        double w = (taps == 1) ? 1.0
                               : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * double(k) / double(taps - 1));
        lp[k] = sinc * w;
        sum += lp[k];
    }
    for (size_t k = 0; k < taps; ++k) {
        double t = double(k) - mid;
        double a = 2.0 * std::numbers::pi * center * t / sample_rate;
        double g = lp[k] / sum;   // unit gain at the center frequency
        out[k] = cfloat(float(g * std::cos(a)), float(g * std::sin(a)));
    }
}

void fill_matched(double freq, size_t spb, double sample_rate, std::span<cfloat> out) {
    // Conjugated, time-reversed one-bit tone.
    for (size_t k = 0; k < spb; ++k) {
        double a = 2.0 * std::numbers::pi * freq * double(spb - 1 - k) / sample_rate;
        out[k] = cfloat(float(std::cos(a)), float(-std::sin(a)));
    }
}

void convolve_into(std::span<const cfloat> a, std::span<const cfloat> b, std::span<cfloat> out) {
    std::fill(out.begin(), out.end(), cfloat{0.0f, 0.0f});
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            out[i + j] += a[i] * b[j];
}

// Overlap-add into a preallocated full-convolution output, all temporaries
// from the cache.
void ola_into(std::span<const cfloat> x, std::span<const cfloat> h, PlanCache& cache,
              std::span<cfloat> out_full) {
    size_t m = h.size();
    size_t fft_n = pad_length(4 * m);
    size_t block = fft_n - m + 1;

    auto& hbuf = cache.work("ola_h", fft_n);
    auto& hspec = cache.work("ola_hspec", fft_n);
    std::fill(hbuf.begin(), hbuf.end(), cfloat{0.0f, 0.0f});
    std::copy(h.begin(), h.end(), hbuf.begin());
    cache.forward(hbuf, hspec);

    auto& xbuf = cache.work("ola_x", fft_n);
    auto& xspec = cache.work("ola_xspec", fft_n);
    auto& ybuf = cache.work("ola_y", fft_n);

    std::fill(out_full.begin(), out_full.end(), cfloat{0.0f, 0.0f});
    for (size_t start = 0; start < x.size(); start += block) {
        size_t len = std::min(block, x.size() - start);
        std::fill(xbuf.begin(), xbuf.end(), cfloat{0.0f, 0.0f});
        std::copy(x.begin() + start, x.begin() + start + len, xbuf.begin());
        cache.forward(xbuf, xspec);
        for (size_t k = 0; k < fft_n; ++k) xspec[k] *= hspec[k];
        cache.inverse(xspec, ybuf);
        size_t tail = std::min(len + m - 1, out_full.size() - start);
        for (size_t k = 0; k < tail; ++k) out_full[start + k] += ybuf[k];
    }
}

}  // namespace

FirFilter design_bandpass(double center, double width, size_t taps, double sample_rate) {
    if (taps < 1) throw std::invalid_argument("design_bandpass: taps must be >= 1");
    if (width <= 0.0) throw std::invalid_argument("design_bandpass: width must be positive");
    double nyquist = sample_rate / 2.0;
    if (std::abs(center) + width / 2.0 > nyquist)
        throw std::invalid_argument("design_bandpass: band outside Nyquist");
    FirFilter f;
    f.coeffs.resize(taps);
    fill_bandpass(center, width, taps, sample_rate, f.coeffs);
    return f;
}

std::pair<FirFilter, FirFilter> matched_filters(const ModulationParams& params) {
    size_t spb = params.samples_per_bit();
    FirFilter h1, h0;
    h1.coeffs.resize(spb);
    h0.coeffs.resize(spb);
    fill_matched(params.freq_one, spb, params.sample_rate, h1.coeffs);
    fill_matched(params.freq_zero, spb, params.sample_rate, h0.coeffs);
    return {h1, h0};
}

FirFilter compose(const FirFilter& a, const FirFilter& b) {
    FirFilter f;
    f.coeffs.resize(a.length() + b.length() - 1);
    convolve_into(a.coeffs, b.coeffs, f.coeffs);
    return f;
}

std::vector<cfloat> overlap_add_filter(std::span<const cfloat> x, const FirFilter& h,
                                       PlanCache& cache, ConvMode mode) {
    if (h.length() == 0) throw std::invalid_argument("overlap_add_filter: empty filter");
    if (x.empty()) return {};
    std::vector<cfloat> full(x.size() + h.length() - 1);
    ola_into(x, h.coeffs, cache, full);
    if (mode == ConvMode::Same) full.resize(x.size());
    return full;
}

void demodulate(std::span<const cfloat> f1, std::span<const cfloat> f0, float eps,
                std::span<float> d, std::span<float> u) {
    if (f1.size() != f0.size() || d.size() != f1.size() || u.size() != f1.size())
        throw std::invalid_argument("demodulate: length mismatch");
    for (size_t i = 0; i < f1.size(); ++i) {
        float a1 = std::abs(f1[i]);
        float a0 = std::abs(f0[i]);
        u[i] = a1 - a0;
        d[i] = u[i] / std::max(a1 + a0, eps);
    }
}

DemodResult demodulate_signal(std::span<const cfloat> x, int64_t start_index,
                              double lo_freq, const DemodConfig& cfg, PlanCache& cache) {
    size_t n = x.size();
    size_t spb = cfg.mod.samples_per_bit();
    size_t taps = cfg.bandpass_taps;
    size_t clen = cfg.composed_filter_len();

    auto& y = cache.work("demod_x", n);
    std::copy(x.begin(), x.end(), y.begin());
    mix(y, lo_freq, start_index, cfg.mod.sample_rate);

    auto& hbp = cache.work("demod_hbp", taps);
    auto& hm = cache.work("demod_hm", spb);
    auto& h1c = cache.work("demod_h1c", clen);
    auto& h0c = cache.work("demod_h0c", clen);
    fill_bandpass(cfg.bandpass_center, cfg.bandpass_width, taps, cfg.mod.sample_rate, hbp);
    fill_matched(cfg.mod.freq_one, spb, cfg.mod.sample_rate, hm);
    convolve_into(hbp, hm, h1c);
    fill_matched(cfg.mod.freq_zero, spb, cfg.mod.sample_rate, hm);
    convolve_into(hbp, hm, h0c);

    auto& f1 = cache.work("demod_f1", n + clen - 1);
    auto& f0 = cache.work("demod_f0", n + clen - 1);
    ola_into(std::span<const cfloat>(y.data(), n), h1c, cache, f1);
    ola_into(std::span<const cfloat>(y.data(), n), h0c, cache, f0);

    DemodResult res;
    res.d.resize(n);
    res.u.resize(n);
    demodulate(std::span<const cfloat>(f1.data(), n), std::span<const cfloat>(f0.data(), n),
               cfg.eps, res.d, res.u);
    return res;
}

DemodResult demodulate_window(const RawSampleBlock& block, const DemodConfig& cfg,
                              PlanCache& cache) {
    auto x = convert(block);
    return demodulate_signal(x, block.start_time, cfg.lo_freq, cfg, cache);
}

}  // namespace tagdsp
