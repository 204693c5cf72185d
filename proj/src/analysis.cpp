#include "wbsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wbsim/fft.hpp"

namespace wbsim {

namespace {

double rms_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / double(x.size()));
}

double mean_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / double(x.size());
}

// Windowed power spectrum of the mean-removed sequence. Returns bin powers;
// bin width is fs/n with n the (unpadded) sequence length.
struct BandSpectrum {
    std::vector<double> power;
    double bin_hz = 0.0;
};

BandSpectrum band_spectrum(std::span<const double> x, double fs) {
    std::size_t n = x.size();
    std::vector<double> y(n);
    double mu = mean_of(x);
    auto w = hann_window(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (x[i] - mu) * w[i];
    auto bins = rfft(y, next_pow2(n));
    BandSpectrum out;
    out.power.resize(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) out.power[i] = std::norm(bins[i]);
    out.bin_hz = fs / double(next_pow2(n));
    return out;
}

std::optional<double> parabolic_peak(const std::vector<double>& mag, std::size_t b) {
    if (b == 0 || b + 1 >= mag.size()) return double(b);
    double al = mag[b - 1], be = mag[b], ga = mag[b + 1];
    double den = al - 2.0 * be + ga;
    double d = den != 0.0 ? 0.5 * (al - ga) / den : 0.0;
    return double(b) + d;
}

}  // namespace

std::string_view to_string(OutputCategory c) {
    switch (c) {
        case OutputCategory::Ideal: return "Ideal";
        case OutputCategory::DCBias: return "DCBias";
        case OutputCategory::LFOscillation: return "LFOscillation";
    }
    return "?";
}

double dc_bias_metric(const WaveformRecord& rec) {
    double rms = rms_of(rec.samples);
    if (rms == 0.0) return 0.0;
    return std::abs(mean_of(rec.samples)) / (rms * std::numbers::sqrt2);
}

LfMetric lf_oscillation_metric(const WaveformRecord& rec) {
    LfMetric m;
    if (rec.samples.size() < 4 || rec.f_o_hz <= 0.0) {
        m.low_confidence = true;
        return m;
    }
    auto spec = band_spectrum(rec.samples, rec.sample_rate_hz);
    // Skip the DC leakage skirt of the Hann window (first few bins of the
    // unpadded resolution).
    double unpadded_bin = rec.sample_rate_hz / double(rec.samples.size());
    std::size_t b_min = std::size_t(std::ceil(3.0 * unpadded_bin / spec.bin_hz));
    double fund_power = 0.0, band_power = 0.0;
    std::size_t peak_bin = 0;
    double peak_power = 0.0;
    for (std::size_t b = 1; b < spec.power.size(); ++b) {
        double f = double(b) * spec.bin_hz;
        if (std::abs(f - rec.f_o_hz) <= 2.5 * unpadded_bin) fund_power += spec.power[b];
        if (b >= b_min && f < rec.f_o_hz / 2.0) {
            band_power += spec.power[b];
            if (spec.power[b] > peak_power) {
                peak_power = spec.power[b];
                peak_bin = b;
            }
        }
    }
    if (fund_power <= 0.0) {
        m.low_confidence = true;
        return m;
    }
    m.power_ratio = band_power / fund_power;
    if (peak_bin != 0) {
        auto refined = parabolic_peak(spec.power, peak_bin);
        m.peak_hz = *refined * spec.bin_hz;
        double periods = double(rec.samples.size()) / rec.sample_rate_hz * *m.peak_hz;
        m.low_confidence = periods < 8.0;
    }
    return m;
}

ClassificationResult classify(const WaveformRecord& rec, const ClassifyOptions& opt) {
    ClassificationResult r;
    r.thresholds = opt;
    double rms = rms_of(rec.samples);
    if (rms == 0.0) return r;  // silent record: Ideal by definition
    if (rec.f_o_hz > 0.0)
        r.low_confidence =
            double(rec.samples.size()) / rec.sample_rate_hz * rec.f_o_hz < 4.0;
    r.dc_metric = dc_bias_metric(rec);
    auto lf = lf_oscillation_metric(rec);
    r.lf_ratio = lf.power_ratio;
    r.lf_peak_hz = lf.peak_hz;
    r.low_confidence = r.low_confidence || lf.low_confidence;
    if (r.dc_metric > opt.theta_dc) r.category = OutputCategory::DCBias;
    else if (r.lf_ratio > opt.theta_lf) r.category = OutputCategory::LFOscillation;
    else r.category = OutputCategory::Ideal;
    return r;
}

DistortionReport total_distortion(const WaveformRecord& rec) {
    if (rec.f_o_hz <= 0.0) throw std::invalid_argument("total_distortion: f_o unknown");
    double cycles = double(rec.samples.size()) / rec.sample_rate_hz * rec.f_o_hz;
    std::int64_t whole_cycles = std::int64_t(std::floor(cycles + 1e-9));
    if (whole_cycles < 1)
        throw std::invalid_argument("total_distortion: f_o below record resolution");
    // analyze an integer number of cycles so the single-bin correlation is exact
    std::size_t n = std::size_t(std::llround(double(whole_cycles) * rec.sample_rate_hz /
                                             rec.f_o_hz));
    n = std::min(n, rec.samples.size());
    double re = 0.0, im = 0.0;
    double w = 2.0 * std::numbers::pi * rec.f_o_hz / rec.sample_rate_hz;
    for (std::size_t k = 0; k < n; ++k) {
        re += rec.samples[k] * std::cos(w * double(k));
        im -= rec.samples[k] * std::sin(w * double(k));
    }
    double a = 2.0 * re / double(n);
    double b = 2.0 * im / double(n);
    DistortionReport rep;
    rep.fundamental_rms = std::sqrt((a * a + b * b) / 2.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double fund = a * std::cos(w * double(k)) - b * std::sin(w * double(k));
        double resid = rec.samples[k] - fund;
        acc += resid * resid;
    }
    rep.residual_rms = std::sqrt(acc / double(n));
    rep.total_distortion =
        rep.fundamental_rms > 0.0 ? rep.residual_rms / rep.fundamental_rms : 0.0;
    rep.low_confidence = whole_cycles < 16;
    return rep;
}

SpectrogramMatrix spectrogram(const WaveformRecord& rec, int window_len, int hop) {
    if (window_len <= 0 || hop <= 0 || std::size_t(window_len) > rec.samples.size())
        throw std::invalid_argument("spectrogram: bad window/hop");
    std::size_t nwin = std::size_t(window_len);
    std::size_t nfft = next_pow2(nwin);
    auto w = hann_window(nwin);
    double wsum = 0.0;
    for (double v : w) wsum += v;
    SpectrogramMatrix out;
    out.frequencies.resize(nfft / 2 + 1);
    for (std::size_t b = 0; b < out.frequencies.size(); ++b)
        out.frequencies[b] = double(b) * rec.sample_rate_hz / double(nfft);
    std::vector<double> buf(nwin);
    for (std::size_t start = 0; start + nwin <= rec.samples.size();
         start += std::size_t(hop)) {
        for (std::size_t i = 0; i < nwin; ++i) buf[i] = rec.samples[start + i] * w[i];
        auto bins = rfft(buf, nfft);
        std::vector<double> db(bins.size());
        for (std::size_t b = 0; b < bins.size(); ++b) {
            // amplitude-normalized magnitude (coherent gain removed)
            double mag = 2.0 * std::abs(bins[b]) / wsum;
            db[b] = 20.0 * std::log10(std::max(mag, 1e-12));
        }
        out.magnitudes_db.push_back(std::move(db));
        out.times.push_back((double(start) + double(nwin) / 2.0) / rec.sample_rate_hz);
    }
    return out;
}

std::optional<double> first_spectral_peak_hz(std::span<const double> seq,
                                             double sample_rate_hz, double threshold_frac) {
    if (seq.size() < 8) return std::nullopt;
    auto spec = band_spectrum(seq, sample_rate_hz);
    auto& p = spec.power;
    double gmax = 0.0;
    for (std::size_t b = 2; b + 1 < p.size(); ++b) gmax = std::max(gmax, p[b]);
    if (gmax <= 0.0) return std::nullopt;
    for (std::size_t b = 2; b + 1 < p.size(); ++b) {
        if (p[b] >= p[b - 1] && p[b] >= p[b + 1] && p[b] >= threshold_frac * gmax) {
            auto refined = parabolic_peak(p, b);
            return *refined * spec.bin_hz;
        }
    }
    return std::nullopt;
}

std::vector<double> decimate_block_mean(std::span<const double> x, std::size_t factor) {
    if (factor <= 1) return std::vector<double>(x.begin(), x.end());
    std::vector<double> out;
    out.reserve(x.size() / factor);
    for (std::size_t base = 0; base + factor <= x.size(); base += factor) {
        double acc = 0.0;
        for (std::size_t i = 0; i < factor; ++i) acc += x[base + i];
        out.push_back(acc / double(factor));
    }
    return out;
}

}  // namespace wbsim
