#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

// Waveform analysis: three-way output classification (ideal / DC bias /
// low-frequency oscillation), THD+N style distortion, and spectrograms.

namespace wbsim {

struct WaveformRecord {
    double sample_rate_hz = 0.0;
    double f_o_hz = 0.0;  // intended output frequency
    std::vector<double> samples;
};

enum class OutputCategory { Ideal, DCBias, LFOscillation };

std::string_view to_string(OutputCategory c);

struct ClassifyOptions {
    double theta_dc = 0.01;   // fraction of amplitude scale
    double theta_lf = 0.001;  // sub-fundamental power / fundamental power
};

struct LfMetric {
    double power_ratio = 0.0;
    std::optional<double> peak_hz;
    bool low_confidence = false;  // record shorter than ~8 periods of the peak
};

struct ClassificationResult {
    OutputCategory category = OutputCategory::Ideal;
    double dc_metric = 0.0;
    double lf_ratio = 0.0;
    std::optional<double> lf_peak_hz;
    bool low_confidence = false;
    ClassifyOptions thresholds;
};

struct DistortionReport {
    double fundamental_rms = 0.0;
    double residual_rms = 0.0;     // everything else: harmonics, noise, DC
    double total_distortion = 0.0; // residual/fundamental
    bool low_confidence = false;   // fewer than 16 cycles in the record
};

struct SpectrogramMatrix {
    std::vector<double> times;        // frame centers, seconds
    std::vector<double> frequencies;  // hz
    // magnitudes_db[frame][bin]
    std::vector<std::vector<double>> magnitudes_db;
};

// mean/amplitude-scale with amplitude scale = rms * sqrt(2); 0 for a silent
// record.
double dc_bias_metric(const WaveformRecord& rec);

// Spectral power in (0, f_o/2), DC skirt excluded, relative to the
// fundamental, plus the strongest in-band bin (parabolic interpolation).
LfMetric lf_oscillation_metric(const WaveformRecord& rec);

ClassificationResult classify(const WaveformRecord& rec, const ClassifyOptions& opt = {});

// Fundamental by complex correlation over an integer number of cycles;
// throws if the record is shorter than one cycle of f_o.
DistortionReport total_distortion(const WaveformRecord& rec);

// Magnitude STFT, Hann window, dB scale.
SpectrogramMatrix spectrogram(const WaveformRecord& rec, int window_len, int hop);

// Lowest-frequency prominent spectral peak of a sequence (mean removed,
// Hann windowed): the first local maximum at or above `threshold_frac` of the
// strongest bin, refined by parabolic interpolation. Used to measure the
// fundamental of an oscillating net-value sequence.
std::optional<double> first_spectral_peak_hz(std::span<const double> seq,
                                             double sample_rate_hz,
                                             double threshold_frac = 0.2);

// Block-mean decimation preserving the record mean (tail samples beyond a
// whole block are dropped).
std::vector<double> decimate_block_mean(std::span<const double> x, std::size_t factor);

}  // namespace wbsim
